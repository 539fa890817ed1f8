#pragma once

// Deterministic synthetic signing corpus. Every content word has a fixed
// two-hand key pose; a sentence is rendered as a rest frame followed by a few
// frames per content word, drawn as raw holistic landmarks in image
// coordinates for a signer with its own placement and scale.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "slp/dataset.hpp"
#include "slp/pose_data.hpp"
#include "slp/pose_io.hpp"

namespace slp::synth {

struct SynthConfig {
  std::size_t num_samples = 10;
  std::size_t num_signers = 1;
  std::size_t words_per_signer = 16;
  std::size_t min_words = 4;
  std::size_t max_words = 6;
  std::size_t frames_per_word = 3;
  bool disjoint_signer_vocab = false;
  double stopword_rate = 0.0;   // chance of a stopword before each content word
  double missing_rate = 0.0;    // chance a hand is undetected in a frame
  double hand_amplitude = 0.05; // key-pose offset range, in body-scale units
  double dev_fraction = 0.0;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;

  /// Throws ConfigError on impossible settings.
  void validate() const;
};

struct SynthSample {
  pose::SampleRecord record;
  std::vector<pose::RawHolisticFrame> raw;
};

/// Content words of the built-in lexicon.
const std::vector<std::string>& lexicon();
/// Function words that are spoken but not signed.
const std::vector<std::string>& stopwords();

std::vector<SynthSample> generate_corpus(const SynthConfig& config);

/// Prepared samples (default profile and normalization), values rounded to
/// f32 exactly as a pose-file round trip would.
data::Dataset prepare_corpus(const std::vector<SynthSample>& corpus);

/// Writes raw/<id>.jsonl interchange files plus raw_manifest.json whose
/// pose_path entries point at them. Returns the manifest path.
std::filesystem::path write_raw_corpus(const std::vector<SynthSample>& corpus, const std::filesystem::path& dir);

}  // namespace slp::synth
