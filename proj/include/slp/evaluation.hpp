#pragma once

// Back-translation evaluation: produce poses from text, translate them back
// with a pose-to-text model and score text and pose similarity.

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "slp/dataset.hpp"
#include "slp/production.hpp"
#include "slp/translation.hpp"
#include "slp/vocabulary.hpp"

namespace slp::eval {

struct EvalProtocol {
  std::optional<pose::Split> split = pose::Split::test;
  std::optional<std::string> train_signer;  // signer the models were trained on (reporting only)
  std::optional<std::string> test_signer;   // restricts the evaluated samples
  bool compute_text = true;
  bool compute_dtw = true;
  bool gloss_mode = false;  // production input is the gloss
  int max_decode_tokens = 50;

  bool operator==(const EvalProtocol&) const = default;
};

struct SampleScore {
  std::string id;
  std::string hypothesis;
  std::optional<double> bleu1;
  std::optional<double> bleu4;
  std::optional<double> rouge_l;
  std::optional<double> dtw;
};

struct MetricReport {
  EvalProtocol protocol;
  std::vector<SampleScore> per_sample;
  std::size_t count = 0;
  std::optional<double> bleu1;
  std::optional<double> bleu4;
  std::optional<double> rouge_l;
  std::optional<double> dtw_mean;
  std::string fingerprint;
};

/// Maps a sample to the pose sequence to be scored (e.g. a model's output).
using PoseProducer = std::function<pose::PoseSequence(const data::Sample&)>;

/// Scores every sample of `dataset` matching the protocol. The translator is
/// run greedily; scores are sentence-level and averaged.
MetricReport back_translate_evaluate(const PoseProducer& producer,
                                     const translation::TranslationModel<float>& slt,
                                     const text::Vocabulary& slt_vocab, const data::Dataset& dataset,
                                     const EvalProtocol& protocol);

/// Full pipeline with a production model. ConfigError when the two
/// vocabularies differ.
MetricReport back_translate_evaluate(const production::ProductionModel<float>& slp,
                                     const text::Vocabulary& slp_vocab,
                                     const translation::TranslationModel<float>& slt,
                                     const text::Vocabulary& slt_vocab, const data::Dataset& dataset,
                                     const EvalProtocol& protocol, const production::DecodingConfig& decoding);

/// Samples of `dataset` selected by the protocol's split and test signer.
data::Dataset select_for_protocol(const data::Dataset& dataset, const EvalProtocol& protocol);

struct ModelPair {
  std::string train_signer;
  const production::ProductionModel<float>* slp;
  const translation::TranslationModel<float>* slt;
  const text::Vocabulary* vocab;
};

/// reports[i][j]: model i evaluated on the samples of test signer j.
/// ConfigError for a signer id absent from the dataset.
std::vector<std::vector<MetricReport>> signer_cross_eval(const std::vector<ModelPair>& models,
                                                         const std::vector<std::string>& test_signers,
                                                         const data::Dataset& dataset, const EvalProtocol& protocol,
                                                         const production::DecodingConfig& decoding);

/// {protocol, per_sample:[{id, hypothesis, bleu1, bleu4, rougeL, dtw}], aggregates, fingerprint}
/// with null for metrics that were not computed.
std::string report_to_json(const MetricReport& report);

/// Throws FormatError unless `json` has the report layout above.
void validate_report_json(const std::string& json);

}  // namespace slp::eval
