#include "slp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "slp/errors.hpp"

namespace slp::synth {

namespace {

double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }
double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * uniform(rng); }

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

struct HandPose {
  double dx = 0.0;  // wrist offset from rest, body-scale units
  double dy = 0.0;
  double spread = 1.0;
  double rotation = 0.0;
};

struct KeyPose {
  HandPose left;
  HandPose right;
};

KeyPose word_pose(const std::string& word, double amplitude) {
  std::mt19937_64 rng(fnv1a(word));
  KeyPose k;
  for (HandPose* h : {&k.left, &k.right}) {
    h->dx = uniform(rng, -amplitude, amplitude);
    h->dy = uniform(rng, -amplitude, amplitude);
    h->spread = uniform(rng, 0.8, 1.2);
    h->rotation = uniform(rng, -0.3, 0.3);
  }
  return k;
}

HandPose lerp(const HandPose& a, const HandPose& b, double t) {
  return {a.dx + (b.dx - a.dx) * t, a.dy + (b.dy - a.dy) * t, a.spread + (b.spread - a.spread) * t,
          a.rotation + (b.rotation - a.rotation) * t};
}

KeyPose lerp(const KeyPose& a, const KeyPose& b, double t) { return {lerp(a.left, b.left, t), lerp(a.right, b.right, t)}; }

struct Signer {
  std::string id;
  double cx;
  double cy;
  double scale;
};

pose::Point2 clamp01(double x, double y) { return {std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)}; }

// 21 hand points: wrist, then four joints for each of five fingers.
pose::Landmarks draw_hand(double wx, double wy, double s, double side, const HandPose& h) {
  pose::Landmarks out;
  out.reserve(21);
  out.push_back(clamp01(wx, wy));
  static constexpr double kJoint[4] = {0.020, 0.034, 0.044, 0.052};
  for (int finger = 0; finger < 5; ++finger) {
    const double angle = -std::numbers::pi / 2 + side * (finger - 2) * 0.32 + h.rotation;
    for (const double reach : kJoint) {
      const double r = reach * s * h.spread * (finger == 0 ? 0.8 : 1.0);
      out.push_back(clamp01(wx + r * std::cos(angle), wy + r * std::sin(angle)));
    }
  }
  return out;
}

pose::RawHolisticFrame draw_frame(const Signer& sg, const KeyPose& k) {
  const double s = sg.scale;
  const double cx = sg.cx;
  const double cy = sg.cy;
  // Subject's left side appears on the image right.
  const double lwx = cx + 0.12 * s + k.left.dx * s;
  const double lwy = cy + 0.30 * s + k.left.dy * s;
  const double rwx = cx - 0.12 * s + k.right.dx * s;
  const double rwy = cy + 0.30 * s + k.right.dy * s;

  pose::Landmarks body(33);
  const double hx = cx;
  const double hy = cy - 0.20 * s;
  for (int i = 0; i <= 10; ++i) {
    const double a = 2.0 * std::numbers::pi * i / 11.0;
    body[static_cast<std::size_t>(i)] = clamp01(hx + 0.05 * s * std::cos(a), hy + 0.05 * s * std::sin(a));
  }
  body[11] = clamp01(cx + 0.10 * s, cy);
  body[12] = clamp01(cx - 0.10 * s, cy);
  body[13] = clamp01((cx + 0.10 * s + lwx) / 2 + 0.04 * s, (cy + lwy) / 2 + 0.02 * s);
  body[14] = clamp01((cx - 0.10 * s + rwx) / 2 - 0.04 * s, (cy + rwy) / 2 + 0.02 * s);
  body[15] = clamp01(lwx, lwy);
  body[16] = clamp01(rwx, rwy);
  for (int i = 17; i <= 22; ++i) {
    const bool left = i % 2 == 1;
    const double off = 0.01 * s * ((i - 17) / 2 + 1);
    body[static_cast<std::size_t>(i)] = left ? clamp01(lwx + off, lwy - off) : clamp01(rwx - off, rwy - off);
  }
  body[23] = clamp01(cx + 0.07 * s, cy + 0.35 * s);
  body[24] = clamp01(cx - 0.07 * s, cy + 0.35 * s);
  for (int i = 25; i <= 32; ++i) {
    const double side = i % 2 == 1 ? 1.0 : -1.0;
    const double depth = 0.45 + 0.05 * ((i - 25) / 2);
    body[static_cast<std::size_t>(i)] = clamp01(cx + side * 0.07 * s, cy + depth * s);
  }

  pose::Landmarks face(468);
  for (std::size_t i = 0; i < face.size(); ++i) {
    const double a = static_cast<double>(i) * 2.399963229728653;
    const double r = std::sqrt((static_cast<double>(i) + 0.5) / 468.0);
    face[i] = clamp01(hx + 0.07 * s * r * std::cos(a), hy + 0.09 * s * r * std::sin(a));
  }

  pose::RawHolisticFrame frame;
  frame.pose = std::move(body);
  frame.face = std::move(face);
  frame.left_hand = draw_hand(lwx, lwy, s, 1.0, k.left);
  frame.right_hand = draw_hand(rwx, rwy, s, -1.0, k.right);
  return frame;
}

const std::vector<std::string> kLexicon = {
    "count",   "add",    "number", "shape",  "line",    "circle", "square",  "triangle", "equal",   "half",
    "double",  "table",  "value",  "measure", "length", "weight", "time",    "clock",    "money",   "coin",
    "pattern", "group",  "share",  "divide", "multiply", "sum",   "answer",  "question", "problem", "solve",
    "draw",    "write",  "read",   "observe", "continue", "find", "compare", "order",    "big",     "small",
    "long",    "short",  "first",  "last",   "next",    "before", "after",   "many",     "few",     "all",
    "part",    "whole",  "side",   "corner", "edge",    "point",  "check",   "estimate", "round",   "even",
    "odd",     "zero",   "ten",    "hundred"};

const std::vector<std::string> kStopwords = {"the", "a", "of", "and", "to", "i", "we", "is", "into", "my"};

}  // namespace

void SynthConfig::validate() const {
  if (num_samples == 0 || num_signers == 0) throw ConfigError("synth: need at least one sample and one signer");
  if (min_words == 0 || min_words > max_words) throw ConfigError("synth: need 1 <= min_words <= max_words");
  if (frames_per_word == 0) throw ConfigError("synth: frames_per_word must be >= 1");
  if (words_per_signer == 0) throw ConfigError("synth: words_per_signer must be >= 1");
  const std::size_t needed = disjoint_signer_vocab ? words_per_signer * num_signers : words_per_signer;
  if (needed > kLexicon.size()) throw ConfigError("synth: lexicon has only " + std::to_string(kLexicon.size()) + " words");
  if (stopword_rate < 0.0 || stopword_rate > 1.0 || missing_rate < 0.0 || missing_rate > 1.0) {
    throw ConfigError("synth: rates must lie in [0, 1]");
  }
  if (!(hand_amplitude > 0.0) || hand_amplitude > 0.2) throw ConfigError("synth: hand_amplitude must lie in (0, 0.2]");
  if (dev_fraction < 0.0 || test_fraction < 0.0 || dev_fraction + test_fraction >= 1.0) {
    throw ConfigError("synth: dev/test fractions must leave room for train");
  }
}

const std::vector<std::string>& lexicon() { return kLexicon; }
const std::vector<std::string>& stopwords() { return kStopwords; }

std::vector<SynthSample> generate_corpus(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);

  std::vector<Signer> signers;
  for (std::size_t i = 0; i < config.num_signers; ++i) {
    std::string id = "signer_";
    id.push_back(static_cast<char>('A' + i % 26));
    if (i >= 26) id += std::to_string(i / 26);
    signers.push_back({id, uniform(rng, 0.42, 0.58), uniform(rng, 0.28, 0.34), uniform(rng, 0.9, 1.1)});
  }

  const std::size_t n = config.num_samples;
  const auto n_test = static_cast<std::size_t>(std::floor(config.test_fraction * static_cast<double>(n)));
  const auto n_dev = static_cast<std::size_t>(std::floor(config.dev_fraction * static_cast<double>(n)));
  const std::size_t n_train = n - n_test - n_dev;

  const KeyPose rest{};
  std::vector<SynthSample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t signer_index = i % config.num_signers;
    const Signer& signer = signers[signer_index];
    const std::size_t vocab_begin = config.disjoint_signer_vocab ? signer_index * config.words_per_signer : 0;
    const auto length = config.min_words + static_cast<std::size_t>(rng() % (config.max_words - config.min_words + 1));

    std::vector<std::string> spoken;
    std::vector<std::string> signed_words;
    for (std::size_t w = 0; w < length; ++w) {
      if (config.stopword_rate > 0.0 && uniform(rng) < config.stopword_rate) {
        spoken.push_back(kStopwords[rng() % kStopwords.size()]);
      }
      const auto& word = kLexicon[vocab_begin + rng() % config.words_per_signer];
      spoken.push_back(word);
      signed_words.push_back(word);
    }

    std::vector<KeyPose> keys{rest};
    KeyPose previous = rest;
    for (const auto& word : signed_words) {
      const KeyPose target = word_pose(word, config.hand_amplitude);
      for (std::size_t f = 0; f < config.frames_per_word; ++f) {
        const double t = static_cast<double>(f + 1) / static_cast<double>(config.frames_per_word);
        keys.push_back(lerp(previous, target, t));
      }
      previous = target;
    }
    std::vector<pose::RawHolisticFrame> raw;
    raw.reserve(keys.size());
    for (const auto& k : keys) {
      auto frame = draw_frame(signer, k);
      if (config.missing_rate > 0.0) {
        if (uniform(rng) < config.missing_rate) frame.left_hand.reset();
        if (uniform(rng) < config.missing_rate) frame.right_hand.reset();
      }
      raw.push_back(std::move(frame));
    }

    std::string text;
    for (const auto& w : spoken) text += (text.empty() ? "" : " ") + w;
    SynthSample sample;
    char id[32];
    std::snprintf(id, sizeof id, "s%05zu", i);
    sample.record.id = id;
    sample.record.text = text;
    sample.record.signer_id = signer.id;
    sample.record.subset = pose::Subset::math;
    sample.record.split = i < n_train ? pose::Split::train : (i < n_train + n_dev ? pose::Split::dev : pose::Split::test);
    sample.raw = std::move(raw);
    out.push_back(std::move(sample));
  }
  return out;
}

data::Dataset prepare_corpus(const std::vector<SynthSample>& corpus) {
  const auto profile = pose::SelectionProfile::default_profile();
  const pose::NormalizationSpec spec;
  data::Dataset out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) {
    const auto seq = pose::prepare_sequence(s.raw, profile, spec);
    std::vector<double> values(seq.values().begin(), seq.values().end());
    for (auto& v : values) v = static_cast<double>(static_cast<float>(v));
    out.push_back({s.record, pose::PoseSequence(seq.num_frames(), std::move(values))});
  }
  return out;
}

std::filesystem::path write_raw_corpus(const std::vector<SynthSample>& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "raw");
  pose::Manifest manifest;
  for (const auto& s : corpus) {
    auto record = s.record;
    record.pose_path = "raw/" + record.id + ".jsonl";
    pose::write_interchange(dir / record.pose_path, s.raw);
    manifest.push_back(std::move(record));
  }
  const auto path = dir / "raw_manifest.json";
  pose::write_manifest(path, manifest);
  return path;
}

}  // namespace slp::synth
