// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit when a
// gating criterion fails. Tolerances and budgets are fixed below.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "slp/attention_mask.hpp"
#include "slp/checkpoint.hpp"
#include "slp/ctc.hpp"
#include "slp/errors.hpp"
#include "slp/evaluation.hpp"
#include "slp/metrics.hpp"
#include "slp/pose_data.hpp"
#include "slp/production.hpp"
#include "slp/synth.hpp"
#include "slp/training.hpp"
#include "slp/transformer.hpp"
#include "slp/translation.hpp"
#include "slp/vocabulary.hpp"
#include "support.hpp"

using namespace slp;
using namespace slp::nn;
using slp::testing::check_gradients;
using slp::testing::random_tensor;
using slp::testing::TensorD;
using slp::testing::weighted_sum;

namespace {

constexpr double kGradTolerance = 1e-4;
constexpr double kGradBudgetSeconds = 120.0;
constexpr int kGradSeeds = 20;
constexpr double kCtcTolerance = 1e-9;
constexpr double kCtcBudgetSeconds = 60.0;
constexpr double kDtwTolerance = 1e-9;
constexpr double kMetricTolerance = 0.01;
constexpr double kOverfitBleu = 90.0;
constexpr double kOverfitMse = 1e-3;
constexpr double kOverfitDtw = 0.05;
constexpr double kOverfitBudgetSeconds = 15.0 * 60.0;
constexpr double kP2tTolerance = 1e-3;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Clock {
 public:
  [[nodiscard]] double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::size_t env_size(const char* name, std::size_t fallback) {
  const char* v = std::getenv(name);
  return v != nullptr && *v != '\0' ? static_cast<std::size_t>(std::strtoull(v, nullptr, 10)) : fallback;
}

TransformerConfig tiny_config(int model_dim, int ff_dim) {
  TransformerConfig c;
  c.num_layers = 2;
  c.num_heads = 4;
  c.model_dim = model_dim;
  c.ff_dim = ff_dim;
  return c;
}

// ---- gradient suite ---------------------------------------------------------

Outcome gradient_suite() {
  Clock clock;
  double worst = 0.0;
  std::string worst_name;
  std::size_t checks = 0;
  auto record = [&](const std::string& name, const slp::testing::GradCheck& r) {
    ++checks;
    if (r.max_error > worst) {
      worst = r.max_error;
      worst_name = name;
    }
  };

  for (int seed = 0; seed < kGradSeeds; ++seed) {
    std::mt19937_64 rng(1000 + static_cast<std::uint64_t>(seed));
    const std::size_t r = 2 + rng() % 3, c = 2 + rng() % 3, k = 2 + rng() % 3;
    auto a = random_tensor(r, c, rng);
    auto b = random_tensor(r, c, rng);
    auto m = random_tensor(c, k, rng);
    auto row = random_tensor(1, c, rng);
    auto gain = random_tensor(1, c, rng);
    auto bias = random_tensor(1, c, rng);
    auto square = random_tensor(r, r, rng);
    auto table = random_tensor(5, c, rng);
    const std::vector<int> ids{3, 0, 3, 1};
    std::vector<int> cols;
    for (std::size_t i = 0; i < r; ++i) cols.push_back(static_cast<int>((i * 7 + 1) % c));
    const auto causal = AttentionMask::causal(r);

    const std::vector<std::pair<const char*, std::function<TensorD()>>> ops = {
        {"add", [&] { return weighted_sum(add(a, b), 1); }},
        {"sub", [&] { return weighted_sum(sub(a, b), 2); }},
        {"mul", [&] { return weighted_sum(mul(a, b), 3); }},
        {"add_row", [&] { return weighted_sum(add_row(a, row), 4); }},
        {"scale", [&] { return weighted_sum(scale(a, 1.7), 5); }},
        {"relu", [&] { return weighted_sum(relu(a), 6); }},
        {"matmul", [&] { return weighted_sum(matmul(a, m), 7); }},
        {"transpose", [&] { return weighted_sum(transpose(a), 8); }},
        {"concat_rows", [&] { return weighted_sum(concat_rows<double>({a, b}), 9); }},
        {"concat_cols", [&] { return weighted_sum(concat_cols<double>({a, b}), 10); }},
        {"slice_rows", [&] { return weighted_sum(slice_rows(a, 1, r - 1), 11); }},
        {"slice_cols", [&] { return weighted_sum(slice_cols(a, 1, c - 1), 12); }},
        {"softmax_rows", [&] { return weighted_sum(softmax_rows(a), 13); }},
        {"masked softmax_rows", [&] { return weighted_sum(softmax_rows(square, &causal), 14); }},
        {"log_softmax_rows", [&] { return weighted_sum(log_softmax_rows(a), 15); }},
        {"layer_norm", [&] { return weighted_sum(layer_norm(a, gain, bias, 1e-5), 16); }},
        {"sum", [&] { return sum(mul(a, a)); }},
        {"mean", [&] { return mean(mul(a, b)); }},
        {"embedding", [&] { return weighted_sum(embedding(table, std::span<const int>(ids)), 17); }},
        {"select_columns", [&] { return weighted_sum(select_columns(a, std::span<const int>(cols)), 18); }},
        {"dropout",
         [&] {
           std::mt19937_64 drop(static_cast<std::uint64_t>(seed));
           return weighted_sum(dropout(a, 0.3, drop), 19);
         }},
    };
    for (const auto& [name, fn] : ops) record(name, check_gradients({a, b, m, row, gain, bias, square, table}, fn));

    {
      std::vector<int> target;
      const int labels = 1 + static_cast<int>(rng() % 4);
      const std::size_t len = 1 + rng() % 3;
      for (std::size_t i = 0; i < len; ++i) target.push_back(static_cast<int>(rng() % static_cast<unsigned>(labels)));
      auto logits = random_tensor(ctc::minimum_frames(target) + rng() % 3, static_cast<std::size_t>(labels) + 1, rng);
      record("ctc_loss",
             check_gradients({logits}, [&] { return ctc::ctc_loss(log_softmax_rows(logits), target, labels); }));
      auto gt = random_tensor(logits.rows(), logits.cols(), rng, false);
      record("mse_regression_loss",
             check_gradients({logits}, [&] { return production::mse_regression_loss(logits, gt); }));
    }

    const auto cfg = tiny_config(8, 16);
    Encoder<double> enc(cfg, rng);
    Decoder<double> dec(cfg, rng);
    MultiHeadAttention<double> mha(8, 4, rng);
    const std::size_t src = 2 + rng() % 3, tgt = 2 + rng() % 3;
    auto x = random_tensor(src, 8, rng);
    auto y = random_tensor(tgt, 8, rng);
    const auto mask = AttentionMask::causal(tgt);

    ParameterList<double> mha_params;
    mha.collect(mha_params, "mha");
    std::vector<TensorD> mha_inputs{x, y};
    for (const auto& p : mha_params) mha_inputs.push_back(p.tensor);
    record("multi-head attention", check_gradients(mha_inputs, [&] { return weighted_sum(mha(y, x, nullptr), 20); }));

    ParameterList<double> params;
    enc.collect(params, "enc");
    dec.collect(params, "dec");
    std::vector<TensorD> inputs{x, y};
    for (const auto& p : params) inputs.push_back(p.tensor);
    // Gradients below 1e-5 are compared absolutely: central differences carry
    // ~1e-10 absolute noise through the deep stack.
    record("2-layer/4-head encoder-decoder",
           check_gradients(
               inputs, [&] { return weighted_sum(dec.forward(y, enc.forward(x), &mask), 21); }, 1e-5, 300,
               static_cast<std::uint64_t>(seed)));
  }
  const double secs = clock.seconds();
  Outcome o;
  o.pass = worst < kGradTolerance && secs < kGradBudgetSeconds;
  o.detail = std::to_string(checks) + " checks over " + std::to_string(kGradSeeds) + " seeds, max rel error " +
             fmt("%.2e", worst) + " (" + worst_name + "), " + fmt("%.1f", secs) + " s";
  return o;
}

// ---- CTC oracle ---------------------------------------------------------------

Outcome ctc_oracle() {
  Clock clock;
  auto lp = [](const std::vector<std::vector<double>>& probs) {
    std::vector<double> v;
    for (const auto& row : probs) {
      for (double p : row) v.push_back(std::log(p));
    }
    return TensorD(probs.size(), probs.front().size(), v);
  };
  const std::vector<int> one{0};
  const double ex1 = ctc::ctc_loss(lp({{0.5, 0.5}}), one, 1).item();
  const double ex2 = ctc::ctc_loss(lp({{0.5, 0.5}, {0.5, 0.5}}), one, 1).item();
  bool pass = std::abs(ex1 - 0.693147) < 5e-7 && std::abs(ex2 - 0.287682) < 5e-7;

  std::mt19937_64 rng(7);
  double worst = 0.0;
  std::size_t compared = 0, infeasible = 0;
  for (std::size_t t = 1; t <= 6; ++t) {
    for (int d = 1; d <= 4; ++d) {
      const auto logp = log_softmax_rows(random_tensor(t, static_cast<std::size_t>(d) + 1, rng, false, 2.0));
      const auto mass = slp::testing::enumerate_ctc_paths(logp, d);
      std::vector<std::vector<int>> targets;
      std::vector<int> prefix;
      slp::testing::all_label_sequences(d, 3, prefix, targets);
      for (const auto& target : targets) {
        const auto it = mass.find(target);
        if (ctc::minimum_frames(target) > t) {
          bool threw = false;
          try {
            static_cast<void>(ctc::ctc_loss(logp, target, d));
          } catch (const InfeasibleAlignmentError&) {
            threw = true;
          }
          pass = pass && threw && it == mass.end();
          ++infeasible;
          continue;
        }
        if (it == mass.end()) {
          pass = false;
          continue;
        }
        worst = std::max(worst, std::abs(ctc::ctc_loss(logp, target, d).item() + std::log(it->second)));
        ++compared;
      }
    }
  }
  const double secs = clock.seconds();
  Outcome o;
  o.pass = pass && worst < kCtcTolerance && secs < kCtcBudgetSeconds;
  o.detail = "examples " + fmt("%.6f", ex1) + ", " + fmt("%.6f", ex2) + "; " + std::to_string(compared) +
             " targets vs enumeration, max abs error " + fmt("%.2e", worst) + ", " + std::to_string(infeasible) +
             " infeasible rejected, " + fmt("%.1f", secs) + " s";
  return o;
}

// ---- DTW oracle ---------------------------------------------------------------

Outcome dtw_oracle() {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g;
  auto frames = [&](std::size_t n) {
    slp::testing::Frames f(n, std::vector<double>(3));
    for (auto& row : f) {
      for (auto& v : row) v = g(rng);
    }
    return f;
  };
  double worst = 0.0;
  bool pass = true;
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::size_t m = 1; m <= 8; ++m) {
      const auto a = frames(n), b = frames(m);
      const auto expected = slp::testing::enumerate_dtw(a, b);
      const auto got = metrics::dtw(a, b);
      worst = std::max(worst, std::abs(got.total_cost - expected.total_cost));
      pass = pass && got.path_length == expected.path_length;
    }
  }
  std::uniform_int_distribution<std::size_t> len(1, 12);
  double asym = 0.0, self = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = frames(len(rng)), b = frames(len(rng));
    self = std::max(self, metrics::dtw(a, a).total_cost);
    asym = std::max(asym, std::abs(metrics::dtw(a, b).total_cost - metrics::dtw(b, a).total_cost));
  }
  Outcome o;
  o.pass = pass && worst < kDtwTolerance && self == 0.0 && asym < kDtwTolerance;
  o.detail = "64 length pairs vs enumeration, max abs error " + fmt("%.2e", worst) + "; 100 random: max |d(a,b)-d(b,a)| " +
             fmt("%.2e", asym) + ", max d(a,a) " + fmt("%.1e", self);
  return o;
}

// ---- metric hand checks ---------------------------------------------------------

Outcome metric_checks() {
  const auto cat = text::tokenize("the cat");
  const auto sat = text::tokenize("the cat sat");
  const double b1 = metrics::bleu_n(cat, sat, 1);
  const double rl = metrics::rouge_l(text::tokenize("a b c"), text::tokenize("a c d"));
  const auto sentence = text::tokenize("we count the red circles and the blue squares");
  const double b4 = metrics::bleu_n(sentence, sentence, 4);
  Outcome o;
  o.pass = std::abs(b1 - 60.65) <= kMetricTolerance && std::abs(rl - 66.67) <= kMetricTolerance && b4 == 100.0;
  o.detail = "BLEU-1 " + fmt("%.4f", b1) + ", ROUGE-L " + fmt("%.4f", rl) + ", identical BLEU-4 " + fmt("%.10g", b4);
  return o;
}

// ---- frame layout ---------------------------------------------------------------

Outcome frame_layout() {
  auto markers = [](double region, std::size_t n) {
    pose::Landmarks l;
    for (std::size_t i = 0; i < n; ++i) l.push_back({region + double(i) / 1000.0, -(region + double(i) / 1000.0)});
    return l;
  };
  pose::RawHolisticFrame raw;
  raw.left_hand = markers(1.0, pose::kHandLandmarks);
  raw.right_hand = markers(2.0, pose::kHandLandmarks);
  raw.face = markers(3.0, pose::kRawFaceLandmarks);
  raw.pose = markers(4.0, pose::kRawPoseLandmarks);
  const auto profile = pose::SelectionProfile::default_profile();
  const auto selected = pose::resolve_missing({pose::subsample_frame(raw, profile), pose::subsample_frame(raw, profile),
                                               pose::subsample_frame(raw, profile)});
  const auto seq = pose::assemble_sequence(selected);
  bool pass = seq.frame(0).size() == 383;
  const std::pair<double, std::vector<int>> regions[] = {
      {1.0, {}}, {2.0, {}}, {3.0, profile.face_indices}, {4.0, profile.pose_indices}};
  std::size_t slot = 0;
  for (const auto& [tag, indices] : regions) {
    const std::size_t n = indices.empty() ? pose::kHandLandmarks : indices.size();
    for (std::size_t i = 0; i < n; ++i, ++slot) {
      const double source = indices.empty() ? double(i) : double(indices[i]);
      const auto p = seq.landmark(1, slot);
      pass = pass && p.x == tag + source / 1000.0 && p.y == -(tag + source / 1000.0);
    }
  }
  pass = pass && slot == 191 && seq.counter(0) == 0.0 && seq.counter(1) == 0.5 && seq.counter(2) == 1.0;
  const auto ramp = pose::counter_ramp(9);
  pass = pass && ramp.front() == 0.0 && ramp.back() == 1.0 && pose::counter_ramp(1) == std::vector<double>{0.0};
  Outcome o;
  o.pass = pass;
  o.detail = "width " + std::to_string(seq.frame(0).size()) + ", slots [0,21) left hand, [21,42) right hand, " +
             "[42,183) face, [183,191) pose, counter at 382; ramp endpoints exact";
  return o;
}

// ---- schedule -------------------------------------------------------------------

Outcome schedule_and_step_one() {
  bool pass = true;
  std::string flips;
  for (int total : {2500, 200}) {
    training::TrainConfig c;
    c.total_epochs = total;
    int flip = -1, changes = 0;
    for (int e = 1; e < total; ++e) {
      if (training::schedule_mode(e, c) != training::schedule_mode(e - 1, c)) {
        ++changes;
        flip = e;
      }
    }
    pass = pass && changes == 1 && flip == total / 2 &&
           training::schedule_mode(0, c) == training::Mode::teacher_forcing &&
           training::schedule_mode(flip, c) == training::Mode::autoregressive;
    flips += "E=" + std::to_string(total) + " flips at " + std::to_string(flip) + "; ";
  }
  std::size_t compared = 0;
  for (int seed = 0; seed < 10; ++seed) {
    production::ProductionModel<double> m(tiny_config(16, 32), 12, static_cast<std::uint64_t>(seed));
    production::ProductionModel<float> mf(tiny_config(16, 32), 12, static_cast<std::uint64_t>(seed));
    std::mt19937_64 rng(200 + static_cast<std::uint64_t>(seed));
    const std::vector<int> ids{4, 9, 6};
    const auto gt = random_tensor(4, pose::kFrameDim, rng, false, 0.5);
    const auto tf = m.forward_teacher_forced(ids, gt);
    const auto ad = m.forward_autoregressive(ids, 4);
    std::vector<float> gtf(gt.values().begin(), gt.values().end());
    const auto tff = mf.forward_teacher_forced(ids, Tensor<float>(4, pose::kFrameDim, gtf));
    const auto adf = mf.forward_autoregressive(ids, 4);
    for (std::size_t col = 0; col < pose::kFrameDim; ++col, ++compared) {
      pass = pass && tf.at(0, col) == ad.at(0, col) && tff.at(0, col) == adf.at(0, col);
    }
  }
  Outcome o;
  o.pass = pass;
  o.detail = flips + "step-1 TF vs AD bitwise on " + std::to_string(compared) + " values (f64 and f32)";
  return o;
}

// ---- overfit experiments -----------------------------------------------------------

struct OverfitRun {
  double slt_bleu = 0.0;
  double slp_mse = 0.0;
  eval::MetricReport report;
  double seconds = 0.0;
};

OverfitRun overfit() {
  Clock clock;
  synth::SynthConfig sc;
  sc.num_samples = 10;
  const auto ds = synth::prepare_corpus(synth::generate_corpus(sc));
  const auto vocab = data::build_vocabulary(ds);
  const auto cfg = tiny_config(32, 64);

  training::TrainConfig slt_cfg;
  slt_cfg.total_epochs = 500;
  slt_cfg.dev_every = 0;
  slt_cfg.lambda_p2t = 0.0;
  slt_cfg.optimizer.learning_rate = 1e-3;
  training::SltTrainer slt(cfg, slt_cfg, vocab);
  while (!slt.finished()) slt.run_epoch(ds);

  // TF+AD schedule, MSE objective only; the pose-to-text term is covered by
  // its own criterion.
  training::TrainConfig slp_cfg;
  slp_cfg.total_epochs = 5000;
  slp_cfg.dev_every = 0;
  slp_cfg.lambda_p2t = 0.0;
  slp_cfg.optimizer.learning_rate = 3e-4;
  training::SlpTrainer slp(cfg, slp_cfg, vocab, nullptr);
  while (!slp.finished()) slp.run_epoch(ds);

  OverfitRun r;
  r.slt_bleu = slt.evaluate_dev(ds);
  r.slp_mse = slp.evaluate_dev(ds);
  eval::EvalProtocol p;
  p.split.reset();
  r.report = eval::back_translate_evaluate(slp.model(), vocab, slt.model(), vocab, ds, p, {});
  r.seconds = clock.seconds();
  return r;
}

// ---- pose-to-text contract ---------------------------------------------------------

Outcome p2t_contract() {
  synth::SynthConfig sc;
  sc.num_samples = 4;
  sc.min_words = 2;
  sc.max_words = 3;
  const auto ds = synth::prepare_corpus(synth::generate_corpus(sc));
  const auto vocab = data::build_vocabulary(ds);
  const auto cfg = tiny_config(16, 32);
  training::TrainConfig tc;
  tc.total_epochs = 2;
  tc.dev_every = 0;
  tc.lambda_p2t = 0.0;
  training::SltTrainer slt(cfg, tc, vocab);
  slt.run_epoch(ds);
  slt.model().freeze();
  auto snapshot = [&] {
    std::vector<float> v;
    for (const auto& p : slt.model().parameters()) v.insert(v.end(), p.tensor.values().begin(), p.tensor.values().end());
    return v;
  };
  const auto before = snapshot();
  tc.lambda_p2t = 1.0;
  training::SlpTrainer trainer(cfg, tc, vocab, &slt.model());
  const auto tf = trainer.run_epoch(ds);
  const auto ad = trainer.run_epoch(ds);
  const bool identical = snapshot() == before;
  const bool used = tf.p2t.has_value() && ad.p2t.has_value() && *tf.p2t > 0.0;

  production::ProductionModel<double> slp_model(cfg, 8, 4);
  translation::TranslationModel<double> frozen(cfg, 8, 5);
  frozen.freeze();
  std::mt19937_64 rng(6);
  const auto gt = random_tensor(4, pose::kFrameDim, rng, false, 0.5);
  const std::vector<int> ids{4, 5, 7}, target{5, 6};
  std::vector<TensorD> inputs;
  for (const auto& p : slp_model.parameters()) inputs.push_back(p.tensor);
  const auto r = check_gradients(
      inputs,
      [&] { return translation::pose_to_text_loss(frozen, slp_model.forward_teacher_forced(ids, gt), target); }, 1e-6,
      200, 3);
  Outcome o;
  o.pass = identical && used && r.max_error < kP2tTolerance;
  o.detail = std::string("SLT parameters ") + (identical ? "bit-identical" : "CHANGED") +
             " across TF and AD epochs with lambda_p2t=1; finite-difference check on " + std::to_string(r.checked) +
             " SLP parameter entries, max rel error " + fmt("%.2e", r.max_error);
  return o;
}

// ---- trend report ----------------------------------------------------------------

std::string trend_report() {
  Clock clock;
  const std::size_t samples = env_size("SLP_TREND_SAMPLES", 200);
  const int epochs = static_cast<int>(env_size("SLP_TREND_EPOCHS", 60));
  synth::SynthConfig sc;
  sc.num_samples = samples;
  sc.num_signers = 2;
  sc.test_fraction = 0.2;
  sc.seed = 11;
  const auto ds = synth::prepare_corpus(synth::generate_corpus(sc));
  data::SampleFilter f;
  f.split = pose::Split::train;
  const auto train = data::select(ds, f);
  const auto vocab = data::build_vocabulary(ds);
  const auto cfg = tiny_config(32, 64);

  training::TrainConfig tc;
  tc.total_epochs = epochs;
  tc.dev_every = 0;
  tc.lambda_p2t = 0.0;
  tc.seed = 11;
  training::SltTrainer slt(cfg, tc, vocab);
  while (!slt.finished()) slt.run_epoch(train);

  auto bleu_for = [&](int tf_epochs) {
    auto c = tc;
    c.tf_epochs = tf_epochs;
    training::SlpTrainer slp(cfg, c, vocab, nullptr);
    while (!slp.finished()) slp.run_epoch(train);
    eval::EvalProtocol p;
    const production::DecodingConfig dc{0.95, 120};
    return eval::back_translate_evaluate(slp.model(), vocab, slt.model(), vocab, ds, p, dc);
  };
  const auto mixed = bleu_for(epochs / 2);
  const auto tf_only = bleu_for(epochs);
  auto show = [](const eval::MetricReport& r) {
    return fmt("%.2f", r.bleu4.value_or(0.0)) + " (dtw " + fmt("%.4f", r.dtw_mean.value_or(0.0)) + ")";
  };
  return std::to_string(samples) + " samples, " + std::to_string(epochs) + " epochs, test BLEU-4 TF+AD " +
         show(mixed) + " vs TF-only " + show(tf_only) + ": ordering " +
         (mixed.bleu4.value_or(0.0) >= tf_only.bleu4.value_or(0.0) ? "TF+AD >= TF-only" : "TF+AD < TF-only") + ", " +
         fmt("%.0f", clock.seconds()) + " s";
}

// ---- determinism ------------------------------------------------------------------

Outcome determinism() {
  const auto dir = slp::testing::temp_dir("acceptance_determinism");
  auto run = [&](const std::string& tag) {
    synth::SynthConfig sc;
    sc.num_samples = 5;
    sc.min_words = 2;
    sc.max_words = 3;
    sc.test_fraction = 0.4;
    sc.seed = 21;
    const auto ds = synth::prepare_corpus(synth::generate_corpus(sc));
    const auto vocab = data::build_vocabulary(ds);
    const auto cfg = tiny_config(16, 32);
    training::TrainConfig tc;
    tc.total_epochs = 3;
    tc.dev_every = 1;
    tc.seed = 21;
    tc.lambda_p2t = 0.0;
    training::SltTrainer slt(cfg, tc, vocab, "fp");
    slt.train(ds, ds);
    slt.model().freeze();
    tc.lambda_p2t = 1.0;
    training::SlpTrainer slp(cfg, tc, vocab, &slt.model(), "fp");
    slp.train(ds, ds);
    ckpt::save_checkpoint(dir / (tag + "_slt.ckpt"), slt.checkpoint());
    ckpt::save_checkpoint(dir / (tag + "_slp.ckpt"), slp.checkpoint());
    auto report = eval::back_translate_evaluate(slp.model(), vocab, slt.model(), vocab, ds, {}, {0.95, 40});
    report.fingerprint = "fp";
    std::ofstream(dir / (tag + "_report.json")) << eval::report_to_json(report);
  };
  run("a");
  run("b");
  auto bytes = [&](const std::string& name) {
    std::ifstream in(dir / name, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), {});
  };
  bool pass = true;
  std::string detail;
  for (const char* name : {"_slt.ckpt", "_slp.ckpt", "_report.json"}) {
    const auto a = bytes(std::string("a") + name), b = bytes(std::string("b") + name);
    const bool same = !a.empty() && a == b;
    pass = pass && same;
    detail += std::string(name + 1) + (same ? " identical (" : " DIFFERS (") + std::to_string(a.size()) + " bytes) ";
  }
  Outcome o;
  o.pass = pass;
  o.detail = detail;
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](const char* name, const Outcome& o) {
    std::printf("%s  %-34s %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  };
  auto guarded = [](const std::function<Outcome()>& fn) {
    try {
      return fn();
    } catch (const std::exception& e) {
      return Outcome{false, std::string("exception: ") + e.what()};
    }
  };

  report("gradient suite", guarded(gradient_suite));
  report("CTC oracle", guarded(ctc_oracle));
  report("DTW oracle", guarded(dtw_oracle));
  report("metric hand-checks", guarded(metric_checks));
  report("frame layout", guarded(frame_layout));
  report("schedule and step-1 equivalence", guarded(schedule_and_step_one));

  {
    OverfitRun run;
    std::string error;
    try {
      run = overfit();
    } catch (const std::exception& e) {
      error = e.what();
    }
    if (!error.empty()) {
      report("overfit (a) SLT BLEU-4", {false, "exception: " + error});
      report("overfit (b) SLP train MSE", {false, "exception: " + error});
      report("overfit (c) back-translation", {false, "exception: " + error});
      report("overfit runtime", {false, "exception: " + error});
    } else {
      const double bleu = run.report.bleu4.value_or(0.0), dtw = run.report.dtw_mean.value_or(1e9);
      report("overfit (a) SLT BLEU-4", {run.slt_bleu > kOverfitBleu, "train BLEU-4 " + fmt("%.2f", run.slt_bleu)});
      report("overfit (b) SLP train MSE", {run.slp_mse < kOverfitMse, "rollout MSE " + fmt("%.3e", run.slp_mse)});
      report("overfit (c) back-translation",
             {bleu > kOverfitBleu && dtw < kOverfitDtw, "BLEU-4 " + fmt("%.2f", bleu) + ", dtw_mean " + fmt("%.4f", dtw)});
      report("overfit runtime", {run.seconds < kOverfitBudgetSeconds, fmt("%.0f s", run.seconds) + " (budget 900 s)"});
    }
  }

  report("pose-to-text loss contract", guarded(p2t_contract));
  try {
    std::printf("INFO  %-34s %s\n", "trend report (non-gating)", trend_report().c_str());
  } catch (const std::exception& e) {
    std::printf("INFO  %-34s exception: %s\n", "trend report (non-gating)", e.what());
  }
  std::fflush(stdout);
  report("determinism", guarded(determinism));

  std::printf("%s: %d gating failure(s)\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
