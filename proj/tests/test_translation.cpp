#include <cmath>
#include <random>

#include "doctest.h"
#include "slp/ctc.hpp"
#include "slp/errors.hpp"
#include "slp/optim.hpp"
#include "slp/translation.hpp"
#include "slp/vocabulary.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace slp;
using namespace slp::nn;
using slp::testing::check_gradients;
using slp::testing::random_tensor;
using slp::testing::TensorD;

namespace {

TensorD log_probs_from(const std::vector<std::vector<double>>& probs) {
  std::vector<double> v;
  for (const auto& row : probs) {
    for (double p : row) v.push_back(std::log(p));
  }
  return TensorD(probs.size(), probs.front().size(), v);
}

TransformerConfig tiny() {
  TransformerConfig c;
  c.num_layers = 2;
  c.num_heads = 4;
  c.model_dim = 8;
  c.ff_dim = 16;
  return c;
}

}  // namespace

TEST_CASE("ctc worked examples") {
  const std::vector<int> a{0};
  const auto one = ctc::ctc_loss(log_probs_from({{0.5, 0.5}}), a, 1);
  CHECK(one.item() == doctest::Approx(0.693147).epsilon(1e-6));
  CHECK(std::abs(one.item() - 0.693147) < 5e-7);
  const auto two = ctc::ctc_loss(log_probs_from({{0.5, 0.5}, {0.5, 0.5}}), a, 1);
  CHECK(std::abs(two.item() - 0.287682) < 5e-7);
  CHECK(two.item() == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("ctc infeasible and malformed targets") {
  const std::vector<int> ab{0, 1};
  CHECK_THROWS_AS(ctc::ctc_loss(log_probs_from({{0.3, 0.3, 0.4}}), ab, 2), InfeasibleAlignmentError);
  const std::vector<int> aa{0, 0};
  CHECK(ctc::minimum_frames(aa) == 3);
  CHECK_THROWS_AS(ctc::ctc_loss(log_probs_from({{0.5, 0.5}, {0.5, 0.5}}), aa, 1), InfeasibleAlignmentError);
  const std::vector<int> blank_in_target{1};
  CHECK_THROWS_AS(ctc::ctc_loss(log_probs_from({{0.5, 0.5}}), blank_in_target, 1), ShapeError);
}

TEST_CASE("ctc equals exhaustive alignment enumeration") {
  std::mt19937_64 rng(7);
  std::size_t compared = 0;
  for (std::size_t t = 1; t <= 6; ++t) {
    for (int d = 1; d <= 4; ++d) {
      const auto logits = random_tensor(t, static_cast<std::size_t>(d) + 1, rng, false, 2.0);
      const auto lp = log_softmax_rows(logits);
      const auto mass = slp::testing::enumerate_ctc_paths(lp, d);
      std::vector<std::vector<int>> targets;
      std::vector<int> prefix;
      slp::testing::all_label_sequences(d, 3, prefix, targets);
      for (const auto& target : targets) {
        CAPTURE(t);
        CAPTURE(d);
        const auto it = mass.find(target);
        if (ctc::minimum_frames(target) > t) {
          CHECK(it == mass.end());
          CHECK_THROWS_AS(ctc::ctc_loss(lp, target, d), InfeasibleAlignmentError);
          continue;
        }
        REQUIRE(it != mass.end());
        const double expected = -std::log(it->second);
        CHECK(std::abs(ctc::ctc_loss(lp, target, d).item() - expected) < 1e-9);
        ++compared;
      }
    }
  }
  CHECK(compared > 300);
}

TEST_CASE("ctc gradient check") {
  for (int seed = 0; seed < 20; ++seed) {
    CAPTURE(seed);
    std::mt19937_64 rng(60 + static_cast<std::uint64_t>(seed));
    const int labels = 1 + static_cast<int>(rng() % 4);
    std::vector<int> target;
    const std::size_t len = 1 + rng() % 3;
    for (std::size_t i = 0; i < len; ++i) target.push_back(static_cast<int>(rng() % static_cast<unsigned>(labels)));
    const std::size_t frames = ctc::minimum_frames(target) + rng() % 4;
    auto logits = random_tensor(frames, static_cast<std::size_t>(labels) + 1, rng);
    const auto r = check_gradients({logits}, [&] { return ctc::ctc_loss(log_softmax_rows(logits), target, labels); });
    CHECK(r.max_error < 1e-4);
  }
}

TEST_CASE("ctc collapse rule") {
  const std::vector<int> path{2, 0, 0, 2, 1, 1, 2, 1};
  CHECK(ctc::collapse_path(path, 2) == std::vector<int>{0, 1, 1});
  // probability-one path
  std::vector<double> v(path.size() * 3, -1e9);
  for (std::size_t t = 0; t < path.size(); ++t) v[t * 3 + static_cast<std::size_t>(path[t])] = 0.0;
  const TensorD lp(path.size(), 3, v);
  CHECK(ctc::greedy_collapse(lp, 2) == std::vector<int>{0, 1, 1});
  const std::vector<int> target{0, 1, 1};
  CHECK(ctc::ctc_loss(lp, target, 2).item() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("greedy search stop and argmax rules") {
  const int bos = 1, eos = 2;
  auto scripted = [](std::vector<int> script) {
    return [script](const std::vector<int>& so_far) {
      std::vector<double> logits(6, 0.0);
      logits[static_cast<std::size_t>(script[so_far.size() - 1])] = 5.0;
      return logits;
    };
  };
  CHECK(translation::greedy_search(scripted({eos}), 10, bos, eos).empty());
  CHECK(translation::greedy_search(scripted({4, 5, eos}), 10, bos, eos) == std::vector<int>{4, 5});
  CHECK(translation::greedy_search(scripted({4, 4, 4, 4, 4}), 3, bos, eos).size() == 3);
}

TEST_CASE("translation model shape and loss contracts") {
  const std::size_t vocab = 9;
  translation::TranslationModel<double> model(tiny(), vocab, 3);
  CHECK(model.blank() == 9);
  CHECK(model.ctc_head.out_features() == vocab + 1);
  CHECK(model.output_head.out_features() == vocab);
  CHECK_THROWS_AS(translation::TranslationModel<double>(tiny(), 4, 1), ConfigError);

  std::mt19937_64 rng(4);
  auto frames = random_tensor(6, 383, rng, true, 0.5);
  const std::vector<int> target{5, 6};

  SUBCASE("decoder forced to emit EOS decodes to nothing") {
    for (auto& w : model.output_head.weight.mutable_values()) w = 0.0;
    auto b = model.output_head.bias.mutable_values();
    for (auto& x : b) x = 0.0;
    b[text::Vocabulary::kEos] = 10.0;
    CHECK(translation::greedy_decode(model, frames, 10).empty());
  }
  SUBCASE("CTC head forced to the target label gives near-zero loss") {
    for (auto& w : model.ctc_head.weight.mutable_values()) w = 0.0;
    auto b = model.ctc_head.bias.mutable_values();
    for (auto& x : b) x = 0.0;
    b[5] = 40.0;
    const std::vector<int> single{5};
    CHECK(translation::translation_loss(model, frames, single).item() < 1e-9);
    CHECK(translation::ctc_greedy(model, frames) == single);
  }
  SUBCASE("loss reaches the input frames") {
    Tape<double> tape;
    {
      TapeScope<double> scope(tape);
      tape.backward(translation::translation_loss(model, frames, target));
    }
    double norm = 0.0;
    for (double g : frames.grad()) norm += g * g;
    CHECK(norm > 0.0);
  }
  SUBCASE("initial decoder cross-entropy is near the uniform baseline") {
    const double ce = translation::decoder_cross_entropy(model, frames, target).item();
    CHECK(std::abs(ce - std::log(static_cast<double>(vocab))) < 0.5 * std::log(static_cast<double>(vocab)));
  }
}

TEST_CASE("overfitting one pair decreases the translation loss") {
  TransformerConfig cfg = tiny();
  translation::TranslationModel<double> model(cfg, 8, 5);
  std::mt19937_64 rng(8);
  const auto frames = random_tensor(7, 383, rng, false, 0.5);
  const std::vector<int> target{4, 5, 6};
  const auto params = model.parameters();
  AdamConfig adam;
  adam.learning_rate = 3e-3;
  OptimizerState<double> state(adam, params);
  std::vector<double> losses;
  for (int step = 0; step < 60; ++step) {
    Tape<double> tape;
    TapeScope<double> scope(tape);
    const auto loss = translation::translation_loss(model, frames, target);
    losses.push_back(loss.item());
    tape.backward(loss);
    adam_step(params, state);
    zero_grads(params);
  }
  double first = 0.0, last = 0.0;
  for (int i = 0; i < 10; ++i) {
    first += losses[static_cast<std::size_t>(i)];
    last += losses[losses.size() - 10 + static_cast<std::size_t>(i)];
  }
  CHECK(last < 0.5 * first);
}

TEST_CASE("pose-to-text loss through a frozen model") {
  translation::TranslationModel<double> model(tiny(), 7, 9);
  std::mt19937_64 rng(10);
  auto frames = random_tensor(5, 383, rng, true, 0.5);
  const std::vector<int> target{4, 5};
  CHECK_THROWS_AS(static_cast<void>(translation::pose_to_text_loss(model, frames, target)), ConfigError);

  model.freeze();
  CHECK(model.frozen());
  const double first = translation::pose_to_text_loss(model, frames, target).item();
  CHECK(translation::pose_to_text_loss(model, frames, target).item() == first);

  const auto r = check_gradients(
      {frames}, [&] { return translation::pose_to_text_loss(model, frames, target); }, 1e-6, 200, 1);
  CHECK(r.max_error < 1e-3);
  for (const auto& p : model.parameters()) {
    for (double g : p.tensor.grad()) CHECK(g == 0.0);
  }
}
