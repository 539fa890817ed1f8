#include <cmath>
#include <random>

#include "doctest.h"
#include "slp/errors.hpp"
#include "slp/production.hpp"
#include "support.hpp"

using namespace slp;
using namespace slp::nn;
using production::ProductionModel;
using slp::testing::random_tensor;
using slp::testing::TensorD;

namespace {

TransformerConfig tiny() {
  TransformerConfig c;
  c.num_layers = 2;
  c.num_heads = 4;
  c.model_dim = 16;
  c.ff_dim = 32;
  return c;
}

TensorD random_frames(std::size_t n, std::mt19937_64& rng) {
  auto t = random_tensor(n, pose::kFrameDim, rng, false, 0.5);
  for (std::size_t f = 0; f < n; ++f) t.set(f, pose::kCounterIndex, n == 1 ? 0.0 : double(f) / double(n - 1));
  return t;
}

// Output head biased so that every frame carries `counter` in the last channel.
void force_counter(ProductionModel<double>& m, double counter) {
  for (auto& w : m.output_head.weight.mutable_values()) w = 0.0;
  auto b = m.output_head.bias.mutable_values();
  for (auto& x : b) x = 0.0;
  b[pose::kCounterIndex] = counter;
}

}  // namespace

TEST_CASE("step-one teacher forcing equals autoregressive decoding bitwise") {
  for (int seed = 0; seed < 10; ++seed) {
    ProductionModel<double> m(tiny(), 12, static_cast<std::uint64_t>(seed));
    std::mt19937_64 rng(100 + static_cast<std::uint64_t>(seed));
    const std::vector<int> ids{4, 7, 5};
    const auto gt = random_frames(5, rng);
    const auto tf = m.forward_teacher_forced(ids, gt);
    const auto ad = m.forward_autoregressive(ids, 5);
    for (std::size_t c = 0; c < pose::kFrameDim; ++c) CHECK(tf.at(0, c) == ad.at(0, c));
    // Later steps see different inputs.
    double diff = 0.0;
    for (std::size_t c = 0; c < pose::kFrameDim; ++c) diff += std::abs(tf.at(2, c) - ad.at(2, c));
    CHECK(diff > 0.0);
  }
}

TEST_CASE("teacher-forced pass is causal") {
  ProductionModel<double> m(tiny(), 10, 3);
  std::mt19937_64 rng(3);
  const std::vector<int> ids{4, 5};
  const auto gt = random_frames(6, rng);
  const auto base = m.forward_teacher_forced(ids, gt);
  for (std::size_t t = 0; t < 6; ++t) {
    auto changed = gt.detach();
    for (std::size_t c = 0; c < pose::kFrameDim; ++c) changed.set(t, c, changed.at(t, c) + 1.0);
    const auto out = m.forward_teacher_forced(ids, changed);
    for (std::size_t r = 0; r <= t; ++r) {
      for (std::size_t c = 0; c < pose::kFrameDim; ++c) CHECK(out.at(r, c) == base.at(r, c));
    }
    if (t + 1 < 6) CHECK(out.at(t + 1, 0) != base.at(t + 1, 0));
  }
}

TEST_CASE("autoregressive rollout matches teacher forcing on its own outputs") {
  ProductionModel<double> m(tiny(), 10, 5);
  const std::vector<int> ids{6, 4, 8};
  const auto ad = m.forward_autoregressive(ids, 4);
  const auto tf = m.forward_teacher_forced(ids, ad.detach());
  for (std::size_t i = 0; i < ad.size(); ++i) CHECK(tf.values()[i] == doctest::Approx(ad.values()[i]).epsilon(1e-12));
}

TEST_CASE("text encoding") {
  ProductionModel<double> m(tiny(), 10, 1);
  CHECK_THROWS_AS(static_cast<void>(m.encode_text(std::vector<int>{})), InputError);
  const auto mem = m.encode_text(std::vector<int>{4, 5, 6});
  CHECK(mem.rows() == 3);
  CHECK(mem.cols() == 16);
  const auto unknown = m.encode_text(std::vector<int>{10});
  const auto unk = m.encode_text(std::vector<int>{text::Vocabulary::kUnk});
  for (std::size_t i = 0; i < unk.size(); ++i) CHECK(unknown.values()[i] == unk.values()[i]);

  const auto vocab = text::Vocabulary::build({"red circle"});
  CHECK(vocab.encode("blue circle") == std::vector<int>{text::Vocabulary::kUnk, vocab.id("circle")});
  ProductionModel<double> small(tiny(), vocab.size(), 1);
  const production::DecodingConfig dc{0.95, 4};
  CHECK_THROWS_AS(production::generate(small, "", vocab, dc), InputError);
  CHECK_THROWS_AS(production::generate(small, " ,. ", vocab, dc), InputError);
  CHECK_NOTHROW(production::generate(small, "blue square", vocab, dc));
}

TEST_CASE("mse regression loss") {
  const TensorD a(2, 2, {1.0, 2.0, 3.0, 4.0});
  const TensorD b(2, 2, {1.0, 0.0, 3.0, 5.0});
  CHECK(production::mse_regression_loss(a, b).item() == doctest::Approx(5.0 / 4.0).epsilon(1e-15));
  CHECK(production::mse_regression_loss(a, a).item() == 0.0);
  CHECK_THROWS_AS(production::mse_regression_loss(a, TensorD::zeros(3, 2)), ShapeError);
  std::mt19937_64 rng(6);
  for (int i = 0; i < 20; ++i) {
    const auto x = random_tensor(3, 4, rng, false);
    const auto y = random_tensor(3, 4, rng, false);
    CHECK(production::mse_regression_loss(x, y).item() >= 0.0);
    CHECK(production::mse_regression_loss(x, y).item() == production::mse_regression_loss(y, x).item());
  }
}

TEST_CASE("decode stop rules") {
  ProductionModel<double> m(tiny(), 10, 2);
  const std::vector<int> ids{4};
  SUBCASE("counter at threshold stops after one frame") {
    force_counter(m, 0.95);
    const auto d = m.decode(ids, {0.95, 50});
    CHECK(d.frames.rows() == 1);
  }
  SUBCASE("counter below threshold runs to the cap") {
    force_counter(m, 0.5);
    const auto d = m.decode(ids, {0.95, 7});
    CHECK(d.frames.rows() == 7);
    for (double c : d.raw_counters) CHECK(c == 0.5);
  }
  SUBCASE("config validation") {
    CHECK_THROWS_AS(production::DecodingConfig({0.95, 0}).validate(), ConfigError);
    CHECK_THROWS_AS(production::DecodingConfig({1.5, 10}).validate(), ConfigError);
  }
}

TEST_CASE("generated sequences satisfy the frame contract") {
  const auto vocab = text::Vocabulary::build({"one two three"});
  ProductionModel<float> m(tiny(), vocab.size(), 9);
  const auto g = production::generate(m, "one two", vocab, {0.95, 12});
  const std::size_t n = g.sequence.num_frames();
  CHECK(n >= 1);
  CHECK(n <= 12);
  CHECK(g.raw_counters.size() == n);
  CHECK(g.sequence.counters() == pose::counter_ramp(n));
  for (double v : g.sequence.values()) CHECK(std::isfinite(v));
  const auto again = production::generate(m, "one two", vocab, {0.95, 12});
  CHECK(again.sequence == g.sequence);
}
