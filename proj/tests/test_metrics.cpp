#include <cmath>
#include <random>

#include "doctest.h"
#include "slp/errors.hpp"
#include "slp/metrics.hpp"
#include "slp/vocabulary.hpp"
#include "oracles.hpp"

using namespace slp;
using metrics::bleu_n;
using metrics::rouge_l;
using slp::testing::enumerate_dtw;
using slp::testing::Frames;

namespace {

Frames random_frames(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Frames f(n, std::vector<double>(dim));
  for (auto& row : f) {
    for (auto& v : row) v = g(rng);
  }
  return f;
}

std::vector<std::string> words(const char* s) { return text::tokenize(s); }

}  // namespace

TEST_CASE("bleu and rouge hand checks") {
  const auto cat = words("the cat");
  const auto sat = words("the cat sat");
  CHECK(std::abs(bleu_n(cat, sat, 1) - 100.0 * std::exp(1.0 - 1.5)) < 1e-9);
  CHECK(std::abs(bleu_n(cat, sat, 1) - 60.65) < 0.01);
  CHECK(std::abs(rouge_l(words("a b c"), words("a c d")) - 66.67) < 0.01);
  CHECK(bleu_n(sat, sat, 4) == 100.0);
  const auto longer = words("one two three four five six");
  CHECK(bleu_n(longer, longer, 4) == 100.0);
  CHECK(rouge_l(longer, longer) == 100.0);
  CHECK(bleu_n({}, sat, 4) == 0.0);
  CHECK(rouge_l({}, sat) == 0.0);
  CHECK_THROWS_AS(bleu_n(cat, {}, 4), InputError);
  CHECK_THROWS_AS(bleu_n(cat, sat, 0), InputError);
}

TEST_CASE("bleu clipping and brevity") {
  // "the the the" against "the cat": unigram precision clipped to 1/3, no penalty.
  CHECK(bleu_n(words("the the the"), words("the cat"), 1) == doctest::Approx(100.0 / 3.0).epsilon(1e-12));
  // Two-token candidate, BLEU-4: only orders 1 and 2 have n-grams.
  const double p1 = 1.0, p2 = 1.0, bp = std::exp(1.0 - 4.0 / 2.0);
  CHECK(bleu_n(words("a b"), words("a b c d"), 4) == doctest::Approx(100.0 * bp * std::sqrt(p1 * p2)).epsilon(1e-12));
  for (std::size_t n = 1; n <= 4; ++n) {
    const auto r = bleu_n(words("x y z w"), words("a b c d"), static_cast<int>(n));
    CHECK(r >= 0.0);
    CHECK(r < 1e-3);
  }
}

TEST_CASE("dtw equals exhaustive warping-path enumeration") {
  std::mt19937_64 rng(31);
  for (std::size_t n = 1; n <= 8; ++n) {
    for (std::size_t m = 1; m <= 8; ++m) {
      CAPTURE(n);
      CAPTURE(m);
      const auto a = random_frames(n, 3, rng);
      const auto b = random_frames(m, 3, rng);
      const auto expected = enumerate_dtw(a, b);
      const auto got = metrics::dtw(a, b);
      CHECK(std::abs(got.total_cost - expected.total_cost) < 1e-9);
      CHECK(got.path_length == expected.path_length);
    }
  }
}

TEST_CASE("dtw properties") {
  std::mt19937_64 rng(32);
  std::uniform_int_distribution<std::size_t> len(1, 12);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_frames(len(rng), 4, rng);
    const auto b = random_frames(len(rng), 4, rng);
    CHECK(metrics::dtw(a, a).total_cost == 0.0);
    const auto ab = metrics::dtw(a, b);
    const auto ba = metrics::dtw(b, a);
    CHECK(std::abs(ab.total_cost - ba.total_cost) < 1e-12);
    CHECK(ab.path_length == ba.path_length);
    CHECK(ab.path_length >= std::max(a.size(), b.size()));
    CHECK(ab.path_length <= a.size() + b.size() - 1);
  }
  CHECK(metrics::dtw({{0.0}, {0.0}, {1.0}}, {{0.0}, {1.0}}).total_cost == 0.0);
  CHECK(metrics::dtw({{0.0, 0.0}}, {{3.0, 4.0}}).total_cost == 5.0);
  CHECK_THROWS_AS(metrics::dtw({}, {{1.0}}), InputError);
  CHECK_THROWS_AS(metrics::dtw({{1.0}}, {{1.0, 2.0}}), InputError);
}

TEST_CASE("pose dtw ignores the counter channel") {
  std::vector<double> a(2 * pose::kFrameDim, 0.0), b(3 * pose::kFrameDim, 0.0);
  a[pose::kFrameDim + pose::kCounterIndex] = 1.0;
  b[pose::kFrameDim + pose::kCounterIndex] = 0.5;
  b[2 * pose::kFrameDim + pose::kCounterIndex] = 1.0;
  const pose::PoseSequence sa(2, a), sb(3, b);
  CHECK(metrics::dtw_distance(sa, sb) == 0.0);
  b[5] = 3.0;
  CHECK(metrics::dtw_distance(sa, pose::PoseSequence(3, b)) == doctest::Approx(3.0 / 3.0));
}
