#include "slp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "slp/errors.hpp"

namespace slp::metrics {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts counts;
  if (tokens.size() < n) return counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double euclidean(const std::vector<double>& x, const std::vector<double>& y) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

}  // namespace

double bleu_n(std::span<const std::string> candidate, std::span<const std::string> reference, int n,
              double epsilon) {
  if (n < 1) throw InputError("bleu: n must be >= 1");
  if (reference.empty()) throw InputError("bleu: empty reference");
  if (candidate.empty()) return 0.0;

  double log_sum = 0.0;
  int orders = 0;
  for (int k = 1; k <= n; ++k) {
    const auto cand = count_ngrams(candidate, static_cast<std::size_t>(k));
    if (cand.empty()) break;
    const auto ref = count_ngrams(reference, static_cast<std::size_t>(k));
    std::size_t total = 0;
    std::size_t matched = 0;
    for (const auto& [gram, c] : cand) {
      total += c;
      const auto it = ref.find(gram);
      if (it != ref.end()) matched += std::min(c, it->second);
    }
    const double numerator = matched == 0 ? epsilon : static_cast<double>(matched);
    log_sum += std::log(numerator / static_cast<double>(total));
    ++orders;
  }
  const double c = static_cast<double>(candidate.size());
  const double r = static_cast<double>(reference.size());
  const double brevity = c > r ? 1.0 : std::exp(1.0 - r / c);
  const double score = 100.0 * brevity * std::exp(log_sum / orders);
  return std::clamp(score, 0.0, 100.0);
}

double rouge_l(std::span<const std::string> candidate, std::span<const std::string> reference) {
  if (candidate.empty() && reference.empty()) return 100.0;
  if (candidate.empty() || reference.empty()) return 0.0;
  const auto lcs = static_cast<double>(lcs_length(candidate, reference));
  if (lcs == 0.0) return 0.0;
  const double precision = lcs / static_cast<double>(candidate.size());
  const double recall = lcs / static_cast<double>(reference.size());
  return 100.0 * 2.0 * precision * recall / (precision + recall);
}

DtwResult dtw(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.empty() || b.empty()) throw InputError("dtw: empty sequence");
  const std::size_t width = a.front().size();
  for (const auto& f : a) {
    if (f.size() != width) throw InputError("dtw: frame widths differ");
  }
  for (const auto& f : b) {
    if (f.size() != width) throw InputError("dtw: frame widths differ");
  }

  const std::size_t n = a.size();
  const std::size_t m = b.size();
  std::vector<DtwResult> table(n * m);
  auto better = [](const DtwResult& x, const DtwResult& y) {
    return x.total_cost < y.total_cost || (x.total_cost == y.total_cost && x.path_length < y.path_length);
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = euclidean(a[i], b[j]);
      if (i == 0 && j == 0) {
        table[0] = {d, 1};
        continue;
      }
      const DtwResult* best = nullptr;
      auto consider = [&](const DtwResult& candidate) {
        if (best == nullptr || better(candidate, *best)) best = &candidate;
      };
      if (i > 0 && j > 0) consider(table[(i - 1) * m + j - 1]);
      if (i > 0) consider(table[(i - 1) * m + j]);
      if (j > 0) consider(table[i * m + j - 1]);
      table[i * m + j] = {best->total_cost + d, best->path_length + 1};
    }
  }
  return table.back();
}

double dtw_distance(const pose::PoseSequence& a, const pose::PoseSequence& b) {
  if (a.empty() || b.empty()) throw InputError("dtw: empty sequence");
  auto frames = [](const pose::PoseSequence& s) {
    std::vector<std::vector<double>> out(s.num_frames());
    for (std::size_t f = 0; f < s.num_frames(); ++f) {
      const auto row = s.frame(f);
      out[f].assign(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(pose::kCounterIndex));
    }
    return out;
  };
  return dtw(frames(a), frames(b)).normalized();
}

}  // namespace slp::metrics
