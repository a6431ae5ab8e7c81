#include "fgc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace fgc {

namespace {

void require_finite(std::span<const double> scores, const char* who) {
  for (double s : scores) {
    if (!std::isfinite(s)) throw MetricError(std::string(who) + ": non-finite score");
  }
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
  if (scores.size() != labels.size()) throw MetricError("roc_auc: length mismatch");
  require_finite(scores, "roc_auc");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

  // Sum of doubled midranks of the positives keeps everything integral.
  std::uint64_t pos = 0;
  std::uint64_t rank_sum_x2 = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const std::uint64_t midrank_x2 = i + 1 + j;  // (i+1) + j = 2 × mean of ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]]) {
        ++pos;
        rank_sum_x2 += midrank_x2;
      }
    }
    i = j;
  }
  const std::uint64_t neg = n - pos;
  if (pos == 0 || neg == 0) throw MetricError("roc_auc: both classes must be present");
  // U = R_pos − pos(pos+1)/2, doubled.
  const std::uint64_t u_x2 = rank_sum_x2 - pos * (pos + 1);
  return static_cast<double>(u_x2) / (2.0 * static_cast<double>(pos) * static_cast<double>(neg));
}

double recall_at_k(std::span<const double> scores, std::span<const std::uint8_t> labels,
                   std::size_t k) {
  if (scores.size() != labels.size()) throw MetricError("recall_at_k: length mismatch");
  if (k == 0) throw MetricError("recall_at_k: k must be at least 1");
  require_finite(scores, "recall_at_k");
  const auto positives =
      static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto y) { return y != 0; }));
  if (positives == 0) throw MetricError("recall_at_k: no positives");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const std::size_t top = std::min(k, order.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) hits += labels[order[i]] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(positives);
}

std::size_t Subset::positives() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto y) { return y != 0; }));
}

Subset select_nodes(std::span<const double> scores, std::span<const std::uint8_t> labels,
                    std::span<const std::uint32_t> nodes) {
  Subset s;
  s.scores.reserve(nodes.size());
  s.labels.reserve(nodes.size());
  for (std::uint32_t i : nodes) {
    s.scores.push_back(scores[i]);
    s.labels.push_back(labels[i]);
  }
  return s;
}

}  // namespace fgc
