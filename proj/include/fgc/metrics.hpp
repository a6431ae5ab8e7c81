#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace fgc {

class MetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Mann–Whitney ROC-AUC with midranks for ties:
/// P(score_pos > score_neg) + ½ P(score_pos = score_neg).
/// Throws MetricError unless both classes are present.
double roc_auc(std::span<const double> scores, std::span<const std::uint8_t> labels);

/// Fraction of all positives ranked within the top k scores. Ties are broken
/// by ascending position. Throws MetricError when k = 0 or there are no positives.
double recall_at_k(std::span<const double> scores, std::span<const std::uint8_t> labels,
                   std::size_t k);

/// Scores and labels restricted to `nodes`, in the given order.
struct Subset {
  std::vector<double> scores;
  std::vector<std::uint8_t> labels;
  std::size_t positives() const;
};
Subset select_nodes(std::span<const double> scores, std::span<const std::uint8_t> labels,
                    std::span<const std::uint32_t> nodes);

}  // namespace fgc
