#include "fgc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

namespace fgc::nd {

namespace {

double evaluate(const LossBuilder& build_loss) {
  Tape tape;
  return tape.value(build_loss(tape))(0, 0);
}

}  // namespace

GradCheckReport finite_diff_check(const LossBuilder& build_loss,
                                  std::span<Parameter* const> params,
                                  const GradCheckOptions& opts) {
  for (Parameter* p : params) p->zero_grad();
  {
    Tape tape;
    tape.backward(build_loss(tape));
  }
  std::vector<Matrix> analytic;
  analytic.reserve(params.size());
  for (Parameter* p : params) {
    analytic.push_back(p->grad);
    p->zero_grad();
  }

  GradCheckReport report;
  std::mt19937_64 rng(opts.seed);
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > opts.coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(opts.coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t idx : coords) {
      const double saved = p.value[idx];
      p.value[idx] = saved + opts.step;
      const double up = evaluate(build_loss);
      p.value[idx] = saved - opts.step;
      const double down = evaluate(build_loss);
      p.value[idx] = saved;

      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = analytic[k][idx];
      const double denom = std::max({std::abs(a), std::abs(numeric), opts.abs_floor});
      const double rel = std::abs(a - numeric) / denom;
      ++report.coords_checked;
      if (!std::isnan(report.max_rel_error) && (std::isnan(rel) || rel > report.max_rel_error)) {
        report.max_rel_error = rel;
        report.worst_param = p.name;
        report.worst_index = idx;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  report.passed = std::isfinite(report.max_rel_error) && report.max_rel_error < opts.rel_tol;
  return report;
}

}  // namespace fgc::nd
