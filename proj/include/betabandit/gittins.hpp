#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "betabandit/belief.hpp"
#include "betabandit/decision.hpp"

namespace betabandit {

inline constexpr double kDefaultIndexTolerance = 1e-6;

// Deepest backward-induction horizon we are willing to run. Beyond it the
// requested tolerance is reported as unachievable instead of silently
// loosened.
inline constexpr int kMaxCalibrationHorizon = 20000;

// Raised when a tolerance would need a horizon past kMaxCalibrationHorizon;
// carries the truncation bound that the capped horizon would achieve.
class ResourceLimitError : public std::runtime_error {
 public:
  ResourceLimitError(const std::string& what, double achievable_bound)
      : std::runtime_error(what), achievable_bound_(achievable_bound) {}
  double achievable_bound() const { return achievable_bound_; }

 private:
  double achievable_bound_;
};

struct IndexQuery {
  BeliefState belief;
  double discount = 0.0;
  double tolerance = kDefaultIndexTolerance;
};

namespace detail {

// Smallest H with rho^H / (1-rho) < tol/2.
inline int calibration_horizon(double discount, double tolerance) {
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("calibration_horizon: discount in [0,1)");
  if (!(tolerance > 0.0))
    throw std::invalid_argument("calibration_horizon: tolerance > 0");
  if (discount == 0.0) return 1;
  const double target = 0.5 * tolerance * (1.0 - discount);
  const double raw = std::log(target) / std::log(discount);
  if (!(raw < static_cast<double>(kMaxCalibrationHorizon))) {
    const double achievable =
        std::pow(discount, kMaxCalibrationHorizon) / (1.0 - discount);
    throw ResourceLimitError(
        "index tolerance " + std::to_string(tolerance) +
            " needs a horizon past the cap; achievable truncation bound is " +
            std::to_string(achievable),
        achievable);
  }
  int h = std::max(1, static_cast<int>(raw) - 2);
  while (std::pow(discount, h) >= target) ++h;
  return h;
}

// Truncated backward induction for the calibration problem: at every period
// either retire forever on the sure payoff `lam` or pull the arm (reward 1 on
// Good, 0 on Bad) once and continue. Beliefs live on the shifted lattice
// (n_bad0 + i, n_good0 + j); level buffers are reused across bisection steps.
class CalibrationDp {
 public:
  CalibrationDp(const BeliefState& root, double discount, int horizon)
      : n_bad0_(root.n_bad),
        n_good0_(root.n_good),
        discount_(discount),
        horizon_(horizon),
        geom_(static_cast<std::size_t>(horizon) + 1, 0.0),
        inv_total_(static_cast<std::size_t>(horizon), 0.0),
        cur_(static_cast<std::size_t>(horizon) + 1, 0.0),
        nxt_(static_cast<std::size_t>(horizon) + 1, 0.0) {
    for (int h = 1; h <= horizon_; ++h) geom_[h] = 1.0 + discount_ * geom_[h - 1];
    // the posterior-mean denominator depends on the lattice level only
    for (int d = 0; d < horizon_; ++d)
      inv_total_[d] = 1.0 / (n_bad0_ + n_good0_ + d);
  }

  // Root value minus the root retire value. The retire branch of the max and
  // the subtrahend come from the same geometric table, so the result is
  // exactly 0.0 whenever retiring at once is optimal, strictly positive
  // otherwise.
  double excess(double lam) {
    std::fill(nxt_.begin(), nxt_.end(), 0.0);
    for (int d = horizon_ - 1; d >= 0; --d) {
      const double retire = lam * geom_[horizon_ - d];
      const double inv = inv_total_[d];
      for (int j = 0; j <= d; ++j) {
        const double mu = (n_good0_ + j) * inv;
        const double pull = mu * (1.0 + discount_ * nxt_[j + 1]) +
                            (1.0 - mu) * (discount_ * nxt_[j]);
        cur_[j] = retire >= pull ? retire : pull;
      }
      std::swap(cur_, nxt_);
    }
    return nxt_[0] - lam * geom_[horizon_];
  }

  // Lipschitz bound of excess() in lam: the full discounted mass.
  double slope_bound() const { return geom_[horizon_]; }

 private:
  double n_bad0_;
  double n_good0_;
  double discount_;
  int horizon_;
  std::vector<double> geom_;
  std::vector<double> inv_total_;
  std::vector<double> cur_;
  std::vector<double> nxt_;
};

}  // namespace detail

// Gittins index of the beta-Bernoulli arm paying 1 on Good and 0 on Bad: the
// break-even sure payoff at which the optimal policy is indifferent between
// pulling and retiring. Computed by bisection on the sure payoff over the
// truncated calibration problem; the result is within `tolerance` of the
// untruncated index.
inline double normalized_index(const BeliefState& belief, double discount,
                               double tolerance = kDefaultIndexTolerance) {
  validate(belief);
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("normalized_index: discount in [0,1)");
  if (!(tolerance > 0.0))
    throw std::invalid_argument("normalized_index: tolerance > 0");
  const double mean_good = belief.n_good / (belief.n_bad + belief.n_good);
  if (discount == 0.0) return mean_good;  // one-period problem: the mean
  const int horizon = detail::calibration_horizon(discount, tolerance);
  detail::CalibrationDp dp(belief, discount, horizon);
  double lo = mean_good;  // the index never falls below the posterior mean
  double hi = 1.0;
  if (dp.excess(lo) <= 0.0) return lo;
  while (hi - lo >= 0.5 * tolerance) {
    const double mid = 0.5 * (lo + hi);
    if (dp.excess(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

inline double normalized_index(const IndexQuery& q) {
  return normalized_index(q.belief, q.discount, q.tolerance);
}

// Index rescaled to payoff units; bad maps to 0, good maps to 1.
inline double index_payoff(const BeliefState& belief, const PayoffSpec& payoffs,
                           double tolerance = kDefaultIndexTolerance) {
  validate(payoffs);
  return payoffs.bad +
         (payoffs.good - payoffs.bad) *
             normalized_index(belief, payoffs.discount, tolerance);
}

struct Decision {
  Action action = Action::Avoid;
  // |index - avoid threshold| <= 2*tolerance in normalized units.
  bool boundary_uncertain = false;
};

// Prudent index rule: Experiment iff the computed normalized index strictly
// exceeds 1 - critical_probability(payoffs); exact ties go to Avoid. Clear
// cases are settled by one or two sweeps of the calibration recursion at the
// threshold; only calls within a provable margin of the boundary fall back to
// the full bisection, so the outcome always matches the bisected index
// comparison bit for bit.
inline Decision decide_with_diagnostics(
    const BeliefState& belief, const PayoffSpec& payoffs,
    double tolerance = kDefaultIndexTolerance) {
  validate(belief);
  validate(payoffs);
  if (!(tolerance > 0.0))
    throw std::invalid_argument("decide: tolerance > 0");
  const double threshold = 1.0 - critical_probability(payoffs);
  const double mean_good = belief.n_good / (belief.n_bad + belief.n_good);
  if (payoffs.discount == 0.0) {
    return {mean_good > threshold ? Action::Experiment : Action::Avoid,
            std::fabs(mean_good - threshold) <= 2.0 * tolerance};
  }
  if (mean_good - threshold > 2.0 * tolerance)
    return {Action::Experiment, false};  // index >= posterior mean
  if (threshold - mean_good > 2.5 * tolerance) {
    const int horizon = detail::calibration_horizon(payoffs.discount, tolerance);
    detail::CalibrationDp dp(belief, payoffs.discount, horizon);
    if (dp.excess(threshold) > 3.0 * tolerance * dp.slope_bound())
      return {Action::Experiment, false};
    if (dp.excess(threshold - 2.5 * tolerance) == 0.0)
      return {Action::Avoid, false};
  }
  const double v = normalized_index(belief, payoffs.discount, tolerance);
  return {v > threshold ? Action::Experiment : Action::Avoid,
          std::fabs(v - threshold) <= 2.0 * tolerance};
}

inline Action decide(const BeliefState& belief, const PayoffSpec& payoffs,
                     double tolerance = kDefaultIndexTolerance) {
  return decide_with_diagnostics(belief, payoffs, tolerance).action;
}

// Memoized normalized index values over the reachable belief lattice
// {(n_bad0 + i, n_good0 + j) : i + j <= depth}, stored row-major by i.
struct IndexTable {
  double prior_bad = 1.0;
  double prior_good = 1.0;
  int depth = 0;
  double discount = 0.0;
  double tolerance = kDefaultIndexTolerance;
  double certified_error = 0.0;  // rho^H/(1-rho) in normalized units
  std::vector<double> values;

  static std::size_t size_for_depth(int depth) {
    const auto n = static_cast<std::size_t>(depth) + 1;
    return n * (n + 1) / 2;
  }

  std::size_t offset(int i, int j) const {
    const auto ui = static_cast<std::size_t>(i);
    return ui * static_cast<std::size_t>(depth + 1) - ui * (ui - 1) / 2 +
           static_cast<std::size_t>(j);
  }

  double at(int i, int j) const {
    if (i < 0 || j < 0 || i + j > depth)
      throw std::out_of_range("IndexTable::at: off-lattice query");
    return values[offset(i, j)];
  }
};

// Materializes the index over all beliefs reachable in at most `depth`
// experiments from `prior`.
inline IndexTable build_table(const BeliefState& prior,
                              const PayoffSpec& payoffs, int depth,
                              double tolerance = kDefaultIndexTolerance) {
  validate(prior);
  validate(payoffs);
  if (depth < 0)
    throw std::invalid_argument("build_table: depth must be nonnegative");
  IndexTable table;
  table.prior_bad = prior.n_bad;
  table.prior_good = prior.n_good;
  table.depth = depth;
  table.discount = payoffs.discount;
  table.tolerance = tolerance;
  table.certified_error =
      payoffs.discount == 0.0
          ? 0.0
          : std::pow(payoffs.discount,
                     detail::calibration_horizon(payoffs.discount, tolerance)) /
                (1.0 - payoffs.discount);
  table.values.resize(IndexTable::size_for_depth(depth));
  for (int i = 0; i <= depth; ++i) {
    for (int j = 0; i + j <= depth; ++j) {
      BeliefState s{prior.n_bad + i, prior.n_good + j, prior.count_bad + i,
                    prior.count_good + j};
      table.values[table.offset(i, j)] =
          normalized_index(s, payoffs.discount, tolerance);
    }
  }
  return table;
}

}  // namespace betabandit
