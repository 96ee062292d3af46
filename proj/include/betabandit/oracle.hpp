#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "betabandit/belief.hpp"
#include "betabandit/decision.hpp"
#include "betabandit/gittins.hpp"
#include "betabandit/rng.hpp"
#include "betabandit/simulate.hpp"

namespace betabandit {

inline constexpr int kMaxDpHorizon = 600;

// Truncated sum U_avoid * (1 + rho + ... + rho^{horizon-1}).
inline double always_avoid_value(const PayoffSpec& p, int horizon) {
  double geom = 0.0;
  for (int h = 0; h < horizon; ++h) geom = 1.0 + p.discount * geom;
  return p.avoid * geom;
}

struct DpResult {
  double value = 0.0;  // optimal expected discounted payoff from the root
  Action first_action = Action::Avoid;
  int horizon = 0;
  double tail_bound = 0.0;  // rho^H (good - bad) / (1 - rho)
  // Value and optimal action at each lattice state (i bad, j good observations
  // past the root) at the first time the state is reachable, t = i + j.
  int depth = 0;
  std::vector<double> state_values;
  std::vector<Action> state_actions;

  std::size_t offset(int i, int j) const {
    const auto ui = static_cast<std::size_t>(i);
    return ui * static_cast<std::size_t>(depth + 1) - ui * (ui - 1) / 2 +
           static_cast<std::size_t>(j);
  }
  double value_at(int i, int j) const {
    if (i < 0 || j < 0 || i + j > depth)
      throw std::out_of_range("DpResult::value_at");
    return state_values[offset(i, j)];
  }
  Action action_at(int i, int j) const {
    if (i < 0 || j < 0 || i + j > depth)
      throw std::out_of_range("DpResult::action_at");
    return state_actions[offset(i, j)];
  }
};

// Exact backward induction for the avoid/experiment problem over the belief
// lattice, truncated at `horizon`:
//   V_H = 0
//   V_t(s) = max( U_avoid + rho V_{t+1}(s),
//                 p(s) (U_bad + rho V_{t+1}(s+Bad))
//                 + (1-p(s)) (U_good + rho V_{t+1}(s+Good)) )
// with p(s) the posterior mean. Avoiding keeps the belief in place; that it
// then stays optimal forever is a property of the solution, not an imposed
// constraint. Ties go to Avoid.
inline DpResult dp_optimal(const BeliefState& prior, const PayoffSpec& payoffs,
                           int horizon) {
  validate(prior);
  validate(payoffs);
  if (horizon < 1) throw std::invalid_argument("dp_optimal: horizon >= 1");
  if (horizon > kMaxDpHorizon)
    throw ResourceLimitError(
        "dp_optimal: horizon past cap " + std::to_string(kMaxDpHorizon),
        std::pow(payoffs.discount, kMaxDpHorizon) *
            (payoffs.good - payoffs.bad) / (1.0 - payoffs.discount));
  const double rho = payoffs.discount;

  DpResult res;
  res.horizon = horizon;
  res.depth = horizon;
  res.tail_bound = std::pow(rho, horizon) * (payoffs.good - payoffs.bad) /
                   (1.0 - rho);
  const std::size_t n = IndexTable::size_for_depth(horizon);
  res.state_values.assign(n, 0.0);
  res.state_actions.assign(n, Action::Avoid);

  // Rolling time levels, both laid out over the full triangle i + j <= H.
  std::vector<double> next_level(n, 0.0);  // V_H = 0
  std::vector<double> cur_level(n, 0.0);
  for (int t = horizon - 1; t >= 0; --t) {
    for (int d = t; d >= 0; --d) {
      for (int j = 0; j <= d; ++j) {
        const int i = d - j;
        const std::size_t at = res.offset(i, j);
        const double nb = prior.n_bad + i;
        const double ng = prior.n_good + j;
        const double p_bad = nb / (nb + ng);
        const double v_avoid = payoffs.avoid + rho * next_level[at];
        const double v_exp =
            p_bad * (payoffs.bad + rho * next_level[res.offset(i + 1, j)]) +
            (1.0 - p_bad) *
                (payoffs.good + rho * next_level[res.offset(i, j + 1)]);
        const bool avoid = v_avoid >= v_exp;
        cur_level[at] = avoid ? v_avoid : v_exp;
        if (d == t) {  // first time this state is reachable
          res.state_values[at] = cur_level[at];
          res.state_actions[at] = avoid ? Action::Avoid : Action::Experiment;
        }
      }
    }
    std::swap(cur_level, next_level);
  }
  res.value = res.state_values[0];
  res.first_action = res.state_actions[0];
  return res;
}

// Independent route to the normalized index: bisect the avoid payoff of a
// (bad=0, avoid=lam, good=1) problem on the first optimal action of
// dp_optimal. Cross-checks gittins::normalized_index without sharing its
// recursion.
inline double dp_index_bisect(const BeliefState& root, double discount,
                              int horizon, double xtol = 1e-7) {
  validate(root);
  if (!(discount > 0.0 && discount < 1.0))
    throw std::invalid_argument("dp_index_bisect: discount in (0,1)");
  if (!(xtol > 0.0)) throw std::invalid_argument("dp_index_bisect: xtol > 0");
  double lo = root.n_good / (root.n_bad + root.n_good);
  double hi = 1.0;
  {
    PayoffSpec p{0.0, lo, 1.0, discount};
    if (dp_optimal(root, p, horizon).first_action == Action::Avoid) return lo;
  }
  while (hi - lo >= xtol) {
    const double lam = 0.5 * (lo + hi);
    PayoffSpec p{0.0, lam, 1.0, discount};
    if (dp_optimal(root, p, horizon).first_action == Action::Avoid)
      hi = lam;
    else
      lo = lam;
  }
  return 0.5 * (lo + hi);
}

enum class PolicyKind { GittinsIndex, AlwaysAvoid, AlwaysExperiment, EmtKnownProb };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::GittinsIndex: return "gittins";
    case PolicyKind::AlwaysAvoid: return "always_avoid";
    case PolicyKind::AlwaysExperiment: return "always_experiment";
    default: return "emt_known_prob";
  }
}

// Either a fixed true probability, or one drawn from the prior per trial.
struct TrueModel {
  bool draw_from_prior = false;
  double fixed_prob_bad = 0.0;

  static TrueModel fixed(double p) { return {false, p}; }
  static TrueModel from_prior() { return {true, 0.0}; }
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int trials = 0;
};

// Mean discounted payoff of a policy under the model, with standard error.
// Trial k uses the substream derive_seed(seed, k) for both the parameter draw
// and the scenario, so different policies run on common random numbers when
// given the same seed.
inline McEstimate policy_value_mc(PolicyKind kind, const BeliefState& prior,
                                  const PayoffSpec& payoffs, TrueModel model,
                                  int trials, int horizon, std::uint64_t seed,
                                  DecisionCache* cache = nullptr,
                                  double tolerance = kDefaultIndexTolerance) {
  validate(prior);
  validate(payoffs);
  if (trials < 1) throw std::invalid_argument("policy_value_mc: trials >= 1");
  if (horizon < 1) throw std::invalid_argument("policy_value_mc: horizon >= 1");
  if (!model.draw_from_prior &&
      !(model.fixed_prob_bad >= 0.0 && model.fixed_prob_bad <= 1.0))
    throw std::invalid_argument("policy_value_mc: fixed_prob_bad in [0,1]");

  const double avoid_sum = always_avoid_value(payoffs, horizon);
  double mean = 0.0, m2 = 0.0;
  for (int k = 0; k < trials; ++k) {
    const std::uint64_t sk = derive_seed(seed, static_cast<std::uint64_t>(k));
    double p_true = model.fixed_prob_bad;
    if (model.draw_from_prior) {
      Pcg32 prng(sk, kParameterStream);
      p_true = sample_beta(prng, prior.prior_bad(), prior.prior_good());
    }
    double value = 0.0;
    switch (kind) {
      case PolicyKind::AlwaysAvoid:
        value = avoid_sum;
        break;
      case PolicyKind::AlwaysExperiment: {
        const Scenario sc = generate_scenario(p_true, horizon, sk);
        double w = 1.0;
        for (int t = 0; t < horizon; ++t) {
          value += w * instant_payoff(payoffs, Action::Experiment,
                                      sc.states[static_cast<std::size_t>(t)]);
          w *= payoffs.discount;
        }
        break;
      }
      case PolicyKind::EmtKnownProb: {
        if (emt_rule(p_true, payoffs) == Action::Avoid) {
          value = avoid_sum;
        } else {
          const Scenario sc = generate_scenario(p_true, horizon, sk);
          double w = 1.0;
          for (int t = 0; t < horizon; ++t) {
            value += w * instant_payoff(payoffs, Action::Experiment,
                                        sc.states[static_cast<std::size_t>(t)]);
            w *= payoffs.discount;
          }
        }
        break;
      }
      case PolicyKind::GittinsIndex: {
        const Scenario sc = generate_scenario(p_true, horizon, sk);
        Trajectory tr =
            cache ? run_gi_with(prior, payoffs, sc,
                                [&](const BeliefState& b) {
                                  return cache->decide(b);
                                })
                  : run_gi(prior, payoffs, sc, tolerance);
        value = tr.discounted_payoff;
        break;
      }
    }
    const double delta = value - mean;
    mean += delta / (k + 1);
    m2 += delta * (value - mean);
  }
  const double var = trials > 1 ? m2 / (trials - 1) : 0.0;
  return {mean, std::sqrt(var / trials), trials};
}

struct LifetimeCheck {
  double discounted_sum = 0.0;  // sum_t rho^t u_t over the stream
  double mc_mean = 0.0;         // E[ sum_{t <= min(theta, L-1)} u_t ]
  double mc_std_error = 0.0;
  double mean_lifetime = 0.0;   // rho / (1 - rho)
  int trials = 0;
};

// Checks the geometric-lifetime reading of discounting: the discounted sum of
// a stream equals the expected undiscounted sum up to an independent
// geometric lifetime with mean rho/(1-rho). Entries past the stream end count
// as zero on both sides.
inline LifetimeCheck lifetime_equivalence(const std::vector<double>& stream,
                                          double discount, int trials,
                                          std::uint64_t seed) {
  if (stream.empty())
    throw std::invalid_argument("lifetime_equivalence: empty stream");
  if (!(discount >= 0.0 && discount < 1.0))
    throw std::invalid_argument("lifetime_equivalence: discount in [0,1)");
  if (trials < 1)
    throw std::invalid_argument("lifetime_equivalence: trials >= 1");

  LifetimeCheck out;
  out.trials = trials;
  out.mean_lifetime = discount / (1.0 - discount);
  std::vector<double> prefix(stream.size());
  double w = 1.0, acc = 0.0;
  for (std::size_t t = 0; t < stream.size(); ++t) {
    out.discounted_sum += w * stream[t];
    w *= discount;
    acc += stream[t];
    prefix[t] = acc;
  }
  const int cap = static_cast<int>(stream.size()) - 1;
  double mean = 0.0, m2 = 0.0;
  for (int k = 0; k < trials; ++k) {
    Pcg32 rng(derive_seed(seed, static_cast<std::uint64_t>(k)),
              kLifetimeStream);
    const int theta = sample_geometric(rng, discount);
    const double value = prefix[static_cast<std::size_t>(std::min(theta, cap))];
    const double delta = value - mean;
    mean += delta / (k + 1);
    m2 += delta * (value - mean);
  }
  out.mc_mean = mean;
  out.mc_std_error =
      trials > 1 ? std::sqrt(m2 / (trials - 1) / trials) : 0.0;
  return out;
}

}  // namespace betabandit
