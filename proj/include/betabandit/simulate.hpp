#pragma once

#include <cstdint>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "betabandit/belief.hpp"
#include "betabandit/decision.hpp"
#include "betabandit/gittins.hpp"
#include "betabandit/rng.hpp"

namespace betabandit {

// A seeded draw of true states of Nature, i.i.d. Bernoulli(true_prob_bad).
struct Scenario {
  double true_prob_bad = 0.0;
  std::vector<Outcome> states;  // X_{t+1}, t = 0..horizon-1
  std::uint64_t seed = 0;
  int horizon = 0;
};

inline Scenario generate_scenario(double true_prob_bad, int horizon,
                                  std::uint64_t seed) {
  if (!(true_prob_bad >= 0.0 && true_prob_bad <= 1.0))
    throw std::invalid_argument("generate_scenario: true_prob_bad in [0,1]");
  if (horizon < 1)
    throw std::invalid_argument("generate_scenario: horizon >= 1");
  Scenario sc{true_prob_bad, {}, seed, horizon};
  sc.states.reserve(static_cast<std::size_t>(horizon));
  Pcg32 rng(seed, kScenarioStream);
  for (int t = 0; t < horizon; ++t)
    sc.states.push_back(rng.next_double() < true_prob_bad ? Outcome::Bad
                                                          : Outcome::Good);
  return sc;
}

// The outcome is revealed only by experimenting.
inline Observation observe(Action action, Outcome state) {
  return action == Action::Experiment ? to_observation(state)
                                      : Observation::None;
}

enum class Pattern { NoLearning, FiniteLearning, StillExperimenting };

inline const char* to_string(Pattern p) {
  switch (p) {
    case Pattern::NoLearning: return "no_learning";
    case Pattern::FiniteLearning: return "finite_learning";
    default: return "still_experimenting";
  }
}

struct Trajectory {
  std::vector<Action> actions;
  std::vector<Observation> observations;
  std::vector<BeliefState> beliefs;  // beliefs[t] backs the decision at t
  int learning_time = 0;             // first Avoid time; == horizon if censored
  bool censored = false;
  double discounted_payoff = 0.0;
  Pattern pattern = Pattern::NoLearning;
  int boundary_uncertain_count = 0;
};

inline double instant_payoff(const PayoffSpec& p, Action a, Outcome x) {
  if (a == Action::Avoid) return p.avoid;
  return x == Outcome::Bad ? p.bad : p.good;
}

// Runs one decision maker against one scenario. `decide_fn` maps a
// BeliefState to a Decision; it is queried at every step, including after the
// first Avoid, so absorption is observed rather than imposed.
template <class DecideFn>
Trajectory run_gi_with(const BeliefState& prior, const PayoffSpec& payoffs,
                       const Scenario& scenario, DecideFn&& decide_fn) {
  validate(prior);
  validate(payoffs);
  const int horizon = scenario.horizon;
  if (horizon < 1 || scenario.states.size() != static_cast<std::size_t>(horizon))
    throw std::invalid_argument("run_gi: scenario state count != horizon");
  Trajectory tr;
  tr.actions.reserve(horizon);
  tr.observations.reserve(horizon);
  tr.beliefs.reserve(static_cast<std::size_t>(horizon) + 1);
  tr.learning_time = horizon;
  tr.censored = true;
  BeliefState belief = prior;
  tr.beliefs.push_back(belief);
  double weight = 1.0;
  for (int t = 0; t < horizon; ++t) {
    const Decision d = decide_fn(belief);
    if (d.boundary_uncertain) ++tr.boundary_uncertain_count;
    const Outcome x = scenario.states[static_cast<std::size_t>(t)];
    const Observation y = observe(d.action, x);
    tr.actions.push_back(d.action);
    tr.observations.push_back(y);
    tr.discounted_payoff += weight * instant_payoff(payoffs, d.action, x);
    weight *= payoffs.discount;
    belief = update(belief, y);
    tr.beliefs.push_back(belief);
    if (d.action == Action::Avoid && tr.censored) {
      tr.learning_time = t;
      tr.censored = false;
    }
  }
  tr.pattern = tr.censored ? Pattern::StillExperimenting
               : tr.learning_time == 0 ? Pattern::NoLearning
                                       : Pattern::FiniteLearning;
  return tr;
}

inline Trajectory run_gi(const BeliefState& prior, const PayoffSpec& payoffs,
                         const Scenario& scenario,
                         double tolerance = kDefaultIndexTolerance) {
  return run_gi_with(prior, payoffs, scenario, [&](const BeliefState& b) {
    return decide_with_diagnostics(b, payoffs, tolerance);
  });
}

struct Classification {
  Pattern pattern = Pattern::NoLearning;
  int experiment_to_avoid = 0;
  int avoid_to_experiment = 0;
  double p_hat_tau = 0.0;       // estimate backing the stop (stopped runs only)
  double p_hat_terminal = 0.0;  // estimate after the last period
};

inline Classification classify(const Trajectory& tr) {
  if (tr.actions.empty()) throw std::invalid_argument("classify: empty trajectory");
  Classification c;
  for (std::size_t t = 0; t + 1 < tr.actions.size(); ++t) {
    if (tr.actions[t] == Action::Experiment &&
        tr.actions[t + 1] == Action::Avoid)
      ++c.experiment_to_avoid;
    if (tr.actions[t] == Action::Avoid &&
        tr.actions[t + 1] == Action::Experiment)
      ++c.avoid_to_experiment;
  }
  c.pattern = tr.pattern;
  c.p_hat_terminal = point_estimate(tr.beliefs.back());
  c.p_hat_tau = tr.censored
                    ? c.p_hat_terminal
                    : point_estimate(tr.beliefs[static_cast<std::size_t>(
                          tr.learning_time)]);
  return c;
}

// Memoizes GI decisions over the count lattice rooted at a fixed prior.
// One shared map guarded by a shared_mutex; workers wrap it in a Local view
// whose first level is lock-free.
class DecisionCache {
 public:
  DecisionCache(const BeliefState& prior, const PayoffSpec& payoffs,
                double tolerance = kDefaultIndexTolerance)
      : prior_(prior), payoffs_(payoffs), tolerance_(tolerance) {
    validate(prior_);
    validate(payoffs_);
  }

  Decision decide(const BeliefState& belief) {
    if (belief.prior_bad() != prior_.prior_bad() ||
        belief.prior_good() != prior_.prior_good())
      throw std::invalid_argument("DecisionCache: belief has a foreign prior");
    const std::uint64_t k = key(belief);
    {
      std::shared_lock lock(mutex_);
      auto it = map_.find(k);
      if (it != map_.end()) return it->second;
    }
    const Decision d = decide_with_diagnostics(belief, payoffs_, tolerance_);
    std::unique_lock lock(mutex_);
    map_.emplace(k, d);
    return d;
  }

  const PayoffSpec& payoffs() const { return payoffs_; }
  double tolerance() const { return tolerance_; }

  class Local {
   public:
    explicit Local(DecisionCache& owner) : owner_(&owner) {}
    Decision operator()(const BeliefState& belief) {
      const std::uint64_t k = key(belief);
      auto it = map_.find(k);
      if (it != map_.end()) return it->second;
      const Decision d = owner_->decide(belief);
      map_.emplace(k, d);
      return d;
    }

   private:
    DecisionCache* owner_;
    std::unordered_map<std::uint64_t, Decision> map_;
  };

 private:
  static std::uint64_t key(const BeliefState& b) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(b.count_bad))
            << 32) |
           static_cast<std::uint32_t>(b.count_good);
  }

  BeliefState prior_;
  PayoffSpec payoffs_;
  double tolerance_;
  std::shared_mutex mutex_;
  std::unordered_map<std::uint64_t, Decision> map_;
};

}  // namespace betabandit
