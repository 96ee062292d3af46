#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <thread>
#include <vector>

#include "betabandit/belief.hpp"
#include "betabandit/decision.hpp"
#include "betabandit/gittins.hpp"
#include "betabandit/rng.hpp"
#include "betabandit/simulate.hpp"

namespace betabandit {

struct EnsembleConfig {
  BeliefState prior;
  PayoffSpec payoffs;
  double true_prob_bad = 0.0;
  int horizon = 1000;
  int trials = 0;
  std::uint64_t seed = 0;
  double tolerance = kDefaultIndexTolerance;
  int workers = 1;  // <= 0 means hardware concurrency
  bool keep_trajectories = false;
};

struct TrajectorySummary {
  std::uint64_t seed = 0;
  int learning_time = 0;
  bool censored = false;
  Pattern pattern = Pattern::NoLearning;
  double p_hat_tau = 0.0;
  double p_hat_terminal = 0.0;
  double discounted_payoff = 0.0;
  int experiment_to_avoid = 0;
  int avoid_to_experiment = 0;
  bool salience_violation = false;  // a switch not right after a Bad
  int boundary_uncertain = 0;
};

struct BiasReport {
  // resolved configuration echo
  double true_prob_bad = 0.0;
  double critical_probability = 0.0;
  double discount = 0.0;
  double prior_bad = 0.0;
  double prior_good = 0.0;
  int horizon = 0;
  int trials = 0;
  std::uint64_t seed = 0;
  double epsilon_numeric = 0.0;  // index tolerance carried to the p-hat bound

  int no_learning = 0;
  int finite_learning = 0;
  int still_experimenting = 0;

  int status_quo_violations = 0;  // trajectories with A->E or >1 E->A switches
  int salience_violations = 0;    // switches not preceded by a Bad observation
  int boundary_uncertain_decisions = 0;

  // stopped = no_learning + finite_learning
  int stopped = 0;
  int overestimate_pc = 0;    // p_hat_tau >= p_c - eps among stopped
  int overestimate_true = 0;  // p_hat_tau >= true_prob_bad - eps among stopped
  double fraction_overestimate_pc = 1.0;
  double fraction_overestimate_true = 1.0;

  int censored_in_band = 0;  // |p_hat_T - p_true| <= 3 sigma, binomial sigma
  double censored_band_fraction = 1.0;

  std::vector<int> learning_times;     // finite-learning taus
  std::vector<double> p_hat_taus;      // stopped runs
  std::vector<double> censored_p_hat;  // terminal estimates of censored runs
};

struct EnsembleResult {
  BiasReport report;
  std::vector<TrajectorySummary> summaries;
  std::vector<Trajectory> trajectories;  // filled only when keep_trajectories
};

inline TrajectorySummary summarize_trajectory(const Trajectory& tr,
                                              std::uint64_t seed) {
  const Classification c = classify(tr);
  TrajectorySummary s;
  s.seed = seed;
  s.learning_time = tr.learning_time;
  s.censored = tr.censored;
  s.pattern = tr.pattern;
  s.p_hat_tau = c.p_hat_tau;
  s.p_hat_terminal = c.p_hat_terminal;
  s.discounted_payoff = tr.discounted_payoff;
  s.experiment_to_avoid = c.experiment_to_avoid;
  s.avoid_to_experiment = c.avoid_to_experiment;
  s.boundary_uncertain = tr.boundary_uncertain_count;
  if (!tr.censored && tr.learning_time >= 1)
    s.salience_violation =
        tr.observations[static_cast<std::size_t>(tr.learning_time) - 1] !=
        Observation::Bad;
  return s;
}

// Runs `trials` independent trajectories of the GI decision maker against
// scenarios seeded by derive_seed(seed, k). Trajectories fan out over a
// worker pool; results are merged by trajectory index, so the outcome does
// not depend on the worker count.
inline EnsembleResult run_ensemble(const EnsembleConfig& cfg) {
  validate(cfg.prior);
  validate(cfg.payoffs);
  if (cfg.trials < 1) throw std::invalid_argument("run_ensemble: trials >= 1");
  if (cfg.horizon < 1) throw std::invalid_argument("run_ensemble: horizon >= 1");
  if (!(cfg.true_prob_bad >= 0.0 && cfg.true_prob_bad <= 1.0))
    throw std::invalid_argument("run_ensemble: true_prob_bad in [0,1]");

  EnsembleResult out;
  out.summaries.resize(static_cast<std::size_t>(cfg.trials));
  if (cfg.keep_trajectories)
    out.trajectories.resize(static_cast<std::size_t>(cfg.trials));

  DecisionCache cache(cfg.prior, cfg.payoffs, cfg.tolerance);
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto work = [&]() {
    DecisionCache::Local local(cache);
    try {
      for (;;) {
        const int k = next.fetch_add(1);
        if (k >= cfg.trials || failed.load()) break;
        const std::uint64_t sk =
            derive_seed(cfg.seed, static_cast<std::uint64_t>(k));
        const Scenario sc = generate_scenario(cfg.true_prob_bad, cfg.horizon, sk);
        Trajectory tr = run_gi_with(cfg.prior, cfg.payoffs, sc, local);
        out.summaries[static_cast<std::size_t>(k)] = summarize_trajectory(tr, sk);
        if (cfg.keep_trajectories)
          out.trajectories[static_cast<std::size_t>(k)] = std::move(tr);
      }
    } catch (...) {
      std::lock_guard lock(error_mutex);
      if (!failed.exchange(true)) error = std::current_exception();
    }
  };

  int workers = cfg.workers > 0
                    ? cfg.workers
                    : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, cfg.trials));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (failed.load()) std::rethrow_exception(error);

  // deterministic merge in trajectory order
  BiasReport& rep = out.report;
  rep.true_prob_bad = cfg.true_prob_bad;
  rep.critical_probability = critical_probability(cfg.payoffs);
  rep.discount = cfg.payoffs.discount;
  rep.prior_bad = cfg.prior.n_bad;
  rep.prior_good = cfg.prior.n_good;
  rep.horizon = cfg.horizon;
  rep.trials = cfg.trials;
  rep.seed = cfg.seed;
  rep.epsilon_numeric = cfg.tolerance;
  const double sigma =
      std::sqrt(cfg.true_prob_bad * (1.0 - cfg.true_prob_bad) / cfg.horizon);
  for (const TrajectorySummary& s : out.summaries) {
    switch (s.pattern) {
      case Pattern::NoLearning: ++rep.no_learning; break;
      case Pattern::FiniteLearning: ++rep.finite_learning; break;
      case Pattern::StillExperimenting: ++rep.still_experimenting; break;
    }
    if (s.avoid_to_experiment > 0 || s.experiment_to_avoid > 1)
      ++rep.status_quo_violations;
    if (s.salience_violation) ++rep.salience_violations;
    rep.boundary_uncertain_decisions += s.boundary_uncertain;
    if (s.censored) {
      rep.censored_p_hat.push_back(s.p_hat_terminal);
      if (std::fabs(s.p_hat_terminal - cfg.true_prob_bad) <= 3.0 * sigma)
        ++rep.censored_in_band;
    } else {
      ++rep.stopped;
      rep.p_hat_taus.push_back(s.p_hat_tau);
      if (s.pattern == Pattern::FiniteLearning)
        rep.learning_times.push_back(s.learning_time);
      if (s.p_hat_tau >= rep.critical_probability - rep.epsilon_numeric)
        ++rep.overestimate_pc;
      if (s.p_hat_tau >= cfg.true_prob_bad - rep.epsilon_numeric)
        ++rep.overestimate_true;
    }
  }
  if (rep.stopped > 0) {
    rep.fraction_overestimate_pc =
        static_cast<double>(rep.overestimate_pc) / rep.stopped;
    rep.fraction_overestimate_true =
        static_cast<double>(rep.overestimate_true) / rep.stopped;
  }
  if (rep.still_experimenting > 0)
    rep.censored_band_fraction =
        static_cast<double>(rep.censored_in_band) / rep.still_experimenting;
  return out;
}

}  // namespace betabandit
