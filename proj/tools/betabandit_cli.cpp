// Batch front door: every subcommand reads one JSON config, applies the few
// global flag overrides, runs seeded and deterministic, and writes its
// outputs (with the fully resolved config echoed back) into one directory.
//
// Exit codes: 0 ok, 1 invalid config, 2 invariant violation, 3 resource limit.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "betabandit/belief.hpp"
#include "betabandit/decision.hpp"
#include "betabandit/ensemble.hpp"
#include "betabandit/gittins.hpp"
#include "betabandit/io.hpp"
#include "betabandit/oracle.hpp"
#include "betabandit/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalidConfig = 1;
constexpr int kExitInvariantViolation = 2;
constexpr int kExitResourceLimit = 3;

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  std::optional<double> tolerance;
};

struct RunConfig {
  betabandit::PayoffSpec payoffs;
  betabandit::BeliefState prior;
  std::vector<double> true_prob_bad;
  std::vector<double> emt_grid;
  int horizon = 1000;
  int trials = 1000;
  int workers = 1;
  int depth = 20;
  std::uint64_t seed = 0;
  double tolerance = betabandit::kDefaultIndexTolerance;
  fs::path out;
  bool export_trajectories = false;
  int trajectory_limit = 50;
  bool svg = false;
  int dp_horizon = 30;
  int lattice_depth = 8;
  int mc_trials = 2000;
  int mc_horizon = 200;
  json resolved;  // everything above, echoed into config.json
};

std::vector<betabandit::Outcome> parse_run(const json& j) {
  std::vector<betabandit::Outcome> run;
  auto push = [&run](const std::string& s) {
    if (s == "G" || s == "g" || s == "good")
      run.push_back(betabandit::Outcome::Good);
    else if (s == "B" || s == "b" || s == "bad")
      run.push_back(betabandit::Outcome::Bad);
    else
      throw std::invalid_argument("elicitation_run: unknown outcome '" + s + "'");
  };
  if (j.is_string()) {
    for (char c : j.get<std::string>()) push(std::string(1, c));
  } else if (j.is_array()) {
    for (const auto& e : j) push(e.get<std::string>());
  } else {
    throw std::invalid_argument("elicitation_run: expected string or array");
  }
  return run;
}

std::vector<double> parse_grid(const json& j, const char* field) {
  std::vector<double> grid;
  if (j.is_number()) {
    grid.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& e : j) grid.push_back(e.get<double>());
  } else {
    throw std::invalid_argument(std::string(field) + ": expected number or array");
  }
  if (grid.empty())
    throw std::invalid_argument(std::string(field) + ": grid must be nonempty");
  return grid;
}

RunConfig parse_config(const std::string& path, const Overrides& ov,
                       const std::string& command) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  json cfg = json::parse(in);

  RunConfig rc;
  const double discount = cfg.at("discount").get<double>();
  if (cfg.contains("payoffs") == cfg.contains("costs"))
    throw std::invalid_argument("config: give exactly one of payoffs/costs");
  if (cfg.contains("payoffs")) {
    const json& p = cfg.at("payoffs");
    rc.payoffs = {p.at("bad").get<double>(), p.at("avoid").get<double>(),
                  p.at("good").get<double>(), discount};
  } else {
    const json& c = cfg.at("costs");
    rc.payoffs = betabandit::costs_to_payoffs(
        {c.at("avoid").get<double>(), c.at("encounter").get<double>(),
         c.at("no_encounter").get<double>()},
        discount);
  }
  betabandit::validate(rc.payoffs);

  if (cfg.contains("prior") == cfg.contains("elicitation_run"))
    throw std::invalid_argument("config: give exactly one of prior/elicitation_run");
  if (cfg.contains("prior")) {
    const json& pr = cfg.at("prior");
    rc.prior = betabandit::init_prior(pr.at("n_bad0").get<double>(),
                                      pr.at("n_good0").get<double>());
  } else {
    const auto [nb0, ng0] =
        betabandit::elicit_prior(parse_run(cfg.at("elicitation_run")));
    rc.prior = betabandit::init_prior(nb0, ng0);
  }

  if (cfg.contains("true_prob_bad"))
    rc.true_prob_bad = parse_grid(cfg.at("true_prob_bad"), "true_prob_bad");
  if (cfg.contains("emt_grid")) {
    rc.emt_grid = parse_grid(cfg.at("emt_grid"), "emt_grid");
  } else {
    for (int k = 1; k <= 19; ++k) rc.emt_grid.push_back(0.05 * k);
  }

  rc.horizon = cfg.value("horizon", 1000);
  rc.trials = cfg.value("trials", 1000);
  rc.workers = ov.workers ? *ov.workers : cfg.value("workers", 1);
  rc.depth = cfg.value("depth", 20);
  rc.seed = ov.seed ? *ov.seed : cfg.value("seed", std::uint64_t{0});
  rc.tolerance = ov.tolerance
                     ? *ov.tolerance
                     : cfg.value("tolerance", betabandit::kDefaultIndexTolerance);
  rc.export_trajectories = cfg.value("export_trajectories", false);
  rc.trajectory_limit = cfg.value("trajectory_limit", 50);
  rc.svg = cfg.value("svg", false);
  rc.dp_horizon = cfg.value("dp_horizon", 30);
  rc.lattice_depth = cfg.value("lattice_depth", 8);
  rc.mc_trials = cfg.value("mc_trials", 2000);
  rc.mc_horizon = cfg.value("mc_horizon", 200);
  std::string out = ov.out ? *ov.out : cfg.value("out", "out_" + command);
  rc.out = out;

  if (rc.horizon < 1) throw std::invalid_argument("config: horizon >= 1");
  if (rc.trials < 1) throw std::invalid_argument("config: trials >= 1");
  if (rc.depth < 0) throw std::invalid_argument("config: depth >= 0");
  if (!(rc.tolerance > 0.0)) throw std::invalid_argument("config: tolerance > 0");

  rc.resolved = {
      {"command", command},
      {"payoffs",
       {{"bad", rc.payoffs.bad},
        {"avoid", rc.payoffs.avoid},
        {"good", rc.payoffs.good}}},
      {"discount", rc.payoffs.discount},
      {"prior",
       {{"n_bad0", rc.prior.n_bad}, {"n_good0", rc.prior.n_good}}},
      {"critical_probability", betabandit::critical_probability(rc.payoffs)},
      {"true_prob_bad", rc.true_prob_bad},
      {"emt_grid", rc.emt_grid},
      {"horizon", rc.horizon},
      {"trials", rc.trials},
      {"workers", rc.workers},
      {"depth", rc.depth},
      {"seed", rc.seed},
      {"tolerance", rc.tolerance},
      {"out", out},
      {"export_trajectories", rc.export_trajectories},
      {"trajectory_limit", rc.trajectory_limit},
      {"svg", rc.svg},
      {"dp_horizon", rc.dp_horizon},
      {"lattice_depth", rc.lattice_depth},
      {"mc_trials", rc.mc_trials},
      {"mc_horizon", rc.mc_horizon},
  };
  return rc;
}

void write_text_file(const fs::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  os << body;
}

void write_json_file(const fs::path& p, const json& j) {
  write_text_file(p, j.dump(2) + "\n");
}

void prepare_out_dir(const RunConfig& rc, const fs::path& dir) {
  fs::create_directories(dir);
  write_json_file(dir / "config.json", rc.resolved);
}

double scalar_prob(const RunConfig& rc) {
  if (rc.true_prob_bad.size() != 1)
    throw std::invalid_argument("config: this command needs a scalar true_prob_bad");
  return rc.true_prob_bad[0];
}

// ---- subcommands -----------------------------------------------------------

int cmd_emt(const RunConfig& rc) {
  prepare_out_dir(rc, rc.out);
  const double p_c = betabandit::critical_probability(rc.payoffs);
  std::string csv = "p_bad,p_c,action\n";
  std::printf("p_c = %.6f\n", p_c);
  for (double p : rc.emt_grid) {
    const betabandit::Action a = betabandit::emt_rule(p, rc.payoffs);
    csv += betabandit::format_double(p) + "," + betabandit::format_double(p_c) +
           "," + betabandit::to_string(a) + "\n";
    std::printf("p_bad = %.6f -> %s\n", p, betabandit::to_string(a));
  }
  write_text_file(rc.out / "emt_table.csv", csv);
  return kExitOk;
}

int cmd_index_table(const RunConfig& rc) {
  prepare_out_dir(rc, rc.out);
  const betabandit::IndexTable table =
      betabandit::build_table(rc.prior, rc.payoffs, rc.depth, rc.tolerance);
  std::ostringstream os;
  betabandit::write_index_table_csv(os, table);
  write_text_file(rc.out / "index_table.csv", os.str());
  // lower-bound sweep over the emitted rows
  int violations = 0;
  for (int i = 0; i <= table.depth; ++i)
    for (int j = 0; i + j <= table.depth; ++j) {
      const double ng = table.prior_good + j;
      const double frac = ng / (table.prior_bad + i + ng);
      if (table.at(i, j) < frac - rc.tolerance) ++violations;
    }
  write_json_file(rc.out / "summary.json",
                  {{"states", table.values.size()},
                   {"certified_error", table.certified_error},
                   {"lower_bound_violations", violations}});
  if (violations > 0) {
    std::cerr << "index-table: " << violations << " lower-bound violations\n";
    return kExitInvariantViolation;
  }
  return kExitOk;
}

void write_bias_outputs(const RunConfig& rc, const fs::path& dir,
                        const betabandit::EnsembleResult& result,
                        bool with_trajectory_summaries) {
  const betabandit::BiasReport& rep = result.report;
  json summary{{"report", betabandit::to_json(rep)}};
  if (with_trajectory_summaries) {
    json arr = json::array();
    for (const auto& s : result.summaries) arr.push_back(betabandit::to_json(s));
    summary["trajectories"] = arr;
  }
  write_json_file(dir / "summary.json", summary);

  const betabandit::IntHistogram tau_hist =
      betabandit::histogram_int(rep.learning_times);
  std::ostringstream tau_os;
  betabandit::write_int_histogram_csv(tau_os, tau_hist, "tau");
  write_text_file(dir / "tau_hist.csv", tau_os.str());

  const betabandit::RealHistogram phat_hist =
      betabandit::histogram_real(rep.p_hat_taus, 0.0, 1.0, 50);
  std::ostringstream phat_os;
  betabandit::write_real_histogram_csv(phat_os, phat_hist, "p_hat_tau");
  write_text_file(dir / "phat_hist.csv", phat_os.str());

  if (rc.svg) {
    std::ostringstream svg1, svg2;
    betabandit::write_histogram_svg(svg1, tau_hist.counts, "learning time");
    betabandit::write_histogram_svg(svg2, phat_hist.counts, "p_hat at tau");
    write_text_file(dir / "tau_hist.svg", svg1.str());
    write_text_file(dir / "phat_hist.svg", svg2.str());
  }
}

void maybe_write_trajectories(const RunConfig& rc, const fs::path& dir,
                              const betabandit::EnsembleResult& result,
                              double true_prob_bad) {
  if (result.trajectories.empty()) return;
  std::ostringstream os;
  betabandit::write_trajectory_csv_header(os);
  for (std::size_t k = 0; k < result.trajectories.size(); ++k) {
    const betabandit::Scenario sc = betabandit::generate_scenario(
        true_prob_bad, rc.horizon, result.summaries[k].seed);
    betabandit::write_trajectory_csv_rows(os, static_cast<int>(k),
                                          result.trajectories[k], sc,
                                          rc.payoffs, rc.tolerance);
  }
  write_text_file(dir / "trajectories.csv", os.str());
}

betabandit::EnsembleResult run_configured_ensemble(const RunConfig& rc,
                                                   double true_prob_bad,
                                                   bool keep) {
  betabandit::EnsembleConfig ec;
  ec.prior = rc.prior;
  ec.payoffs = rc.payoffs;
  ec.true_prob_bad = true_prob_bad;
  ec.horizon = rc.horizon;
  ec.trials = rc.trials;
  ec.seed = rc.seed;
  ec.tolerance = rc.tolerance;
  ec.workers = rc.workers;
  ec.keep_trajectories = keep;
  return betabandit::run_ensemble(ec);
}

int cmd_simulate(const RunConfig& rc) {
  const double p = scalar_prob(rc);
  prepare_out_dir(rc, rc.out);
  const bool keep =
      rc.export_trajectories && rc.trials <= rc.trajectory_limit;
  const betabandit::EnsembleResult result = run_configured_ensemble(rc, p, keep);
  write_bias_outputs(rc, rc.out, result, /*with_trajectory_summaries=*/true);
  maybe_write_trajectories(rc, rc.out, result, p);
  const auto& rep = result.report;
  if (rep.status_quo_violations > 0 || rep.salience_violations > 0) {
    std::cerr << "simulate: invariant violations detected\n";
    return kExitInvariantViolation;
  }
  return kExitOk;
}

int cmd_biases(const RunConfig& rc) {
  if (rc.true_prob_bad.empty())
    throw std::invalid_argument("biases: true_prob_bad grid required");
  prepare_out_dir(rc, rc.out);
  bool violated = false;
  const double p_c = betabandit::critical_probability(rc.payoffs);
  for (std::size_t g = 0; g < rc.true_prob_bad.size(); ++g) {
    const double p = rc.true_prob_bad[g];
    const fs::path dir = rc.true_prob_bad.size() == 1
                             ? rc.out
                             : rc.out / ("p_" + std::to_string(g));
    fs::create_directories(dir);
    if (rc.true_prob_bad.size() > 1)
      write_json_file(dir / "config.json", rc.resolved);
    const bool keep =
        rc.export_trajectories && rc.trials <= rc.trajectory_limit;
    const betabandit::EnsembleResult result = run_configured_ensemble(rc, p, keep);
    write_bias_outputs(rc, dir, result, /*with_trajectory_summaries=*/false);
    maybe_write_trajectories(rc, dir, result, p);

    const betabandit::IndexTable table =
        betabandit::build_table(rc.prior, rc.payoffs, rc.depth, rc.tolerance);
    std::ostringstream os;
    betabandit::write_index_table_csv(os, table);
    write_text_file(dir / "index_table.csv", os.str());

    const auto& rep = result.report;
    std::printf(
        "p_bad=%.4f  patterns: no_learning=%d finite=%d censored=%d  "
        "violations: status_quo=%d salience=%d\n",
        p, rep.no_learning, rep.finite_learning, rep.still_experimenting,
        rep.status_quo_violations, rep.salience_violations);
    if (rep.status_quo_violations > 0 || rep.salience_violations > 0)
      violated = true;
    if (rep.stopped > 0 && rep.fraction_overestimate_pc < 1.0) violated = true;
    // theorem sub-report applies when the bad outcome is unlikely
    if (p <= p_c && rep.stopped > 0 && rep.fraction_overestimate_true < 1.0)
      violated = true;
  }
  if (violated) {
    std::cerr << "biases: invariant violations detected\n";
    return kExitInvariantViolation;
  }
  return kExitOk;
}

int cmd_oracle_check(const RunConfig& rc) {
  prepare_out_dir(rc, rc.out);
  json report;
  bool ok = true;

  // 1. DP first action vs the index rule, wherever the margin is decisive.
  const double p_c = betabandit::critical_probability(rc.payoffs);
  const double threshold = 1.0 - p_c;
  const double rho = rc.payoffs.discount;
  const double tail_norm =
      std::pow(rho, rc.dp_horizon) / (1.0 - rho);
  int compared = 0, agreed = 0, skipped = 0;
  for (int i = 0; i <= rc.lattice_depth; ++i) {
    for (int j = 0; i + j <= rc.lattice_depth; ++j) {
      betabandit::BeliefState s{rc.prior.n_bad + i, rc.prior.n_good + j,
                                rc.prior.count_bad + i, rc.prior.count_good + j};
      const double v = betabandit::normalized_index(s, rho, rc.tolerance);
      if (std::fabs(v - threshold) <= tail_norm + rc.tolerance) {
        ++skipped;
        continue;
      }
      const betabandit::Action dp_action =
          betabandit::dp_optimal(s, rc.payoffs, rc.dp_horizon).first_action;
      const betabandit::Action gi_action =
          betabandit::decide(s, rc.payoffs, rc.tolerance);
      ++compared;
      if (dp_action == gi_action) ++agreed;
    }
  }
  report["dp_agreement"] = {{"compared", compared},
                            {"agreed", agreed},
                            {"skipped_boundary", skipped}};
  ok = ok && agreed == compared;

  // 2. DP-side bisection reproduces the index.
  double worst_gap = 0.0;
  for (int i = 0; i + i <= rc.lattice_depth; ++i) {
    betabandit::BeliefState s{rc.prior.n_bad + i, rc.prior.n_good + i,
                              rc.prior.count_bad + i, rc.prior.count_good + i};
    const double via_dp = betabandit::dp_index_bisect(
        s, rho, rc.dp_horizon, 0.5 * rc.tolerance);
    const double via_index = betabandit::normalized_index(s, rho, rc.tolerance);
    worst_gap = std::max(worst_gap, std::fabs(via_dp - via_index));
  }
  report["dp_index_bisect"] = {{"worst_gap", worst_gap},
                               {"bound", 2.0 * rc.tolerance}};
  ok = ok && worst_gap <= 2.0 * rc.tolerance;

  // 3. Policy dominance under the prior, common random numbers.
  betabandit::DecisionCache cache(rc.prior, rc.payoffs, rc.tolerance);
  const auto model = betabandit::TrueModel::from_prior();
  const auto gi = betabandit::policy_value_mc(
      betabandit::PolicyKind::GittinsIndex, rc.prior, rc.payoffs, model,
      rc.mc_trials, rc.mc_horizon, rc.seed, &cache, rc.tolerance);
  json dominance = json::array();
  for (auto kind : {betabandit::PolicyKind::AlwaysAvoid,
                    betabandit::PolicyKind::AlwaysExperiment,
                    betabandit::PolicyKind::EmtKnownProb}) {
    const auto est = betabandit::policy_value_mc(
        kind, rc.prior, rc.payoffs, model, rc.mc_trials, rc.mc_horizon,
        rc.seed, &cache, rc.tolerance);
    const double se =
        std::sqrt(gi.std_error * gi.std_error + est.std_error * est.std_error);
    const bool dominated = gi.mean >= est.mean - 3.0 * se;
    // the clairvoyant comparator is reported but not gated
    if (kind != betabandit::PolicyKind::EmtKnownProb) ok = ok && dominated;
    dominance.push_back({{"policy", betabandit::to_string(kind)},
                         {"estimate", betabandit::to_json(est)},
                         {"gi_not_below", dominated}});
  }
  report["policy_dominance"] = {{"gi", betabandit::to_json(gi)},
                                {"comparators", dominance}};

  // 4. Lifetime identity on a constant stream.
  const std::vector<double> stream(2000, 1.0);
  const auto life = betabandit::lifetime_equivalence(stream, rho,
                                                     rc.mc_trials, rc.seed);
  const bool life_ok =
      std::fabs(life.mc_mean - life.discounted_sum) <= 3.0 * life.mc_std_error;
  report["lifetime"] = betabandit::to_json(life);
  report["lifetime_ok"] = life_ok;
  ok = ok && life_ok;

  report["ok"] = ok;
  write_json_file(rc.out / "oracle_report.json", report);
  if (!ok) {
    std::cerr << "oracle-check: disagreement detected\n";
    return kExitInvariantViolation;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"beta-Bernoulli bandit experiments"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  std::uint64_t seed_flag = 0;
  std::string out_flag;
  int workers_flag = 0;
  double tolerance_flag = 0.0;
  app.add_option("--config", config_path, "JSON config file")->required();
  auto* seed_opt = app.add_option("--seed", seed_flag, "override config seed");
  auto* out_opt = app.add_option("--out", out_flag, "override output directory");
  auto* workers_opt =
      app.add_option("--workers", workers_flag, "override worker count");
  auto* tol_opt =
      app.add_option("--tolerance", tolerance_flag, "override index tolerance");

  // global flags may appear after the subcommand name
  app.add_subcommand("emt", "static rule under known risk over a probability grid")
      ->fallthrough();
  app.add_subcommand("index-table", "materialize the index over the belief lattice")
      ->fallthrough();
  app.add_subcommand("simulate", "run seeded trajectories of the index decision maker")
      ->fallthrough();
  app.add_subcommand("biases", "ensemble bias report over a true-probability grid")
      ->fallthrough();
  app.add_subcommand("oracle-check", "brute-force verification of the index rule")
      ->fallthrough();

  CLI11_PARSE(app, argc, argv);

  if (*seed_opt) ov.seed = seed_flag;
  if (*out_opt) ov.out = out_flag;
  if (*workers_opt) ov.workers = workers_flag;
  if (*tol_opt) ov.tolerance = tolerance_flag;

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const RunConfig rc = parse_config(config_path, ov, command);
    if (command == "emt") return cmd_emt(rc);
    if (command == "index-table") return cmd_index_table(rc);
    if (command == "simulate") return cmd_simulate(rc);
    if (command == "biases") return cmd_biases(rc);
    return cmd_oracle_check(rc);
  } catch (const betabandit::ResourceLimitError& e) {
    std::cerr << "resource limit: " << e.what() << "\n";
    return kExitResourceLimit;
  } catch (const json::exception& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid config: " << e.what() << "\n";
    return kExitInvalidConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalidConfig;
  }
}
