#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "betabandit/belief.hpp"
#include "betabandit/ensemble.hpp"
#include "betabandit/gittins.hpp"
#include "betabandit/oracle.hpp"
#include "betabandit/simulate.hpp"

namespace betabandit {

// Shortest decimal form that parses back to the same double.
inline std::string format_double(double x) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) break;
  }
  return buf;
}

inline nlohmann::json to_json(const BeliefState& s) {
  return {{"n_bad", s.n_bad},
          {"n_good", s.n_good},
          {"count_bad", s.count_bad},
          {"count_good", s.count_good}};
}

inline BeliefState belief_from_json(const nlohmann::json& j) {
  BeliefState s{j.at("n_bad").get<double>(), j.at("n_good").get<double>(),
                j.at("count_bad").get<int>(), j.at("count_good").get<int>()};
  validate(s);
  return s;
}

// ---- index table CSV ------------------------------------------------------
// First line carries the metadata, then a header row, then one row per
// lattice state.

inline void write_index_table_csv(std::ostream& os, const IndexTable& t) {
  os << "# discount=" << format_double(t.discount) << ",depth=" << t.depth
     << ",tolerance=" << format_double(t.tolerance)
     << ",certified_error=" << format_double(t.certified_error)
     << ",prior_bad=" << format_double(t.prior_bad)
     << ",prior_good=" << format_double(t.prior_good) << "\n";
  os << "i,j,n_bad,n_good,normalized_index\n";
  for (int i = 0; i <= t.depth; ++i)
    for (int j = 0; i + j <= t.depth; ++j)
      os << i << ',' << j << ',' << format_double(t.prior_bad + i) << ','
         << format_double(t.prior_good + j) << ','
         << format_double(t.at(i, j)) << "\n";
}

namespace detail {

inline double meta_field(const std::string& line, const std::string& key) {
  const std::string tag = key + "=";
  const auto pos = line.find(tag);
  if (pos == std::string::npos)
    throw std::invalid_argument("index table: missing metadata field " + key);
  return std::stod(line.substr(pos + tag.size()));
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

}  // namespace detail

inline IndexTable read_index_table_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.empty() || line[0] != '#')
    throw std::invalid_argument("index table: missing metadata line");
  IndexTable t;
  t.discount = detail::meta_field(line, "discount");
  t.depth = static_cast<int>(detail::meta_field(line, "depth"));
  t.tolerance = detail::meta_field(line, "tolerance");
  t.certified_error = detail::meta_field(line, "certified_error");
  t.prior_bad = detail::meta_field(line, "prior_bad");
  t.prior_good = detail::meta_field(line, "prior_good");
  if (!std::getline(is, line))
    throw std::invalid_argument("index table: missing header row");
  t.values.assign(IndexTable::size_for_depth(t.depth), 0.0);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 5)
      throw std::invalid_argument("index table: malformed row");
    const int i = std::stoi(cells[0]);
    const int j = std::stoi(cells[1]);
    if (i < 0 || j < 0 || i + j > t.depth)
      throw std::invalid_argument("index table: off-lattice row");
    t.values[t.offset(i, j)] = std::stod(cells[4]);
    ++rows;
  }
  if (rows != t.values.size())
    throw std::invalid_argument("index table: row count mismatch");
  return t;
}

// ---- trajectory CSV -------------------------------------------------------
// One row per time step. The scenario supplies the hidden state column; index
// values are recomputed per distinct belief through a small memo.

inline void write_trajectory_csv_header(std::ostream& os) {
  os << "trajectory,t,action,state,observation,n_bad,n_good,p_hat,index_value\n";
}

inline void write_trajectory_csv_rows(std::ostream& os, int trajectory_id,
                                      const Trajectory& tr,
                                      const Scenario& scenario,
                                      const PayoffSpec& payoffs,
                                      double tolerance = kDefaultIndexTolerance) {
  std::unordered_map<std::uint64_t, double> memo;
  for (std::size_t t = 0; t < tr.actions.size(); ++t) {
    const BeliefState& b = tr.beliefs[t];
    const std::uint64_t key =
        (static_cast<std::uint64_t>(static_cast<std::uint32_t>(b.count_bad))
         << 32) |
        static_cast<std::uint32_t>(b.count_good);
    auto it = memo.find(key);
    if (it == memo.end())
      it = memo.emplace(key, normalized_index(b, payoffs.discount, tolerance))
               .first;
    os << trajectory_id << ',' << t << ',' << to_string(tr.actions[t]) << ','
       << to_string(scenario.states[t]) << ',' << to_string(tr.observations[t])
       << ',' << format_double(b.n_bad) << ',' << format_double(b.n_good)
       << ',' << format_double(point_estimate(b)) << ','
       << format_double(it->second) << "\n";
  }
}

inline nlohmann::json to_json(const TrajectorySummary& s) {
  nlohmann::json j{{"seed", s.seed},
                   {"tau", s.learning_time},
                   {"censored", s.censored},
                   {"pattern", to_string(s.pattern)},
                   {"p_hat_terminal", s.p_hat_terminal},
                   {"discounted_payoff", s.discounted_payoff},
                   {"experiment_to_avoid", s.experiment_to_avoid},
                   {"avoid_to_experiment", s.avoid_to_experiment},
                   {"boundary_uncertain", s.boundary_uncertain}};
  if (s.censored)
    j["p_hat_tau"] = nullptr;
  else
    j["p_hat_tau"] = s.p_hat_tau;
  return j;
}

inline nlohmann::json to_json(const BiasReport& r) {
  return {{"true_prob_bad", r.true_prob_bad},
          {"critical_probability", r.critical_probability},
          {"discount", r.discount},
          {"prior", {{"n_bad0", r.prior_bad}, {"n_good0", r.prior_good}}},
          {"horizon", r.horizon},
          {"trials", r.trials},
          {"seed", r.seed},
          {"epsilon_numeric", r.epsilon_numeric},
          {"patterns",
           {{"no_learning", r.no_learning},
            {"finite_learning", r.finite_learning},
            {"still_experimenting", r.still_experimenting}}},
          {"status_quo_violations", r.status_quo_violations},
          {"salience_violations", r.salience_violations},
          {"boundary_uncertain_decisions", r.boundary_uncertain_decisions},
          {"stopped", r.stopped},
          {"fraction_overestimate_pc", r.fraction_overestimate_pc},
          {"fraction_overestimate_true", r.fraction_overestimate_true},
          {"censored_in_band", r.censored_in_band},
          {"censored_band_fraction", r.censored_band_fraction}};
}

inline nlohmann::json to_json(const McEstimate& e) {
  return {{"mean", e.mean}, {"std_error", e.std_error}, {"trials", e.trials}};
}

inline nlohmann::json to_json(const LifetimeCheck& c) {
  return {{"discounted_sum", c.discounted_sum},
          {"mc_mean", c.mc_mean},
          {"mc_std_error", c.mc_std_error},
          {"mean_lifetime", c.mean_lifetime},
          {"trials", c.trials}};
}

// ---- histograms -----------------------------------------------------------

struct IntHistogram {
  std::vector<int> values;  // bin lower edges, i.e. the distinct values
  std::vector<int> counts;
};

inline IntHistogram histogram_int(const std::vector<int>& data) {
  IntHistogram h;
  if (data.empty()) return h;
  int max = 0;
  for (int v : data) max = std::max(max, v);
  std::vector<int> counts(static_cast<std::size_t>(max) + 1, 0);
  for (int v : data) ++counts[static_cast<std::size_t>(v)];
  for (int v = 0; v <= max; ++v) {
    if (counts[static_cast<std::size_t>(v)] > 0) {
      h.values.push_back(v);
      h.counts.push_back(counts[static_cast<std::size_t>(v)]);
    }
  }
  return h;
}

struct RealHistogram {
  double lo = 0.0, hi = 1.0;
  std::vector<int> counts;  // uniform bins over [lo, hi]
};

inline RealHistogram histogram_real(const std::vector<double>& data, double lo,
                                    double hi, int bins) {
  if (bins < 1 || !(hi > lo))
    throw std::invalid_argument("histogram_real: bad bin spec");
  RealHistogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (double v : data) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    b = std::max(0, std::min(bins - 1, b));
    ++h.counts[static_cast<std::size_t>(b)];
  }
  return h;
}

inline void write_int_histogram_csv(std::ostream& os, const IntHistogram& h,
                                    const std::string& value_name) {
  os << value_name << ",count\n";
  for (std::size_t k = 0; k < h.values.size(); ++k)
    os << h.values[k] << ',' << h.counts[k] << "\n";
}

inline void write_real_histogram_csv(std::ostream& os, const RealHistogram& h,
                                     const std::string& value_name) {
  os << value_name << "_lo," << value_name << "_hi,count\n";
  const int bins = static_cast<int>(h.counts.size());
  for (int b = 0; b < bins; ++b) {
    const double lo = h.lo + (h.hi - h.lo) * b / bins;
    const double hi = h.lo + (h.hi - h.lo) * (b + 1) / bins;
    os << format_double(lo) << ',' << format_double(hi) << ','
       << h.counts[static_cast<std::size_t>(b)] << "\n";
  }
}

// Minimal self-contained SVG bar chart, enough for eyeballing a histogram.
inline void write_histogram_svg(std::ostream& os,
                                const std::vector<int>& counts,
                                const std::string& title) {
  const int w = 640, h = 400, margin = 40;
  int peak = 1;
  for (int c : counts) peak = std::max(peak, c);
  const int n = std::max<int>(1, static_cast<int>(counts.size()));
  const double bar_w = static_cast<double>(w - 2 * margin) / n;
  os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='"
     << h << "'>\n";
  os << "<text x='" << w / 2 << "' y='20' text-anchor='middle' "
     << "font-family='sans-serif' font-size='14'>" << title << "</text>\n";
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const double bh =
        static_cast<double>(counts[k]) / peak * (h - 2 * margin);
    os << "<rect x='" << format_double(margin + bar_w * k) << "' y='"
       << format_double(h - margin - bh) << "' width='"
       << format_double(std::max(1.0, bar_w - 1.0)) << "' height='"
       << format_double(bh) << "' fill='steelblue'/>\n";
  }
  os << "<line x1='" << margin << "' y1='" << h - margin << "' x2='"
     << w - margin << "' y2='" << h - margin << "' stroke='black'/>\n";
  os << "</svg>\n";
}

}  // namespace betabandit
