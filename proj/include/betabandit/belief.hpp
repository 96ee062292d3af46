#pragma once

#include <cstddef>
#include <stdexcept>
#include <utility>
#include <vector>

namespace betabandit {

// State of Nature in one period.
enum class Outcome { Bad, Good };

// What the decision maker gets to see: the outcome when experimenting,
// nothing (None) when avoiding.
enum class Observation { Bad, Good, None };

inline const char* to_string(Outcome o) {
  return o == Outcome::Bad ? "bad" : "good";
}

inline const char* to_string(Observation o) {
  switch (o) {
    case Observation::Bad: return "bad";
    case Observation::Good: return "good";
    default: return "none";
  }
}

inline Observation to_observation(Outcome o) {
  return o == Outcome::Bad ? Observation::Bad : Observation::Good;
}

// Beta posterior over the bad-outcome probability, stored as
// prior-plus-counts so the prior stays recoverable.
struct BeliefState {
  double n_bad = 1.0;   // prior n_bad0 + count_bad
  double n_good = 1.0;  // prior n_good0 + count_good
  int count_bad = 0;
  int count_good = 0;

  double prior_bad() const { return n_bad - count_bad; }
  double prior_good() const { return n_good - count_good; }

  friend bool operator==(const BeliefState&, const BeliefState&) = default;
};

inline void validate(const BeliefState& s) {
  if (!(s.n_bad > 0.0 && s.n_good > 0.0) || s.count_bad < 0 ||
      s.count_good < 0 || !(s.prior_bad() > 0.0) || !(s.prior_good() > 0.0))
    throw std::invalid_argument("BeliefState: beta parameters must be positive");
}

inline BeliefState init_prior(double n_bad0, double n_good0) {
  if (!(n_bad0 > 0.0) || !(n_good0 > 0.0))
    throw std::invalid_argument("init_prior: prior parameters must be positive");
  return BeliefState{n_bad0, n_good0, 0, 0};
}

// Conjugate update; None leaves the state untouched.
inline BeliefState update(const BeliefState& s, Observation obs) {
  BeliefState out = s;
  switch (obs) {
    case Observation::Bad:
      out.n_bad += 1.0;
      out.count_bad += 1;
      break;
    case Observation::Good:
      out.n_good += 1.0;
      out.count_good += 1;
      break;
    case Observation::None:
      break;
  }
  return out;
}

// Posterior mean of the bad-outcome probability.
inline double point_estimate(const BeliefState& s) {
  validate(s);
  return s.n_bad / (s.n_bad + s.n_good);
}

// Prior elicitation from an initial run of identical outcomes that ends with
// a single opposite one: n Goods then one Bad gives (1, n), n Bads then one
// Good gives (n, 1). Anything else is rejected.
inline std::pair<double, double> elicit_prior(const std::vector<Outcome>& run) {
  if (run.size() < 2)
    throw std::invalid_argument(
        "elicit_prior: need at least one outcome plus the switch");
  const Outcome first = run.front();
  for (std::size_t k = 1; k + 1 < run.size(); ++k)
    if (run[k] != first)
      throw std::invalid_argument(
          "elicit_prior: run must switch outcome exactly once, at the end");
  if (run.back() == first)
    throw std::invalid_argument("elicit_prior: run never switches outcome");
  const double n = static_cast<double>(run.size() - 1);
  return first == Outcome::Good ? std::pair{1.0, n} : std::pair{n, 1.0};
}

}  // namespace betabandit
