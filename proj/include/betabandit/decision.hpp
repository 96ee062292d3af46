#pragma once

#include <stdexcept>

namespace betabandit {

enum class Action { Avoid, Experiment };

inline const char* to_string(Action a) {
  return a == Action::Avoid ? "avoid" : "experiment";
}

// Per-outcome costs of the one-shot decision problem under known risk.
// Avoiding costs the same whatever happens; experimenting costs `encounter`
// on a bad outcome and `no_encounter` on a good one.
struct CostTable {
  double avoid = 0.0;
  double encounter = 0.0;
  double no_encounter = 0.0;
};

// Instant payoffs plus the per-period discount factor. `bad` and `good` are
// the payoffs of experimenting into the respective outcome, `avoid` is the
// sure payoff of the safe option.
struct PayoffSpec {
  double bad = 0.0;
  double avoid = 0.0;
  double good = 0.0;
  double discount = 0.0;
};

inline void validate(const CostTable& c) {
  if (!(c.no_encounter < c.avoid && c.avoid < c.encounter))
    throw std::invalid_argument(
        "CostTable: require no_encounter < avoid < encounter");
}

inline void validate(const PayoffSpec& p) {
  if (!(p.good > p.avoid && p.avoid > p.bad))
    throw std::invalid_argument("PayoffSpec: require good > avoid > bad");
  if (!(p.discount >= 0.0 && p.discount < 1.0))
    throw std::invalid_argument("PayoffSpec: discount must lie in [0,1)");
}

// Critical probability: relative cost of avoidance over relative cost of
// encounter. Lies strictly inside (0,1) for any valid table.
inline double critical_probability(const CostTable& c) {
  validate(c);
  return (c.avoid - c.no_encounter) / (c.encounter - c.no_encounter);
}

inline double critical_probability(const PayoffSpec& p) {
  validate(p);
  return (p.good - p.avoid) / (p.good - p.bad);
}

// Optimal one-shot rule under a known bad-outcome probability.
// Ties go to Avoid.
inline Action emt_rule(double prob_bad, const PayoffSpec& p) {
  if (!(prob_bad >= 0.0 && prob_bad <= 1.0))
    throw std::invalid_argument("emt_rule: prob_bad must lie in [0,1]");
  return prob_bad >= critical_probability(p) ? Action::Avoid
                                             : Action::Experiment;
}

// Costs negate into payoffs; the discount factor is supplied separately.
inline PayoffSpec costs_to_payoffs(const CostTable& c, double discount) {
  validate(c);
  PayoffSpec p{-c.encounter, -c.avoid, -c.no_encounter, discount};
  validate(p);
  return p;
}

}  // namespace betabandit
