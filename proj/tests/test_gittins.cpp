#include <cmath>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "betabandit/belief.hpp"
#include "betabandit/gittins.hpp"
#include "betabandit/rng.hpp"

using namespace betabandit;

namespace {

BeliefState lattice_state(double nb, double ng) {
  return BeliefState{nb, ng, 0, 0};
}

// Indifference points of the truncated avoid/experiment problem at rho = 0.5,
// horizon 30 (tail below 2e-9), found by bisection on the first optimal
// action of an independent backward induction. Frozen as oracle anchors.
constexpr double kOracleIndex11Rho05 = 0.5590188317000866;
constexpr double kOracleIndex23Rho05 = 0.6288999944925309;

}  // namespace

TEST_CASE("zero discount reduces to the posterior mean") {
  Pcg32 rng(41, 0);
  for (int k = 0; k < 50; ++k) {
    const double a = 0.1 + rng.next_double() * 20.0;
    const double b = 0.1 + rng.next_double() * 20.0;
    const double v = normalized_index(lattice_state(a, b), 0.0, 1e-9);
    REQUIRE(std::fabs(v - b / (a + b)) <= 1e-12);
  }
}

TEST_CASE("index matches the brute-force oracle anchors") {
  const double tol = 1e-6;
  CHECK(std::fabs(normalized_index(init_prior(1.0, 1.0), 0.5, tol) -
                  kOracleIndex11Rho05) <= 2.0 * tol);
  CHECK(std::fabs(normalized_index(lattice_state(2.0, 3.0), 0.5, tol) -
                  kOracleIndex23Rho05) <= 2.0 * tol);
}

TEST_CASE("index reproduces classical tabulated values") {
  // uniform-prior arm: 0.7029 at discount 0.9 and 0.7614 at 0.95
  CHECK(normalized_index(init_prior(1.0, 1.0), 0.9) ==
        Catch::Approx(0.7029).margin(2e-4));
  CHECK(normalized_index(init_prior(1.0, 1.0), 0.95) ==
        Catch::Approx(0.7614).margin(2e-4));
}

TEST_CASE("index stays within [0,1] and above the posterior mean") {
  const double tol = 1e-6;
  for (double rho : {0.5, 0.9}) {
    for (int a = 1; a + 1 <= 12; ++a) {
      for (int b = 1; a + b <= 12; ++b) {
        const double v = normalized_index(lattice_state(a, b), rho, tol);
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
        REQUIRE(v >= static_cast<double>(b) / (a + b) - tol);
      }
    }
  }
}

TEST_CASE("a good observation cannot lower the index") {
  const double tol = 1e-6;
  for (double rho : {0.5, 0.9}) {
    for (int a = 1; a <= 6; ++a) {
      for (int b = 1; b <= 6; ++b) {
        const BeliefState s = lattice_state(a, b);
        const double before = normalized_index(s, rho, tol);
        const double after =
            normalized_index(update(s, Observation::Good), rho, tol);
        REQUIRE(after >= before - 2.0 * tol);
      }
    }
  }
}

TEST_CASE("index query struct routes through the same computation") {
  const IndexQuery q{init_prior(1.0, 1.0), 0.5, 1e-6};
  CHECK(normalized_index(q) ==
        normalized_index(q.belief, q.discount, q.tolerance));
}

TEST_CASE("invalid index queries are rejected") {
  CHECK_THROWS_AS(normalized_index(init_prior(1.0, 1.0), 1.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(normalized_index(init_prior(1.0, 1.0), 0.5, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(normalized_index(BeliefState{0.0, 1.0, 0, 0}, 0.5),
                  std::invalid_argument);
}

TEST_CASE("unachievable tolerance reports the achievable bound") {
  try {
    normalized_index(init_prior(1.0, 1.0), 0.99999, 1e-9);
    FAIL("expected ResourceLimitError");
  } catch (const ResourceLimitError& e) {
    CHECK(e.achievable_bound() > 0.0);
    CHECK(e.achievable_bound() < 1e5);
  }
}

TEST_CASE("payoff-unit index is the affine image of the normalized one") {
  const BeliefState s = init_prior(1.0, 1.0);
  // bad at 0 and good at 1 is the identity map
  CHECK(index_payoff(s, PayoffSpec{0.0, 0.5, 1.0, 0.5}) ==
        normalized_index(s, 0.5));
  // myopic case in shifted units
  CHECK(index_payoff(s, PayoffSpec{-1.0, -0.5, 0.0, 0.0}) ==
        Catch::Approx(-0.5).epsilon(1e-12));
  // mean-payoff lower bound at integer count states
  const PayoffSpec p{-2.0, -1.0, 3.0, 0.9};
  for (int a = 1; a <= 5; ++a) {
    for (int b = 1; b <= 5; ++b) {
      const double mean_payoff = (a * p.bad + b * p.good) / (a + b);
      REQUIRE(index_payoff(lattice_state(a, b), p) >=
              mean_payoff - (p.good - p.bad) * 1e-6);
    }
  }
}

TEST_CASE("decide follows the prudent index rule") {
  // tight pessimistic posterior under a permissive threshold: avoid
  CHECK(decide(lattice_state(100.0, 1.0), PayoffSpec{0.0, 0.5, 1.0, 0.5}) ==
        Action::Avoid);
  // avoid payoff barely above bad: experiment whatever the belief
  const PayoffSpec permissive{0.0, 1e-9, 1.0, 0.5};
  CHECK(decide(lattice_state(100.0, 1.0), permissive) == Action::Experiment);
  CHECK(decide(init_prior(1.0, 1.0), permissive) == Action::Experiment);
  // myopic arithmetic: index -0.5 under avoid payoff -0.4
  CHECK(decide(init_prior(1.0, 1.0), PayoffSpec{-1.0, -0.4, 0.0, 0.0}) ==
        Action::Avoid);
  // exact myopic tie resolves to Avoid
  CHECK(decide(init_prior(1.0, 1.0), PayoffSpec{0.0, 0.5, 1.0, 0.0}) ==
        Action::Avoid);
}

TEST_CASE("decide agrees with the index threshold bit for bit") {
  const double tol = 1e-6;
  struct Case { BeliefState s; double rho; };
  const Case cases[] = {{init_prior(1.0, 1.0), 0.5},
                        {lattice_state(2.0, 3.0), 0.5},
                        {lattice_state(1.0, 5.0), 0.9},
                        {lattice_state(7.0, 2.0), 0.9}};
  for (const Case& c : cases) {
    const double v = normalized_index(c.s, c.rho, tol);
    for (double delta : {-1e-2, -1e-5, -2e-6, -1e-7, 0.0, 1e-7, 2e-6, 1e-5, 1e-2}) {
      const double lam = v + delta;
      if (!(lam > 0.0 && lam < 1.0)) continue;
      const PayoffSpec p{0.0, lam, 1.0, c.rho};
      const Decision d = decide_with_diagnostics(c.s, p, tol);
      const bool via_threshold =
          normalized_index(c.s, c.rho, tol) > 1.0 - critical_probability(p);
      REQUIRE((d.action == Action::Experiment) == via_threshold);
    }
  }
}

TEST_CASE("boundary-uncertain flag marks near-threshold calls only") {
  const double tol = 1e-6;
  const BeliefState s = lattice_state(2.0, 3.0);
  const double v = normalized_index(s, 0.5, tol);
  const Decision near =
      decide_with_diagnostics(s, PayoffSpec{0.0, v + 0.5 * tol, 1.0, 0.5}, tol);
  CHECK(near.boundary_uncertain);
  const Decision far_above =
      decide_with_diagnostics(s, PayoffSpec{0.0, v + 20.0 * tol, 1.0, 0.5}, tol);
  CHECK_FALSE(far_above.boundary_uncertain);
  CHECK(far_above.action == Action::Avoid);
  const Decision far_below =
      decide_with_diagnostics(s, PayoffSpec{0.0, v - 20.0 * tol, 1.0, 0.5}, tol);
  CHECK_FALSE(far_below.boundary_uncertain);
  CHECK(far_below.action == Action::Experiment);
}

TEST_CASE("table covers the lattice and matches fresh queries") {
  const PayoffSpec p{0.0, 0.5, 1.0, 0.5};
  const BeliefState prior = init_prior(1.0, 2.0);

  const IndexTable single = build_table(prior, p, 0);
  CHECK(single.values.size() == 1);
  CHECK(single.at(0, 0) == normalized_index(prior, 0.5));

  const IndexTable t = build_table(prior, p, 10);
  CHECK(t.values.size() == IndexTable::size_for_depth(10));
  CHECK(t.certified_error > 0.0);
  CHECK(t.certified_error < 0.5 * t.tolerance);

  Pcg32 rng(8, 0);
  for (int k = 0; k < 100; ++k) {
    const int i = static_cast<int>(rng.next_u32() % 11);
    const int j = static_cast<int>(rng.next_u32() % (11 - i));
    const BeliefState s{prior.n_bad + i, prior.n_good + j, i, j};
    REQUIRE(std::fabs(t.at(i, j) - normalized_index(s, 0.5, t.tolerance)) <=
            2.0 * t.tolerance);
  }

  for (int i = 0; i <= 10; ++i)
    for (int j = 0; i + j < 10; ++j)
      REQUIRE(t.at(i, j + 1) >= t.at(i, j) - 2.0 * t.tolerance);

  CHECK_THROWS_AS(t.at(5, 6), std::out_of_range);
  CHECK_THROWS_AS(build_table(prior, p, -1), std::invalid_argument);
}
