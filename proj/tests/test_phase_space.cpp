#include <random>

#include "doctest.h"
#include "tunnel/phase_space.hpp"

using namespace tunnel;

TEST_CASE("moments from canonical variables") {
  const auto m = moments_from_canonical(1.0, 0.0, 0.25);
  CHECK(m.dxx == doctest::Approx(1.0));
  CHECK(m.dxp == doctest::Approx(0.0));
  CHECK(m.dpp == doctest::Approx(0.25));

  const auto m2 = moments_from_canonical(2.0, 0.5, 0.25);
  CHECK(m2.dxx == doctest::Approx(4.0));
  CHECK(m2.dxp == doctest::Approx(1.0));
  CHECK(m2.dpp == doctest::Approx(0.25 + 0.0625));

  CHECK_THROWS_AS(moments_from_canonical(0.0, 0.0, 0.25), DomainError);
  CHECK_THROWS_AS(moments_from_canonical(-1.0, 0.0, 0.25), DomainError);
}

TEST_CASE("canonical from moments") {
  const auto c = canonical_from_moments({1.0, 1.0, 1.0});
  CHECK(c.s == doctest::Approx(1.0));
  CHECK(c.ps == doctest::Approx(1.0));
  CHECK(c.U == doctest::Approx(0.0));
  CHECK_THROWS_AS(canonical_from_moments({1.0, 2.0, 1.0}), DomainError);
  CHECK_THROWS_AS(canonical_from_moments({0.0, 0.0, 1.0}), DomainError);
}

TEST_CASE("round trip keeps U fixed") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ds(0.1, 5.0), dp(-3.0, 3.0), du(0.01, 2.0);
  for (int k = 0; k < 1000; ++k) {
    const double s = ds(rng), ps = dp(rng), U = du(rng);
    const auto m = moments_from_canonical(s, ps, U);
    CHECK(m.dxx * m.dpp - m.dxp * m.dxp == doctest::Approx(U).epsilon(1e-10));
    const auto c = canonical_from_moments(m);
    CHECK(c.s == doctest::Approx(s).epsilon(1e-12));
    CHECK(c.ps == doctest::Approx(ps).epsilon(1e-10));
  }
}

// Brackets of the moment algebra, realised on (s, p_s) by the chain rule:
// {Δxx, Δxp} = 2Δxx, {Δxx, Δpp} = 4Δxp, {Δxp, Δpp} = 2Δpp.
TEST_CASE("canonical pair realises the moment brackets") {
  auto bracket = [](auto f, auto g, double s, double ps) {
    const double h = 1e-6;
    const double fs = (f(s + h, ps) - f(s - h, ps)) / (2 * h), fp = (f(s, ps + h) - f(s, ps - h)) / (2 * h);
    const double gs = (g(s + h, ps) - g(s - h, ps)) / (2 * h), gp = (g(s, ps + h) - g(s, ps - h)) / (2 * h);
    return fs * gp - fp * gs;
  };
  const double U = 0.25;
  auto xx = [](double s, double) { return s * s; };
  auto xp = [](double s, double ps) { return s * ps; };
  auto pp = [U](double s, double ps) { return ps * ps + U / (s * s); };
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ds(0.3, 3.0), dp(-2.0, 2.0);
  for (int k = 0; k < 100; ++k) {
    const double s = ds(rng), ps = dp(rng);
    CHECK(bracket(xx, xp, s, ps) == doctest::Approx(2 * xx(s, ps)).epsilon(1e-7));
    CHECK(bracket(xx, pp, s, ps) == doctest::Approx(4 * xp(s, ps)).epsilon(1e-7));
    CHECK(bracket(xp, pp, s, ps) == doctest::Approx(2 * pp(s, ps)).epsilon(1e-7));
  }
}

TEST_CASE("extended state") {
  ExtendedState st(3);
  CHECK(st.U(2) == 0.25);
  st.axis(1) = {1.0, 2.0, 3.0, 4.0};
  const auto y = st.pack();
  REQUIRE(y.size() == 12);
  CHECK(y[1] == 1.0);
  CHECK(y[4] == 2.0);
  CHECK(y[7] == 3.0);
  CHECK(y[10] == 4.0);
  ExtendedState other(3);
  other.unpack(y);
  CHECK(other.axis(1).ps == 4.0);
  CHECK_THROWS(st.axis(3));
  CHECK_THROWS_AS(ExtendedState(2), ConfigurationError);
  CHECK_THROWS_AS(st.set_U(0, -1.0), DomainError);
}
