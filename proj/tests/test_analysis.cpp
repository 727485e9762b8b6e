#include <cmath>
#include <numbers>

#include "doctest.h"
#include "tunnel/analysis.hpp"

using namespace tunnel;

namespace {

constexpr double kPi = std::numbers::pi;

FluctuationSeries sampled(double t0, double t1, double dt, auto&& f) {
  FluctuationSeries s;
  for (double t = t0; t <= t1 + 1e-9; t += dt) {
    s.t.push_back(t);
    s.s_T.push_back(f(t));
  }
  return s;
}

}  // namespace

TEST_CASE("criterion names round trip") {
  for (auto id : {CriterionId::Energy, CriterionId::MomentumBackprop, CriterionId::StaticTraversal,
                  CriterionId::WkbIntegral, CriterionId::FluctFit, CriterionId::FluctInflection}) {
    CHECK(criterion_from_name(criterion_name(id)) == id);
  }
  CHECK_THROWS(criterion_from_name("nope"));
}

TEST_CASE("savitzky-golay is exact on cubics") {
  auto s = sampled(0, 10, 0.1, [](double t) { return 1 - 2 * t + 0.5 * t * t + 0.1 * t * t * t; });
  const auto d1 = savitzky_golay(s.s_T, 0.1, 11, 1);
  const auto d2 = savitzky_golay(s.s_T, 0.1, 11, 2);
  CHECK(std::isnan(d2.front()));
  CHECK(std::isnan(d2.back()));
  for (std::size_t i = 5; i + 5 < s.t.size(); ++i) {
    const double t = s.t[i];
    CHECK(d1[i] == doctest::Approx(-2 + t + 0.3 * t * t).epsilon(1e-9));
    CHECK(d2[i] == doctest::Approx(1 + 0.6 * t).epsilon(1e-9));
  }
  CHECK_THROWS(savitzky_golay(s.s_T, 0.1, 6, 1));
}

TEST_CASE("fit criterion recovers the kink of a broken line") {
  auto s = sampled(0, 100, 0.05, [](double t) { return t < 20 ? 1.0 : 1.0 + 0.3 * (t - 20); });
  FitLines lines;
  const auto r = exit_time_fluct_fit(s, 27.0, {}, &lines);
  REQUIRE(r.found);
  CHECK(r.tau_exit == doctest::Approx(20.0).epsilon(1e-6));
  CHECK(r.tau_ionization == doctest::Approx(-7.0).epsilon(1e-6));
  CHECK(lines.b2 == doctest::Approx(0.3));

  auto rising = sampled(0, 100, 0.05, [](double t) { return 1.0 + 0.3 * t; });
  CHECK_FALSE(exit_time_fluct_fit(rising, 27.0).found);
}

TEST_CASE("inflection criterion finds mu + sigma of a Gaussian force") {
  // s_T'' = exp(-(t-mu)^2 / 2 sigma^2): last maximum at mu, next inflection of s_T'' at mu + sigma.
  const double mu = 30, sigma = 5, dt = 0.01;
  FluctuationSeries s;
  double v = 0.0, y = 1.0;
  for (int k = 0; k <= 8000; ++k) {
    const double t = k * dt;
    s.t.push_back(t);
    s.s_T.push_back(y);
    const double a0 = std::exp(-0.5 * std::pow((t - mu) / sigma, 2));
    const double a1 = std::exp(-0.5 * std::pow((t + dt - mu) / sigma, 2));
    y += v * dt + dt * dt * (2 * a0 + a1) / 6;
    v += 0.5 * dt * (a0 + a1);
  }
  InflectionDetail detail;
  const auto r = exit_time_fluct_inflection(s, 27.0, 0, 80, {.window = 1.0}, &detail);
  REQUIRE(r.found);
  CHECK(detail.last_maximum == doctest::Approx(mu).epsilon(1e-3));
  CHECK(r.tau_exit == doctest::Approx(mu + sigma).epsilon(2e-3));
  CHECK(r.tau_ionization == doctest::Approx(r.tau_exit - 27.0));

  auto flat = sampled(0, 80, 0.01, [](double) { return 1.0; });
  CHECK_FALSE(exit_time_fluct_inflection(flat, 27.0, 0, 80).found);
}

TEST_CASE("transverse widths") {
  CHECK(transverse_width(0.0, 2.0, 3.0) == doctest::Approx(3.0));
  CHECK(transverse_width(kPi / 2, 2.0, 3.0) == doctest::Approx(2.0));
  CHECK(transverse_width(0.7, 1.5, 1.5) == doctest::Approx(1.5));
  CHECK(width_along({0, 0, 1}, {1, 2, 3}) == doctest::Approx(3.0));
  CHECK(width_along({std::sqrt(0.5), std::sqrt(0.5), 0}, {1, 1, 7}) == doctest::Approx(1.0));
}

TEST_CASE("energy criterion on the Gaussian well") {
  const double w = 0.05811;
  SUBCASE("no field, no exit") {
    const auto traj = evolve_ground_state({GaussianWell1D{0.7781174228}, StaticField{}}, {});
    const auto r = exit_time_energy(traj);
    CHECK_FALSE(r.found);
    CHECK(r.tau_max == 0.0);
  }
  SUBCASE("strong pulse brackets a sign change") {
    const System sys{GaussianWell1D{0.7781174228}, HalfCycleSin3{0.16, w}};
    const auto traj = evolve_ground_state(sys, {});
    CHECK(traj.energy_free(0.0) == doctest::Approx(-2.0 / 9.0).epsilon(1e-9));
    const auto r = exit_time_energy(traj);
    REQUIRE(r.found);
    CHECK(r.tau_max == doctest::Approx(kPi / (2 * w)).epsilon(1e-8));
    CHECK(r.tau_ionization == doctest::Approx(r.tau_exit - r.tau_max));
    CHECK(traj.energy_free(r.tau_exit - 1e-6) < 0.0);
    CHECK(traj.energy_free(r.tau_exit + 1e-6) > 0.0);
  }
}

TEST_CASE("momentum back-propagation") {
  const System sys{GaussianWell1D{0.7781174228}, HalfCycleSin3{0.14, 0.05811}};
  const auto traj = evolve_ground_state(sys, {});
  const auto bp = exit_time_momentum_backprop(traj);
  REQUIRE(bp.path);
  CHECK(bp.path->ok());
  if (bp.result.found) {
    REQUIRE(bp.result.exit_momentum);
    CHECK(std::abs((*bp.result.exit_momentum)[0]) < 1e-8);
  }
  CHECK_FALSE(exit_time_momentum_backprop(traj, -1.0).result.found);
}

TEST_CASE("free drift has no momentum zero") {
  const System sys{FreeParticle{1}, StaticField{}};
  ExtendedState st(1);
  st.axis(0) = {0, 0.4, 1, 0};
  const auto traj = integrate(st, sys, {});
  const auto bp = exit_time_momentum_backprop(traj);
  CHECK_FALSE(bp.result.found);
  CHECK_FALSE(bp.result.diagnostic.empty());
}

TEST_CASE("static tunnel geometry") {
  const PotentialModel ar = Coulomb3D{7.0};
  const auto g = ground_state_init(ar);
  const auto weak = tunnel_geometry(ar, {0, 0, 0.015}, g.energy, g.state);
  const auto strong = tunnel_geometry(ar, {0, 0, 0.03}, g.energy, g.state);
  REQUIRE(weak.found);
  REQUIRE(strong.found);
  CHECK(weak.axis == 2);
  // −x·F coupling: the potential falls towards +x₃.
  CHECK(weak.direction == 1.0);
  CHECK(weak.x_in < weak.x_star);
  CHECK(strong.x_star < weak.x_star);

  const double t_weak = wkb_like_time(ar, {0, 0, 0.015}, g.energy, g.state);
  const double t_strong = wkb_like_time(ar, {0, 0, 0.03}, g.energy, g.state);
  CHECK(t_weak > t_strong);
  CHECK(t_strong > 0.0);
  CHECK(wkb_like_time(ar, {0, 0, 0.03}, g.energy, g.state, {.kinetic_factor_two = true}) ==
        doctest::Approx(t_strong / std::sqrt(2.0)).epsilon(1e-6));
}

TEST_CASE("spot size of an isotropic packet") {
  const System sys{FreeParticle{3}, StaticField{}};
  ExtendedState st(3);
  for (int i = 0; i < 3; ++i) st.axis(i) = {0, i == 0 ? 5.0 : 0.0, 1.0, 0};
  IntegratorConfig cfg;
  cfg.t_end = 100;
  cfg.max_step = 5;
  const auto traj = integrate(st, sys, cfg);
  const auto sp = spot_size(traj, 100.0);
  REQUIRE(sp.found);
  CHECK(sp.time == doctest::Approx(20.0).epsilon(1e-8));
  // s(t)² = 1 + U t² per axis.
  CHECK(sp.spot == doctest::Approx(std::sqrt(1 + 0.25 * 400)).epsilon(1e-7));
  CHECK(sp.width_a == doctest::Approx(sp.width_b));
  CHECK_FALSE(spot_size(traj, 1000.0).found);

  const auto oa = offset_angle(traj, 100.0);
  CHECK(oa.at_detector);
  CHECK(oa.final_angle == doctest::Approx(0.0));
}

TEST_CASE("frequency scan keeps grid order and flags missing exits") {
  IntegratorConfig cfg;
  cfg.t_end = 0.0;
  const std::vector<double> omegas{0.05811, 0.3};
  const auto scan =
      frequency_scan(GaussianWell1D{0.7781174228}, HalfCycleSin3{0.16, 0.05811}, AmplitudeRule::FixedAmplitude, omegas, cfg, 2);
  REQUIRE(scan.rows.size() == 2);
  CHECK(scan.rows[0].omega == 0.05811);
  CHECK(scan.rows[0].result.found);
  CHECK(scan.rows[1].amplitude == 0.16);
  CHECK(scan.rows[1].result.tau_max == doctest::Approx(kPi / 0.6));
  if (!scan.rows[1].result.found) CHECK(scan.critical_omega == 0.3);

  const auto fluence =
      frequency_scan(GaussianWell1D{0.7781174228}, HalfCycleSin3{0.16, 0.05811}, AmplitudeRule::FixedFluence, omegas, cfg);
  CHECK(fluence.rows[1].amplitude == doctest::Approx(0.16 * std::sqrt(0.3 / 0.05811)));
}
