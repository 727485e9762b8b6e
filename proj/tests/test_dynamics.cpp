#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tunnel/dynamics.hpp"

using namespace tunnel;

TEST_CASE("eom examples") {
  const System free{FreeParticle{1}, StaticField{}};
  ExtendedState st(1);
  st.axis(0) = {0, 0, 1, 0};
  const auto d = eom(st, free);
  CHECK(d.axis(0).x == 0.0);
  CHECK(d.axis(0).p == 0.0);
  CHECK(d.axis(0).s == 0.0);
  CHECK(d.axis(0).ps == doctest::Approx(0.25));

  const System harm{Harmonic{1, 1.0}, StaticField{}};
  st.axis(0) = {0.3, 0.1, std::pow(0.25, 0.25), 0};
  CHECK(std::abs(eom(st, harm).axis(0).ps) < 1e-15);
}

TEST_CASE("eom is the symplectic gradient of the Hamiltonian") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dx(-2, 2), dp(-1, 1), ds(0.4, 2.5);
  const System systems[] = {
      {Coulomb3D{7.0, 1e-6}, StaticField{{0, 0, 0.02}}},
      {GaussianWell1D{0.778}, HalfCycleSin3{0.14, 0.05811}},
      {Hydrogen3D{}, RotatingHalfCycle{0.08, 0.05811}},
      {Hydrogen3D{}, CosEnvelope{1.5, 0.05811, 2, 1}, CoRotatingFrame{}},
  };
  for (const auto& sys : systems) {
    for (int n = 0; n < 100; ++n) {
      ExtendedState st(sys.dim());
      st.t = 10.0 + 20.0 * dp(rng);
      for (int i = 0; i < st.dim(); ++i) st.axis(i) = {dx(rng), dp(rng), ds(rng), dp(rng)};
      const auto d = eom(st, sys);
      for (int i = 0; i < st.dim(); ++i) {
        auto partial = [&](double AxisState::*field) {
          const double h = 1e-6;
          ExtendedState a = st, b = st;
          a.axis(i).*field += h;
          b.axis(i).*field -= h;
          return (quantum_hamiltonian(a, sys) - quantum_hamiltonian(b, sys)) / (2 * h);
        };
        auto close = [](double v, double ref) { return std::abs(v - ref) <= 1e-6 * std::max(1.0, std::abs(ref)); };
        CHECK(close(d.axis(i).x, partial(&AxisState::p)));
        CHECK(close(d.axis(i).p, -partial(&AxisState::x)));
        CHECK(close(d.axis(i).s, partial(&AxisState::ps)));
        CHECK(close(d.axis(i).ps, -partial(&AxisState::s)));
      }
    }
  }
}

TEST_CASE("free spreading follows the closed form") {
  const System sys{FreeParticle{1}, StaticField{}};
  for (double ps0 : {0.0, 0.3, -0.2}) {
    ExtendedState st(1);
    st.axis(0) = {0, 0, 0.8, ps0};
    IntegratorConfig cfg;
    cfg.t_end = 100;
    const auto tr = integrate(st, sys, cfg);
    REQUIRE(tr.status() == TrajectoryStatus::Complete);
    const double s = tr.final_state().axis(0).s;
    const double ref = std::sqrt(0.64 + 2 * 0.8 * ps0 * 100 + (ps0 * ps0 + 0.25 / 0.64) * 1e4);
    CHECK(std::abs(s - ref) <= 1e-8 * ref);
  }
}

TEST_CASE("stationary width in a harmonic well") {
  const System sys{Harmonic{1, 1.0}, StaticField{}};
  ExtendedState st(1);
  st.axis(0) = {0.5, 0, std::pow(0.25, 0.25), 0};
  IntegratorConfig cfg;
  cfg.t_end = 100;
  const auto tr = integrate(st, sys, cfg);
  for (double t = 0; t <= 100; t += 0.7) CHECK(std::abs(tr.at(t).axis(0).s - std::pow(0.25, 0.25)) <= 1e-8);
  // Expectation value oscillates classically.
  CHECK(tr.at(100).axis(0).x == doctest::Approx(0.5 * std::cos(100.0)).epsilon(1e-7));
}

TEST_CASE("ground states") {
  const auto c = ground_state_init(Coulomb3D{7.0, 0.0});
  for (int i = 0; i < 3; ++i) CHECK(std::abs(c.state.axis(i).s - 3 * std::numbers::sqrt3 / 4) <= 1e-9);
  CHECK(std::abs(c.energy + 2.0 / 9.0) <= 1e-12);
  const auto soft = ground_state_init(Coulomb3D{7.0, 1e-6});
  CHECK(std::abs(soft.energy + 2.0 / 9.0) <= 1e-9);
  const auto h = ground_state_init(Hydrogen3D{1e-6});
  CHECK(h.energy == doctest::Approx(soft.energy).epsilon(1e-14));
  // Closed form for a general U: σ = 3√3 U, E = −1/(18U).
  const auto g = ground_state_init(Coulomb3D{0.0, 0.0}, 0.4);
  CHECK(g.state.axis(0).s == doctest::Approx(3 * std::numbers::sqrt3 * 0.4).epsilon(1e-10));
  CHECK(g.energy == doctest::Approx(-1.0 / 7.2).epsilon(1e-12));
  CHECK_THROWS_AS(ground_state_init(FreeParticle{1}), DomainError);
}

TEST_CASE("gaussian well calibration") {
  // Stationarity 2D s⁴ e^{−s²} = U with E = −2/9 reduces to 16u² + 9u − 9 = 0, u = s².
  const double u = (-9 + std::sqrt(81 + 4 * 16 * 9.0)) / 32;
  const double D = 0.25 / (2 * u * u * std::exp(-u));
  const double Dc = calibrate_well_depth(-2.0 / 9.0);
  CHECK(Dc == doctest::Approx(D).epsilon(1e-9));
  CHECK(Dc == doctest::Approx(0.7781).epsilon(1e-3));
  const auto gs = ground_state_init(GaussianWell1D{Dc});
  CHECK(gs.state.axis(0).s == doctest::Approx(std::sqrt(u)).epsilon(1e-8));
  CHECK(std::abs(gs.energy + 2.0 / 9.0) <= 1e-10);
  CHECK(gs.state.axis(0).s == doctest::Approx(0.72090).epsilon(1e-4));

  const double e_half = ground_state_init(GaussianWell1D{0.5}).energy;
  CHECK(calibrate_well_depth(e_half) == doctest::Approx(0.5).epsilon(1e-9));

  double prev = 0.0;
  for (double d = 0.3; d <= 1.5 + 1e-9; d += 0.1) {
    const double e = ground_state_init(GaussianWell1D{d}).energy;
    if (d > 0.3) CHECK(e < prev);
    prev = e;
  }
  CHECK_THROWS_AS(calibrate_well_depth(0.1), DomainError);
}

TEST_CASE("static Coulomb run conserves energy and U") {
  const System sys{Coulomb3D{7.0, 1e-6}, StaticField{{0, 0, 0.015}}};
  const auto gs = ground_state_init(sys.model);
  IntegratorConfig cfg;
  cfg.t_end = 200;
  const auto tr = integrate(gs.state, sys, cfg);
  REQUIRE(tr.status() == TrajectoryStatus::Complete);
  const double h0 = tr.hamiltonian(0);
  for (double t : tr.times()) {
    CHECK(std::abs(tr.hamiltonian(t) - h0) <= 1e-7 * std::abs(h0));
    const auto st = tr.at(t);
    for (int i = 0; i < 3; ++i) {
      const auto m = moments_from_canonical(st.axis(i).s, st.axis(i).ps, st.U(i));
      CHECK(std::abs(m.dxx * m.dpp - m.dxp * m.dxp - 0.25) <= 1e-10);
      CHECK(st.axis(i).s > 0);
    }
  }
}

TEST_CASE("time reversal") {
  const System sys{Coulomb3D{0.0, 1e-6}, StaticField{}};
  ExtendedState st(3);
  for (int i = 0; i < 3; ++i) st.axis(i) = {0.5 + i, 0.1 * i, 1.0, -0.05};
  IntegratorConfig cfg;
  cfg.t_end = 30;
  const auto fwd = integrate(st, sys, cfg);
  ExtendedState back0 = fwd.final_state();
  IntegratorConfig back;
  back.t_end = 0;
  const auto bwd = integrate(back0, sys, back);
  const auto end = bwd.final_state();
  for (int i = 0; i < 3; ++i) {
    CHECK(std::abs(end.axis(i).x - st.axis(i).x) <= 1e-8);
    CHECK(std::abs(end.axis(i).p - st.axis(i).p) <= 1e-8);
    CHECK(std::abs(end.axis(i).s - st.axis(i).s) <= 1e-8);
    CHECK(std::abs(end.axis(i).ps - st.axis(i).ps) <= 1e-8);
  }
}

TEST_CASE("stop radius event") {
  const System sys{FreeParticle{3}, StaticField{}};
  ExtendedState st(3);
  st.axis(0) = {0, 2.0, 1, 0};
  IntegratorConfig cfg;
  cfg.t_end = 1000;
  cfg.stop_radius = 50;
  const auto tr = integrate(st, sys, cfg);
  CHECK(tr.status() == TrajectoryStatus::ReachedRadius);
  CHECK(std::abs(tr.t_end() - 25.0) <= 1e-8);
  CHECK(std::abs(*tr.radius_crossing(20.0) - 10.0) <= 1e-8);
}

TEST_CASE("lab and co-rotating frames agree") {
  // Isotropic harmonic trap: widths do not couple to orientation, so the
  // rotated expectation values must coincide with the lab-frame run.
  const CosEnvelope pulse{3.0, 0.05811, 2.0, 1.0};
  const double t0 = -2 * std::numbers::pi / 0.05811 + 1.0;
  ExtendedState lab(3);
  lab.t = t0;
  lab.axis(0) = {0.4, 0.1, 0.9, 0.0};
  lab.axis(1) = {-0.2, 0.3, 0.9, 0.0};
  lab.axis(2) = {0.1, 0.0, 0.9, 0.0};
  const System lab_sys{Harmonic{3, 0.3}, pulse};
  const System rot_sys{Harmonic{3, 0.3}, pulse, CoRotatingFrame{}};
  const auto S0 = corotation_matrix(pulse, t0);
  ExtendedState rot = lab;
  // R = Sᵀ r, P = Sᵀ p
  for (auto [xs, ps] : {std::pair{&AxisState::x, &AxisState::x}, std::pair{&AxisState::p, &AxisState::p}}) {
    (void)ps;
    const double a = lab.axis(0).*xs, b = lab.axis(1).*xs;
    rot.axis(0).*xs = S0[0][0] * a + S0[1][0] * b;
    rot.axis(1).*xs = S0[0][1] * a + S0[1][1] * b;
  }
  IntegratorConfig cfg;
  cfg.t_end = 100;
  const auto tl = integrate(lab, lab_sys, cfg);
  const auto trr = integrate(rot, rot_sys, cfg);
  for (double t = t0; t <= 100; t += 7.3) {
    const auto a = tl.at(t), b = trr.at(t);
    const auto S = corotation_matrix(pulse, t);
    const double x = S[0][0] * b.axis(0).x + S[0][1] * b.axis(1).x;
    const double y = S[1][0] * b.axis(0).x + S[1][1] * b.axis(1).x;
    CHECK(std::abs(x - a.axis(0).x) <= 1e-7);
    CHECK(std::abs(y - a.axis(1).x) <= 1e-7);
    CHECK(std::abs(b.axis(2).x - a.axis(2).x) <= 1e-9);
    CHECK(std::abs(b.axis(0).s - a.axis(0).s) <= 1e-9);
    CHECK(tl.energy_free(t) == doctest::Approx(trr.energy_free(t)).epsilon(1e-7));
  }
}

TEST_CASE("classical back-propagation") {
  const auto path = classical_backpropagate({3, 0, 0}, {0.5, 0, 0}, 150, 0, FreeParticle{1}, StaticField{});
  REQUIRE(path.ok());
  for (double t : {0.0, 40.0, 149.0}) CHECK(path.position(t)[0] == doctest::Approx(3 - 0.5 * (150 - t)));

  const PotentialModel m = GaussianWell1D{0.778};
  const FieldPulse f = HalfCycleSin3{0.14, 0.05811};
  const auto fwd = classical_propagate({0.2, 0, 0}, {0.1, 0, 0}, 0, 80, m, f);
  const auto bwd = classical_backpropagate(fwd.position(80), fwd.momentum(80), 80, 0, m, f);
  CHECK(std::abs(bwd.position(0)[0] - 0.2) <= 1e-8);
  CHECK(std::abs(bwd.momentum(0)[0] - 0.1) <= 1e-8);
  CHECK_THROWS_AS(classical_backpropagate({0, 0, 0}, {0, 0, 0}, 0, 10, m, f), DomainError);
}
