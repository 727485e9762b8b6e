#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "tunnel/effective_potential.hpp"

using namespace tunnel;

namespace {

const Vec3 kU{0.25, 0.25, 0.25};

}  // namespace

TEST_CASE("one-dimensional forms") {
  const Potential1D well = as_potential_1d(GaussianWell1D{0.5}, 0.0);
  CHECK(v_eff_1d(EffPotentialKind::AllOrders, well, 0.0, 1.0, 0.25) ==
        doctest::Approx(0.125 - std::exp(-1.0) / 2).epsilon(1e-12));
  CHECK(v_eff_1d(EffPotentialKind::AllOrders, well, 0.0, 1.0, 0.25) == doctest::Approx(-0.058939).epsilon(1e-5));

  const Potential1D linear = as_potential_1d(FreeParticle{1}, 0.37);
  for (double x : {-2.0, 0.0, 3.0}) {
    CHECK(v_eff_1d(EffPotentialKind::AllOrders, linear, x, 0.8, 0.25) ==
          doctest::Approx(0.37 * x + 0.25 / (2 * 0.64)).epsilon(1e-14));
    CHECK(grad_v_eff_1d(EffPotentialKind::AllOrders, linear, x, 0.8, 0.25).ds ==
          doctest::Approx(-0.25 / std::pow(0.8, 3)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(v_eff_1d(EffPotentialKind::AllOrders, well, 0.0, 0.0, 0.25), DomainError);
  CHECK_THROWS_AS(v_eff_1d(EffPotentialKind::SecondOrder, well, 0.0, -1.0, 0.25), DomainError);
}

TEST_CASE("all orders equals second order for quadratic potentials") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> dx(-5, 5), ds(0.05, 5), dk(0.1, 4), dF(-0.5, 0.5);
  for (int n = 0; n < 1000; ++n) {
    const double k = dk(rng);
    for (int dim : {1, 3}) {
      const PotentialModel m = Harmonic{dim, k};
      const Vec3 x{dx(rng), dx(rng), dx(rng)}, s{ds(rng), ds(rng), ds(rng)}, F{dF(rng), dF(rng), dF(rng)};
      const double a = v_eff(EffPotentialKind::AllOrders, m, F, x, s, kU);
      const double b = v_eff(EffPotentialKind::SecondOrder, m, F, x, s, kU);
      CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST_CASE("harmonic and free gradients") {
  const Potential1D h = as_potential_1d(Harmonic{1, 2.0}, 0.0);
  const auto g = grad_v_eff_1d(EffPotentialKind::SecondOrder, h, 0.4, 0.9, 0.25);
  CHECK(g.ds == doctest::Approx(-0.25 / std::pow(0.9, 3) + 2.0 * 0.9));
  const auto gf = grad_v_eff(EffPotentialKind::AllOrders, FreeParticle{3}, kZero3, {1, 2, 3}, {0.5, 1, 2}, kU);
  CHECK(gf.ds[0] == doctest::Approx(-0.25 / 0.125));
  CHECK(gf.ds[2] == doctest::Approx(-0.25 / 8));
}

TEST_CASE("coulomb corner average") {
  const double sigma = 3 * std::numbers::sqrt3 / 4;
  const Vec3 s{sigma, sigma, sigma};
  const double v = v_eff(EffPotentialKind::AllOrders, Coulomb3D{0.0, 0.0}, kZero3, kZero3, s, kU);
  CHECK(v == doctest::Approx(3 * 0.25 / (2 * sigma * sigma) - 1 / (std::sqrt(3.0) * sigma)).epsilon(1e-14));
  CHECK(v == doctest::Approx(-2.0 / 9.0).epsilon(1e-14));
  for (double sg : {0.5, 1.7}) {
    const double w = v_eff(EffPotentialKind::AllOrders, Coulomb3D{0.0, 0.0}, kZero3, kZero3, {sg, sg, sg}, kU);
    CHECK(w == doctest::Approx(3 * 0.25 / (2 * sg * sg) - 1 / (std::sqrt(3.0) * sg)).epsilon(1e-14));
  }
  // Corner at the nucleus without softening.
  CHECK_THROWS_AS(v_eff(EffPotentialKind::AllOrders, Coulomb3D{0.0, 0.0}, kZero3, {1, 1, 1}, {1, 1, 1}, kU),
                  SingularityError);
  CHECK_THROWS_AS(v_eff(EffPotentialKind::SecondOrder, Coulomb3D{}, kZero3, kZero3, s, kU), UnsupportedConfiguration);
}

TEST_CASE("corner set symmetry and axis permutation") {
  const Vec3 F{0.0, 0.0, 0.02};
  const Coulomb3D m{7.0, 1e-6};
  const Vec3 x{0.3, -0.2, 1.5}, s{0.8, 1.1, 1.4};
  const double base = v_eff(EffPotentialKind::AllOrders, m, F, x, s, kU);
  auto V = [&](const Vec3& r) { return classical_potential(m, r, F); };
  // Flipping the sign of s₁ maps the corner set onto itself.
  double flipped = 0.0;
  for (int n = 0; n < 8; ++n) {
    Vec3 c;
    const Vec3 sf{-0.8, 1.1, 1.4};
    for (int i = 0; i < 3; ++i) c[i] = x[i] + ((n >> i) & 1 ? sf[i] : -sf[i]);
    flipped += V(c) / 8;
  }
  for (int i = 0; i < 3; ++i) flipped += 0.25 / (2 * s[i] * s[i]);
  CHECK(flipped == doctest::Approx(base).epsilon(1e-14));
  CHECK(v_eff_3d(V, x, s, kU) == doctest::Approx(base).epsilon(1e-14));
  // Permute axes (0,1,2) -> (2,0,1) together with the field.
  const Vec3 Fp{0.02, 0.0, 0.0}, xp{1.5, 0.3, -0.2}, sp{1.4, 0.8, 1.1};
  CHECK(v_eff(EffPotentialKind::AllOrders, m, Fp, xp, sp, kU) == doctest::Approx(base).epsilon(1e-13));
}

TEST_CASE("gradients match central differences") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dx(-2, 2), ds(0.3, 2.5), dF(-0.05, 0.05);
  const PotentialModel models[] = {Coulomb3D{7.0, 1e-6}, GaussianWell1D{0.7781}};
  for (const auto& m : models) {
    for (int n = 0; n < 100; ++n) {
      const Vec3 x{dx(rng), dx(rng), dx(rng)}, s{ds(rng), ds(rng), ds(rng)}, F{dF(rng), dF(rng), dF(rng)};
      const auto g = grad_v_eff(EffPotentialKind::AllOrders, m, F, x, s, kU);
      for (int i = 0; i < dimension(m); ++i) {
        const double h = 1e-5;
        Vec3 a = x, b = x;
        a[i] += h;
        b[i] -= h;
        const double fdx = (v_eff(EffPotentialKind::AllOrders, m, F, a, s, kU) -
                            v_eff(EffPotentialKind::AllOrders, m, F, b, s, kU)) / (2 * h);
        a = s;
        b = s;
        a[i] += h;
        b[i] -= h;
        const double fds = (v_eff(EffPotentialKind::AllOrders, m, F, x, a, kU) -
                            v_eff(EffPotentialKind::AllOrders, m, F, x, b, kU)) / (2 * h);
        CHECK(std::abs(g.dx[i] - fdx) <= 1e-6 * std::max(1.0, std::abs(fdx)));
        CHECK(std::abs(g.ds[i] - fds) <= 1e-6 * std::max(1.0, std::abs(fds)));
      }
    }
  }
  // Second-order gradient of the well uses the analytic third derivative.
  const Potential1D w = as_potential_1d(GaussianWell1D{0.6}, 0.05);
  for (double x : {-1.3, 0.2, 0.9}) {
    const auto g = grad_v_eff_1d(EffPotentialKind::SecondOrder, w, x, 0.7, 0.25);
    const double fd = (v_eff_1d(EffPotentialKind::SecondOrder, w, x + 1e-5, 0.7, 0.25) -
                       v_eff_1d(EffPotentialKind::SecondOrder, w, x - 1e-5, 0.7, 0.25)) / 2e-5;
    CHECK(g.dx == doctest::Approx(fd).epsilon(1e-8));
  }
}

TEST_CASE("contours lie on the level set") {
  ContourSpec spec;
  const double sigma = 3 * std::numbers::sqrt3 / 4;
  spec.frozen_s = {sigma, sigma, sigma};
  spec.x_min = -5;
  spec.x_max = 30;
  spec.s_min = 0.2;
  spec.s_max = 30;
  spec.nx = 141;
  spec.ns = 121;
  const Coulomb3D m{7.0, 1e-6};
  const Vec3 F{0, 0, 0.015};
  const auto c = equipotential_contour(m, F, -2.0 / 9.0, spec);
  REQUIRE(!c.polylines.empty());
  std::size_t count = 0;
  for (const auto& line : c.polylines) {
    for (const auto& p : line) {
      CHECK(std::abs(contour_plane_value(m, F, spec, p.x, p.s) + 2.0 / 9.0) <= 1e-9);
      ++count;
    }
  }
  CHECK(count > 50);
  // Two walls along the escape valley with the ground state between them.
  CHECK(channel_open(m, F, -2.0 / 9.0, spec, 0.0, sigma));
  CHECK_FALSE(channel_open(m, kZero3, -2.0 / 9.0, spec, 0.0, sigma));

  // Below the global minimum there is nothing to draw.
  const auto empty = equipotential_contour(m, F, -10.0, spec);
  CHECK(empty.polylines.empty());
}

TEST_CASE("closed contour around a harmonic minimum") {
  ContourSpec spec;
  spec.x_min = -3;
  spec.x_max = 3;
  spec.s_min = 0.1;
  spec.s_max = 3;
  spec.nx = 61;
  spec.ns = 59;
  const auto c = equipotential_contour(Harmonic{1, 1.0}, kZero3, 1.5, spec);
  REQUIRE(c.polylines.size() == 1);
  const auto& line = c.polylines.front();
  CHECK(line.front().x == doctest::Approx(line.back().x));
  CHECK(line.front().s == doctest::Approx(line.back().s));
}
