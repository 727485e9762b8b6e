#include "tunnel/phase_space.hpp"

#include <cmath>

namespace tunnel {

ExtendedState::ExtendedState(int dim, double U) : dim_(dim) {
  if (dim != 1 && dim != 3) {
    throw ConfigurationError("extended state dimension must be 1 or 3, got " + std::to_string(dim));
  }
  if (!(U > 0.0)) throw DomainError("uncertainty parameter U must be positive");
  U_.fill(U);
}

int ExtendedState::check(int i) const {
  if (i < 0 || i >= dim_) throw std::out_of_range("axis index " + std::to_string(i) + " outside dimension");
  return i;
}

void ExtendedState::set_U(int i, double value) {
  if (!(value > 0.0)) throw DomainError("uncertainty parameter U must be positive");
  U_.at(static_cast<std::size_t>(check(i))) = value;
}

Vec3 ExtendedState::position() const {
  Vec3 r = kZero3;
  for (int i = 0; i < dim_; ++i) r[i] = axes_[i].x;
  return r;
}

Vec3 ExtendedState::momentum() const {
  Vec3 r = kZero3;
  for (int i = 0; i < dim_; ++i) r[i] = axes_[i].p;
  return r;
}

Vec3 ExtendedState::widths() const {
  Vec3 r = kZero3;
  for (int i = 0; i < dim_; ++i) r[i] = axes_[i].s;
  return r;
}

std::vector<double> ExtendedState::pack() const {
  std::vector<double> y(static_cast<std::size_t>(4 * dim_));
  for (int i = 0; i < dim_; ++i) {
    y[i] = axes_[i].x;
    y[dim_ + i] = axes_[i].p;
    y[2 * dim_ + i] = axes_[i].s;
    y[3 * dim_ + i] = axes_[i].ps;
  }
  return y;
}

void ExtendedState::unpack(std::span<const double> y) {
  if (y.size() != static_cast<std::size_t>(4 * dim_)) throw ConfigurationError("packed state has wrong length");
  for (int i = 0; i < dim_; ++i) {
    axes_[i].x = y[i];
    axes_[i].p = y[dim_ + i];
    axes_[i].s = y[2 * dim_ + i];
    axes_[i].ps = y[3 * dim_ + i];
  }
}

MomentSet moments_from_canonical(double s, double ps, double U) {
  if (!(s > 0.0)) throw DomainError("fluctuation coordinate s must be positive");
  if (U < 0.0) throw DomainError("uncertainty parameter U must be non-negative");
  return {s * s, s * ps, ps * ps + U / (s * s)};
}

CanonicalFluctuation canonical_from_moments(const MomentSet& m) {
  if (!(m.dxx > 0.0)) throw DomainError("position variance must be positive");
  const double U = m.dxx * m.dpp - m.dxp * m.dxp;
  if (U < 0.0) throw DomainError("moments violate the uncertainty identity (U < 0)");
  const double s = std::sqrt(m.dxx);
  return {s, m.dxp / s, U};
}

}  // namespace tunnel
