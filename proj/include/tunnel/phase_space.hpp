#pragma once

// Extended phase space of canonical effective dynamics.
//
// Each Cartesian axis carries the expectation values (x, p) together with a
// canonical fluctuation pair (s, p_s). The second-order moments follow from
//   Δ(x²) = s²,  Δ(xp) = s p_s,  Δ(p²) = p_s² + U/s²,
// where U = Δ(x²)Δ(p²) − Δ(xp)² is a Casimir of the moment algebra and is
// therefore carried as a per-axis parameter, not as a dynamical variable.
// All quantities are in atomic units with unit mass.

#include <array>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tunnel/vec3.hpp"

namespace tunnel {

/// Minimum-uncertainty value ħ²/4 in atomic units.
inline constexpr double kDefaultU = 0.25;

struct AxisState {
  double x = 0.0;
  double p = 0.0;
  double s = 1.0;
  double ps = 0.0;
};

struct MomentSet {
  double dxx = 0.0;
  double dxp = 0.0;
  double dpp = 0.0;
};

struct CanonicalFluctuation {
  double s = 0.0;
  double ps = 0.0;
  double U = 0.0;
};

/// Thrown when an operation is evaluated outside its mathematical domain.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Thrown when a model, pulse, frame and state do not fit together.
class ConfigurationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ExtendedState {
 public:
  explicit ExtendedState(int dim, double U = kDefaultU);

  int dim() const { return dim_; }

  AxisState& axis(int i) { return axes_.at(static_cast<std::size_t>(check(i))); }
  const AxisState& axis(int i) const { return axes_.at(static_cast<std::size_t>(check(i))); }

  double U(int i) const { return U_.at(static_cast<std::size_t>(check(i))); }
  void set_U(int i, double value);

  Vec3 position() const;
  Vec3 momentum() const;
  Vec3 widths() const;

  /// Packed layout [x_0.., p_0.., s_0.., ps_0..], length 4·dim.
  std::vector<double> pack() const;
  void unpack(std::span<const double> y);

  double t = 0.0;

 private:
  int check(int i) const;

  int dim_;
  std::array<AxisState, 3> axes_{};
  std::array<double, 3> U_{};
};

MomentSet moments_from_canonical(double s, double ps, double U);
CanonicalFluctuation canonical_from_moments(const MomentSet& m);

}  // namespace tunnel
