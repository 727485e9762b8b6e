#pragma once

// Effective potentials on the extended phase space.
//
// Second order:  V(x) + U/(2s²) + ½V''(x)s²
// All orders:    U/(2s²) + ½(V(x+s) + V(x−s))
// In 3-D the all-orders form is the average of V over the eight corners
// (x₁±s₁, x₂±s₂, x₃±s₃) plus Σ U/(2sᵢ²); axes are uncorrelated.

#include <functional>
#include <vector>

#include "tunnel/potentials.hpp"

namespace tunnel {

enum class EffPotentialKind { SecondOrder, AllOrders };

/// A one-dimensional classical potential with its first three derivatives.
/// Derivatives are only consulted where the chosen kind needs them.
struct Potential1D {
  std::function<double(double)> V;
  std::function<double(double)> d1;
  std::function<double(double)> d2;
  std::function<double(double)> d3;
};

struct Gradient1D {
  double dx = 0.0;
  double ds = 0.0;
};

double v_eff_1d(EffPotentialKind kind, const Potential1D& V, double x, double s, double U);
Gradient1D grad_v_eff_1d(EffPotentialKind kind, const Potential1D& V, double x, double s, double U);

/// 1-D view of a single-axis model at a frozen field value.
Potential1D as_potential_1d(const PotentialModel& model, double field);

/// Eight-corner all-orders form for a 3-D potential callable.
double v_eff_3d(const std::function<double(const Vec3&)>& V, const Vec3& x, const Vec3& s, const Vec3& U);

struct EffGradient {
  Vec3 dx = kZero3;
  Vec3 ds = kZero3;
};

/// Model-level effective potential; only the first dimension(model) entries
/// of x, s and U are read. SecondOrder is available for one-dimensional
/// models and the harmonic reference model.
double v_eff(EffPotentialKind kind, const PotentialModel& model, const Vec3& field, const Vec3& x, const Vec3& s,
             const Vec3& U);
EffGradient grad_v_eff(EffPotentialKind kind, const PotentialModel& model, const Vec3& field, const Vec3& x,
                       const Vec3& s, const Vec3& U);

// ---------------------------------------------------------------------------
// Equipotential lines in the (x, s) plane of the tunneling axis.

struct ContourSpec {
  double x_min = -5.0, x_max = 25.0;
  double s_min = 0.1, s_max = 25.0;
  int nx = 301, ns = 251;
  int axis = 2;       ///< tunneling axis for 3-D models; ignored in 1-D
  Vec3 frozen_s{1.0, 1.0, 1.0};  ///< widths of the transverse axes
  Vec3 U{kDefaultU, kDefaultU, kDefaultU};
  EffPotentialKind kind = EffPotentialKind::AllOrders;
};

struct ContourPoint {
  double x = 0.0;
  double s = 0.0;
};

struct ContourGrid {
  ContourSpec spec;
  double level = 0.0;
  std::vector<std::vector<ContourPoint>> polylines;
};

/// V_eff evaluated at a point of the contour plane.
double contour_plane_value(const PotentialModel& model, const Vec3& field, const ContourSpec& spec, double x, double s);

ContourGrid equipotential_contour(const PotentialModel& model, const Vec3& field, double level,
                                  const ContourSpec& spec);

/// True when the sublevel set {V_eff ≤ level} of the contour plane connects
/// the neighbourhood of (x0, s0) to the x_max edge of the grid.
bool channel_open(const PotentialModel& model, const Vec3& field, double level, const ContourSpec& spec, double x0,
                  double s0);

}  // namespace tunnel
