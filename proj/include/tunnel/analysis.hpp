#pragma once

// Tunneling-time criteria and attoclock observables computed from
// trajectories. Every criterion reports τ_ion = τ_exit − τ_max, with τ_max the
// instant of peak field (0 for static fields).

#include <optional>
#include <string>
#include <vector>

#include "tunnel/dynamics.hpp"

namespace tunnel {

enum class CriterionId { Energy, MomentumBackprop, StaticTraversal, WkbIntegral, FluctFit, FluctInflection };

const char* criterion_name(CriterionId id);
CriterionId criterion_from_name(const std::string& name);

struct CriterionResult {
  CriterionId id = CriterionId::Energy;
  bool found = false;
  double tau_exit = 0.0;
  double tau_max = 0.0;
  double tau_ionization = 0.0;
  std::optional<Vec3> exit_position;
  std::optional<Vec3> exit_momentum;
  std::string diagnostic;

  void set_exit(double t) {
    found = true;
    tau_exit = t;
    tau_ionization = t - tau_max;
  }
};

/// Runs the model from its field-free ground state under the given pulse.
Trajectory evolve_ground_state(const System& sys, const IntegratorConfig& cfg, double U = kDefaultU);

/// First upward zero crossing of the interaction-free energy after t = 0.
CriterionResult exit_time_energy(const Trajectory& traj);

struct BackpropResult {
  CriterionResult result;
  std::optional<ClassicalPath> path;
};

/// Back-propagates (⟨x⟩, ⟨p⟩)(t_f) classically to the start of the trajectory
/// and returns the zero of longitudinal momentum closest to the atom.
/// Longitudinal means along the instantaneous field; instants without field
/// carry no direction and are skipped in 3-D.
BackpropResult exit_time_momentum_backprop(const Trajectory& traj, double t_f = 150.0);

struct TunnelGeometry {
  int axis = 2;
  double direction = 1.0;  ///< +1 or −1: side of the axis the field pulls towards
  double x_in = 0.0;       ///< start of the classically allowed stretch of the ray
  double x_star = 0.0;     ///< end of the outer equipotential wall
  bool found = false;
  std::string diagnostic;
};

struct TunnelOptions {
  double wall_length = 60.0;  ///< look-ahead along the axis when testing for the outer wall
  double scan_step = 0.05;
  double scan_max = 120.0;
};

/// Tunnel exit along the ray s_axis = |x_axis| with the transverse widths of
/// the initial state; the exit x* is where the outer wall of {V_eff > E0}
/// in the (x_axis, s_axis) plane ends.
TunnelGeometry tunnel_geometry(const PotentialModel& model, const Vec3& F_static, double E0,
                               const ExtendedState& ground, const TunnelOptions& opts = {});

/// Time for x_axis to travel from its initial value to x*; records p_axis at exit.
CriterionResult static_traversal(const Trajectory& traj, double E0, const TunnelOptions& opts = {});

struct WkbOptions {
  bool kinetic_factor_two = false;
  double tolerance = 1e-8;
};

/// ∫ dx / √(E0 − V_eff) along the ray from x_in to x*.
double wkb_like_time(const PotentialModel& model, const Vec3& F_static, double E0, const ExtendedState& ground,
                     const WkbOptions& opts = {}, const TunnelOptions& geometry = {});

struct FluctuationSeries {
  std::vector<double> t;
  std::vector<double> s_T;
  std::vector<double> d2;  ///< smoothed d²s_T/dt²; NaN where the window does not fit
};

/// Series of the in-plane fluctuation transverse to ⟨r⟩ on a uniform grid.
FluctuationSeries transverse_fluctuation(const Trajectory& traj, double dt = 0.01);

/// In-plane width transverse to the direction with polar angle phi.
double transverse_width(double phi, double s_x, double s_y);

struct OffsetAngle {
  std::vector<double> t;
  std::vector<double> angle;  ///< unwrapped polar angle of ⟨r⟩ (rad); NaN where |⟨r⟩| < 1e-6
  double final_angle = 0.0;
  double final_time = 0.0;
  bool at_detector = false;   ///< final angle taken at the detection radius
};

OffsetAngle offset_angle(const Trajectory& traj, double detection_radius = 1000.0, double dt = 0.05);

struct SpotSize {
  bool found = false;
  double time = 0.0;
  double spot = 0.0;
  double width_a = 0.0;  ///< in-plane transverse width
  double width_b = 0.0;  ///< width along the second transverse direction
};

/// Geometric mean of the two widths transverse to ⟨r⟩ at the first instant
/// |⟨r⟩| reaches the detection radius.
SpotSize spot_size(const Trajectory& traj, double detection_radius = 1000.0);

/// Width of an uncorrelated Gaussian along unit vector n.
double width_along(const Vec3& n, const Vec3& s);

/// Savitzky–Golay derivative of order `deriv` on a uniform grid using a
/// cubic fit over `window` points (odd). Edges are NaN.
std::vector<double> savitzky_golay(const std::vector<double>& y, double dt, int window, int deriv);

struct FitOptions {
  double plateau_slope = 1e-4;
  double suffix_tolerance = 0.01;
  double reference_fraction = 0.05;  ///< share of the series defining the final slope
  int min_points = 5;
};

struct FitLines {
  double a1 = 0.0, b1 = 0.0;  ///< plateau s = a1 + b1 t
  double a2 = 0.0, b2 = 0.0;  ///< final segment
  std::size_t plateau_end = 0, suffix_begin = 0;
};

CriterionResult exit_time_fluct_fit(const FluctuationSeries& series, double tau_max, const FitOptions& opts = {},
                                    FitLines* lines = nullptr);

struct InflectionOptions {
  double window = 0.0;        ///< smoothing window (a.u.); 0 selects 5% of the pulse epoch
  double noise_floor = 0.1;   ///< maxima below this share of max|d²s_T| are ignored
};

struct InflectionDetail {
  double last_maximum = 0.0;
  double window_used = 0.0;
};

/// Exit at the inflection point of d²s_T/dt² that follows its last
/// significant local maximum inside the pulse epoch [epoch_begin, epoch_end].
CriterionResult exit_time_fluct_inflection(const FluctuationSeries& series, double tau_max, double epoch_begin,
                                           double epoch_end, const InflectionOptions& opts = {},
                                           InflectionDetail* detail = nullptr);

enum class AmplitudeRule { FixedAmplitude, FixedFluence };

struct FrequencyScanRow {
  double omega = 0.0;
  double amplitude = 0.0;
  CriterionResult result;
};

struct FrequencyScan {
  std::vector<FrequencyScanRow> rows;
  std::optional<double> critical_omega;  ///< first ω without an exit (fixed amplitude)
};

/// Energy criterion per ω for the pulse family of `pulse`; under FixedFluence
/// the amplitude follows F0 = F0_ref √(ω/ω_ref) with the reference taken from `pulse`.
FrequencyScan frequency_scan(const PotentialModel& model, const FieldPulse& pulse, AmplitudeRule rule,
                             const std::vector<double>& omegas, const IntegratorConfig& cfg, unsigned threads = 1);

}  // namespace tunnel
