#pragma once

// Hamiltonian flow on the extended phase space.
//
//   H_Q = Σ (pᵢ² + p_sᵢ²)/2 + V_eff(x, s; t)
//
// In the frame co-rotating with a circular two-cycle pulse the Hamiltonian
// gains Ω (P₁R₂ − P₂R₁) with Ω = 5ω/4; the widths stay attached to the
// rotating axes and the field points along the first rotating axis.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tunnel/effective_potential.hpp"
#include "tunnel/ode.hpp"
#include "tunnel/phase_space.hpp"
#include "tunnel/potentials.hpp"

namespace tunnel {

struct IntegratorConfig {
  double rel_tol = 1e-9;
  double abs_tol = 1e-11;
  double max_step = 0.5;
  double t_start = 0.0;
  double t_end = 150.0;
  double stop_radius = 0.0;  ///< stop once |⟨r⟩| reaches this value; 0 disables
  double output_dt = 0.0;    ///< resampling interval for exported series; 0 keeps the step grid

  void validate() const;
};

/// Everything that defines the Hamiltonian apart from the state.
struct System {
  PotentialModel model;
  FieldPulse pulse;
  FrameSpec frame = LabFrame{};
  EffPotentialKind kind = EffPotentialKind::AllOrders;

  void validate() const;
  int dim() const { return dimension(model); }
  /// Field vector entering the model in the frame of the state variables.
  Vec3 field(double t) const;
  /// Angular velocity of the frame (0 in the lab).
  double rotation_rate() const;
};

double quantum_hamiltonian(const ExtendedState& state, const System& sys);

/// H_Q with the field switched off and without the frame coupling: the
/// energy a field-free observer assigns to the state.
double interaction_free_energy(const ExtendedState& state, const System& sys);

/// Time derivative in the packed layout of ExtendedState::pack().
void eom(const System& sys, double t, std::span<const double> y, std::span<const double> U, std::span<double> dydt);
ExtendedState eom(const ExtendedState& state, const System& sys);

enum class TrajectoryStatus { Complete, ReachedRadius, Failed };

class Trajectory {
 public:
  Trajectory(System sys, const ExtendedState& initial, OdeResult result);

  const System& system() const { return sys_; }
  int dim() const { return dim_; }
  const Vec3& U() const { return U_; }
  TrajectoryStatus status() const { return status_; }
  const std::string& message() const { return message_; }
  bool failed() const { return status_ == TrajectoryStatus::Failed; }

  double t_begin() const { return ode_.solution.t_begin(); }
  double t_end() const { return ode_.solution.t_end(); }

  ExtendedState at(double t) const;
  ExtendedState final_state() const { return at(t_end()); }
  Vec3 position(double t) const { return at(t).position(); }

  /// Accepted-step grid (or the resampled grid when output_dt > 0).
  const std::vector<double>& times() const { return times_; }
  std::vector<ExtendedState> samples() const;

  double hamiltonian(double t) const { return quantum_hamiltonian(at(t), sys_); }
  double energy_free(double t) const { return interaction_free_energy(at(t), sys_); }
  Vec3 field(double t) const { return sys_.field(t); }

  /// Time at which |⟨r⟩| first reaches radius, if it does.
  std::optional<double> radius_crossing(double radius) const;

  const DenseSolution& dense() const { return ode_.solution; }

 private:
  System sys_;
  int dim_;
  Vec3 U_;
  OdeResult ode_;
  TrajectoryStatus status_ = TrajectoryStatus::Complete;
  std::string message_;
  std::vector<double> times_;

  friend Trajectory integrate(const ExtendedState&, const System&, const IntegratorConfig&);
};

Trajectory integrate(const ExtendedState& state0, const System& sys, const IntegratorConfig& cfg);

struct GroundState {
  ExtendedState state;
  double energy = 0.0;
  int iterations = 0;
};

/// Minimum of the field-free H_Q with all momenta zero. Every supported model
/// is parity-even at zero field, so x = 0 and the search runs over the widths.
GroundState ground_state_init(const PotentialModel& model, double U = kDefaultU,
                              EffPotentialKind kind = EffPotentialKind::AllOrders);

/// Depth D of GaussianWell1D whose ground state has energy target_E.
double calibrate_well_depth(double target_E, double U = kDefaultU);

/// Classical path ẋ = p, ṗ = −∇V(x, t) in the lab frame, without fluctuations.
struct ClassicalPath {
  int dim = 1;
  OdeResult ode;

  bool ok() const { return ode.ok(); }
  Vec3 position(double t) const;
  Vec3 momentum(double t) const;
  const std::vector<double>& times() const { return ode.solution.grid_times(); }
};

ClassicalPath classical_propagate(const Vec3& x0, const Vec3& p0, double t0, double t1, const PotentialModel& model,
                                  const FieldPulse& pulse, const IntegratorConfig& cfg = {});

/// Runs the classical path backward from (x_f, p_f) at t_f to t0 < t_f.
ClassicalPath classical_backpropagate(const Vec3& x_f, const Vec3& p_f, double t_f, double t0,
                                      const PotentialModel& model, const FieldPulse& pulse,
                                      const IntegratorConfig& cfg = {});

}  // namespace tunnel
