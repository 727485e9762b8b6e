#pragma once

// Classical potentials, external field pulses and reference frames.
//
// Field coupling signs follow each model's own Hamiltonian:
//   Coulomb3D       V = -1/|x| - x·F - α_I F·x/|x|³
//   GaussianWell1D  V = -D exp(-x²) + x F(t)
//   Hydrogen3D      V = -1/|r| + r·E(t)
// One-dimensional models read the first component of position and field.

#include <stdexcept>
#include <utility>
#include <variant>

#include "tunnel/phase_space.hpp"
#include "tunnel/vec3.hpp"

namespace tunnel {

inline constexpr double kDefaultSoftening = 1e-6;

/// Ionization potential of the field-free ground state at U = 1/4.
inline constexpr double kGroundEnergy = -2.0 / 9.0;

/// Standard conversion from peak field (a.u.) to cycle-averaged intensity (W/cm²).
inline constexpr double kAtomicIntensityWcm2 = 3.50945e16;

struct Coulomb3D {
  double alpha_I = 0.0;
  double softening = kDefaultSoftening;
};

struct GaussianWell1D {
  double depth = 0.5;
};

struct Hydrogen3D {
  double softening = kDefaultSoftening;
};

/// Isotropic V = k|x|²/2; reference model with exactly quadratic potential.
struct Harmonic {
  int dim = 1;
  double k = 1.0;
};

/// V = 0 apart from the field coupling +x·F.
struct FreeParticle {
  int dim = 1;
};

using PotentialModel = std::variant<Coulomb3D, GaussianWell1D, Hydrogen3D, Harmonic, FreeParticle>;

class SingularityError : public DomainError {
 public:
  using DomainError::DomainError;
};

int dimension(const PotentialModel& model);
void validate(const PotentialModel& model);
const char* model_name(const PotentialModel& model);

double classical_potential(const PotentialModel& model, const Vec3& r, const Vec3& field);
Vec3 classical_gradient(const PotentialModel& model, const Vec3& r, const Vec3& field);

// ---------------------------------------------------------------------------
// Field pulses

struct StaticField {
  Vec3 F = kZero3;
};

/// F(t) = -F0 sin³(ωt) on (0, π/ω), along the single axis.
struct HalfCycleSin3 {
  double F0 = 0.0;
  double omega = 0.05811;
};

/// F(t) = -F0 sin²(ωt/2N) sin(ωt) on (0, 2Nπ/ω); N = 1/2 is HalfCycleSin3.
struct SinEnvelope {
  double F0 = 0.0;
  double omega = 0.05811;
  double cycles = 0.5;
};

/// E = -dA/dt for A = A0/√(1+ε²) cos⁴(ωt/2N) (cos ωt, ε sin ωt), |ωt/2N| ≤ π/2.
struct CosEnvelope {
  double A0 = 0.0;
  double omega = 0.05811;
  double cycles = 2.0;
  double ellipticity = 1.0;
};

/// E(t) = -E0 sin²(ωt) (sin ωt, cos ωt, 0) on [0, π/ω].
struct RotatingHalfCycle {
  double E0 = 0.0;
  double omega = 0.05811;
};

using FieldPulse = std::variant<StaticField, HalfCycleSin3, SinEnvelope, CosEnvelope, RotatingHalfCycle>;

void validate(const FieldPulse& pulse);
const char* pulse_name(const FieldPulse& pulse);

Vec3 field_vector(const FieldPulse& pulse, double t);

/// Interval outside of which the field vanishes identically. Static fields
/// report (-inf, +inf).
std::pair<double, double> pulse_support(const FieldPulse& pulse);

/// Instant of maximum |E|; the earliest one when several maxima tie.
double peak_field_time(const FieldPulse& pulse);

double peak_amplitude(const FieldPulse& pulse);
double pulse_frequency(const FieldPulse& pulse);

/// Returns a copy with the amplitude parameter (F0, E0, A0 or |F|) replaced.
FieldPulse with_amplitude(const FieldPulse& pulse, double amplitude);
FieldPulse with_frequency(const FieldPulse& pulse, double omega);

/// ∫ |E(t)|² dt over the pulse support.
double pulse_fluence(const FieldPulse& pulse);

// ---------------------------------------------------------------------------
// Frames

struct LabFrame {};

struct CoRotatingFrame {
  double rate = 0.0;
};

using FrameSpec = std::variant<LabFrame, CoRotatingFrame>;

class UnsupportedConfiguration : public ConfigurationError {
 public:
  using ConfigurationError::ConfigurationError;
};

/// Field amplitude along the fixed first axis of the frame co-rotating with a
/// circular two-cycle CosEnvelope pulse: (A0ω/√2) cos³(ωt/4) inside the support.
double corotating_field(const CosEnvelope& pulse, double t);

/// Angular velocity 5ω/4 of the co-rotating frame.
double corotation_rate(const CosEnvelope& pulse);

/// Rotation taking co-rotating coordinates to lab coordinates in the
/// polarization plane: r = S(t) R.
std::array<std::array<double, 2>, 2> corotation_matrix(const CosEnvelope& pulse, double t);

// ---------------------------------------------------------------------------
// Derived pulse quantities

struct KeldyshTimes {
  double tau_K = 0.0;
  double gamma_K = 0.0;
};

KeldyshTimes keldysh(double omega, double Ip, double F);
double intensity_conversion(double F);

/// Amplitude of a HalfCycleSin3 pulse at frequency omega carrying the same
/// ∫F² dt as the reference pulse (F0_ref, omega_ref).
double fluence_matched_amplitude(double omega, double F0_ref, double omega_ref);

}  // namespace tunnel
