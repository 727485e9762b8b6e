#include "tunnel/potentials.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace tunnel {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kPi = std::numbers::pi;

double softened_radius(const Vec3& r, double eps) {
  const double rho2 = dot(r, r) + eps * eps;
  if (rho2 == 0.0) throw SingularityError("Coulomb potential evaluated at r = 0 without softening");
  return std::sqrt(rho2);
}

double quadratic_part(const Vec3& r, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) acc += r[i] * r[i];
  return acc;
}

double coupling(const Vec3& r, const Vec3& field, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) acc += r[i] * field[i];
  return acc;
}

}  // namespace

int dimension(const PotentialModel& model) {
  return std::visit(overloaded{[](const Coulomb3D&) { return 3; }, [](const GaussianWell1D&) { return 1; },
                               [](const Hydrogen3D&) { return 3; }, [](const Harmonic& h) { return h.dim; },
                               [](const FreeParticle& f) { return f.dim; }},
                    model);
}

const char* model_name(const PotentialModel& model) {
  return std::visit(overloaded{[](const Coulomb3D&) { return "coulomb3d"; },
                               [](const GaussianWell1D&) { return "gaussian_well"; },
                               [](const Hydrogen3D&) { return "hydrogen3d"; },
                               [](const Harmonic&) { return "harmonic"; },
                               [](const FreeParticle&) { return "free"; }},
                    model);
}

void validate(const PotentialModel& model) {
  std::visit(overloaded{[](const Coulomb3D& c) {
                          if (!(c.softening >= 0.0)) throw ConfigurationError("softening must be >= 0");
                          if (!std::isfinite(c.alpha_I)) throw ConfigurationError("alpha_I must be finite");
                        },
                        [](const GaussianWell1D& g) {
                          if (!(g.depth > 0.0)) throw ConfigurationError("well depth must be > 0");
                        },
                        [](const Hydrogen3D& h) {
                          if (!(h.softening >= 0.0)) throw ConfigurationError("softening must be >= 0");
                        },
                        [](const Harmonic& h) {
                          if (h.dim != 1 && h.dim != 3) throw ConfigurationError("harmonic dimension must be 1 or 3");
                          if (!(h.k > 0.0)) throw ConfigurationError("harmonic stiffness must be > 0");
                        },
                        [](const FreeParticle& f) {
                          if (f.dim != 1 && f.dim != 3) throw ConfigurationError("free particle dimension must be 1 or 3");
                        }},
             model);
}

double classical_potential(const PotentialModel& model, const Vec3& r, const Vec3& field) {
  return std::visit(
      overloaded{[&](const Coulomb3D& c) {
                   const double rho = softened_radius(r, c.softening);
                   const double fx = dot(field, r);
                   return -1.0 / rho - fx - c.alpha_I * fx / (rho * rho * rho);
                 },
                 [&](const GaussianWell1D& g) { return -g.depth * std::exp(-r[0] * r[0]) + r[0] * field[0]; },
                 [&](const Hydrogen3D& h) { return -1.0 / softened_radius(r, h.softening) + dot(r, field); },
                 [&](const Harmonic& h) { return 0.5 * h.k * quadratic_part(r, h.dim) + coupling(r, field, h.dim); },
                 [&](const FreeParticle& f) { return coupling(r, field, f.dim); }},
      model);
}

Vec3 classical_gradient(const PotentialModel& model, const Vec3& r, const Vec3& field) {
  return std::visit(
      overloaded{[&](const Coulomb3D& c) {
                   const double rho = softened_radius(r, c.softening);
                   const double inv3 = 1.0 / (rho * rho * rho);
                   const double inv5 = inv3 / (rho * rho);
                   const double fx = dot(field, r);
                   Vec3 g;
                   for (int i = 0; i < 3; ++i) {
                     g[i] = r[i] * inv3 - field[i] - c.alpha_I * (field[i] * inv3 - 3.0 * fx * r[i] * inv5);
                   }
                   return g;
                 },
                 [&](const GaussianWell1D& g) {
                   return Vec3{2.0 * g.depth * r[0] * std::exp(-r[0] * r[0]) + field[0], 0.0, 0.0};
                 },
                 [&](const Hydrogen3D& h) {
                   const double rho = softened_radius(r, h.softening);
                   const double inv3 = 1.0 / (rho * rho * rho);
                   return Vec3{r[0] * inv3 + field[0], r[1] * inv3 + field[1], r[2] * inv3 + field[2]};
                 },
                 [&](const Harmonic& h) {
                   Vec3 g = kZero3;
                   for (int i = 0; i < h.dim; ++i) g[i] = h.k * r[i] + field[i];
                   return g;
                 },
                 [&](const FreeParticle& f) {
                   Vec3 g = kZero3;
                   for (int i = 0; i < f.dim; ++i) g[i] = field[i];
                   return g;
                 }},
      model);
}

// ---------------------------------------------------------------------------

void validate(const FieldPulse& pulse) {
  auto check_omega = [](double omega) {
    if (!(omega > 0.0) || !std::isfinite(omega)) throw ConfigurationError("pulse frequency omega must be > 0");
  };
  auto check_amp = [](double a, const char* name) {
    if (!(a >= 0.0) || !std::isfinite(a)) throw ConfigurationError(std::string(name) + " must be >= 0");
  };
  std::visit(overloaded{[&](const StaticField& s) {
                          for (double c : s.F)
                            if (!std::isfinite(c)) throw ConfigurationError("static field must be finite");
                        },
                        [&](const HalfCycleSin3& h) {
                          check_amp(h.F0, "F0");
                          check_omega(h.omega);
                        },
                        [&](const SinEnvelope& s) {
                          check_amp(s.F0, "F0");
                          check_omega(s.omega);
                          if (!(s.cycles >= 0.5)) throw ConfigurationError("pulse cycles N must be >= 1/2");
                        },
                        [&](const CosEnvelope& c) {
                          check_amp(c.A0, "A0");
                          check_omega(c.omega);
                          if (!(c.cycles >= 0.5)) throw ConfigurationError("pulse cycles N must be >= 1/2");
                          if (!std::isfinite(c.ellipticity)) throw ConfigurationError("ellipticity must be finite");
                        },
                        [&](const RotatingHalfCycle& r) {
                          check_amp(r.E0, "E0");
                          check_omega(r.omega);
                        }},
             pulse);
}

const char* pulse_name(const FieldPulse& pulse) {
  return std::visit(overloaded{[](const StaticField&) { return "static"; },
                               [](const HalfCycleSin3&) { return "half_cycle"; },
                               [](const SinEnvelope&) { return "sin_envelope"; },
                               [](const CosEnvelope&) { return "cos_envelope"; },
                               [](const RotatingHalfCycle&) { return "rotating_half_cycle"; }},
                    pulse);
}

Vec3 field_vector(const FieldPulse& pulse, double t) {
  return std::visit(
      overloaded{[&](const StaticField& s) { return s.F; },
                 [&](const HalfCycleSin3& h) {
                   if (!(t > 0.0 && t < kPi / h.omega)) return kZero3;
                   const double sn = std::sin(h.omega * t);
                   return Vec3{-h.F0 * sn * sn * sn, 0.0, 0.0};
                 },
                 [&](const SinEnvelope& s) {
                   if (!(t > 0.0 && t < 2.0 * s.cycles * kPi / s.omega)) return kZero3;
                   const double env = std::sin(s.omega * t / (2.0 * s.cycles));
                   return Vec3{-s.F0 * env * env * std::sin(s.omega * t), 0.0, 0.0};
                 },
                 [&](const CosEnvelope& c) {
                   const double u = c.omega * t / (2.0 * c.cycles);
                   if (std::abs(u) >= kPi / 2.0) return kZero3;
                   const double cu = std::cos(u), su = std::sin(u);
                   const double c3 = cu * cu * cu, c4 = c3 * cu;
                   const double wt = c.omega * t;
                   const double pref = c.A0 * c.omega / std::sqrt(1.0 + c.ellipticity * c.ellipticity);
                   const double k = 2.0 / c.cycles;
                   return Vec3{pref * (c4 * std::sin(wt) + k * c3 * su * std::cos(wt)),
                               pref * c.ellipticity * (-c4 * std::cos(wt) + k * c3 * su * std::sin(wt)), 0.0};
                 },
                 [&](const RotatingHalfCycle& r) {
                   if (!(t >= 0.0 && t <= kPi / r.omega)) return kZero3;
                   const double wt = r.omega * t;
                   const double env = -r.E0 * std::sin(wt) * std::sin(wt);
                   return Vec3{env * std::sin(wt), env * std::cos(wt), 0.0};
                 }},
      pulse);
}

std::pair<double, double> pulse_support(const FieldPulse& pulse) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  return std::visit(overloaded{[](const StaticField&) { return std::pair{-inf, inf}; },
                               [](const HalfCycleSin3& h) { return std::pair{0.0, kPi / h.omega}; },
                               [](const SinEnvelope& s) { return std::pair{0.0, 2.0 * s.cycles * kPi / s.omega}; },
                               [](const CosEnvelope& c) {
                                 const double half = c.cycles * kPi / c.omega;
                                 return std::pair{-half, half};
                               },
                               [](const RotatingHalfCycle& r) { return std::pair{0.0, kPi / r.omega}; }},
                    pulse);
}

namespace {

// Earliest global maximum of |E(t)| on [a, b]: dense scan, then golden-section
// refinement inside the bracketing samples.
double numeric_peak_time(const FieldPulse& pulse, double a, double b) {
  constexpr int kSamples = 20000;
  auto mag = [&](double t) { return norm(field_vector(pulse, t)); };
  const double h = (b - a) / kSamples;
  std::vector<double> vals(kSamples + 1);
  double best = 0.0;
  for (int i = 0; i <= kSamples; ++i) {
    vals[i] = mag(a + i * h);
    best = std::max(best, vals[i]);
  }
  int idx = 0;
  for (int i = 0; i <= kSamples; ++i) {
    if (vals[i] >= best * (1.0 - 1e-6)) {
      idx = i;
      break;
    }
  }
  double lo = a + std::max(0, idx - 1) * h;
  double hi = a + std::min(kSamples, idx + 1) * h;
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
  while (hi - lo > 1e-12 * std::max(1.0, std::abs(hi))) {
    if (mag(c) > mag(d)) {
      hi = d;
    } else {
      lo = c;
    }
    c = hi - gr * (hi - lo);
    d = lo + gr * (hi - lo);
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double peak_field_time(const FieldPulse& pulse) {
  return std::visit(overloaded{[](const StaticField&) { return 0.0; },
                               [](const HalfCycleSin3& h) { return kPi / (2.0 * h.omega); },
                               [&](const SinEnvelope& s) {
                                 if (s.cycles == 0.5) return kPi / (2.0 * s.omega);
                                 const auto [a, b] = pulse_support(pulse);
                                 return numeric_peak_time(pulse, a, b);
                               },
                               [&](const CosEnvelope&) {
                                 const auto [a, b] = pulse_support(pulse);
                                 return numeric_peak_time(pulse, a, b);
                               },
                               [](const RotatingHalfCycle& r) { return kPi / (2.0 * r.omega); }},
                    pulse);
}

double peak_amplitude(const FieldPulse& pulse) {
  return std::visit(overloaded{[](const StaticField& s) { return norm(s.F); },
                               [](const HalfCycleSin3& h) { return h.F0; }, [](const SinEnvelope& s) { return s.F0; },
                               [](const CosEnvelope& c) { return c.A0; },
                               [](const RotatingHalfCycle& r) { return r.E0; }},
                    pulse);
}

double pulse_frequency(const FieldPulse& pulse) {
  return std::visit(overloaded{[](const StaticField&) { return 0.0; },
                               [](const HalfCycleSin3& h) { return h.omega; },
                               [](const SinEnvelope& s) { return s.omega; },
                               [](const CosEnvelope& c) { return c.omega; },
                               [](const RotatingHalfCycle& r) { return r.omega; }},
                    pulse);
}

FieldPulse with_amplitude(const FieldPulse& pulse, double amplitude) {
  return std::visit(overloaded{[&](StaticField s) -> FieldPulse {
                                 const double n = norm(s.F);
                                 s.F = n > 0.0 ? (amplitude / n) * s.F : Vec3{0.0, 0.0, amplitude};
                                 return s;
                               },
                               [&](HalfCycleSin3 h) -> FieldPulse {
                                 h.F0 = amplitude;
                                 return h;
                               },
                               [&](SinEnvelope s) -> FieldPulse {
                                 s.F0 = amplitude;
                                 return s;
                               },
                               [&](CosEnvelope c) -> FieldPulse {
                                 c.A0 = amplitude;
                                 return c;
                               },
                               [&](RotatingHalfCycle r) -> FieldPulse {
                                 r.E0 = amplitude;
                                 return r;
                               }},
                    pulse);
}

FieldPulse with_frequency(const FieldPulse& pulse, double omega) {
  return std::visit(overloaded{[&](StaticField) -> FieldPulse {
                                 throw ConfigurationError("static field has no frequency");
                               },
                               [&](HalfCycleSin3 h) -> FieldPulse {
                                 h.omega = omega;
                                 return h;
                               },
                               [&](SinEnvelope s) -> FieldPulse {
                                 s.omega = omega;
                                 return s;
                               },
                               [&](CosEnvelope c) -> FieldPulse {
                                 c.omega = omega;
                                 return c;
                               },
                               [&](RotatingHalfCycle r) -> FieldPulse {
                                 r.omega = omega;
                                 return r;
                               }},
                    pulse);
}

double pulse_fluence(const FieldPulse& pulse) {
  const auto [a, b] = pulse_support(pulse);
  if (!std::isfinite(a) || !std::isfinite(b)) throw ConfigurationError("fluence of a static field is unbounded");
  auto f = [&](double t) {
    const Vec3 e = field_vector(pulse, t);
    return dot(e, e);
  };
  // Split into half-cycle panels so every panel sees a smooth integrand.
  const double omega = pulse_frequency(pulse);
  const int panels = std::max(1, static_cast<int>(std::ceil((b - a) * omega / kPi)) * 4);
  const double h = (b - a) / panels;
  double acc = 0.0;
  for (int i = 0; i < panels; ++i) {
    acc += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a + i * h, a + (i + 1) * h, 10, 1e-14);
  }
  return acc;
}

// ---------------------------------------------------------------------------

namespace {

void require_circular_two_cycle(const CosEnvelope& pulse) {
  if (pulse.ellipticity != 1.0 || pulse.cycles != 2.0) {
    throw UnsupportedConfiguration("co-rotating frame is only available for circular (epsilon = 1) two-cycle pulses");
  }
}

}  // namespace

double corotating_field(const CosEnvelope& pulse, double t) {
  require_circular_two_cycle(pulse);
  const double u = pulse.omega * t / 4.0;
  if (std::abs(u) >= kPi / 2.0) return 0.0;
  const double c = std::cos(u);
  return pulse.A0 * pulse.omega / std::sqrt(2.0) * c * c * c;
}

double corotation_rate(const CosEnvelope& pulse) {
  require_circular_two_cycle(pulse);
  return 1.25 * pulse.omega;
}

std::array<std::array<double, 2>, 2> corotation_matrix(const CosEnvelope& pulse, double t) {
  require_circular_two_cycle(pulse);
  const double a = 1.25 * pulse.omega * t;
  const double sa = std::sin(a), ca = std::cos(a);
  return {{{sa, ca}, {-ca, sa}}};
}

KeldyshTimes keldysh(double omega, double Ip, double F) {
  if (!(F > 0.0)) throw DomainError("Keldysh time needs a positive field amplitude");
  const double tau = std::sqrt(2.0 * std::abs(Ip)) / F;
  return {tau, omega * tau};
}

double intensity_conversion(double F) { return kAtomicIntensityWcm2 * F * F; }

double fluence_matched_amplitude(double omega, double F0_ref, double omega_ref) {
  if (!(omega > 0.0) || !(omega_ref > 0.0)) throw DomainError("frequencies must be positive");
  // ∫ sin⁶(ωt) dt over (0, π/ω) = 5π/(16ω), so the fluence scales as F0²/ω.
  return F0_ref * std::sqrt(omega / omega_ref);
}

}  // namespace tunnel
