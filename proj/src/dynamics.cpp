#include "tunnel/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tunnel {

void IntegratorConfig::validate() const {
  if (!(rel_tol > 0.0) || !(abs_tol > 0.0)) throw ConfigurationError("integrator tolerances must be > 0");
  if (!(max_step > 0.0)) throw ConfigurationError("max_step must be > 0");
  if (!std::isfinite(t_start) || !std::isfinite(t_end)) throw ConfigurationError("integration span must be finite");
  if (!(stop_radius >= 0.0)) throw ConfigurationError("stop_radius must be >= 0");
  if (!(output_dt >= 0.0)) throw ConfigurationError("output_dt must be >= 0");
}

void System::validate() const {
  tunnel::validate(model);
  tunnel::validate(pulse);
  if (const auto* rot = std::get_if<CoRotatingFrame>(&frame)) {
    const auto* cos_pulse = std::get_if<CosEnvelope>(&pulse);
    if (!cos_pulse) throw UnsupportedConfiguration("co-rotating frame needs a cos_envelope pulse");
    if (dim() != 3) throw UnsupportedConfiguration("co-rotating frame needs a 3-D model");
    const double expected = corotation_rate(*cos_pulse);
    if (rot->rate != 0.0 && std::abs(rot->rate - expected) > 1e-12 * expected) {
      throw ConfigurationError("co-rotating frame rate must equal 5*omega/4 for this pulse");
    }
  }
}

Vec3 System::field(double t) const {
  if (std::holds_alternative<CoRotatingFrame>(frame)) {
    return {corotating_field(std::get<CosEnvelope>(pulse), t), 0.0, 0.0};
  }
  return field_vector(pulse, t);
}

double System::rotation_rate() const {
  if (std::holds_alternative<LabFrame>(frame)) return 0.0;
  return corotation_rate(std::get<CosEnvelope>(pulse));
}

namespace {

struct Unpacked {
  Vec3 x = kZero3, p = kZero3, s{1.0, 1.0, 1.0}, ps = kZero3, U{kDefaultU, kDefaultU, kDefaultU};
};

Unpacked split(const ExtendedState& st) {
  Unpacked u;
  for (int i = 0; i < st.dim(); ++i) {
    const auto& a = st.axis(i);
    u.x[i] = a.x;
    u.p[i] = a.p;
    u.s[i] = a.s;
    u.ps[i] = a.ps;
    u.U[i] = st.U(i);
  }
  return u;
}

double kinetic(const Unpacked& u, int dim) {
  double acc = 0.0;
  for (int i = 0; i < dim; ++i) acc += 0.5 * (u.p[i] * u.p[i] + u.ps[i] * u.ps[i]);
  return acc;
}

}  // namespace

double quantum_hamiltonian(const ExtendedState& state, const System& sys) {
  const Unpacked u = split(state);
  double h = kinetic(u, state.dim()) + v_eff(sys.kind, sys.model, sys.field(state.t), u.x, u.s, u.U);
  const double omega = sys.rotation_rate();
  if (omega != 0.0) h += omega * (u.p[0] * u.x[1] - u.p[1] * u.x[0]);
  return h;
}

double interaction_free_energy(const ExtendedState& state, const System& sys) {
  const Unpacked u = split(state);
  return kinetic(u, state.dim()) + v_eff(sys.kind, sys.model, kZero3, u.x, u.s, u.U);
}

void eom(const System& sys, double t, std::span<const double> y, std::span<const double> U, std::span<double> dydt) {
  const int n = sys.dim();
  Vec3 x = kZero3, s{1.0, 1.0, 1.0}, Uv{kDefaultU, kDefaultU, kDefaultU};
  for (int i = 0; i < n; ++i) {
    x[i] = y[i];
    s[i] = y[2 * n + i];
    Uv[i] = U[i];
  }
  const EffGradient g = grad_v_eff(sys.kind, sys.model, sys.field(t), x, s, Uv);
  for (int i = 0; i < n; ++i) {
    dydt[i] = y[n + i];
    dydt[n + i] = -g.dx[i];
    dydt[2 * n + i] = y[3 * n + i];
    dydt[3 * n + i] = -g.ds[i];
  }
  const double omega = sys.rotation_rate();
  if (omega != 0.0) {
    // H ⊃ Ω (P₁R₂ − P₂R₁)
    dydt[0] += omega * y[1];
    dydt[1] -= omega * y[0];
    dydt[n + 0] += omega * y[n + 1];
    dydt[n + 1] -= omega * y[n + 0];
  }
}

ExtendedState eom(const ExtendedState& state, const System& sys) {
  const auto y = state.pack();
  std::vector<double> dy(y.size());
  const std::array<double, 3> U{state.U(0), state.dim() > 1 ? state.U(1) : kDefaultU,
                                state.dim() > 2 ? state.U(2) : kDefaultU};
  eom(sys, state.t, y, U, dy);
  ExtendedState out = state;
  out.unpack(dy);
  return out;
}

// ---------------------------------------------------------------------------

Trajectory::Trajectory(System sys, const ExtendedState& initial, OdeResult result)
    : sys_(std::move(sys)), dim_(initial.dim()), U_{kDefaultU, kDefaultU, kDefaultU}, ode_(std::move(result)) {
  for (int i = 0; i < dim_; ++i) U_[i] = initial.U(i);
  switch (ode_.status) {
    case OdeStatus::Completed:
      status_ = TrajectoryStatus::Complete;
      break;
    case OdeStatus::EventStop:
      status_ = TrajectoryStatus::ReachedRadius;
      break;
    default:
      status_ = TrajectoryStatus::Failed;
      message_ = ode_.message;
  }
  times_ = ode_.solution.grid_times();
}

ExtendedState Trajectory::at(double t) const {
  ExtendedState st(dim_);
  for (int i = 0; i < dim_; ++i) st.set_U(i, U_[i]);
  st.unpack(ode_.solution(t));
  st.t = t;
  return st;
}

std::vector<ExtendedState> Trajectory::samples() const {
  std::vector<ExtendedState> out;
  out.reserve(times_.size());
  for (double t : times_) out.push_back(at(t));
  return out;
}

std::optional<double> Trajectory::radius_crossing(double radius) const {
  const auto& ts = ode_.solution.grid_times();
  const auto& ys = ode_.solution.grid_states();
  auto r_of = [&](const std::vector<double>& y) {
    double acc = 0.0;
    for (int i = 0; i < dim_; ++i) acc += y[i] * y[i];
    return std::sqrt(acc);
  };
  for (std::size_t k = 1; k < ts.size(); ++k) {
    if (r_of(ys[k]) >= radius && r_of(ys[k - 1]) < radius) {
      double a = ts[k - 1], b = ts[k];
      for (int it = 0; it < 200 && b - a > 1e-12 * std::max(1.0, std::abs(b)); ++it) {
        const double m = 0.5 * (a + b);
        (r_of(ode_.solution(m)) >= radius ? b : a) = m;
      }
      return b;
    }
  }
  if (!ys.empty() && r_of(ys.front()) >= radius) return ts.front();
  return std::nullopt;
}

Trajectory integrate(const ExtendedState& state0, const System& sys, const IntegratorConfig& cfg) {
  cfg.validate();
  sys.validate();
  const int n = sys.dim();
  if (state0.dim() != n) throw ConfigurationError("state dimension does not match the model");
  for (int i = 0; i < n; ++i) {
    if (!(state0.axis(i).s > 0.0)) throw DomainError("initial width s must be positive");
  }
  std::array<double, 3> U{kDefaultU, kDefaultU, kDefaultU};
  for (int i = 0; i < n; ++i) U[i] = state0.U(i);

  OdeRhs rhs = [&sys, U](double t, std::span<const double> y, std::span<double> dy) { eom(sys, t, y, U, dy); };
  StateValidator valid = [n](std::span<const double> y) {
    for (int i = 0; i < n; ++i)
      if (!(y[2 * n + i] > 0.0)) return false;
    return true;
  };
  std::vector<OdeEvent> events;
  if (cfg.stop_radius > 0.0) {
    events.push_back({[n, r = cfg.stop_radius](double, std::span<const double> y) {
                        double acc = 0.0;
                        for (int i = 0; i < n; ++i) acc += y[i] * y[i];
                        return std::sqrt(acc) - r;
                      },
                      +1, true});
  }
  OdeOptions opts;
  opts.rel_tol = cfg.rel_tol;
  opts.abs_tol = cfg.abs_tol;
  opts.max_step = cfg.max_step;
  auto res = dopri5(rhs, state0.t, state0.pack(), cfg.t_end, opts, valid, events);
  Trajectory traj(sys, state0, std::move(res));
  if (cfg.output_dt > 0.0) {
    const double a = traj.t_begin(), b = traj.t_end();
    const double dir = b >= a ? 1.0 : -1.0;
    traj.times_.clear();
    const long count = static_cast<long>(std::floor(std::abs(b - a) / cfg.output_dt + 1e-9));
    for (long k = 0; k <= count; ++k) traj.times_.push_back(a + dir * static_cast<double>(k) * cfg.output_dt);
    if (traj.times_.back() != b) traj.times_.push_back(b);
  }
  return traj;
}

// ---------------------------------------------------------------------------

namespace {

struct WidthProblem {
  const PotentialModel& model;
  EffPotentialKind kind;
  Vec3 U;
  int n;

  double energy(const Vec3& s) const { return v_eff(kind, model, kZero3, kZero3, s, U); }
  Vec3 gradient(const Vec3& s) const { return grad_v_eff(kind, model, kZero3, kZero3, s, U).ds; }
};

// Solves a small symmetric positive definite system via Cholesky; false if not SPD.
bool solve_spd(std::array<std::array<double, 3>, 3> A, Vec3 b, int n, Vec3& x) {
  for (int j = 0; j < n; ++j) {
    double d = A[j][j];
    for (int k = 0; k < j; ++k) d -= A[j][k] * A[j][k];
    if (!(d > 0.0)) return false;
    A[j][j] = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double v = A[i][j];
      for (int k = 0; k < j; ++k) v -= A[i][k] * A[j][k];
      A[i][j] = v / A[j][j];
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < i; ++k) b[i] -= A[i][k] * b[k];
    b[i] /= A[i][i];
  }
  for (int i = n - 1; i >= 0; --i) {
    for (int k = i + 1; k < n; ++k) b[i] -= A[k][i] * b[k];
    b[i] /= A[i][i];
  }
  x = b;
  return true;
}

}  // namespace

GroundState ground_state_init(const PotentialModel& model, double U, EffPotentialKind kind) {
  validate(model);
  if (!(U > 0.0)) throw DomainError("uncertainty parameter U must be positive");
  const int n = dimension(model);
  WidthProblem prob{model, kind, {U, U, U}, n};

  // Coulomb-type models: the unsoftened minimum is σ = 3√3 U in closed form.
  const bool coulomb = std::holds_alternative<Coulomb3D>(model) || std::holds_alternative<Hydrogen3D>(model);
  Vec3 s{1.0, 1.0, 1.0};
  if (coulomb) s.fill(3.0 * std::numbers::sqrt3 * U);

  int it = 0;
  double gmax = 0.0;
  for (; it < 200; ++it) {
    const Vec3 g = prob.gradient(s);
    // Scale-free stopping test: the gradient must be negligible relative to
    // E/s, which a run-away width (no bound state) never achieves.
    gmax = 0.0;
    for (int i = 0; i < n; ++i) gmax = std::max(gmax, std::abs(g[i]) * s[i] / std::abs(prob.energy(s)));
    if (gmax <= 1e-12) break;

    std::array<std::array<double, 3>, 3> H{};
    for (int j = 0; j < n; ++j) {
      const double h = 1e-6 * s[j];
      Vec3 sp = s, sm = s;
      sp[j] += h;
      sm[j] -= h;
      const Vec3 gp = prob.gradient(sp), gm = prob.gradient(sm);
      for (int i = 0; i < n; ++i) H[i][j] = (gp[i] - gm[i]) / (2.0 * h);
    }
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j) H[i][j] = H[j][i] = 0.5 * (H[i][j] + H[j][i]);

    Vec3 d = kZero3;
    Vec3 minus_g{-g[0], -g[1], -g[2]};
    if (!solve_spd(H, minus_g, n, d)) {
      for (int i = 0; i < n; ++i) d[i] = -g[i] * s[i];
    }
    // Backtracking with a positivity barrier on s.
    const double f0 = prob.energy(s);
    double slope = 0.0;
    for (int i = 0; i < n; ++i) slope += g[i] * d[i];
    double alpha = 1.0;
    Vec3 trial = s;
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
      bool positive = true;
      for (int i = 0; i < n; ++i) {
        trial[i] = s[i] + alpha * d[i];
        positive = positive && trial[i] > 0.0;
      }
      if (!positive) continue;
      if (prob.energy(trial) <= f0 + 1e-4 * alpha * slope || gmax < 1e-8) {
        moved = true;
        break;
      }
    }
    if (!moved) break;
    s = trial;
    for (int i = 0; i < n; ++i) {
      if (s[i] > 1e4) throw DomainError("ground-state minimization diverged: width s grows without bound");
    }
  }
  if (gmax > 1e-10) {
    throw DomainError("ground-state minimization did not converge: relative gradient " + std::to_string(gmax) +
                      " after " + std::to_string(it) + " iterations at s0 = " + std::to_string(s[0]));
  }

  ExtendedState st(n, U);
  for (int i = 0; i < n; ++i) st.axis(i) = {0.0, 0.0, s[i], 0.0};
  return {st, prob.energy(s), it};
}

double calibrate_well_depth(double target_E, double U) {
  if (!(target_E < 0.0)) throw DomainError("target energy must be negative");
  auto energy = [U](double D) { return ground_state_init(GaussianWell1D{D}, U).energy; };
  double lo = 0.3, hi = 5.0;
  double elo, ehi;
  try {
    elo = energy(lo);
    ehi = energy(hi);
  } catch (const DomainError& e) {
    throw DomainError(std::string("well-depth bracket evaluation failed: ") + e.what());
  }
  // Deeper wells bind more strongly: E decreases with D.
  if (!(elo >= target_E && ehi <= target_E)) {
    throw DomainError("target energy " + std::to_string(target_E) + " outside the depth bracket [0.3, 5]");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double em = energy(mid);
    if (std::abs(em - target_E) < 1e-13) return mid;
    (em > target_E ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------

Vec3 ClassicalPath::position(double t) const {
  const auto y = ode.solution(t);
  Vec3 r = kZero3;
  for (int i = 0; i < dim; ++i) r[i] = y[i];
  return r;
}

Vec3 ClassicalPath::momentum(double t) const {
  const auto y = ode.solution(t);
  Vec3 r = kZero3;
  for (int i = 0; i < dim; ++i) r[i] = y[dim + i];
  return r;
}

ClassicalPath classical_propagate(const Vec3& x0, const Vec3& p0, double t0, double t1, const PotentialModel& model,
                                  const FieldPulse& pulse, const IntegratorConfig& cfg) {
  validate(model);
  validate(pulse);
  cfg.validate();
  const int n = dimension(model);
  std::vector<double> y0(2 * static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    y0[i] = x0[i];
    y0[n + i] = p0[i];
  }
  OdeRhs rhs = [&model, &pulse, n](double t, std::span<const double> y, std::span<double> dy) {
    Vec3 x = kZero3;
    for (int i = 0; i < n; ++i) x[i] = y[i];
    const Vec3 g = classical_gradient(model, x, field_vector(pulse, t));
    for (int i = 0; i < n; ++i) {
      dy[i] = y[n + i];
      dy[n + i] = -g[i];
    }
  };
  OdeOptions opts;
  opts.rel_tol = cfg.rel_tol;
  opts.abs_tol = cfg.abs_tol;
  opts.max_step = cfg.max_step;
  return {n, dopri5(rhs, t0, std::move(y0), t1, opts)};
}

ClassicalPath classical_backpropagate(const Vec3& x_f, const Vec3& p_f, double t_f, double t0,
                                      const PotentialModel& model, const FieldPulse& pulse,
                                      const IntegratorConfig& cfg) {
  if (!(t_f > t0)) throw DomainError("back-propagation needs t_f > t0");
  return classical_propagate(x_f, p_f, t_f, t0, model, pulse, cfg);
}

}  // namespace tunnel
