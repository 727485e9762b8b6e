#include "tunnel/analysis.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>

#include "tunnel/parallel.hpp"

namespace tunnel {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Root of f on [a, b] with f(a), f(b) of opposite sign, to |Δt| ≤ 1e-12.
template <class F>
double bracket_root(F&& f, double a, double b, double fa, double fb) {
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (a > b) {
    std::swap(a, b);
    std::swap(fa, fb);
  }
  std::uintmax_t iters = 200;
  auto tol = [](double x, double y) { return std::abs(y - x) <= 1e-12 * std::max(1.0, std::abs(x)); };
  const auto br = boost::math::tools::toms748_solve(f, a, b, fa, fb, tol, iters);
  return 0.5 * (br.first + br.second);
}

double support_duration(const FieldPulse& pulse) {
  const auto [a, b] = pulse_support(pulse);
  return std::isfinite(a) && std::isfinite(b) ? b - a : 0.0;
}

}  // namespace

const char* criterion_name(CriterionId id) {
  switch (id) {
    case CriterionId::Energy:
      return "energy";
    case CriterionId::MomentumBackprop:
      return "momentum_backprop";
    case CriterionId::StaticTraversal:
      return "static_traversal";
    case CriterionId::WkbIntegral:
      return "wkb_integral";
    case CriterionId::FluctFit:
      return "fluct_fit";
    case CriterionId::FluctInflection:
      return "fluct_inflection";
  }
  return "unknown";
}

CriterionId criterion_from_name(const std::string& name) {
  for (auto id : {CriterionId::Energy, CriterionId::MomentumBackprop, CriterionId::StaticTraversal,
                  CriterionId::WkbIntegral, CriterionId::FluctFit, CriterionId::FluctInflection}) {
    if (name == criterion_name(id)) return id;
  }
  throw ConfigurationError("unknown criterion '" + name + "'");
}

Trajectory evolve_ground_state(const System& sys, const IntegratorConfig& cfg, double U) {
  GroundState gs = ground_state_init(sys.model, U, sys.kind);
  gs.state.t = cfg.t_start;
  return integrate(gs.state, sys, cfg);
}

// ---------------------------------------------------------------------------

CriterionResult exit_time_energy(const Trajectory& traj) {
  CriterionResult r;
  r.id = CriterionId::Energy;
  r.tau_max = peak_field_time(traj.system().pulse);
  const auto& ts = traj.dense().grid_times();
  const double t0 = std::max(0.0, traj.t_begin());
  if (t0 > traj.t_end()) {
    r.diagnostic = "trajectory ends before t = 0";
    return r;
  }
  auto E = [&](double t) { return traj.energy_free(t); };
  double ta = t0, ea = E(t0);
  for (double tb : ts) {
    if (tb <= ta) continue;
    const double eb = E(tb);
    if (ea < 0.0 && eb >= 0.0) {
      const double te = bracket_root(E, ta, tb, ea, eb);
      r.set_exit(te);
      const auto st = traj.at(te);
      r.exit_position = st.position();
      r.exit_momentum = st.momentum();
      return r;
    }
    ta = tb;
    ea = eb;
  }
  r.diagnostic = "interaction-free energy stays below zero";
  return r;
}

BackpropResult exit_time_momentum_backprop(const Trajectory& traj, double t_f) {
  BackpropResult out;
  CriterionResult& r = out.result;
  r.id = CriterionId::MomentumBackprop;
  const System& sys = traj.system();
  r.tau_max = peak_field_time(sys.pulse);
  if (!std::holds_alternative<LabFrame>(sys.frame)) {
    throw UnsupportedConfiguration("momentum back-propagation runs in the lab frame only");
  }
  if (t_f > traj.t_end() + 1e-12 || t_f <= traj.t_begin()) {
    r.diagnostic = "trajectory does not reach t_f";
    return out;
  }
  const auto st = traj.at(t_f);
  out.path = classical_backpropagate(st.position(), st.momentum(), t_f, traj.t_begin(), sys.model, sys.pulse);
  const ClassicalPath& path = *out.path;
  if (!path.ok()) {
    r.diagnostic = "back-propagation failed: " + path.ode.message;
    return out;
  }
  const int dim = traj.dim();
  auto longitudinal = [&](double t) -> std::optional<double> {
    const Vec3 p = path.momentum(t);
    if (dim == 1) return p[0];
    const Vec3 E = field_vector(sys.pulse, t);
    const double e = norm(E);
    if (e < 1e-14) return std::nullopt;
    return dot(p, E) / e;
  };

  double best_r = std::numeric_limits<double>::infinity();
  const auto& ts = path.times();
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const auto la = longitudinal(ts[k - 1]), lb = longitudinal(ts[k]);
    if (!la || !lb) continue;
    if ((*la < 0.0) == (*lb < 0.0) && *lb != 0.0) continue;
    auto f = [&](double t) {
      const auto v = longitudinal(t);
      return v ? *v : 0.0;
    };
    const double tz = bracket_root(f, ts[k - 1], ts[k], *la, *lb);
    const Vec3 x = path.position(tz);
    const double rr = norm(x);
    if (rr < best_r) {
      best_r = rr;
      r.set_exit(tz);
      r.exit_position = x;
      r.exit_momentum = path.momentum(tz);
    }
  }
  if (!r.found) r.diagnostic = "no zero of the longitudinal momentum on the back-propagated path";
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Ray {
  const PotentialModel& model;
  Vec3 F;
  Vec3 widths;
  Vec3 U;
  int axis;
  double dir;

  // V_eff at x_axis = dir·x, s_axis = s.
  double plane(double x, double s) const {
    Vec3 xs = kZero3, ss = widths;
    xs[axis] = dir * x;
    ss[axis] = s;
    return v_eff(EffPotentialKind::AllOrders, model, F, xs, ss, U);
  }
  double ray(double q) const { return plane(q, q); }
};

}  // namespace

TunnelGeometry tunnel_geometry(const PotentialModel& model, const Vec3& F_static, double E0,
                               const ExtendedState& ground, const TunnelOptions& opts) {
  TunnelGeometry geo;
  const int dim = dimension(model);
  int axis = 0;
  for (int i = 1; i < dim; ++i)
    if (std::abs(F_static[i]) > std::abs(F_static[axis])) axis = i;
  if (norm(F_static) == 0.0) {
    geo.diagnostic = "no static field";
    return geo;
  }
  geo.axis = axis;
  Vec3 probe = kZero3;
  probe[axis] = 50.0;
  const double v_plus = classical_potential(model, probe, F_static);
  probe[axis] = -50.0;
  geo.direction = v_plus < classical_potential(model, probe, F_static) ? 1.0 : -1.0;

  Vec3 widths{1.0, 1.0, 1.0}, U{kDefaultU, kDefaultU, kDefaultU};
  for (int i = 0; i < dim; ++i) {
    widths[i] = ground.axis(i).s;
    U[i] = ground.U(i);
  }
  const Ray ray{model, F_static, widths, U, axis, geo.direction};
  const double h = opts.scan_step;

  // Entry: first point where the ray becomes classically allowed.
  double q = h, prev = q;
  bool entered = false;
  for (; q <= opts.scan_max; q += h) {
    if (E0 - ray.ray(q) > 0.0) {
      entered = true;
      break;
    }
    prev = q;
  }
  if (!entered) {
    geo.diagnostic = "ray never enters the allowed region";
    return geo;
  }
  auto radicand = [&](double x) { return E0 - ray.ray(x); };
  geo.x_in = q == prev ? q : bracket_root(radicand, prev, q, radicand(prev), radicand(q));

  // Outer wall: maximum of V_eff − E0 along x' ∈ [q, q + L] at fixed s = q.
  const int samples = std::max(10, static_cast<int>(std::ceil(opts.wall_length / h)));
  auto wall = [&](double s) {
    double best = -std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int k = 0; k <= samples; ++k) {
      const double v = ray.plane(s + opts.wall_length * k / samples, s);
      if (v > best) {
        best = v;
        arg = k;
      }
    }
    // Golden-section polish around the sampled maximum.
    const double step = opts.wall_length / samples;
    double lo = s + std::max(0, arg - 1) * step, hi = s + std::min(samples, arg + 1) * step;
    const double g = (std::sqrt(5.0) - 1.0) / 2.0;
    for (int it = 0; it < 40; ++it) {
      const double c = hi - g * (hi - lo), d = lo + g * (hi - lo);
      if (ray.plane(c, s) > ray.plane(d, s)) {
        hi = d;
      } else {
        lo = c;
      }
    }
    return std::max(best, ray.plane(0.5 * (lo + hi), s)) - E0;
  };

  double last_pos = -1.0;
  double g_end = 0.0;
  for (double s = geo.x_in; s <= opts.scan_max; s += h) {
    g_end = wall(s);
    if (g_end > 0.0) last_pos = s;
  }
  if (last_pos < 0.0) {
    geo.diagnostic = "no potential wall above the ground-state energy (barrier suppressed)";
    return geo;
  }
  if (g_end > 0.0) {
    geo.diagnostic = "outer wall extends beyond the scan range";
    return geo;
  }
  double a = last_pos, b = last_pos + h;
  for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
    const double m = 0.5 * (a + b);
    (wall(m) > 0.0 ? a : b) = m;
  }
  geo.x_star = 0.5 * (a + b);
  geo.found = true;
  return geo;
}

CriterionResult static_traversal(const Trajectory& traj, double E0, const TunnelOptions& opts) {
  CriterionResult r;
  r.id = CriterionId::StaticTraversal;
  const System& sys = traj.system();
  const auto* stat = std::get_if<StaticField>(&sys.pulse);
  if (!stat) throw ConfigurationError("static traversal needs a static field");
  r.tau_max = traj.t_begin();
  const ExtendedState start = traj.at(traj.t_begin());
  const TunnelGeometry geo = tunnel_geometry(sys.model, stat->F, E0, start, opts);
  if (!geo.found) {
    r.diagnostic = geo.diagnostic;
    return r;
  }
  auto reach = [&](double t) { return geo.direction * traj.at(t).axis(geo.axis).x - geo.x_star; };
  const auto& ts = traj.dense().grid_times();
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double a = reach(ts[k - 1]), b = reach(ts[k]);
    if (a < 0.0 && b >= 0.0) {
      const double te = bracket_root(reach, ts[k - 1], ts[k], a, b);
      r.set_exit(te);
      const auto st = traj.at(te);
      r.exit_position = st.position();
      r.exit_momentum = st.momentum();
      return r;
    }
  }
  r.diagnostic = "trajectory does not reach the tunnel exit";
  return r;
}

double wkb_like_time(const PotentialModel& model, const Vec3& F_static, double E0, const ExtendedState& ground,
                     const WkbOptions& opts, const TunnelOptions& geometry) {
  const TunnelGeometry geo = tunnel_geometry(model, F_static, E0, ground, geometry);
  if (!geo.found) throw DomainError("no tunnel along the ray: " + geo.diagnostic);
  const int dim = dimension(model);
  Vec3 widths{1.0, 1.0, 1.0}, U{kDefaultU, kDefaultU, kDefaultU};
  for (int i = 0; i < dim; ++i) {
    widths[i] = ground.axis(i).s;
    U[i] = ground.U(i);
  }
  const Ray ray{model, F_static, widths, U, geo.axis, geo.direction};
  const double k = opts.kinetic_factor_two ? 2.0 : 1.0;
  // x = x_in + u² removes the inverse square-root singularity at the entry.
  auto integrand = [&](double u) {
    const double rad = E0 - ray.ray(geo.x_in + u * u);
    if (!(rad > 0.0)) throw DomainError("radicand of the tunnel integral is not positive inside the tunnel");
    return 2.0 * u / std::sqrt(k * rad);
  };
  const double umax = std::sqrt(geo.x_star - geo.x_in);
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(integrand, 0.0, umax, 15, opts.tolerance);
}

// ---------------------------------------------------------------------------

double transverse_width(double phi, double s_x, double s_y) {
  const double sp = std::sin(phi), cp = std::cos(phi);
  return std::sqrt(sp * sp * s_x * s_x + cp * cp * s_y * s_y);
}

double width_along(const Vec3& n, const Vec3& s) {
  return std::sqrt(n[0] * n[0] * s[0] * s[0] + n[1] * n[1] * s[1] * s[1] + n[2] * n[2] * s[2] * s[2]);
}

std::vector<double> savitzky_golay(const std::vector<double>& y, double dt, int window, int deriv) {
  if (window < 5 || window % 2 == 0) throw ConfigurationError("Savitzky-Golay window must be odd and >= 5");
  if (deriv < 0 || deriv > 3) throw ConfigurationError("Savitzky-Golay derivative order must be 0..3");
  const int m = window / 2;
  constexpr int order = 3;
  // Normal equations of the cubic fit in index units.
  double A[order + 1][order + 1] = {};
  for (int j = -m; j <= m; ++j)
    for (int a = 0; a <= order; ++a)
      for (int b = 0; b <= order; ++b) A[a][b] += std::pow(j, a + b);
  // Row `deriv` of A⁻¹ via Gauss-Jordan on [A | I].
  double M[order + 1][2 * (order + 1)] = {};
  for (int a = 0; a <= order; ++a) {
    for (int b = 0; b <= order; ++b) M[a][b] = A[a][b];
    M[a][order + 1 + a] = 1.0;
  }
  for (int c = 0; c <= order; ++c) {
    int piv = c;
    for (int r = c + 1; r <= order; ++r)
      if (std::abs(M[r][c]) > std::abs(M[piv][c])) piv = r;
    for (int k = 0; k < 2 * (order + 1); ++k) std::swap(M[c][k], M[piv][k]);
    const double d = M[c][c];
    for (int k = 0; k < 2 * (order + 1); ++k) M[c][k] /= d;
    for (int r = 0; r <= order; ++r) {
      if (r == c) continue;
      const double f = M[r][c];
      for (int k = 0; k < 2 * (order + 1); ++k) M[r][k] -= f * M[c][k];
    }
  }
  double fact = 1.0;
  for (int k = 2; k <= deriv; ++k) fact *= k;
  std::vector<double> w(static_cast<std::size_t>(window));
  for (int j = -m; j <= m; ++j) {
    double acc = 0.0;
    for (int b = 0; b <= order; ++b) acc += M[deriv][order + 1 + b] * std::pow(j, b);
    w[static_cast<std::size_t>(j + m)] = fact * acc / std::pow(dt, deriv);
  }
  std::vector<double> out(y.size(), kNaN);
  for (std::size_t i = static_cast<std::size_t>(m); i + static_cast<std::size_t>(m) < y.size(); ++i) {
    double acc = 0.0;
    for (int j = -m; j <= m; ++j) acc += w[static_cast<std::size_t>(j + m)] * y[i + j];
    out[i] = acc;
  }
  return out;
}

namespace {

int window_points(double window, double dt) {
  int n = static_cast<int>(std::lround(window / dt));
  if (n % 2 == 0) ++n;
  return std::max(n, 5);
}

double default_window(const FieldPulse& pulse) {
  const double d = support_duration(pulse);
  return d > 0.0 ? 0.05 * d : 1.0;
}

}  // namespace

FluctuationSeries transverse_fluctuation(const Trajectory& traj, double dt) {
  if (traj.dim() != 3) throw UnsupportedConfiguration("transverse fluctuation needs a 3-D trajectory");
  if (!(dt > 0.0)) throw ConfigurationError("sampling interval must be > 0");
  FluctuationSeries out;
  const double a = traj.t_begin(), b = traj.t_end();
  const auto n = static_cast<std::size_t>(std::floor((b - a) / dt + 1e-9)) + 1;
  out.t.reserve(n);
  out.s_T.reserve(n);
  std::optional<double> phi_prev;
  for (std::size_t k = 0; k < n; ++k) {
    const double t = a + static_cast<double>(k) * dt;
    const auto st = traj.at(t);
    const double x = st.axis(0).x, y = st.axis(1).x;
    std::optional<double> phi;
    if (std::hypot(x, y) >= 1e-6) {
      double p = std::atan2(y, x);
      if (phi_prev) p += 2 * std::numbers::pi * std::round((*phi_prev - p) / (2 * std::numbers::pi));
      phi = p;
      phi_prev = p;
    } else {
      phi = phi_prev;
    }
    const double sx = st.axis(0).s, sy = st.axis(1).s;
    out.t.push_back(t);
    // Without a direction the isotropic in-plane average stands in.
    out.s_T.push_back(phi ? transverse_width(*phi, sx, sy) : std::sqrt(0.5 * (sx * sx + sy * sy)));
  }
  out.d2 = out.s_T.size() >= 5 ? savitzky_golay(out.s_T, dt, window_points(default_window(traj.system().pulse), dt), 2)
                               : std::vector<double>(out.s_T.size(), kNaN);
  return out;
}

OffsetAngle offset_angle(const Trajectory& traj, double detection_radius, double dt) {
  if (traj.dim() != 3) throw UnsupportedConfiguration("offset angle needs a 3-D trajectory");
  OffsetAngle out;
  const double a = traj.t_begin(), b = traj.t_end();
  const auto n = static_cast<std::size_t>(std::floor((b - a) / dt + 1e-9)) + 1;
  std::optional<double> prev;
  auto angle_at = [&](double t) -> std::optional<double> {
    const auto r = traj.position(t);
    if (std::hypot(r[0], r[1]) < 1e-6) return std::nullopt;
    double p = std::atan2(r[1], r[0]);
    if (prev) p += 2 * std::numbers::pi * std::round((*prev - p) / (2 * std::numbers::pi));
    return p;
  };
  for (std::size_t k = 0; k < n; ++k) {
    const double t = a + static_cast<double>(k) * dt;
    const auto p = angle_at(t);
    out.t.push_back(t);
    out.angle.push_back(p ? *p : kNaN);
    if (p) prev = p;
  }
  const auto hit = traj.radius_crossing(detection_radius);
  out.at_detector = hit.has_value();
  out.final_time = hit ? *hit : b;
  const auto p = angle_at(out.final_time);
  out.final_angle = p ? *p : kNaN;
  return out;
}

SpotSize spot_size(const Trajectory& traj, double detection_radius) {
  SpotSize out;
  if (traj.dim() != 3) throw UnsupportedConfiguration("spot size needs a 3-D trajectory");
  const auto hit = traj.radius_crossing(detection_radius);
  if (!hit) return out;
  const auto st = traj.at(*hit);
  const Vec3 r = st.position();
  const Vec3 n = (1.0 / norm(r)) * r;
  auto cross = [](const Vec3& u, const Vec3& v) {
    return Vec3{u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]};
  };
  Vec3 e1 = cross({0, 0, 1}, n);
  if (norm(e1) < 1e-12) e1 = cross({1, 0, 0}, n);
  e1 = (1.0 / norm(e1)) * e1;
  const Vec3 e2 = cross(n, e1);
  out.found = true;
  out.time = *hit;
  out.width_a = width_along(e1, st.widths());
  out.width_b = width_along(e2, st.widths());
  out.spot = std::sqrt(out.width_a * out.width_b);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct LineFit {
  double a = 0.0, b = 0.0;
};

// Incremental least squares over index ranges via prefix sums.
struct PrefixSums {
  std::vector<double> st, sy, stt, sty;
  explicit PrefixSums(const FluctuationSeries& s) {
    const std::size_t n = s.t.size();
    st.assign(n + 1, 0.0);
    sy = stt = sty = st;
    for (std::size_t i = 0; i < n; ++i) {
      st[i + 1] = st[i] + s.t[i];
      sy[i + 1] = sy[i] + s.s_T[i];
      stt[i + 1] = stt[i] + s.t[i] * s.t[i];
      sty[i + 1] = sty[i] + s.t[i] * s.s_T[i];
    }
  }
  // Fit over [i, j).
  LineFit fit(std::size_t i, std::size_t j) const {
    const double n = static_cast<double>(j - i);
    const double Sx = st[j] - st[i], Sy = sy[j] - sy[i], Sxx = stt[j] - stt[i], Sxy = sty[j] - sty[i];
    const double den = n * Sxx - Sx * Sx;
    const double b = den != 0.0 ? (n * Sxy - Sx * Sy) / den : 0.0;
    return {(Sy - b * Sx) / n, b};
  }
};

}  // namespace

CriterionResult exit_time_fluct_fit(const FluctuationSeries& series, double tau_max, const FitOptions& opts,
                                    FitLines* lines) {
  CriterionResult r;
  r.id = CriterionId::FluctFit;
  r.tau_max = tau_max;
  const std::size_t n = series.t.size();
  const auto mp = static_cast<std::size_t>(std::max(opts.min_points, 2));
  if (n < 2 * mp) {
    r.diagnostic = "series too short for two linear fits";
    return r;
  }
  const PrefixSums ps(series);

  // Both segments grow while the local slope over min_points samples stays
  // within tolerance; a cumulative fit would swallow points past a kink.
  std::size_t plateau = 0;
  for (std::size_t k = mp; k <= n; ++k) {
    if (std::abs(ps.fit(k - mp, k).b) >= opts.plateau_slope) break;
    plateau = k;
  }
  if (plateau == 0) {
    r.diagnostic = "no initial plateau";
    return r;
  }

  const auto ref_len = std::max(mp, static_cast<std::size_t>(opts.reference_fraction * static_cast<double>(n)));
  const double m_ref = ps.fit(n - ref_len, n).b;
  std::size_t begin = n - ref_len;
  for (std::size_t j = n - ref_len; j-- > 0;) {
    if (std::abs(ps.fit(j, j + mp).b - m_ref) > opts.suffix_tolerance * std::abs(m_ref)) break;
    begin = j;
  }
  const LineFit l1 = ps.fit(0, plateau), l2 = ps.fit(begin, n);
  if (lines) *lines = {l1.a, l1.b, l2.a, l2.b, plateau, begin};
  if (std::abs(l2.b - l1.b) < 1e-14) {
    r.diagnostic = "fitted lines are parallel";
    return r;
  }
  r.set_exit((l1.a - l2.a) / (l2.b - l1.b));
  return r;
}

CriterionResult exit_time_fluct_inflection(const FluctuationSeries& series, double tau_max, double epoch_begin,
                                           double epoch_end, const InflectionOptions& opts,
                                           InflectionDetail* detail) {
  CriterionResult r;
  r.id = CriterionId::FluctInflection;
  r.tau_max = tau_max;
  const std::size_t n = series.t.size();
  if (n < 10) {
    r.diagnostic = "series too short";
    return r;
  }
  const double dt = series.t[1] - series.t[0];
  const double window = opts.window > 0.0 ? opts.window : 0.05 * (epoch_end - epoch_begin);
  const int wp = window_points(window, dt);
  if (static_cast<std::size_t>(2 * wp) > n) {
    r.diagnostic = "smoothing window longer than the series";
    return r;
  }
  const auto f = savitzky_golay(series.s_T, dt, wp, 2);
  // f'' by a second pass of the same filter; windows touching NaN stay NaN.
  const auto f2 = savitzky_golay(f, dt, wp, 2);
  if (detail) detail->window_used = window;

  double fmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (series.t[i] >= epoch_begin && series.t[i] <= epoch_end && std::isfinite(f[i])) {
      fmax = std::max(fmax, std::abs(f[i]));
    }
  }
  if (fmax == 0.0) {
    r.diagnostic = "second derivative vanishes on the pulse epoch";
    return r;
  }
  std::optional<std::size_t> last_max;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (series.t[i] < epoch_begin || series.t[i] > epoch_end) continue;
    if (!std::isfinite(f[i - 1]) || !std::isfinite(f[i]) || !std::isfinite(f[i + 1])) continue;
    if (f[i] > f[i - 1] && f[i] >= f[i + 1] && f[i] >= opts.noise_floor * fmax) last_max = i;
  }
  if (!last_max) {
    r.diagnostic = "no local maximum of d2s_T/dt2 above the noise floor";
    return r;
  }
  if (detail) detail->last_maximum = series.t[*last_max];
  for (std::size_t k = *last_max + 1; k < n; ++k) {
    if (!std::isfinite(f2[k - 1]) || !std::isfinite(f2[k])) continue;
    if (f2[k - 1] < 0.0 && f2[k] >= 0.0) {
      const double w = f2[k - 1] / (f2[k - 1] - f2[k]);
      r.set_exit(series.t[k - 1] + w * dt);
      return r;
    }
  }
  r.diagnostic = "no inflection after the last maximum";
  return r;
}

// ---------------------------------------------------------------------------

FrequencyScan frequency_scan(const PotentialModel& model, const FieldPulse& pulse, AmplitudeRule rule,
                             const std::vector<double>& omegas, const IntegratorConfig& cfg, unsigned threads) {
  if (omegas.empty()) throw ConfigurationError("frequency grid is empty");
  const double F_ref = peak_amplitude(pulse), w_ref = pulse_frequency(pulse);
  if (!(w_ref > 0.0)) throw ConfigurationError("frequency scan needs an oscillating pulse");
  FrequencyScan out;
  out.rows.resize(omegas.size());
  parallel_for(omegas.size(), threads, [&](std::size_t i) {
    const double w = omegas[i];
    const double amp = rule == AmplitudeRule::FixedFluence ? fluence_matched_amplitude(w, F_ref, w_ref) : F_ref;
    const FieldPulse p = with_amplitude(with_frequency(pulse, w), amp);
    IntegratorConfig c = cfg;
    // The free energy is conserved once the field is off, so the pulse support bounds the search.
    c.t_end = std::max(cfg.t_end, pulse_support(p).second + 1.0);
    const auto traj = evolve_ground_state(System{model, p}, c);
    out.rows[i] = {w, amp, exit_time_energy(traj)};
    if (traj.failed()) out.rows[i].result.diagnostic = "integration failed: " + traj.message();
  });
  for (const auto& row : out.rows) {
    if (!row.result.found) {
      out.critical_omega = row.omega;
      break;
    }
  }
  return out;
}

}  // namespace tunnel
