#include "tunnel/ode.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace tunnel {

namespace {

// Dormand & Prince (1980) tableau with Hairer's dense-output weights.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

bool finite(std::span<const double> y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

void DenseSolution::start(double t0, std::vector<double> y0) {
  n_ = y0.size();
  t_begin_ = t_end_ = t0;
  steps_.clear();
  times_ = {t0};
  states_ = {std::move(y0)};
}

void DenseSolution::push(DenseStep step, double t1, std::vector<double> y1) {
  steps_.push_back(std::move(step));
  t_end_ = t1;
  times_.push_back(t1);
  states_.push_back(std::move(y1));
}

void DenseSolution::truncate(double t, std::vector<double> y) {
  t_end_ = t;
  times_.back() = t;
  states_.back() = std::move(y);
}

const DenseStep& DenseSolution::locate(double t) const {
  if (steps_.empty()) throw std::out_of_range("dense solution has no steps");
  const bool forward = t_end_ >= t_begin_;
  // times_[k] is the start of steps_[k].
  auto it = forward ? std::upper_bound(times_.begin(), times_.end() - 1, t)
                    : std::upper_bound(times_.begin(), times_.end() - 1, t, std::greater<>());
  std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - times_.begin()) - 1));
  k = std::min(k, steps_.size() - 1);
  return steps_[k];
}

void DenseSolution::eval(double t, std::span<double> out) const {
  const double lo = std::min(t_begin_, t_end_), hi = std::max(t_begin_, t_end_);
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  if (t < lo - slack || t > hi + slack) throw std::out_of_range("time outside the integrated interval");
  t = std::clamp(t, lo, hi);
  if (steps_.empty()) {
    std::copy(states_.front().begin(), states_.front().end(), out.begin());
    return;
  }
  const DenseStep& s = locate(t);
  const double th = (t - s.t0) / s.h, th1 = 1.0 - th;
  const double* r = s.r.data();
  for (std::size_t i = 0; i < n_; ++i) {
    out[i] = r[i] + th * (r[n_ + i] + th1 * (r[2 * n_ + i] + th * (r[3 * n_ + i] + th1 * r[4 * n_ + i])));
  }
}

std::vector<double> DenseSolution::operator()(double t) const {
  std::vector<double> out(n_);
  eval(t, out);
  return out;
}

OdeResult dopri5(const OdeRhs& rhs, double t0, std::vector<double> y0, double t_end, const OdeOptions& opts,
                 const StateValidator& valid, const std::vector<OdeEvent>& events) {
  if (!(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  const std::size_t n = y0.size();
  OdeResult res;
  res.solution.start(t0, y0);
  if (t_end == t0) return res;

  const double dir = t_end > t0 ? 1.0 : -1.0;
  std::vector<double> y = y0, ynew(n), ytmp(n);
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n);

  auto scale = [&](double a, double b) {
    return opts.abs_tol + opts.rel_tol * std::max(std::abs(a), std::abs(b));
  };
  auto rms = [&](const std::vector<double>& v, const std::vector<double>& ref) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = v[i] / scale(ref[i], ref[i]);
      acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(n));
  };

  double t = t0;
  rhs(t, y, k1);

  // Starting step (Hairer, Nørsett & Wanner, II.4).
  double h = opts.initial_step;
  if (!(h > 0.0)) {
    const double dn0 = rms(y, y), dn1 = rms(k1, y);
    double h0 = (dn0 < 1e-5 || dn1 < 1e-5) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, opts.max_step);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + dir * h0 * k1[i];
    double dn2 = 0.0;
    try {
      rhs(t + dir * h0, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) k3[i] = k2[i] - k1[i];
      dn2 = rms(k3, y) / h0;
    } catch (const std::domain_error&) {
      dn2 = 0.0;
    }
    const double m = std::max(dn1, dn2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min({h, opts.max_step, std::abs(t_end - t0)});

  std::vector<double> gprev(events.size());
  for (std::size_t e = 0; e < events.size(); ++e) gprev[e] = events[e].g(t, y);

  double err_old = 1e-4;
  bool last_rejected = false;
  while (true) {
    if (res.accepted + res.rejected >= opts.max_steps) {
      res.status = OdeStatus::MaxSteps;
      res.message = "maximum number of steps reached at t = " + std::to_string(t);
      return res;
    }
    if (h < 1e-14 * std::max(1.0, std::abs(t))) {
      res.status = OdeStatus::StepUnderflow;
      res.message = "step size underflow at t = " + std::to_string(t);
      return res;
    }
    bool last = false;
    if (h >= std::abs(t_end - t) * (1.0 - 1e-12)) {
      h = std::abs(t_end - t);
      last = true;
    }
    const double hs = dir * h;

    bool ok = true;
    double err = 0.0;
    try {
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * a21 * k1[i];
      rhs(t + c2 * hs, ytmp, k2);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
      rhs(t + c3 * hs, ytmp, k3);
      for (std::size_t i = 0; i < n; ++i) ytmp[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
      rhs(t + c4 * hs, ytmp, k4);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
      rhs(t + c5 * hs, ytmp, k5);
      for (std::size_t i = 0; i < n; ++i)
        ytmp[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
      rhs(t + hs, ytmp, k6);
      for (std::size_t i = 0; i < n; ++i)
        ynew[i] = y[i] + hs * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
      ok = finite(ynew) && (!valid || valid(ynew));
      if (ok) {
        rhs(t + hs, ynew, k7);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double ei = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
          const double q = ei / scale(y[i], ynew[i]);
          acc += q * q;
        }
        err = std::sqrt(acc / static_cast<double>(n));
        ok = std::isfinite(err);
      }
    } catch (const std::domain_error&) {
      ok = false;
    }

    if (!ok) {
      ++res.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    if (err > 1.0) {
      ++res.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      last_rejected = true;
      continue;
    }

    // Accepted: build the continuous extension.
    DenseStep step;
    step.t0 = t;
    step.h = hs;
    step.r.resize(5 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const double ydiff = ynew[i] - y[i];
      const double bspl = hs * k1[i] - ydiff;
      step.r[i] = y[i];
      step.r[n + i] = ydiff;
      step.r[2 * n + i] = bspl;
      step.r[3 * n + i] = ydiff - hs * k7[i] - bspl;
      step.r[4 * n + i] = hs * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i] + d7 * k7[i]);
    }
    const double t_new = last ? t_end : t + hs;
    res.solution.push(std::move(step), t_new, ynew);
    ++res.accepted;

    // Events, localized on the interpolant of this step.
    double stop_t = 0.0;
    int stop_event = -1;
    for (std::size_t e = 0; e < events.size(); ++e) {
      const double gnew = events[e].g(t_new, ynew);
      const double ga = gprev[e];
      const bool up = ga < 0.0 && gnew >= 0.0, down = ga > 0.0 && gnew <= 0.0;
      const bool hit = (events[e].direction >= 0 && up) || (events[e].direction <= 0 && down);
      if (hit) {
        auto g_of = [&](double tau) {
          res.solution.eval(tau, ytmp);
          return events[e].g(tau, ytmp);
        };
        double te = t_new;
        if (gnew != 0.0) {
          std::uintmax_t iters = 200;
          auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-12 * std::max(1.0, std::abs(a)); };
          const double lo = std::min(t, t_new), hi = std::max(t, t_new);
          const double glo = lo == t ? ga : gnew, ghi = hi == t ? ga : gnew;
          const auto br = boost::math::tools::toms748_solve(g_of, lo, hi, glo, ghi, tol, iters);
          // Report the bracket end on the post-crossing side.
          te = (g_of(br.first) > 0.0) == (ga > 0.0) ? br.second : br.first;
        }
        EventHit hitrec{static_cast<int>(e), te, res.solution(te)};
        if (events[e].terminal && (stop_event < 0 || dir * (te - stop_t) < 0.0)) {
          stop_event = static_cast<int>(e);
          stop_t = te;
        }
        res.events.push_back(std::move(hitrec));
      }
      gprev[e] = gnew;
    }
    if (stop_event >= 0) {
      // Drop hits of other events past the terminal time.
      std::erase_if(res.events, [&](const EventHit& eh) { return dir * (eh.t - stop_t) > 0.0; });
      res.solution.truncate(stop_t, res.solution(stop_t));
      res.status = OdeStatus::EventStop;
      return res;
    }

    t = t_new;
    y = ynew;
    k1 = k7;
    if (last) return res;

    // PI step-size control.
    const double e = std::max(err, 1e-10);
    double fac = 0.9 * std::pow(e, -0.17) * std::pow(err_old, 0.04);
    fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 10.0);
    err_old = std::max(err, 1e-4);
    h = std::min(h * fac, opts.max_step);
    last_rejected = false;
  }
}

}  // namespace tunnel
