#include "tunnel/effective_potential.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>

namespace tunnel {

namespace {

void require_positive_width(double s) {
  if (!(s > 0.0)) throw DomainError("fluctuation width s must be positive");
}

bool second_order_supported(const PotentialModel& model) {
  return dimension(model) == 1 || std::holds_alternative<Harmonic>(model) ||
         std::holds_alternative<FreeParticle>(model);
}

}  // namespace

double v_eff_1d(EffPotentialKind kind, const Potential1D& V, double x, double s, double U) {
  require_positive_width(s);
  const double barrier = U / (2.0 * s * s);
  if (kind == EffPotentialKind::AllOrders) return barrier + 0.5 * (V.V(x + s) + V.V(x - s));
  return V.V(x) + barrier + 0.5 * V.d2(x) * s * s;
}

Gradient1D grad_v_eff_1d(EffPotentialKind kind, const Potential1D& V, double x, double s, double U) {
  require_positive_width(s);
  const double dbarrier = -U / (s * s * s);
  if (kind == EffPotentialKind::AllOrders) {
    const double gp = V.d1(x + s), gm = V.d1(x - s);
    return {0.5 * (gp + gm), dbarrier + 0.5 * (gp - gm)};
  }
  return {V.d1(x) + 0.5 * V.d3(x) * s * s, dbarrier + V.d2(x) * s};
}

Potential1D as_potential_1d(const PotentialModel& model, double field) {
  if (dimension(model) != 1) throw ConfigurationError("as_potential_1d needs a one-dimensional model");
  if (const auto* g = std::get_if<GaussianWell1D>(&model)) {
    const double D = g->depth;
    return {[D, field](double x) { return -D * std::exp(-x * x) + x * field; },
            [D, field](double x) { return 2.0 * D * x * std::exp(-x * x) + field; },
            [D](double x) { return D * (2.0 - 4.0 * x * x) * std::exp(-x * x); },
            [D](double x) { return D * (8.0 * x * x * x - 12.0 * x) * std::exp(-x * x); }};
  }
  if (const auto* h = std::get_if<Harmonic>(&model)) {
    const double k = h->k;
    return {[k, field](double x) { return 0.5 * k * x * x + x * field; },
            [k, field](double x) { return k * x + field; }, [k](double) { return k; }, [](double) { return 0.0; }};
  }
  return {[field](double x) { return x * field; }, [field](double) { return field; }, [](double) { return 0.0; },
          [](double) { return 0.0; }};
}

double v_eff_3d(const std::function<double(const Vec3&)>& V, const Vec3& x, const Vec3& s, const Vec3& U) {
  double barrier = 0.0;
  for (int i = 0; i < 3; ++i) {
    require_positive_width(s[i]);
    barrier += U[i] / (2.0 * s[i] * s[i]);
  }
  double acc = 0.0;
  for (int n = 0; n < 8; ++n) {
    Vec3 c;
    for (int i = 0; i < 3; ++i) c[i] = x[i] + ((n >> i) & 1 ? -s[i] : s[i]);
    acc += V(c);
  }
  return barrier + acc / 8.0;
}

double v_eff(EffPotentialKind kind, const PotentialModel& model, const Vec3& field, const Vec3& x, const Vec3& s,
             const Vec3& U) {
  const int dim = dimension(model);
  if (dim == 1) return v_eff_1d(kind, as_potential_1d(model, field[0]), x[0], s[0], U[0]);
  if (kind == EffPotentialKind::SecondOrder) {
    if (!second_order_supported(model)) {
      throw UnsupportedConfiguration("second-order effective potential is only provided for quadratic 3-D models");
    }
    const double k = std::holds_alternative<Harmonic>(model) ? std::get<Harmonic>(model).k : 0.0;
    double acc = classical_potential(model, x, field);
    for (int i = 0; i < 3; ++i) {
      require_positive_width(s[i]);
      acc += U[i] / (2.0 * s[i] * s[i]) + 0.5 * k * s[i] * s[i];
    }
    return acc;
  }
  return v_eff_3d([&](const Vec3& r) { return classical_potential(model, r, field); }, x, s, U);
}

EffGradient grad_v_eff(EffPotentialKind kind, const PotentialModel& model, const Vec3& field, const Vec3& x,
                       const Vec3& s, const Vec3& U) {
  EffGradient g;
  const int dim = dimension(model);
  if (dim == 1) {
    const auto g1 = grad_v_eff_1d(kind, as_potential_1d(model, field[0]), x[0], s[0], U[0]);
    g.dx[0] = g1.dx;
    g.ds[0] = g1.ds;
    return g;
  }
  for (int i = 0; i < 3; ++i) {
    require_positive_width(s[i]);
    g.ds[i] = -U[i] / (s[i] * s[i] * s[i]);
  }
  if (kind == EffPotentialKind::SecondOrder) {
    if (!second_order_supported(model)) {
      throw UnsupportedConfiguration("second-order effective potential is only provided for quadratic 3-D models");
    }
    const double k = std::holds_alternative<Harmonic>(model) ? std::get<Harmonic>(model).k : 0.0;
    g.dx = classical_gradient(model, x, field);
    for (int i = 0; i < 3; ++i) g.ds[i] += k * s[i];
    return g;
  }
  std::array<Vec3, 8> gc;
  for (int n = 0; n < 8; ++n) {
    Vec3 c;
    for (int i = 0; i < 3; ++i) c[i] = x[i] + ((n >> i) & 1 ? -s[i] : s[i]);
    gc[n] = classical_gradient(model, c, field);
  }
  // Pair corners that differ only in the sign along axis i before summing, so
  // a state symmetric under x_i -> -x_i gets an exactly vanishing force along i.
  for (int i = 0; i < 3; ++i) {
    double sum = 0.0, diff = 0.0;
    for (int n = 0; n < 8; ++n) {
      if ((n >> i) & 1) continue;
      const double plus = gc[n][i], minus = gc[n | (1 << i)][i];
      sum += plus + minus;
      diff += plus - minus;
    }
    g.dx[i] = sum / 8.0;
    g.ds[i] += diff / 8.0;
  }
  return g;
}

// ---------------------------------------------------------------------------

double contour_plane_value(const PotentialModel& model, const Vec3& field, const ContourSpec& spec, double x,
                           double s) {
  Vec3 xs = kZero3;
  Vec3 ss = spec.frozen_s;
  const int axis = dimension(model) == 1 ? 0 : spec.axis;
  xs[axis] = x;
  ss[axis] = s;
  return v_eff(spec.kind, model, field, xs, ss, spec.U);
}

namespace {

struct PlaneGrid {
  int nx, ns;
  double hx, hs;
  std::vector<double> f;  // V_eff − level at nodes, row-major in s

  double x(const ContourSpec& c, int i) const { return c.x_min + i * hx; }
  double s(const ContourSpec& c, int j) const { return c.s_min + j * hs; }
  double at(int i, int j) const { return f[static_cast<std::size_t>(j) * nx + i]; }
};

PlaneGrid sample_plane(const PotentialModel& model, const Vec3& field, double level, const ContourSpec& spec) {
  if (spec.nx < 2 || spec.ns < 2) throw ConfigurationError("contour grid needs at least 2x2 nodes");
  if (!(spec.x_max > spec.x_min) || !(spec.s_max > spec.s_min) || !(spec.s_min > 0.0)) {
    throw ConfigurationError("contour grid ranges are empty or reach s <= 0");
  }
  PlaneGrid g{spec.nx, spec.ns, (spec.x_max - spec.x_min) / (spec.nx - 1), (spec.s_max - spec.s_min) / (spec.ns - 1),
              {}};
  g.f.resize(static_cast<std::size_t>(g.nx) * g.ns);
  for (int j = 0; j < g.ns; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      g.f[static_cast<std::size_t>(j) * g.nx + i] =
          contour_plane_value(model, field, spec, g.x(spec, i), g.s(spec, j)) - level;
    }
  }
  return g;
}

}  // namespace

ContourGrid equipotential_contour(const PotentialModel& model, const Vec3& field, double level,
                                  const ContourSpec& spec) {
  const PlaneGrid g = sample_plane(model, field, level, spec);
  auto value = [&](double x, double s) { return contour_plane_value(model, field, spec, x, s) - level; };

  // Edge keys: horizontal edge (i,j)-(i+1,j) -> even, vertical (i,j)-(i,j+1) -> odd.
  auto hkey = [&](int i, int j) { return 2 * (static_cast<std::int64_t>(j) * g.nx + i); };
  auto vkey = [&](int i, int j) { return 2 * (static_cast<std::int64_t>(j) * g.nx + i) + 1; };

  std::unordered_map<std::int64_t, ContourPoint> points;
  std::unordered_map<std::int64_t, std::vector<std::int64_t>> adj;

  auto crossing = [&](std::int64_t key) {
    if (points.count(key)) return;
    const auto node = key / 2;
    const int i = static_cast<int>(node % g.nx), j = static_cast<int>(node / g.nx);
    const bool horizontal = (key % 2) == 0;
    const int i2 = horizontal ? i + 1 : i, j2 = horizontal ? j : j + 1;
    double a = 0.0, b = 1.0, fa = g.at(i, j), fb = g.at(i2, j2);
    auto point_at = [&](double u) {
      return ContourPoint{g.x(spec, i) + u * (g.x(spec, i2) - g.x(spec, i)),
                          g.s(spec, j) + u * (g.s(spec, j2) - g.s(spec, j))};
    };
    // Regula falsi with the Illinois modification along the edge.
    double u = a - fa * (b - a) / (fb - fa);
    int side = 0;
    for (int it = 0; it < 60 && b - a > 1e-13; ++it) {
      u = (a * fb - b * fa) / (fb - fa);
      const ContourPoint p = point_at(u);
      const double fu = value(p.x, p.s);
      if (fu == 0.0) break;
      if ((fu < 0.0) == (fa < 0.0)) {
        a = u;
        fa = fu;
        if (side == -1) fb /= 2.0;
        side = -1;
      } else {
        b = u;
        fb = fu;
        if (side == 1) fa /= 2.0;
        side = 1;
      }
      if (std::abs(fu) < 1e-13) break;
    }
    points[key] = point_at(u);
  };
  auto segment = [&](std::int64_t k1, std::int64_t k2) {
    crossing(k1);
    crossing(k2);
    adj[k1].push_back(k2);
    adj[k2].push_back(k1);
  };

  for (int j = 0; j + 1 < g.ns; ++j) {
    for (int i = 0; i + 1 < g.nx; ++i) {
      const bool a = g.at(i, j) < 0.0, b = g.at(i + 1, j) < 0.0;
      const bool c = g.at(i + 1, j + 1) < 0.0, d = g.at(i, j + 1) < 0.0;
      const std::int64_t bottom = hkey(i, j), right = vkey(i + 1, j), top = hkey(i, j + 1), left = vkey(i, j);
      std::vector<std::int64_t> edges;
      if (a != b) edges.push_back(bottom);
      if (b != c) edges.push_back(right);
      if (c != d) edges.push_back(top);
      if (d != a) edges.push_back(left);
      if (edges.size() == 2) {
        segment(edges[0], edges[1]);
      } else if (edges.size() == 4) {
        const double centre = 0.25 * (g.at(i, j) + g.at(i + 1, j) + g.at(i + 1, j + 1) + g.at(i, j + 1));
        if ((centre < 0.0) == a) {
          segment(bottom, right);
          segment(top, left);
        } else {
          segment(left, bottom);
          segment(right, top);
        }
      }
    }
  }

  ContourGrid out{spec, level, {}};
  std::unordered_map<std::int64_t, bool> used;
  auto walk = [&](std::int64_t start) {
    std::vector<ContourPoint> line{points[start]};
    used[start] = true;
    std::int64_t cur = start;
    while (true) {
      std::int64_t next = -1;
      for (auto n : adj[cur]) {
        if (!used[n]) {
          next = n;
          break;
        }
      }
      if (next < 0) {
        // Close loops back onto their start.
        for (auto n : adj[cur]) {
          if (n == start && line.size() > 2) line.push_back(points[start]);
        }
        break;
      }
      used[next] = true;
      line.push_back(points[next]);
      cur = next;
    }
    out.polylines.push_back(std::move(line));
  };
  // Deterministic order: open chains first (from their lowest key), then loops.
  std::vector<std::int64_t> keys;
  keys.reserve(adj.size());
  for (const auto& [k, _] : adj) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  for (auto k : keys)
    if (!used[k] && adj[k].size() == 1) walk(k);
  for (auto k : keys)
    if (!used[k]) walk(k);
  return out;
}

bool channel_open(const PotentialModel& model, const Vec3& field, double level, const ContourSpec& spec, double x0,
                  double s0) {
  const PlaneGrid g = sample_plane(model, field, level, spec);
  std::vector<char> seen(g.f.size(), 0);
  std::deque<std::pair<int, int>> queue;
  const int ic = static_cast<int>(std::lround((x0 - spec.x_min) / g.hx));
  const int jc = static_cast<int>(std::lround((s0 - spec.s_min) / g.hs));
  for (int dj = -2; dj <= 2; ++dj) {
    for (int di = -2; di <= 2; ++di) {
      const int i = ic + di, j = jc + dj;
      if (i < 0 || j < 0 || i >= g.nx || j >= g.ns) continue;
      if (g.at(i, j) <= 0.0) {
        seen[static_cast<std::size_t>(j) * g.nx + i] = 1;
        queue.emplace_back(i, j);
      }
    }
  }
  while (!queue.empty()) {
    const auto [i, j] = queue.front();
    queue.pop_front();
    if (i == g.nx - 1) return true;
    const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      const int ni = i + di[k], nj = j + dj[k];
      if (ni < 0 || nj < 0 || ni >= g.nx || nj >= g.ns) continue;
      auto& flag = seen[static_cast<std::size_t>(nj) * g.nx + ni];
      if (flag || g.at(ni, nj) > 0.0) continue;
      flag = 1;
      queue.emplace_back(ni, nj);
    }
  }
  return false;
}

}  // namespace tunnel
