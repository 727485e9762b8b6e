#include "tunnel/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tunnel/parallel.hpp"

namespace tunnel {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Strict view of a JSON object: every key must be read, or parsing fails.
class Fields {
 public:
  Fields(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigurationError(where_ + ": expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key, std::optional<double> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigurationError(path(key) + ": required number is missing");
    }
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigurationError(path(key) + ": expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigurationError(path(key) + ": expected a finite number");
    return d;
  }

  double positive(const std::string& key, std::optional<double> fallback = std::nullopt) {
    const double d = number(key, fallback);
    if (!(d > 0.0)) throw ConfigurationError(path(key) + ": must be > 0");
    return d;
  }

  int integer(const std::string& key, int fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_number_integer()) throw ConfigurationError(path(key) + ": expected an integer");
    return v.get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigurationError(path(key) + ": expected true or false");
    return v.get<bool>();
  }

  std::string string(const std::string& key, std::optional<std::string> fallback = std::nullopt) {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigurationError(path(key) + ": required string is missing");
    }
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigurationError(path(key) + ": expected a string");
    return v.get<std::string>();
  }

  Vec3 vec3(const std::string& key, Vec3 fallback) {
    if (!has(key)) return fallback;
    const json& v = raw(key);
    if (!v.is_array() || v.size() != 3) throw ConfigurationError(path(key) + ": expected an array of 3 numbers");
    Vec3 out;
    for (std::size_t i = 0; i < 3; ++i) {
      if (!v[i].is_number()) throw ConfigurationError(path(key) + ": expected an array of 3 numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  std::string path(const std::string& key) const { return where_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw ConfigurationError(path(key) + ": unknown key");
    }
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

PotentialModel parse_model(const json& j) {
  if (j.is_string()) return parse_model(json{{"type", j}});
  Fields f(j, "model");
  const std::string type = f.string("type");
  PotentialModel m;
  if (type == "gaussian_well") {
    m = GaussianWell1D{f.positive("depth", 0.7781174228)};
  } else if (type == "coulomb") {
    m = Coulomb3D{f.number("alpha_I", 0.0), f.number("softening", kDefaultSoftening)};
  } else if (type == "hydrogen") {
    m = Hydrogen3D{f.number("softening", kDefaultSoftening)};
  } else if (type == "harmonic") {
    m = Harmonic{f.integer("dim", 1), f.positive("k", 1.0)};
  } else if (type == "free") {
    m = FreeParticle{f.integer("dim", 1)};
  } else {
    throw ConfigurationError("model.type: unknown model '" + type + "'");
  }
  f.finish();
  validate(m);
  return m;
}

FieldPulse parse_pulse(const json& j) {
  Fields f(j, "pulse");
  const std::string type = f.string("type");
  FieldPulse p;
  if (type == "static") {
    p = StaticField{f.vec3("F", kZero3)};
  } else if (type == "half_cycle") {
    p = HalfCycleSin3{f.number("F0"), f.positive("omega")};
  } else if (type == "sin_envelope") {
    p = SinEnvelope{f.number("F0"), f.positive("omega"), f.positive("cycles")};
  } else if (type == "cos_envelope") {
    p = CosEnvelope{f.number("A0"), f.positive("omega"), f.positive("cycles", 2.0), f.number("ellipticity", 1.0)};
  } else if (type == "rotating_half_cycle") {
    p = RotatingHalfCycle{f.number("E0"), f.positive("omega")};
  } else {
    throw ConfigurationError("pulse.type: unknown pulse '" + type + "'");
  }
  f.finish();
  validate(p);
  return p;
}

void parse_integrator(const json& j, IntegratorConfig& c) {
  Fields f(j, "integrator");
  c.rel_tol = f.positive("rel_tol", c.rel_tol);
  c.abs_tol = f.positive("abs_tol", c.abs_tol);
  c.max_step = f.positive("max_step", c.max_step);
  c.t_start = f.number("t_start", c.t_start);
  c.t_end = f.number("t_end", c.t_end);
  c.output_dt = f.number("output_dt", c.output_dt);
  f.finish();
}

ContourRequest parse_contour(const json& j) {
  Fields f(j, "contour");
  ContourRequest r;
  if (f.has("level")) r.level = f.number("level");
  ContourSpec& s = r.spec;
  s.x_min = f.number("x_min", s.x_min);
  s.x_max = f.number("x_max", s.x_max);
  s.s_min = f.positive("s_min", s.s_min);
  s.s_max = f.positive("s_max", s.s_max);
  s.nx = f.integer("nx", s.nx);
  s.ns = f.integer("ns", s.ns);
  s.axis = f.integer("axis", s.axis);
  f.finish();
  if (s.axis < 0 || s.axis > 2) throw ConfigurationError("contour.axis: must be 0, 1 or 2");
  return r;
}

std::vector<SweepAxis> parse_sweep(const json& j) {
  std::vector<SweepAxis> out;
  const json list = j.is_array() ? j : json::array({j});
  for (std::size_t k = 0; k < list.size(); ++k) {
    Fields f(list[k], "sweep[" + std::to_string(k) + "]");
    SweepAxis a;
    a.parameter = f.string("parameter");
    const json& v = f.raw("values");
    if (!v.is_array() || v.empty()) throw ConfigurationError(f.path("values") + ": expected a non-empty array");
    for (const auto& x : v) {
      if (!x.is_number()) throw ConfigurationError(f.path("values") + ": expected numbers");
      a.values.push_back(x.get<double>());
    }
    f.finish();
    out.push_back(std::move(a));
  }
  return out;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigurationError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

double pulse_cycles(const FieldPulse& p) {
  if (std::holds_alternative<HalfCycleSin3>(p) || std::holds_alternative<RotatingHalfCycle>(p)) return 0.5;
  if (const auto* s = std::get_if<SinEnvelope>(&p)) return s->cycles;
  if (const auto* c = std::get_if<CosEnvelope>(&p)) return c->cycles;
  return 0.0;
}

double peak_field(const FieldPulse& p) {
  if (const auto* s = std::get_if<StaticField>(&p)) return norm(s->F);
  return norm(field_vector(p, peak_field_time(p)));
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  return os;
}

void put(std::ostream& os, double v) { os << format_number(v); }

void put(std::ostream& os, const std::optional<double>& v) {
  if (v && std::isfinite(*v)) os << format_number(*v);
}

}  // namespace

// ---------------------------------------------------------------------------

void RunConfig::validate() const {
  tunnel::validate(model);
  tunnel::validate(pulse);
  integrator.validate();
  system().validate();
  if (!(U > 0.0)) throw ConfigurationError("U: must be > 0");
  if (!(t_f > integrator.t_start)) throw ConfigurationError("t_f: must lie after integrator.t_start");
  if (!(detection_radius > 0.0)) throw ConfigurationError("detection_radius: must be > 0");
  for (const auto& a : sweep) {
    if (a.values.empty()) throw ConfigurationError("sweep: grid for '" + a.parameter + "' is empty");
    for (double v : a.values) with_parameter(*this, a.parameter, v);
  }
}

RunConfig parse_config_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigurationError(std::string("config is not valid JSON: ") + e.what());
  }
  Fields f(j, "config");
  const int version = f.integer("version", kConfigVersion);
  if (version != kConfigVersion) {
    throw ConfigurationError("config.version: unsupported schema version " + std::to_string(version));
  }
  RunConfig c;
  c.model = parse_model(f.raw("model"));
  if (f.has("pulse")) c.pulse = parse_pulse(f.raw("pulse"));
  const std::string frame = f.string("frame", "lab");
  if (frame == "corotating") {
    c.frame = CoRotatingFrame{};
  } else if (frame != "lab") {
    throw ConfigurationError("config.frame: expected 'lab' or 'corotating'");
  }
  const std::string kind = f.string("effective_potential", "all_orders");
  if (kind == "second_order") {
    c.kind = EffPotentialKind::SecondOrder;
  } else if (kind != "all_orders") {
    throw ConfigurationError("config.effective_potential: expected 'all_orders' or 'second_order'");
  }
  c.U = f.positive("U", kDefaultU);
  if (f.has("integrator")) parse_integrator(f.raw("integrator"), c.integrator);
  c.t_f = f.number("t_f", c.t_f);
  c.detection_radius = f.positive("detection_radius", c.detection_radius);
  c.wkb_factor_two = f.boolean("wkb_kinetic_factor_two", false);
  if (f.has("criteria")) {
    const json& list = f.raw("criteria");
    if (!list.is_array()) throw ConfigurationError("config.criteria: expected an array of names");
    for (const auto& n : list) {
      if (!n.is_string()) throw ConfigurationError("config.criteria: expected an array of names");
      c.criteria.push_back(criterion_from_name(n.get<std::string>()));
    }
  }
  if (f.has("sweep")) c.sweep = parse_sweep(f.raw("sweep"));
  if (f.has("contour")) c.contour = parse_contour(f.raw("contour"));
  c.output = f.string("output", "out");
  f.finish();
  c.validate();
  return c;
}

RunConfig parse_config(const fs::path& path) { return parse_config_text(read_file(path)); }

RunConfig with_parameter(const RunConfig& cfg, const std::string& parameter, double value) {
  RunConfig c = cfg;
  if (parameter == "F0") {
    c.pulse = with_amplitude(c.pulse, value);
  } else if (parameter == "omega") {
    if (!(value > 0.0)) throw ConfigurationError("sweep: omega must be > 0");
    c.pulse = with_frequency(c.pulse, value);
  } else if (parameter == "cycles") {
    if (auto* s = std::get_if<SinEnvelope>(&c.pulse)) {
      s->cycles = value;
    } else if (auto* e = std::get_if<CosEnvelope>(&c.pulse)) {
      e->cycles = value;
    } else {
      throw ConfigurationError("sweep: pulse '" + std::string(pulse_name(c.pulse)) + "' has no cycle count");
    }
  } else if (parameter == "alpha_I") {
    auto* m = std::get_if<Coulomb3D>(&c.model);
    if (!m) throw ConfigurationError("sweep: alpha_I needs the coulomb model");
    m->alpha_I = value;
  } else if (parameter == "depth") {
    auto* m = std::get_if<GaussianWell1D>(&c.model);
    if (!m) throw ConfigurationError("sweep: depth needs the gaussian_well model");
    m->depth = value;
  } else {
    throw ConfigurationError("sweep: unknown parameter '" + parameter + "'");
  }
  validate(c.model);
  validate(c.pulse);
  return c;
}

std::string format_number(double v) {
  if (!std::isfinite(v)) throw std::domain_error("non-finite value in CSV output");
  if (v == 0.0) v = 0.0;  // no negative zero
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------

std::vector<CriterionRow> evaluate_criteria(const RunConfig& cfg, const Trajectory& traj) {
  const System& sys = traj.system();
  const int dim = traj.dim();
  const double F0 = peak_field(sys.pulse);
  const double tau_max = peak_field_time(sys.pulse);

  std::optional<double> spot, offset;
  if (dim == 3) {
    if (const auto sp = spot_size(traj, cfg.detection_radius); sp.found) spot = sp.spot;
    const auto oa = offset_angle(traj, cfg.detection_radius);
    if (std::isfinite(oa.final_angle)) offset = oa.final_angle * 180.0 / std::numbers::pi;
  }

  // Longitudinal components: along the single axis in 1-D, along the field at the exit in 3-D.
  auto project = [&](const std::optional<Vec3>& v, double t) -> std::optional<double> {
    if (!v) return std::nullopt;
    if (dim == 1) return (*v)[0];
    Vec3 e = field_vector(sys.pulse, t);
    if (norm(e) < 1e-14) return norm(*v);
    return dot(*v, (1.0 / norm(e)) * e);
  };

  std::optional<FluctuationSeries> series;
  auto fluct = [&]() -> const FluctuationSeries& {
    if (!series) {
      auto s = transverse_fluctuation(traj, 0.01);
      // The criteria read the series up to t_f, like the back-propagation.
      std::size_t n = 0;
      while (n < s.t.size() && s.t[n] <= cfg.t_f + 1e-9) ++n;
      s.t.resize(n);
      s.s_T.resize(n);
      s.d2.resize(n);
      series = std::move(s);
    }
    return *series;
  };

  std::optional<GroundState> ground;
  auto ground_state = [&]() -> const GroundState& {
    if (!ground) ground = ground_state_init(sys.model, cfg.U, sys.kind);
    return *ground;
  };

  std::vector<CriterionRow> rows;
  for (CriterionId id : cfg.criteria) {
    CriterionRow row;
    row.F0 = F0;
    row.omega = pulse_frequency(sys.pulse);
    row.cycles = pulse_cycles(sys.pulse);
    row.intensity = intensity_conversion(F0);
    row.spot = spot;
    row.offset_deg = offset;
    CriterionResult& r = row.result;
    switch (id) {
      case CriterionId::Energy:
        r = exit_time_energy(traj);
        break;
      case CriterionId::MomentumBackprop:
        r = exit_time_momentum_backprop(traj, cfg.t_f).result;
        break;
      case CriterionId::StaticTraversal:
        r = static_traversal(traj, ground_state().energy);
        break;
      case CriterionId::WkbIntegral: {
        r.id = id;
        const auto* stat = std::get_if<StaticField>(&sys.pulse);
        if (!stat) throw ConfigurationError("wkb_integral needs a static field");
        try {
          r.tau_max = 0.0;
          r.set_exit(wkb_like_time(sys.model, stat->F, ground_state().energy, ground_state().state,
                                   {.kinetic_factor_two = cfg.wkb_factor_two}));
        } catch (const DomainError& e) {
          r.diagnostic = e.what();
        }
        break;
      }
      case CriterionId::FluctFit:
        if (dim != 3) throw UnsupportedConfiguration("fluct_fit needs a 3-D model");
        r = exit_time_fluct_fit(fluct(), tau_max);
        break;
      case CriterionId::FluctInflection: {
        if (dim != 3) throw UnsupportedConfiguration("fluct_inflection needs a 3-D model");
        const auto [a, b] = pulse_support(sys.pulse);
        r = exit_time_fluct_inflection(fluct(), tau_max, a, b);
        break;
      }
    }
    if (r.found) {
      row.exit_x = project(r.exit_position, r.tau_exit);
      row.exit_p = project(r.exit_momentum, r.tau_exit);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  const int d = traj.dim();
  os << "t";
  for (const char* name : {"x", "p", "s", "ps"})
    for (int i = 1; i <= d; ++i) os << ',' << name << i;
  os << ",HQ,E_nofield";
  if (d == 1) {
    os << ",Fx\n";
  } else {
    os << ",Fx,Fy,Fz\n";
  }
  for (double t : traj.times()) {
    const ExtendedState st = traj.at(t);
    put(os, t);
    for (int i = 0; i < d; ++i) os << ',' << format_number(st.axis(i).x);
    for (int i = 0; i < d; ++i) os << ',' << format_number(st.axis(i).p);
    for (int i = 0; i < d; ++i) os << ',' << format_number(st.axis(i).s);
    for (int i = 0; i < d; ++i) os << ',' << format_number(st.axis(i).ps);
    os << ',' << format_number(quantum_hamiltonian(st, traj.system())) << ','
       << format_number(interaction_free_energy(st, traj.system()));
    const Vec3 F = field_vector(traj.system().pulse, t);
    for (int i = 0; i < (d == 1 ? 1 : 3); ++i) os << ',' << format_number(F[i]);
    os << '\n';
  }
}

void write_criteria_header(std::ostream& os, const std::vector<std::string>& leading) {
  for (const auto& l : leading) os << l << ',';
  os << "criterion,F0,omega,N,intensity_Wcm2,tau_max,tau_exit,tau_ion,exit_x,exit_p,spot_size,offset_angle_deg,"
        "found\n";
}

void write_criterion_row(std::ostream& os, const CriterionRow& row, const std::vector<double>& leading) {
  for (double l : leading) os << format_number(l) << ',';
  const CriterionResult& r = row.result;
  os << criterion_name(r.id) << ',' << format_number(row.F0) << ',' << format_number(row.omega) << ','
     << format_number(row.cycles) << ',' << format_number(row.intensity) << ',' << format_number(r.tau_max) << ',';
  if (r.found) os << format_number(r.tau_exit);
  os << ',';
  if (r.found) os << format_number(r.tau_ionization);
  os << ',';
  put(os, row.exit_x);
  os << ',';
  put(os, row.exit_p);
  os << ',';
  put(os, row.spot);
  os << ',';
  put(os, row.offset_deg);
  os << ',' << (r.found ? 1 : 0) << '\n';
}

void write_contour_csv(std::ostream& os, const ContourGrid& grid) {
  os << "x3,s3,segment_id\n";
  for (std::size_t k = 0; k < grid.polylines.size(); ++k) {
    for (const auto& p : grid.polylines[k]) os << format_number(p.x) << ',' << format_number(p.s) << ',' << k << '\n';
  }
}

void write_ground_state_csv(std::ostream& os, const GroundState& gs) {
  os << "axis,x,p,s,ps,U,energy\n";
  for (int i = 0; i < gs.state.dim(); ++i) {
    const AxisState& a = gs.state.axis(i);
    os << i + 1 << ',' << format_number(a.x) << ',' << format_number(a.p) << ',' << format_number(a.s) << ','
       << format_number(a.ps) << ',' << format_number(gs.state.U(i)) << ',' << format_number(gs.energy) << '\n';
  }
}

void write_path_csv(std::ostream& os, const ClassicalPath& path) {
  const int d = path.dim;
  os << "t";
  for (const char* name : {"x", "p"})
    for (int i = 1; i <= d; ++i) os << ',' << name << i;
  os << '\n';
  const auto& ts = path.times();
  // Backward integration stores a descending grid; rows go forward in time.
  std::vector<double> rows(ts.begin(), ts.end());
  std::sort(rows.begin(), rows.end());
  for (double t : rows) {
    const Vec3 x = path.position(t), p = path.momentum(t);
    put(os, t);
    for (int i = 0; i < d; ++i) os << ',' << format_number(x[i]);
    for (int i = 0; i < d; ++i) os << ',' << format_number(p[i]);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------

void write_error_report(const fs::path& dir, const std::string& kind, const std::string& message) {
  fs::create_directories(dir);
  json j{{"error", kind}, {"message", message}};
  auto os = open_out(dir / "error.json");
  os << j.dump(2) << '\n';
}

namespace {

IntegratorConfig run_integrator(const RunConfig& cfg) {
  IntegratorConfig c = cfg.integrator;
  if (dimension(cfg.model) == 3) c.stop_radius = cfg.detection_radius;
  return c;
}

RunSummary finish(RunSummary s, const fs::path& dir) {
  for (auto& p : emit_plot_scripts(dir)) s.files.push_back(std::move(p));
  return s;
}

}  // namespace

RunSummary run_scenario(const RunConfig& cfg, bool with_criteria) {
  RunSummary s;
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  const Trajectory traj = evolve_ground_state(cfg.system(), run_integrator(cfg), cfg.U);
  {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, traj);
    s.files.push_back(dir / "trajectory.csv");
  }
  if (traj.failed()) {
    s.ok = false;
    s.error = traj.message();
    write_error_report(dir, "integration_failure", traj.message());
    return finish(std::move(s), dir);
  }
  if (with_criteria && !cfg.criteria.empty()) {
    auto os = open_out(dir / "criteria.csv");
    write_criteria_header(os);
    for (const auto& row : evaluate_criteria(cfg, traj)) write_criterion_row(os, row);
    s.files.push_back(dir / "criteria.csv");
  }
  if (cfg.contour) {
    auto c = run_contour(cfg);
    for (auto& f : c.files) s.files.push_back(std::move(f));
    return s;
  }
  return finish(std::move(s), dir);
}

RunSummary run_ground_state(const RunConfig& cfg) {
  RunSummary s;
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  const GroundState gs = ground_state_init(cfg.model, cfg.U, cfg.kind);
  auto os = open_out(dir / "ground_state.csv");
  write_ground_state_csv(os, gs);
  s.files.push_back(dir / "ground_state.csv");
  return s;
}

RunSummary run_contour(const RunConfig& cfg) {
  RunSummary s;
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  const ContourRequest req = cfg.contour.value_or(ContourRequest{});
  const GroundState gs = ground_state_init(cfg.model, cfg.U, cfg.kind);
  ContourSpec spec = req.spec;
  spec.kind = cfg.kind;
  for (int i = 0; i < gs.state.dim(); ++i) {
    spec.frozen_s[i] = gs.state.axis(i).s;
    spec.U[i] = gs.state.U(i);
  }
  // The contour shows the static picture: the field of a static pulse, or the pulse at its peak.
  const Vec3 F = field_vector(cfg.pulse, peak_field_time(cfg.pulse));
  const ContourGrid grid = equipotential_contour(cfg.model, F, req.level.value_or(gs.energy), spec);
  auto os = open_out(dir / "contour.csv");
  write_contour_csv(os, grid);
  s.files.push_back(dir / "contour.csv");
  return finish(std::move(s), dir);
}

RunSummary run_backprop(const RunConfig& cfg) {
  RunSummary s;
  const fs::path dir = cfg.output;
  fs::create_directories(dir);
  IntegratorConfig ic = run_integrator(cfg);
  ic.t_end = std::max(ic.t_end, cfg.t_f);
  const Trajectory traj = evolve_ground_state(cfg.system(), ic, cfg.U);
  {
    auto os = open_out(dir / "trajectory.csv");
    write_trajectory_csv(os, traj);
    s.files.push_back(dir / "trajectory.csv");
  }
  if (traj.failed()) {
    s.ok = false;
    s.error = traj.message();
    write_error_report(dir, "integration_failure", traj.message());
    return finish(std::move(s), dir);
  }
  const BackpropResult bp = exit_time_momentum_backprop(traj, cfg.t_f);
  if (bp.path) {
    auto os = open_out(dir / "backprop.csv");
    write_path_csv(os, *bp.path);
    s.files.push_back(dir / "backprop.csv");
  }
  RunConfig only = cfg;
  only.criteria = {CriterionId::MomentumBackprop};
  auto os = open_out(dir / "criteria.csv");
  write_criteria_header(os);
  for (const auto& row : evaluate_criteria(only, traj)) write_criterion_row(os, row);
  s.files.push_back(dir / "criteria.csv");
  return finish(std::move(s), dir);
}

RunSummary run_sweep(const RunConfig& cfg, unsigned threads) {
  if (cfg.sweep.empty()) throw ConfigurationError("sweep: no sweep axes configured");
  if (cfg.criteria.empty()) throw ConfigurationError("sweep: criteria list is empty");
  RunSummary s;
  const fs::path dir = cfg.output;
  fs::create_directories(dir);

  std::vector<std::vector<double>> grid{{}};
  for (const auto& axis : cfg.sweep) {
    std::vector<std::vector<double>> next;
    for (const auto& point : grid)
      for (double v : axis.values) {
        next.push_back(point);
        next.back().push_back(v);
      }
    grid = std::move(next);
  }

  struct Slot {
    std::vector<CriterionRow> rows;
    std::string error;
  };
  std::vector<Slot> slots(grid.size());
  parallel_for(grid.size(), threads, [&](std::size_t k) {
    RunConfig c = cfg;
    for (std::size_t a = 0; a < cfg.sweep.size(); ++a) c = with_parameter(c, cfg.sweep[a].parameter, grid[k][a]);
    try {
      const Trajectory traj = evolve_ground_state(c.system(), run_integrator(c), c.U);
      if (traj.failed()) {
        slots[k].error = traj.message();
        return;
      }
      slots[k].rows = evaluate_criteria(c, traj);
    } catch (const std::exception& e) {
      slots[k].error = e.what();
    }
  });

  std::vector<std::string> names;
  for (const auto& a : cfg.sweep) names.push_back(a.parameter);
  auto os = open_out(dir / "sweep.csv");
  write_criteria_header(os, names);
  std::string errors;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (const auto& row : slots[k].rows) write_criterion_row(os, row, grid[k]);
    if (!slots[k].error.empty()) {
      std::string where;
      for (std::size_t a = 0; a < names.size(); ++a) where += names[a] + "=" + format_number(grid[k][a]) + " ";
      errors += where + ": " + slots[k].error + "\n";
    }
  }
  os.close();
  s.files.push_back(dir / "sweep.csv");
  if (!errors.empty()) {
    s.ok = false;
    s.error = errors;
    write_error_report(dir, "sweep_point_failure", errors);
  }
  return finish(std::move(s), dir);
}

// ---------------------------------------------------------------------------

std::vector<fs::path> emit_plot_scripts(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("artifact directory " + dir.string() + " does not exist");
  std::vector<fs::path> out;

  auto header_of = [](const fs::path& csv) {
    std::ifstream in(csv);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
    return cols;
  };
  auto column = [](const std::vector<std::string>& cols, const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return static_cast<int>(i) + 1;
    return 0;
  };
  auto script = [&](const std::string& name, const std::string& body) {
    const fs::path p = dir / name;
    auto os = open_out(p);
    os << "set datafile separator ','\nset key autotitle columnhead\n" << body;
    out.push_back(p);
  };

  if (fs::exists(dir / "trajectory.csv")) {
    const auto cols = header_of(dir / "trajectory.csv");
    const bool three = column(cols, "x3") > 0;
    const std::string x = three ? "x3" : "x1", s = three ? "s3" : "s1";
    std::ostringstream b;
    b << "set terminal pngcairo size 900,600\nset output 'trajectory.png'\nset xlabel 't (a.u.)'\n"
      << "plot 'trajectory.csv' using " << column(cols, "t") << ':' << column(cols, x) << " with lines title '" << x
      << "', \\\n     '' using " << column(cols, "t") << ':' << column(cols, s) << " with lines title '" << s << "'";
    if (three) b << ", \\\n     '' using " << column(cols, "t") << ':' << column(cols, "s1") << " with lines title 's1'";
    b << "\n";
    script("trajectory.gp", b.str());
  }

  auto criteria_script = [&](const std::string& csv, const std::string& name) {
    const auto cols = header_of(dir / csv);
    const int crit = column(cols, "criterion"), I = column(cols, "intensity_Wcm2"), tau = column(cols, "tau_ion");
    std::ostringstream b;
    b << "set terminal pngcairo size 900,600\nset output '" << name << ".png'\n"
      << "set xlabel 'intensity (W/cm^2)'\nset ylabel 'tau_ion (a.u.)'\nset key noautotitle\nplot ";
    bool first = true;
    for (const char* c : {"energy", "momentum_backprop", "static_traversal", "wkb_integral", "fluct_fit",
                          "fluct_inflection"}) {
      if (!first) b << ", \\\n     ";
      first = false;
      b << "'" << csv << "' using " << I << ":(strcol(" << crit << ") eq '" << c << "' ? column(" << tau
        << ") : 1/0) with linespoints title '" << c << "'";
    }
    b << "\n";
    script(name + ".gp", b.str());
  };
  if (fs::exists(dir / "criteria.csv")) criteria_script("criteria.csv", "criteria");
  if (fs::exists(dir / "sweep.csv")) criteria_script("sweep.csv", "sweep");

  if (fs::exists(dir / "contour.csv")) {
    script("contour.gp",
           "set terminal pngcairo size 900,600\nset output 'contour.png'\nset xlabel 'x3'\nset ylabel 's3'\n"
           "set key noautotitle\n"
           "plot 'contour.csv' using 1:2:3 with points pt 7 ps 0.3 lc variable\n");
  }
  return out;
}

}  // namespace tunnel
