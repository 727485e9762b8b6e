#pragma once

// Run configuration, scenario execution, sweeps and CSV / plot-script output.
//
// Configs are JSON objects with a schema version; unknown keys are rejected.
// Numbers in CSV files use the shortest representation that round-trips to
// the same double, so identical runs give byte-identical files.

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tunnel/analysis.hpp"

namespace tunnel {

inline constexpr int kConfigVersion = 1;

struct SweepAxis {
  std::string parameter;  ///< F0, omega, cycles, alpha_I or depth
  std::vector<double> values;
};

struct ContourRequest {
  std::optional<double> level;  ///< defaults to the ground-state energy
  ContourSpec spec;
};

struct RunConfig {
  PotentialModel model = GaussianWell1D{};
  FieldPulse pulse = StaticField{};
  FrameSpec frame = LabFrame{};
  EffPotentialKind kind = EffPotentialKind::AllOrders;
  double U = kDefaultU;
  IntegratorConfig integrator;
  double t_f = 150.0;
  double detection_radius = 1000.0;
  bool wkb_factor_two = false;
  std::vector<CriterionId> criteria;
  std::vector<SweepAxis> sweep;  ///< grid is the Cartesian product, first axis slowest
  std::optional<ContourRequest> contour;
  std::filesystem::path output = "out";

  System system() const { return {model, pulse, frame, kind}; }
  void validate() const;
};

RunConfig parse_config_text(const std::string& json_text);
RunConfig parse_config(const std::filesystem::path& path);

/// Copy of cfg with one swept parameter replaced.
RunConfig with_parameter(const RunConfig& cfg, const std::string& parameter, double value);

std::string format_number(double v);

/// One criteria-table line.
struct CriterionRow {
  CriterionResult result;
  double F0 = 0.0, omega = 0.0, cycles = 0.0, intensity = 0.0;
  std::optional<double> exit_x, exit_p, spot, offset_deg;
};

/// Evaluates cfg.criteria on a finished trajectory.
std::vector<CriterionRow> evaluate_criteria(const RunConfig& cfg, const Trajectory& traj);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_criteria_header(std::ostream& os, const std::vector<std::string>& leading = {});
void write_criterion_row(std::ostream& os, const CriterionRow& row, const std::vector<double>& leading = {});
void write_contour_csv(std::ostream& os, const ContourGrid& grid);
void write_ground_state_csv(std::ostream& os, const GroundState& gs);
void write_path_csv(std::ostream& os, const ClassicalPath& path);

struct RunSummary {
  bool ok = true;
  std::vector<std::filesystem::path> files;
  std::string error;
};

/// Trajectory CSV, criteria CSV when criteria are listed, contour CSV when
/// requested, plus plot scripts. Integration failures leave partial outputs and
/// an error.json next to them.
RunSummary run_scenario(const RunConfig& cfg, bool with_criteria = true);
RunSummary run_ground_state(const RunConfig& cfg);
RunSummary run_contour(const RunConfig& cfg);
RunSummary run_backprop(const RunConfig& cfg);
/// One row per grid point and criterion in sweep.csv; grid points run on
/// `threads` workers and are written in grid order.
RunSummary run_sweep(const RunConfig& cfg, unsigned threads);

/// gnuplot scripts for every CSV family present in dir.
std::vector<std::filesystem::path> emit_plot_scripts(const std::filesystem::path& dir);

void write_error_report(const std::filesystem::path& dir, const std::string& kind, const std::string& message);

}  // namespace tunnel
