// Configuration-driven experiments: wires the modules into named runs and
// emits CSV/SVG artifacts plus a manifest. This is the engine behind the
// wplab CLI; the test suites drive it directly.
#pragma once

#include "wpl/carleman.hpp"
#include "wpl/evolution.hpp"
#include "wpl/io.hpp"
#include "wpl/operators.hpp"
#include "wpl/spectral.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wpl {

enum class ExperimentKind {
  Simulate,
  Spectrum,
  ResolventSweep,
  CarlemanElliptic,
  CarlemanParabolic,
  LocalEnergy,
  Interpolation,
  DecayFit,
};

ExperimentKind experiment_kind_from_name(const std::string& name);

struct ModeAmplitude {
  int kx = 1;
  int ky = 0;
  double amplitude = 0.0;
};

struct RunConfig {
  ExperimentKind kind = ExperimentKind::Simulate;

  int dimension = 1;
  std::vector<double> extents{3.141592653589793};
  std::vector<int> counts{200};
  int alpha = 1;
  std::string coupling_profile = "plateau";  // plateau | constant | zero
  double coupling_floor = 0.0;
  Box coupling_box;
  std::string damping_profile = "plateau";
  double damping_floor = 0.0;
  Box damping_box;
  std::vector<Box> chain_boxes;  // explicit ω0..ω3; empty means auto
  bool want_chain = true;
  double weight_p = 1.0;
  double weight_q = 1.0;

  std::vector<ModeAmplitude> init_y, init_u, init_z, init_v;

  double t_final = 10.0;
  double dt = 1e-3;
  std::vector<double> targets_im;
  int eig_count = 8;
  bool check_exclusion = false;
  std::vector<double> mu_grid{2.0, 3.0};
  std::vector<double> lambda_grid{8.0, 16.0, 32.0, 64.0};
  std::vector<double> eps_grid;
  std::vector<double> tau_grid;
  int num_seeds = 50;
  std::uint64_t seed = 1;
  int modes = 6;
  int s_points = 129;
  double gamma = 1.0;
  double beta = 2.0;
  int cutoff_index = 0;
  int phi_power = 1;

  std::string out_dir = "out";
  bool emit_svg = true;
  int threads = 1;
  std::string raw_text;  // original config text (hashed into the manifest)
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

struct RunResult {
  int exit_code = 1;  // 0 pass, 2 verification failure, 1 error
  std::string message;
  std::vector<std::string> artifact_names;
};

// Artifacts are staged in memory and written (with manifest.json) only when
// the experiment ran to completion; failures leave no partial files.
RunResult run_experiment(const RunConfig& config, const std::filesystem::path& out_dir);

ProblemConfig build_problem(const RunConfig& config);
StateVector build_initial_state(const RunConfig& config, const Grid& grid);

}  // namespace wpl
