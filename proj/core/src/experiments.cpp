#include "wpl/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace wpl {

namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

Box parse_box(const json& j, int dimension) {
  if (!j.is_array() || j.size() != 2) throw std::invalid_argument("box: expected [[lo],[hi]]");
  const auto lo = j[0];
  const auto hi = j[1];
  if (static_cast<int>(lo.size()) < dimension || static_cast<int>(hi.size()) < dimension) {
    throw std::invalid_argument("box: one lo/hi pair per axis");
  }
  Box box;
  box.dimension = dimension;
  for (int a = 0; a < dimension; ++a) {
    box.lo[a] = lo[a].get<double>();
    box.hi[a] = hi[a].get<double>();
  }
  return box;
}

std::vector<ModeAmplitude> parse_modes(const json& j, int dimension) {
  std::vector<ModeAmplitude> out;
  for (const auto& entry : j) {
    ModeAmplitude mode;
    if (dimension == 1) {
      if (entry.size() != 2) throw std::invalid_argument("initial: 1D mode is [k, amp]");
      mode.kx = entry[0].get<int>();
      mode.amplitude = entry[1].get<double>();
    } else {
      if (entry.size() != 3) throw std::invalid_argument("initial: 2D mode is [kx, ky, amp]");
      mode.kx = entry[0].get<int>();
      mode.ky = entry[1].get<int>();
      mode.amplitude = entry[2].get<double>();
    }
    out.push_back(mode);
  }
  return out;
}

struct Artifact {
  std::string name;
  std::string content;
};

// Deterministic parallel map: results land by index regardless of schedule.
template <typename Fn>
void parallel_indexed(std::size_t count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::future<void>> futures;
  futures.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    futures.push_back(std::async(std::launch::async, [&fn, i] { fn(i); }));
  }
  for (auto& f : futures) f.get();
}

}  // namespace

ExperimentKind experiment_kind_from_name(const std::string& name) {
  static const std::map<std::string, ExperimentKind> kinds = {
      {"simulate", ExperimentKind::Simulate},
      {"spectrum", ExperimentKind::Spectrum},
      {"resolvent-sweep", ExperimentKind::ResolventSweep},
      {"carleman-elliptic", ExperimentKind::CarlemanElliptic},
      {"carleman-parabolic", ExperimentKind::CarlemanParabolic},
      {"local-energy", ExperimentKind::LocalEnergy},
      {"interpolation", ExperimentKind::Interpolation},
      {"decay-fit", ExperimentKind::DecayFit},
  };
  const auto it = kinds.find(name);
  if (it == kinds.end()) throw std::invalid_argument("unknown experiment kind: " + name);
  return it->second;
}

RunConfig parse_config(const std::string& json_text) {
  const json root = json::parse(json_text);
  RunConfig config;
  config.raw_text = json_text;
  config.kind = experiment_kind_from_name(root.at("experiment").get<std::string>());

  const json& problem = root.at("problem");
  config.dimension = problem.value("dimension", 1);
  config.extents = problem.at("extent").get<std::vector<double>>();
  config.counts = problem.at("interior_points").get<std::vector<int>>();
  config.alpha = problem.value("alpha", 1);

  auto parse_coefficient = [&](const char* key, std::string& profile, double& floor, Box& box) {
    if (!problem.contains(key)) {
      profile = "zero";
      floor = 0.0;
      return;
    }
    const json& j = problem.at(key);
    profile = j.value("profile", "plateau");
    floor = j.value("floor", 0.0);
    if (j.contains("box")) box = parse_box(j.at("box"), config.dimension);
  };
  parse_coefficient("coupling", config.coupling_profile, config.coupling_floor,
                    config.coupling_box);
  parse_coefficient("damping", config.damping_profile, config.damping_floor,
                    config.damping_box);

  if (problem.contains("chain")) {
    const json& chain = problem.at("chain");
    if (chain.is_string()) {
      config.want_chain = chain.get<std::string>() != "none";
    } else if (chain.is_object() && chain.contains("boxes")) {
      for (const auto& jb : chain.at("boxes")) {
        config.chain_boxes.push_back(parse_box(jb, config.dimension));
      }
    }
  }
  if (problem.contains("weight")) {
    config.weight_p = problem.at("weight").value("p", 1.0);
    config.weight_q = problem.at("weight").value("q", 1.0);
  }

  if (root.contains("initial")) {
    const json& init = root.at("initial");
    if (init.contains("y")) config.init_y = parse_modes(init.at("y"), config.dimension);
    if (init.contains("u")) config.init_u = parse_modes(init.at("u"), config.dimension);
    if (init.contains("z")) config.init_z = parse_modes(init.at("z"), config.dimension);
    if (init.contains("v")) config.init_v = parse_modes(init.at("v"), config.dimension);
  }

  if (root.contains("params")) {
    const json& params = root.at("params");
    config.t_final = params.value("t_final", config.t_final);
    config.dt = params.value("dt", config.dt);
    if (params.contains("targets_im")) {
      config.targets_im = params.at("targets_im").get<std::vector<double>>();
    }
    config.eig_count = params.value("eig_count", config.eig_count);
    config.check_exclusion = params.value("check_exclusion", config.check_exclusion);
    if (params.contains("mu_grid")) {
      config.mu_grid = params.at("mu_grid").get<std::vector<double>>();
    }
    if (params.contains("lambda_grid")) {
      config.lambda_grid = params.at("lambda_grid").get<std::vector<double>>();
    }
    if (params.contains("eps_grid")) {
      config.eps_grid = params.at("eps_grid").get<std::vector<double>>();
    }
    if (params.contains("tau_grid")) {
      config.tau_grid = params.at("tau_grid").get<std::vector<double>>();
    }
    config.num_seeds = params.value("num_seeds", config.num_seeds);
    config.seed = params.value("seed", config.seed);
    config.modes = params.value("modes", config.modes);
    config.s_points = params.value("s_points", config.s_points);
    config.gamma = params.value("gamma", config.gamma);
    config.beta = params.value("beta", config.beta);
    config.cutoff_index = params.value("cutoff_index", config.cutoff_index);
    config.phi_power = params.value("phi_power", config.phi_power);
  }

  if (root.contains("output")) {
    const json& output = root.at("output");
    config.out_dir = output.value("dir", config.out_dir);
    config.emit_svg = output.value("svg", config.emit_svg);
    config.threads = output.value("threads", config.threads);
  }
  return config;
}

RunConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text_file(path));
}

ProblemConfig build_problem(const RunConfig& config) {
  ProblemConfig problem;
  problem.grid = build_grid(config.dimension, config.extents, config.counts);
  problem.alpha = config.alpha;

  auto build_field = [&](const std::string& profile, double floor, const Box& box) {
    if (profile == "zero") {
      return build_coefficient(problem.grid, problem.grid.domain_box(), 0.0,
                               CoefficientProfile::ConstantOnDomain);
    }
    if (profile == "constant") {
      return build_coefficient(problem.grid, problem.grid.domain_box(), floor,
                               CoefficientProfile::ConstantOnDomain);
    }
    return build_coefficient(problem.grid, box, floor, CoefficientProfile::PlateauWithSkirt);
  };
  problem.c = build_field(config.coupling_profile, config.coupling_floor, config.coupling_box);
  problem.d = build_field(config.damping_profile, config.damping_floor, config.damping_box);
  problem.c_floor = config.coupling_profile == "zero" ? 0.0 : config.coupling_floor;
  problem.d_floor = config.damping_profile == "zero" ? 0.0 : config.damping_floor;

  const bool coupled = config.coupling_profile != "zero" && config.coupling_floor > 0.0;
  const bool damped = config.damping_profile != "zero" && config.damping_floor > 0.0;
  if (config.want_chain && coupled && damped) {
    const Box cbox = config.coupling_profile == "constant" ? problem.grid.domain_box()
                                                           : config.coupling_box;
    const Box dbox = config.damping_profile == "constant" ? problem.grid.domain_box()
                                                          : config.damping_box;
    if (!cbox.intersect(dbox).empty()) {
      if (config.chain_boxes.empty()) {
        problem.chain = make_chain_auto(problem.grid, cbox, dbox);
      } else {
        problem.chain = make_chain(problem.grid, cbox, dbox, config.chain_boxes);
      }
    }
  }
  validate_problem(problem);
  return problem;
}

StateVector build_initial_state(const RunConfig& config, const Grid& grid) {
  StateVector state(grid, config.alpha);
  const double pi = std::acos(-1.0);
  auto fill = [&](VectorC& block, const std::vector<ModeAmplitude>& modes) {
    for (const auto& mode : modes) {
      for (Eigen::Index k = 0; k < grid.num_interior(); ++k) {
        const auto x = grid.point(k);
        double value = mode.amplitude * std::sin(mode.kx * pi * x[0] / grid.extent(0));
        if (grid.dimension() == 2) value *= std::sin(mode.ky * pi * x[1] / grid.extent(1));
        block[k] += value;
      }
    }
  };
  fill(state.y, config.init_y);
  fill(state.u, config.init_u);
  fill(state.z, config.init_z);
  fill(state.v, config.init_v);
  return state;
}

namespace {

StateVector seeded_source_state(const Grid& grid, int alpha, std::uint64_t seed, int modes) {
  // f⁰ = g⁰ = 0; f¹, g¹ seeded smooth sine sums.
  StateVector f(grid, alpha);
  std::uint64_t state = seed;
  auto unif = [&state] {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    z = z ^ (z >> 31);
    return static_cast<double>(z >> 11) * 0x1.0p-53;
  };
  const double pi = std::acos(-1.0);
  for (int k = 1; k <= modes; ++k) {
    const double au = 2.0 * unif() - 1.0;
    const double av = 2.0 * unif() - 1.0;
    for (Eigen::Index i = 0; i < grid.num_interior(); ++i) {
      const double s = std::sin(k * pi * grid.point(i)[0] / grid.extent(0));
      f.u[i] += au * s;
      f.v[i] += av * s;
    }
  }
  return f;
}

struct StagedRun {
  std::vector<Artifact> artifacts;
  int exit_code = 0;
  std::string message;
};

StagedRun run_simulate(const RunConfig& config) {
  StagedRun staged;
  const ProblemConfig problem = build_problem(config);
  BalancedSystem system(problem);
  const StateVector initial = build_initial_state(config, problem.grid);
  const DecayReport report = simulate(system, initial, config.t_final, config.dt);

  staged.artifacts.push_back({"decay.csv", report.to_csv()});
  const DecayFit exp_fit = fit_decay(report, DecayFitMode::Exponential);
  const DecayFit env_fit = fit_decay(report, DecayFitMode::LogEnvelope);
  std::string fit_text;
  fit_text += "exp_ok " + std::string(exp_fit.ok ? "1" : "0") + "\n";
  fit_text += "exp_flag " + (exp_fit.flag.empty() ? std::string("-") : exp_fit.flag) + "\n";
  fit_text += "exp_slope " + fmt(exp_fit.value) + "\n";
  fit_text += "exp_residual " + fmt(exp_fit.residual) + "\n";
  fit_text += "env_ok " + std::string(env_fit.ok ? "1" : "0") + "\n";
  fit_text += "env_flag " + (env_fit.flag.empty() ? std::string("-") : env_fit.flag) + "\n";
  fit_text += "c_log " + fmt(env_fit.value) + "\n";
  fit_text += "c_log_at_time " + fmt(env_fit.at_time) + "\n";
  fit_text += "initial_graph_norm " + fmt(report.initial_graph_norm) + "\n";
  fit_text += "max_energy_increase " + fmt(report.max_energy_increase) + "\n";
  staged.artifacts.push_back({"fit.txt", fit_text});

  if (config.emit_svg) {
    PlotSeries series;
    series.x = report.time;
    series.y = report.energy;
    const bool positive =
        std::all_of(report.energy.begin(), report.energy.end(), [](double e) { return e > 0.0; });
    staged.artifacts.push_back(
        {"energy.svg", render_svg_plot({series}, "energy trace", "t", "E", positive)});
  }

  const double budget = 1e-12 * std::max(1.0, std::abs(report.energy.front()));
  if (report.max_energy_increase > budget) {
    staged.exit_code = 2;
    staged.message = "energy increased by " + fmt(report.max_energy_increase);
  } else {
    staged.message = "simulate: " + std::to_string(report.time.size()) + " samples";
  }
  return staged;
}

StagedRun run_spectrum(const RunConfig& config) {
  StagedRun staged;
  const ProblemConfig problem = build_problem(config);
  BalancedSystem system(problem);
  std::vector<Complex> targets;
  for (const double tau : config.targets_im) targets.emplace_back(0.0, tau);
  if (targets.empty()) throw std::invalid_argument("spectrum: targets_im is empty");
  EigSolveOptions opts;
  opts.seed = config.seed;
  SpectrumReport report =
      spectrum_sweep(system, targets, config.eig_count, opts, config.threads);
  report.exclusion = scan_exclusion_region(report);

  staged.artifacts.push_back({"spectrum.csv", report.to_csv()});
  std::string text;
  text += "pairs " + std::to_string(report.pairs.size()) + "\n";
  text += "spectral_abscissa " + fmt(report.spectral_abscissa) + "\n";
  text += "exclusion_ok " + std::string(report.exclusion.ok ? "1" : "0") + "\n";
  text += "exclusion_flag " +
          (report.exclusion.flag.empty() ? std::string("-") : report.exclusion.flag) + "\n";
  text += "slope " + fmt(report.exclusion.slope) + "\n";
  text += "intercept " + fmt(report.exclusion.intercept) + "\n";
  text += "fit_residual " + fmt(report.exclusion.fit_residual) + "\n";
  text += "c_excl " + fmt(report.exclusion.c_excl) + "\n";
  text += "containment " + std::string(report.exclusion.containment ? "1" : "0") + "\n";
  text += "points_used " + std::to_string(report.exclusion.points_used) + "\n";
  staged.artifacts.push_back({"exclusion.txt", text});

  if (config.emit_svg && !report.pairs.empty()) {
    PlotSeries series;
    for (const auto& pair : report.pairs) {
      series.x.push_back(pair.lambda.real());
      series.y.push_back(pair.lambda.imag());
    }
    series.points_only = true;
    staged.artifacts.push_back(
        {"spectrum.svg", render_svg_plot({series}, "spectrum", "Re", "Im", false)});
  }
  if (config.check_exclusion && !report.exclusion.ok) {
    staged.exit_code = 2;
    staged.message = "exclusion fit failed: " + report.exclusion.flag;
  } else {
    staged.message = "spectrum: " + std::to_string(report.pairs.size()) + " eigenvalues";
  }
  return staged;
}

StagedRun run_resolvent_sweep(const RunConfig& config) {
  StagedRun staged;
  const ProblemConfig problem = build_problem(config);
  BalancedSystem system(problem);
  const std::vector<double>& taus =
      config.tau_grid.empty() ? config.targets_im : config.tau_grid;
  if (taus.empty()) throw std::invalid_argument("resolvent-sweep: tau_grid is empty");
  std::vector<double> norms(taus.size(), 0.0);
  parallel_indexed(taus.size(), config.threads, [&](std::size_t i) {
    norms[i] = resolvent_norm(system, Complex(0.0, taus[i]));
  });
  std::string csv = "re,im,norm\n";
  for (std::size_t i = 0; i < taus.size(); ++i) {
    csv += fmt(0.0) + "," + fmt(taus[i]) + "," + fmt(norms[i]) + "\n";
  }
  staged.artifacts.push_back({"resolvent.csv", csv});
  if (config.emit_svg) {
    PlotSeries series;
    series.x = taus;
    series.y = norms;
    const bool positive = std::all_of(norms.begin(), norms.end(),
                                      [](double v) { return v > 0.0 && std::isfinite(v); });
    staged.artifacts.push_back({"resolvent.svg", render_svg_plot({series}, "resolvent norm",
                                                                 "Im lambda", "norm", positive)});
  }
  staged.message = "resolvent-sweep: " + std::to_string(taus.size()) + " shifts";
  return staged;
}

struct CarlemanCell {
  double mu = 0.0;
  double lambda = 0.0;
  std::vector<InequalityRow> rows;
  double scaling_error = 0.0;
};

StagedRun run_carleman(const RunConfig& config) {
  StagedRun staged;
  const ProblemConfig problem = build_problem(config);
  if (!problem.chain) throw std::invalid_argument("carleman: configuration has no chain");
  if (problem.grid.dimension() != 1) throw std::invalid_argument("carleman: 1D only");
  const SubdomainChain& chain = *problem.chain;
  const double x_star =
      config.weight_p * problem.grid.extent(0) / (config.weight_p + config.weight_q);
  const WeightBase base =
      build_weight_base(problem.grid, x_star, config.weight_p, config.weight_q, chain.omega(0));

  VerifierConfig vcfg;
  vcfg.gamma = config.gamma;
  vcfg.beta = config.beta;
  vcfg.cutoff_index = config.cutoff_index;
  vcfg.phi_power = config.phi_power;

  std::vector<std::pair<double, double>> cells;
  for (const double mu : config.mu_grid) {
    for (const double lambda : config.lambda_grid) cells.emplace_back(mu, lambda);
  }
  std::vector<CarlemanCell> results(cells.size());
  parallel_indexed(cells.size(), config.threads, [&](std::size_t idx) {
    const auto [mu, lambda] = cells[idx];
    const SpaceTimeGrid stgrid(carleman_b(mu), config.s_points, problem.grid, chain);
    const CarlemanWeightSet weights = build_weights(stgrid, base, mu, lambda);
    CarlemanCell cell;
    cell.mu = mu;
    cell.lambda = lambda;
    for (int s = 0; s < config.num_seeds; ++s) {
      const std::uint64_t seed = config.seed + static_cast<std::uint64_t>(s);
      const STField test = random_test_function(stgrid, seed, config.modes);
      InequalityRow row;
      if (config.kind == ExperimentKind::CarlemanElliptic) {
        row = verify_elliptic_carleman(test, stgrid, weights, chain.omega(0));
      } else if (config.kind == ExperimentKind::CarlemanParabolic) {
        row = verify_parabolic_carleman(test, stgrid, weights, config.gamma, chain.omega(1));
      } else {
        row = verify_local_energy(test, stgrid, weights, vcfg);
      }
      row.seed = seed;
      if (s == 0) {
        InequalityRow scaled;
        const STField test10 = 10.0 * test;
        if (config.kind == ExperimentKind::CarlemanElliptic) {
          scaled = verify_elliptic_carleman(test10, stgrid, weights, chain.omega(0));
        } else if (config.kind == ExperimentKind::CarlemanParabolic) {
          scaled =
              verify_parabolic_carleman(test10, stgrid, weights, config.gamma, chain.omega(1));
        } else {
          scaled = verify_local_energy(test10, stgrid, weights, vcfg);
        }
        cell.scaling_error = row.c_emp != 0.0
                                 ? std::abs(scaled.c_emp - row.c_emp) / std::abs(row.c_emp)
                                 : std::abs(scaled.c_emp - row.c_emp);
      }
      cell.rows.push_back(row);
    }
    results[idx] = std::move(cell);
  });

  InequalityReport report;
  report.kind = config.kind == ExperimentKind::CarlemanElliptic    ? "carleman-elliptic"
                : config.kind == ExperimentKind::CarlemanParabolic ? "carleman-parabolic"
                                                                   : "local-energy";
  report.rhs_labels = config.kind == ExperimentKind::LocalEnergy
                          ? std::vector<std::string>{"rhs_source", "rhs_mass"}
                          : std::vector<std::string>{"rhs_source", "rhs_observation"};
  bool all_finite = true;
  double worst_scaling = 0.0;
  for (const auto& cell : results) {
    worst_scaling = std::max(worst_scaling, cell.scaling_error);
    for (const auto& row : cell.rows) {
      all_finite = all_finite && std::isfinite(row.c_emp);
      report.rows.push_back(row);
    }
  }

  // Stability of max-over-seeds C_emp across the upper half of the λ grid.
  double worst_ratio = 1.0;
  for (const double mu : config.mu_grid) {
    std::vector<double> agg;
    for (std::size_t idx = 0; idx < cells.size(); ++idx) {
      if (cells[idx].first != mu) continue;
      double max_c = 0.0;
      for (const auto& row : results[idx].rows) max_c = std::max(max_c, row.c_emp);
      agg.push_back(max_c);
    }
    const std::size_t half = agg.size() / 2;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (std::size_t i = half; i < agg.size(); ++i) {
      lo = std::min(lo, agg[i]);
      hi = std::max(hi, agg[i]);
    }
    if (lo > 0.0) worst_ratio = std::max(worst_ratio, hi / lo);
  }
  const bool stable = worst_ratio <= 2.0;
  const bool scaling_ok = worst_scaling <= 1e-12;
  report.pass = all_finite && stable && scaling_ok;
  if (!report.pass) {
    report.flag = !all_finite ? "non-finite constant"
                  : !stable   ? "unstable across upper lambda half"
                              : "scaling invariance violated";
  }
  staged.artifacts.push_back({report.kind + ".csv", report.to_csv()});
  std::string text;
  text += "pass " + std::string(report.pass ? "1" : "0") + "\n";
  text += "flag " + (report.flag.empty() ? std::string("-") : report.flag) + "\n";
  text += "worst_upper_half_ratio " + fmt(worst_ratio) + "\n";
  text += "worst_scaling_error " + fmt(worst_scaling) + "\n";
  staged.artifacts.push_back({"stability.txt", text});
  if (!report.pass) {
    staged.exit_code = 2;
    staged.message = report.kind + ": " + report.flag;
  } else {
    staged.message = report.kind + ": " + std::to_string(report.rows.size()) + " cells";
  }
  return staged;
}

StagedRun run_interpolation(const RunConfig& config) {
  StagedRun staged;
  const ProblemConfig problem = build_problem(config);
  if (!problem.chain) throw std::invalid_argument("interpolation: configuration has no chain");
  if (problem.grid.dimension() != 1) throw std::invalid_argument("interpolation: 1D only");
  BalancedSystem system(problem);
  const SpaceTimeGrid stgrid(2.0, config.s_points, problem.grid, *problem.chain);
  VerifierConfig vcfg;
  vcfg.eps_grid = config.eps_grid;
  const std::vector<double>& taus = config.tau_grid;
  if (taus.empty()) throw std::invalid_argument("interpolation: tau_grid is empty");

  struct RecordOutput {
    InterpolationResult interp;
    ImEstimateRow im_row;
    std::array<double, 3> residuals{};
  };
  std::vector<RecordOutput> outputs(taus.size());
  parallel_indexed(taus.size(), config.threads, [&](std::size_t i) {
    const StateVector f = seeded_source_state(
        problem.grid, config.alpha, config.seed + static_cast<std::uint64_t>(i), config.modes);
    const ResolventSolveRecord record =
        resolvent_solve(system, Complex(0.0, taus[i]), f);
    const EPSystemData data = lift_resolvent_data(record, problem, stgrid);
    outputs[i].interp = verify_interpolation(data, vcfg);
    outputs[i].im_row = check_imaginary_part_estimate(record, problem);
    outputs[i].residuals = data.residuals;
  });

  std::string rows_csv = "tau,eps,c_of_eps,group1_weight,group2_weight\n";
  std::string summary_csv =
      "tau,c_star,c_star_eps,lhs,group1,group2,tradeoff_ok,pass,res1,res2,res3\n";
  std::string im_csv = "tau,lhs,t_source_y,t_re_im_y,t_source_z,t_re_im_z,c_min,coupling_im\n";
  bool all_pass = true;
  double coupling_worst = 0.0;
  std::vector<double> log_cstar_x, log_cstar_y;
  for (std::size_t i = 0; i < taus.size(); ++i) {
    const auto& out = outputs[i];
    for (std::size_t e = 0; e < out.interp.eps.size(); ++e) {
      rows_csv += fmt(taus[i]) + "," + fmt(out.interp.eps[e]) + "," +
                  fmt(out.interp.c_of_eps[e]) + "," + fmt(out.interp.group1_weight[e]) + "," +
                  fmt(out.interp.group2_weight[e]) + "\n";
    }
    summary_csv += fmt(taus[i]) + "," + fmt(out.interp.c_star) + "," +
                   fmt(out.interp.c_star_eps) + "," + fmt(out.interp.lhs) + "," +
                   fmt(out.interp.group1) + "," + fmt(out.interp.group2) + "," +
                   (out.interp.tradeoff_ok ? "1" : "0") + "," +
                   (out.interp.pass ? "1" : "0") + "," + fmt(out.residuals[0]) + "," +
                   fmt(out.residuals[1]) + "," + fmt(out.residuals[2]) + "\n";
    im_csv += fmt(taus[i]) + "," + fmt(out.im_row.lhs) + "," + fmt(out.im_row.rhs_terms[0]) +
              "," + fmt(out.im_row.rhs_terms[1]) + "," + fmt(out.im_row.rhs_terms[2]) + "," +
              fmt(out.im_row.rhs_terms[3]) + "," + fmt(out.im_row.c_min) + "," +
              fmt(out.im_row.coupling_im) + "\n";
    all_pass = all_pass && out.interp.pass;
    coupling_worst = std::max(coupling_worst, std::abs(out.im_row.coupling_im));
    if (out.interp.c_star > 0.0 && std::isfinite(out.interp.c_star)) {
      log_cstar_x.push_back(taus[i]);
      log_cstar_y.push_back(std::log(out.interp.c_star));
    }
  }
  staged.artifacts.push_back({"interpolation.csv", rows_csv});
  staged.artifacts.push_back({"interpolation_summary.csv", summary_csv});
  staged.artifacts.push_back({"im_estimate.csv", im_csv});

  // Envelope fit of log C_star versus τ (compared against e^{C|Im λ|}).
  std::string env_text;
  if (log_cstar_x.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(log_cstar_x.size());
    for (std::size_t i = 0; i < log_cstar_x.size(); ++i) {
      sx += log_cstar_x[i];
      sy += log_cstar_y[i];
      sxx += log_cstar_x[i] * log_cstar_x[i];
      sxy += log_cstar_x[i] * log_cstar_y[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / n;
    env_text += "envelope_slope " + fmt(slope) + "\n";
    env_text += "envelope_intercept " + fmt(intercept) + "\n";
  } else {
    env_text += "envelope_slope nan\n";
  }
  staged.artifacts.push_back({"envelope.txt", env_text});

  if (config.emit_svg && !outputs.empty() && !outputs[0].interp.eps.empty()) {
    PlotSeries series;
    series.x = outputs[0].interp.eps;
    series.y = outputs[0].interp.c_of_eps;
    const bool positive = std::all_of(series.y.begin(), series.y.end(),
                                      [](double v) { return v > 0.0 && std::isfinite(v); });
    staged.artifacts.push_back(
        {"c_of_eps.svg", render_svg_plot({series}, "C(eps)", "eps", "C", positive)});
  }

  if (!all_pass) {
    staged.exit_code = 2;
    staged.message = "interpolation: a record failed";
  } else {
    staged.message = "interpolation: " + std::to_string(taus.size()) + " records";
  }
  return staged;
}

}  // namespace

RunResult run_experiment(const RunConfig& config, const std::filesystem::path& out_dir) {
  RunResult result;
  StagedRun staged;
  try {
    switch (config.kind) {
      case ExperimentKind::Simulate:
      case ExperimentKind::DecayFit:
        staged = run_simulate(config);
        break;
      case ExperimentKind::Spectrum:
        staged = run_spectrum(config);
        break;
      case ExperimentKind::ResolventSweep:
        staged = run_resolvent_sweep(config);
        break;
      case ExperimentKind::CarlemanElliptic:
      case ExperimentKind::CarlemanParabolic:
      case ExperimentKind::LocalEnergy:
        staged = run_carleman(config);
        break;
      case ExperimentKind::Interpolation:
        staged = run_interpolation(config);
        break;
    }
  } catch (const std::exception& ex) {
    result.exit_code = 1;
    result.message = ex.what();
    return result;
  }

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    result.exit_code = 1;
    result.message = "cannot create output directory: " + out_dir.string();
    return result;
  }
  nlohmann::json manifest;
  manifest["config_fnv1a64"] = fnv1a64_hex(config.raw_text);
  manifest["seed"] = config.seed;
  manifest["version"] = std::string(kVersion);
  manifest["artifacts"] = nlohmann::json::array();
  for (const auto& artifact : staged.artifacts) {
    write_text_file(out_dir / artifact.name, artifact.content);
    manifest["artifacts"].push_back(
        {{"file", artifact.name}, {"fnv1a64", fnv1a64_hex(artifact.content)}});
    result.artifact_names.push_back(artifact.name);
  }
  write_text_file(out_dir / "manifest.json", manifest.dump(2) + "\n");
  result.artifact_names.push_back("manifest.json");
  result.exit_code = staged.exit_code;
  result.message = staged.message;
  return result;
}

}  // namespace wpl
