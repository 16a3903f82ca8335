#include "spdhg/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "spdhg/image_io.hpp"
#include "spdhg/oracle.hpp"
#include "spdhg/theory.hpp"

namespace spdhg {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t' || c == ';') {
      if (!item.empty()) out.push_back(item);
      item.clear();
    } else {
      item.push_back(c);
    }
  }
  if (!item.empty()) out.push_back(item);
  return out;
}

double to_double(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError(key + ": expected a number, got '" + s + "'");
  return v;
}

long long to_integer(const std::string& key, const std::string& s) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError(key + ": expected an integer, got '" + s + "'");
  return v;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + fmt(values[i]);
  return out;
}

std::string join(const std::vector<Algorithm>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) out += (i ? "," : "") + to_string(values[i]);
  return out;
}

std::string to_string(TargetMode mode) { return mode == TargetMode::oracle ? "oracle" : "long_run"; }

mri::MriInstance build_instance(const ExperimentConfig& config) {
  config.validate();
  return mri::assemble_problem(config.mri);
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    mri.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (algorithms.empty()) throw ConfigError("algorithms: at least one of pdhg, spdhg is required");
  if (!(epochs > 0.0)) throw ConfigError("epochs must be > 0");
  if (gamma_grid.empty()) throw ConfigError("gamma_grid must not be empty");
  for (double g : gamma_grid)
    if (!(g > 0.0) || !std::isfinite(g)) throw ConfigError("gamma_grid entries must be positive");
  if (!(log_every > 0.0)) throw ConfigError("log_every must be > 0");
  if (target_epochs < 0.0) throw ConfigError("target_epochs must be >= 0");
  if (target_mode == TargetMode::long_run && !(resolved_target_epochs() > epochs))
    throw ConfigError("target_epochs must exceed epochs");
  if (target_mode == TargetMode::oracle && mri.regularizer == mri::Regularizer::tv)
    throw ConfigError("target_mode=oracle needs the l2 regularizer; use target_mode=long_run for tv");
}

void apply_setting(ExperimentConfig& c, const std::string& raw_key, const std::string& raw_value) {
  const std::string key = trim(raw_key);
  const std::string value = trim(raw_value);
  try {
    if (key == "rows") {
      c.mri.rows = to_integer(key, value);
    } else if (key == "cols") {
      c.mri.cols = to_integer(key, value);
    } else if (key == "coils" || key == "n_coils") {
      c.mri.n_coils = to_integer(key, value);
    } else if (key == "sampling_factor") {
      c.mri.sampling_factor = to_double(key, value);
    } else if (key == "mask_kind") {
      c.mri.mask_kind = mri::parse_mask_kind(value);
    } else if (key == "noise_sigma") {
      c.mri.noise_sigma = to_double(key, value);
    } else if (key == "regularizer") {
      c.mri.regularizer = mri::parse_regularizer(value);
    } else if (key == "alpha") {
      c.mri.alpha = to_double(key, value);
    } else if (key == "seed") {
      const long long s = to_integer(key, value);
      if (s < 0) throw ConfigError("seed must be >= 0");
      c.mri.seed = static_cast<std::uint64_t>(s);
    } else if (key == "algorithms") {
      c.algorithms.clear();
      for (const auto& name : split_list(value)) {
        const Algorithm a = parse_algorithm(name);
        if (std::find(c.algorithms.begin(), c.algorithms.end(), a) == c.algorithms.end())
          c.algorithms.push_back(a);
      }
    } else if (key == "epochs") {
      c.epochs = to_double(key, value);
    } else if (key == "gamma_grid" || key == "gamma") {
      c.gamma_grid.clear();
      for (const auto& g : split_list(value)) c.gamma_grid.push_back(to_double(key, g));
    } else if (key == "log_every") {
      c.log_every = to_double(key, value);
    } else if (key == "target_mode") {
      if (value == "oracle")
        c.target_mode = TargetMode::oracle;
      else if (value == "long_run")
        c.target_mode = TargetMode::long_run;
      else
        throw ConfigError("target_mode: expected oracle or long_run, got '" + value + "'");
    } else if (key == "target_epochs") {
      c.target_epochs = to_double(key, value);
    } else if (key == "output_dir") {
      if (value.empty()) throw ConfigError("output_dir must not be empty");
      c.output_dir = value;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(key + ": " + e.what());
  }
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    try {
      apply_setting(base, line.substr(0, eq), line.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::vector<std::pair<std::string, std::string>> describe(const ExperimentConfig& c) {
  return {
      {"rows", std::to_string(c.mri.rows)},
      {"cols", std::to_string(c.mri.cols)},
      {"coils", std::to_string(c.mri.n_coils)},
      {"sampling_factor", fmt(c.mri.sampling_factor)},
      {"samples", std::to_string(c.mri.samples())},
      {"mask_kind", mri::to_string(c.mri.mask_kind)},
      {"noise_sigma", fmt(c.mri.noise_sigma)},
      {"regularizer", mri::to_string(c.mri.regularizer)},
      {"alpha", fmt(c.mri.alpha)},
      {"seed", std::to_string(c.mri.seed)},
      {"algorithms", join(c.algorithms)},
      {"epochs", fmt(c.epochs)},
      {"gamma_grid", join(c.gamma_grid)},
      {"log_every", fmt(c.log_every)},
      {"target_mode", to_string(c.target_mode)},
      {"target_epochs", c.target_mode == TargetMode::long_run ? fmt(c.resolved_target_epochs()) : "0"},
      {"output_dir", c.output_dir.string()},
      {"rng", "mt19937_64"},
      {"x0", "zero"},
  };
}

std::string csv_row(const std::string& run_id, const ConvergenceRecord& r) {
  std::string row = run_id;
  row += ',' + to_string(r.algorithm);
  row += ',' + fmt(r.gamma);
  row += ',' + fmt(r.epoch);
  row += ',' + fmt(r.objective);
  row += ',' + fmt(r.relative_objective);
  row += ',' + fmt(r.distance_to_target);
  row += ',' + fmt(r.bregman_gap);
  row += ',' + fmt(r.wall_time_s);
  row += ',' + std::to_string(r.seed);
  return row;
}

std::uint64_t mask_hash(const std::vector<Index>& indices) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (Index idx : indices) {
    auto v = static_cast<std::uint64_t>(idx);
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

ExperimentResult run_experiment(const ExperimentConfig& config, std::ostream* log) {
  const mri::MriInstance inst = build_instance(config);
  const SaddleProblem& problem = inst.problem;

  std::error_code ec;
  std::filesystem::create_directories(config.output_dir, ec);
  if (ec || !std::filesystem::is_directory(config.output_dir))
    throw std::runtime_error("cannot create output directory " + config.output_dir.string() +
                             (ec ? ": " + ec.message() : std::string()));

  ExperimentResult result;
  result.manifest = describe(config);
  auto& manifest = result.manifest;
  {
    char hex[24];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(mask_hash(inst.mask)));
    manifest.emplace_back("mask_hash_fnv1a64", hex);
  }
  manifest.emplace_back("blocks", std::to_string(problem.size()));
  for (std::size_t i = 0; i < problem.size(); ++i) {
    manifest.emplace_back("block_norm_" + std::to_string(i), fmt(problem.block_norms[i]));
    manifest.emplace_back("probability_" + std::to_string(i), fmt(problem.probabilities[i]));
  }
  manifest.emplace_back("stacked_norm", fmt(problem.stacked_norm));

  const std::uint64_t seed = config.mri.seed;
  std::map<Algorithm, GammaSearchResult> searches;
  auto search = [&](Algorithm a) -> const GammaSearchResult& {
    auto it = searches.find(a);
    if (it != searches.end()) return it->second;
    if (log) *log << "gamma search: " << to_string(a) << " over " << config.gamma_grid.size() << " values\n";
    return searches.emplace(a, gamma_search(problem, a, config.gamma_grid, config.epochs, seed))
        .first->second;
  };

  // Reference solution
  Target target;
  if (config.target_mode == TargetMode::oracle) {
    if (log) *log << "target: exact quadratic solve\n";
    PrimalDual saddle = solve_quadratic(problem);
    target.x = saddle.x;
    target.saddle = std::move(saddle);
  } else {
    const double g = search(Algorithm::spdhg).best_gamma;
    const double te = config.resolved_target_epochs();
    if (log) *log << "target: spdhg, gamma " << fmt(g) << ", " << fmt(te) << " epochs\n";
    RunOptions opts;
    opts.epochs = te;
    opts.log_every = te;
    opts.seed = seed;
    target.x = run(problem, compute_step_sizes(problem, g, Algorithm::spdhg), opts).state.x;
    manifest.emplace_back("target_gamma", fmt(g));
  }
  result.target = target.x;
  result.target_objective = objective(problem, target.x);
  manifest.emplace_back("target_objective", fmt(result.target_objective));

  std::ofstream csv(config.output_dir / "convergence.csv");
  if (!csv) throw std::runtime_error("cannot write " + (config.output_dir / "convergence.csv").string());
  csv << kCsvHeader << '\n';

  for (Algorithm a : config.algorithms) {
    const GammaSearchResult& gs = search(a);
    AlgorithmOutcome outcome;
    outcome.algorithm = a;
    outcome.gamma = gs.best_gamma;
    outcome.search = gs.trials;
    const std::string name = to_string(a);
    for (const auto& t : gs.trials)
      manifest.emplace_back("search_" + name + "_" + fmt(t.gamma),
                            t.diverged ? "diverged" : fmt(t.final_objective));
    manifest.emplace_back("gamma_" + name, fmt(gs.best_gamma));

    const StepSizes steps = compute_step_sizes(problem, gs.best_gamma, a);
    manifest.emplace_back("tau_" + name, fmt(steps.tau));
    for (std::size_t i = 0; i < steps.sigma.size(); ++i)
      manifest.emplace_back("sigma_" + name + "_" + std::to_string(i), fmt(steps.sigma[i]));

    if (log) *log << name << ": gamma " << fmt(gs.best_gamma) << ", " << fmt(config.epochs) << " epochs\n";
    RunOptions opts;
    opts.epochs = config.epochs;
    opts.log_every = config.log_every;
    opts.seed = seed;
    opts.target = target;
    RunResult res = run(problem, steps, opts);
    for (const auto& r : res.records) csv << csv_row(name, r) << '\n';
    outcome.records = std::move(res.records);
    outcome.reconstruction = res.state.x;
    write_image(outcome.reconstruction, config.output_dir / ("recon_" + name));
    if (outcome.records.back().relative_objective)
      manifest.emplace_back("final_relative_objective_" + name,
                            fmt(*outcome.records.back().relative_objective));
    result.outcomes.push_back(std::move(outcome));
  }
  csv.close();
  if (!csv) throw std::runtime_error("failed writing " + (config.output_dir / "convergence.csv").string());

  write_image(inst.ground_truth, config.output_dir / "ground_truth");
  write_image(result.target, config.output_dir / "target");

  std::ofstream mf(config.output_dir / "manifest.txt");
  if (!mf) throw std::runtime_error("cannot write " + (config.output_dir / "manifest.txt").string());
  for (const auto& [k, v] : manifest) mf << k << " = " << v << '\n';
  return result;
}

bool validate_experiment(const ExperimentConfig& config, std::ostream& out) {
  const mri::MriInstance inst = build_instance(config);
  const SaddleProblem& problem = inst.problem;
  out << "instance: " << config.mri.rows << "x" << config.mri.cols << ", " << problem.size()
      << " blocks, " << inst.mask.size() << " samples per coil, regularizer "
      << mri::to_string(config.mri.regularizer) << '\n';
  for (std::size_t i = 0; i < problem.size(); ++i)
    out << "  block " << i << ": ||A_i|| <= " << fmt(problem.block_norms[i]) << ", p = "
        << fmt(problem.probabilities[i]) << "  [" << problem.blocks[i].op.describe() << "]\n";
  out << "  stacked: ||A|| <= " << fmt(problem.stacked_norm) << '\n';

  bool ok = true;
  for (Algorithm a : config.algorithms) {
    for (double g : config.gamma_grid) {
      const StepSizes steps = compute_step_sizes(problem, g, a);
      const auto violations = validate_step_sizes(problem, steps);
      if (!violations.empty()) {
        ok = false;
        for (const auto& v : violations)
          out << "  " << to_string(a) << " gamma " << fmt(g) << ": " << v.message() << '\n';
      }
    }
    out << to_string(a) << ": step-size condition "
        << (ok ? "satisfied" : "VIOLATED") << " for " << config.gamma_grid.size()
        << " gamma values\n";
  }
  out << (ok ? "validate: OK\n" : "validate: FAILED\n");
  return ok;
}

void oracle_report(const ExperimentConfig& config, std::ostream& out) {
  if (config.mri.regularizer != mri::Regularizer::l2)
    throw ConfigError("the exact solve needs the l2 regularizer");
  const mri::MriInstance inst = build_instance(config);
  const SaddleProblem& problem = inst.problem;
  const PrimalDual saddle = solve_quadratic(problem);

  // stationarity of the primal: sum_i A_i^T y_i + 2 alpha x = 0
  ComplexImage grad = stacked_adjoint(problem, saddle.y);
  grad += (2.0 * problem.g.alpha) * saddle.x;
  double dual_residual = 0.0;
  for (std::size_t i = 0; i < problem.size(); ++i) {
    const Block& b = problem.blocks[i];
    ComplexImage r = b.op.apply(saddle.x) - ComplexImage::from_real(b.op.codomain(), b.f.b);
    r *= 2.0;
    dual_residual = std::max(dual_residual, norm(r - saddle.y[i]));
  }
  out << "objective: " << fmt(objective(problem, saddle.x)) << '\n';
  out << "||x||: " << fmt(norm(saddle.x)) << '\n';
  out << "primal stationarity residual: " << fmt(norm(grad)) << '\n';
  out << "dual residual max_i ||2(A_i x - b_i) - y_i||: " << fmt(dual_residual) << '\n';
  for (double g : config.gamma_grid)
    out << "fixed-point residual max_j ||T_j w - w||, gamma " << fmt(g) << ": "
        << fmt(fixed_point_residual(problem, compute_step_sizes(problem, g, Algorithm::spdhg), saddle))
        << '\n';
}

}  // namespace spdhg
