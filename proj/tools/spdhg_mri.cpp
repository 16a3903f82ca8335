// Command-line front end: run, validate and oracle subcommands.
#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "spdhg/experiment.hpp"

namespace {

enum Exit { ok = 0, config_error = 1, diverged = 2 };

spdhg::ExperimentConfig resolve(const std::string& path, const std::vector<std::string>& extras) {
  spdhg::ExperimentConfig config = path.empty() ? spdhg::ExperimentConfig{} : spdhg::load_config(path);
  for (std::size_t i = 0; i < extras.size(); ++i) {
    std::string arg = extras[i];
    if (arg.rfind("--", 0) != 0) throw spdhg::ConfigError("unexpected argument '" + arg + "'");
    arg = arg.substr(2);
    std::string value;
    if (auto eq = arg.find('='); eq != std::string::npos) {
      value = arg.substr(eq + 1);
      arg = arg.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw spdhg::ConfigError("--" + arg + " needs a value");
      value = extras[++i];
    }
    spdhg::apply_setting(config, arg, value);
  }
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic and deterministic primal-dual MRI reconstruction"};
  app.require_subcommand(1);

  std::string config_path;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->allow_extras();
    sub->footer("Any config key can be overridden with --key value.");
    return sub;
  };
  CLI::App* run_cmd = add("run", "grid-search gamma, run the solvers and write results");
  CLI::App* validate_cmd = add("validate", "build the instance and check step sizes");
  CLI::App* oracle_cmd = add("oracle", "solve the l2 model exactly and print residuals");
  bool quiet = false;
  run_cmd->add_flag("-q,--quiet", quiet, "suppress progress output");

  CLI11_PARSE(app, argc, argv);

  try {
    CLI::App* sub = app.get_subcommands().front();
    const spdhg::ExperimentConfig config = resolve(config_path, sub->remaining());

    if (sub == run_cmd) {
      const auto result = spdhg::run_experiment(config, quiet ? nullptr : &std::cerr);
      for (const auto& o : result.outcomes) {
        const auto& last = o.records.back();
        std::cout << spdhg::to_string(o.algorithm) << ": gamma " << o.gamma << ", objective "
                  << last.objective;
        if (last.relative_objective) std::cout << ", relative " << *last.relative_objective;
        std::cout << '\n';
      }
      std::cout << "wrote " << config.output_dir.string() << '\n';
    } else if (sub == validate_cmd) {
      if (!spdhg::validate_experiment(config, std::cout)) return config_error;
    } else if (sub == oracle_cmd) {
      spdhg::oracle_report(config, std::cout);
    }
  } catch (const spdhg::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const spdhg::DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return diverged;
  } catch (const spdhg::GammaSearchError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return diverged;
  } catch (const std::length_error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return config_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return config_error;
  }
  return ok;
}
