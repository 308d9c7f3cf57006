#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ordgp/error.hpp"
#include "ordgp/harness/experiment.hpp"
#include "ordgp/harness/io.hpp"
#include "ordgp/harness/synthetic.hpp"
#include "ordgp/oracle/acceptance.hpp"

namespace fs = std::filesystem;
using namespace ordgp;
using namespace ordgp::harness;

namespace {

struct GlobalOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string preset;
};

KeyValueConfig load_config(const GlobalOptions& global) {
  return global.config.empty() ? KeyValueConfig{} : KeyValueConfig::load(global.config);
}

MethodSettings settings_from(const GlobalOptions& global) {
  return GridConfig::from(load_config(global)).settings;
}

fs::path output_dir(const GlobalOptions& global, const fs::path& fallback) {
  return global.out.empty() ? fallback : fs::path(global.out);
}

int run_synth(const GlobalOptions& global) {
  GridConfig config = GridConfig::from(load_config(global));
  if (global.seed) {
    config.master_seed = *global.seed;
  }
  if (!global.out.empty()) {
    config.output_dir = global.out;
  }
  if (global.preset == "large-noise") {
    config.large_noise = true;
  }
  config.validate();

  const std::vector<CellResult> cells = run_grid(config);
  fs::create_directories(config.output_dir);
  write_grid_outputs(config.output_dir, cells, current_timestamp());

  int failed = 0;
  for (const CellResult& cell : cells) {
    if (!cell.error.empty()) {
      ++failed;
      std::cerr << "cell f" << cell.function_id << " sigma_t=" << cell.sigma_t << " " << to_string(cell.method)
                << " seed " << cell.seed << ": " << cell.error << "\n";
    }
  }
  std::cout << cells.size() << " cells, " << failed << " failed, output in " << config.output_dir.string() << "\n";
  return failed == 0 ? 0 : 1;
}

int run_fit(const GlobalOptions& global, const std::string& data_path, const std::string& method_name) {
  const Dataset data = load_dataset(data_path);
  const Method method = parse_method(method_name);
  const MethodSettings settings = settings_from(global);
  const Eigen::VectorXd queries = query_grid(data.t.minCoeff(), data.t.maxCoeff());
  const MethodOutput result = run_method(method, data, queries, settings, global.seed.value_or(1));

  const fs::path dir = output_dir(global, ".");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "predictions.csv");
    out << "x,mean,var\n";
    for (Eigen::Index i = 0; i < queries.size(); ++i) {
      const auto& p = result.predictions[static_cast<std::size_t>(i)];
      out << format_double(queries(i)) << ',' << format_double(p.mean) << ',' << format_double(p.var) << '\n';
    }
  }
  {
    std::ofstream out(dir / "tau_hat.csv");
    out << "t,tau_hat\n";
    for (Eigen::Index i = 0; i < data.t.size(); ++i) {
      out << format_double(data.t(i)) << ',' << format_double(result.tau_hat(i)) << '\n';
    }
  }
  std::cout << to_string(method) << " fit in " << result.wall_time_s << " s, output in " << dir.string() << "\n";
  return 0;
}

int run_compare(const GlobalOptions& global, const std::string& data_path,
                const std::vector<std::string>& method_names) {
  const Dataset data = load_dataset(data_path);
  std::vector<Method> methods;
  for (const std::string& name : method_names) {
    methods.push_back(parse_method(name));
  }
  const PairwiseTables tables = compare_methods(data, methods, settings_from(global), global.seed.value_or(1));
  const fs::path dir = output_dir(global, ".");
  fs::create_directories(dir);
  write_pairwise(dir, tables);

  std::cout << "mean |difference| of predictive means\n";
  for (std::size_t a = 0; a < methods.size(); ++a) {
    std::cout << "  " << to_string(methods[a]);
    for (std::size_t b = 0; b < methods.size(); ++b) {
      std::cout << ' ' << tables.mean_abs_diff(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
    std::cout << '\n';
  }
  return 0;
}

int run_oracle(const std::vector<int>& ids) {
  bool all = true;
  for (const auto& result : oracle::run_criteria(ids)) {
    std::cout << oracle::format(result) << std::endl;
    all = all && result.passed;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian process regression with noisy, ordered inputs"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config, "key-value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "master seed");
  app.add_option("--out", global.out, "output directory");
  app.add_option("--preset", global.preset, "named preset")->check(CLI::IsMember({"large-noise"}));

  auto* synth = app.add_subcommand("synth", "run the synthetic benchmark grid");

  std::string data_path;
  std::string method_name = "NPV";
  auto* fit = app.add_subcommand("fit", "fit one method to a dataset");
  fit->add_option("--data", data_path, "dataset CSV (t,sigma_t,y,sigma_y)")->required()->check(CLI::ExistingFile);
  fit->add_option("--method", method_name, "NPV, MCMC or GP");

  std::string compare_data;
  std::vector<std::string> compare_methods_list{"NPV", "MCMC", "GP"};
  auto* compare = app.add_subcommand("compare", "pairwise prediction differences between methods");
  compare->add_option("--data", compare_data, "dataset CSV")->required()->check(CLI::ExistingFile);
  compare->add_option("--methods", compare_methods_list, "methods to compare");

  std::vector<int> criteria;
  auto* oracle_cmd = app.add_subcommand("oracle", "run the verification criteria");
  oracle_cmd->add_option("criteria", criteria, "criterion ids (default: all)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      return run_synth(global);
    }
    if (fit->parsed()) {
      return run_fit(global, data_path, method_name);
    }
    if (compare->parsed()) {
      return run_compare(global, compare_data, compare_methods_list);
    }
    if (oracle_cmd->parsed()) {
      return run_oracle(criteria);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
