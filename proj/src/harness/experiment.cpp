#include "ordgp/harness/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "ordgp/error.hpp"
#include "ordgp/harness/synthetic.hpp"
#include "ordgp/mcmc.hpp"
#include "ordgp/random.hpp"
#include "ordgp/variational.hpp"

namespace ordgp::harness {

std::string to_string(Method method) {
  switch (method) {
    case Method::NPV:
      return "NPV";
    case Method::MCMC:
      return "MCMC";
    case Method::GP:
      return "GP";
  }
  return "?";
}

Method parse_method(const std::string& name) {
  std::string upper = name;
  std::transform(upper.begin(), upper.end(), upper.begin(), [](unsigned char c) { return std::toupper(c); });
  if (upper == "NPV") return Method::NPV;
  if (upper == "MCMC") return Method::MCMC;
  if (upper == "GP") return Method::GP;
  throw Error(ErrorCode::ParseError, "unknown method '" + name + "'");
}

MethodOutput run_method(Method method, const Dataset& data, const Eigen::VectorXd& queries,
                        const MethodSettings& settings, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  MethodOutput out;
  switch (method) {
    case Method::NPV: {
      FitConfig config;
      config.components = settings.components;
      config.restarts = settings.restarts;
      config.seed = seed;
      const FitResult fitted = fit(data, config);
      const CanonicalDataset canonical = canonicalize(data);
      const Matern32Kernel kernel(fitted.theta);
      const GPWorkspace ws = build_workspace(fitted.tau_hat.values(), canonical.data, kernel);
      out.predictions = predict_many(queries, fitted.tau_hat.values(), ws, kernel);
      out.tau_hat = fitted.tau_hat_input_order();
      break;
    }
    case Method::MCMC: {
      ChainConfig config;
      config.iterations = settings.mcmc_iterations;
      config.seed = seed;
      config.queries = queries;
      const ChainSummary summary = run_chain(data, config);
      out.predictions = summary.predictions;
      out.tau_hat = summary.tau_mean_input_order();
      break;
    }
    case Method::GP: {
      GPFitConfig config;
      config.restarts = settings.restarts;
      config.seed = seed;
      const GPFitResult fitted = fit_standard_gp(data, config);
      const Matern32Kernel kernel(fitted.params);
      const GPWorkspace ws = build_workspace(data.t, data, kernel);
      out.predictions = predict_many(queries, data.t, ws, kernel);
      out.tau_hat = data.t;
      break;
    }
  }
  out.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth) {
  if (predicted.size() != truth.size()) {
    throw Error(ErrorCode::LengthMismatch, "rmse: length mismatch");
  }
  if (predicted.size() == 0) {
    throw Error(ErrorCode::EmptyDataset, "rmse: no points");
  }
  return std::sqrt((predicted - truth).squaredNorm() / static_cast<double>(truth.size()));
}

double mean_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch, "mean absolute difference: length mismatch");
  }
  if (a.size() == 0) {
    throw Error(ErrorCode::EmptyDataset, "mean absolute difference: no points");
  }
  return (a - b).cwiseAbs().mean();
}

Eigen::VectorXd prediction_means(const std::vector<GaussianPrediction>& predictions) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(predictions.size()));
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    out(static_cast<Eigen::Index>(i)) = predictions[i].mean;
  }
  return out;
}

GridConfig GridConfig::from(const KeyValueConfig& kv) {
  GridConfig config;
  if (kv.has("functions")) {
    config.functions.clear();
    for (const auto& item : kv.get_list("functions", {})) {
      std::string s = item;
      if (!s.empty() && (s[0] == 'f' || s[0] == 'F')) s = s.substr(1);
      config.functions.push_back(parse_int(s, "config key functions"));
    }
  }
  if (kv.has("sigma_t_grid")) {
    config.sigma_t_grid.clear();
    for (const auto& item : kv.get_list("sigma_t_grid", {})) {
      config.sigma_t_grid.push_back(parse_double(item, "config key sigma_t_grid"));
    }
  }
  if (kv.has("sigma_y")) {
    const std::string value = kv.get("sigma_y", "");
    if (value == "large-noise") {
      config.large_noise = true;
    } else {
      config.sigma_y = parse_double(value, "config key sigma_y");
    }
  }
  if (kv.has("methods")) {
    config.methods.clear();
    for (const auto& item : kv.get_list("methods", {})) {
      config.methods.push_back(parse_method(item));
    }
  }
  if (kv.has("seeds")) {
    config.seeds.clear();
    for (const auto& item : kv.get_list("seeds", {})) {
      config.seeds.push_back(static_cast<std::uint64_t>(parse_int(item, "config key seeds")));
    }
  }
  config.n = kv.get_int("n", config.n);
  config.lower = kv.get_double("lower", config.lower);
  config.upper = kv.get_double("upper", config.upper);
  config.settings.components = kv.get_int("K", config.settings.components);
  config.settings.restarts = kv.get_int("restarts", config.settings.restarts);
  config.settings.mcmc_iterations = kv.get_int("mcmc_iterations", config.settings.mcmc_iterations);
  config.master_seed = static_cast<std::uint64_t>(kv.get_int("master_seed", static_cast<int>(config.master_seed)));
  config.output_dir = kv.get("output_dir", config.output_dir.string());
  config.validate();
  return config;
}

void GridConfig::validate() const {
  if (functions.empty() || sigma_t_grid.empty() || methods.empty() || seeds.empty()) {
    throw Error(ErrorCode::InvalidArgument, "grid needs at least one function, sigma_t, method and seed");
  }
  for (int id : functions) {
    if (id < 1 || id > 5) {
      throw Error(ErrorCode::InvalidArgument, "function ids must be in 1..5");
    }
  }
  for (double s : sigma_t_grid) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "sigma_t grid values must be > 0");
  }
  if (!large_noise && !(sigma_y >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "sigma_y must be >= 0");
  }
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "n must be >= 2");
  if (!(upper > lower)) throw Error(ErrorCode::InvalidArgument, "input range is empty");
  if (settings.components < 1 || settings.restarts < 1 || settings.mcmc_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "K, restarts and mcmc_iterations must be >= 1");
  }
}

std::uint64_t cell_dataset_seed(std::uint64_t master, int function_id, std::size_t sigma_t_index,
                                std::uint64_t replicate) {
  std::uint64_t s = derive_seed(master, static_cast<std::uint64_t>(function_id));
  s = derive_seed(s, sigma_t_index);
  return derive_seed(s, replicate);
}

namespace {

struct CellKey {
  int function_id;
  std::size_t sigma_t_index;
  std::size_t method_index;
  std::uint64_t seed;
};

CellResult run_cell(const GridConfig& config, const CellKey& key) {
  CellResult cell;
  cell.function_id = key.function_id;
  cell.sigma_t = config.sigma_t_grid[key.sigma_t_index];
  cell.method = config.methods[key.method_index];
  cell.seed = key.seed;
  cell.sigma_y = config.large_noise ? large_noise_sigma_y(key.function_id, config.lower, config.upper)
                                    : config.sigma_y;
  try {
    SyntheticSpec spec;
    spec.function_id = key.function_id;
    spec.n = config.n;
    spec.lower = config.lower;
    spec.upper = config.upper;
    spec.sigma_y = cell.sigma_y;
    spec.sigma_t = cell.sigma_t;
    spec.seed = cell_dataset_seed(config.master_seed, key.function_id, key.sigma_t_index, key.seed);
    const SyntheticData synth = generate_dataset(spec);
    const Eigen::VectorXd queries = query_grid(config.lower, config.upper);
    const Eigen::VectorXd truth = synth_function(key.function_id, queries);

    const MethodOutput out =
        run_method(cell.method, synth.data, queries, config.settings, derive_seed(spec.seed, 1000));
    cell.rmse = rmse(prediction_means(out.predictions), truth);
    cell.input_mae = input_mae(out.tau_hat, synth.truth.values());
    cell.baseline_mae = baseline_mae(synth.data.t, synth.truth.values());
    cell.wall_time_s = out.wall_time_s;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

struct Stats {
  double mean = 0.0;
  double sd = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return s;
}

std::string csv_escape(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) {
    return text;
  }
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += (c == '\n' ? ' ' : c);
  }
  return out + "\"";
}

}  // namespace

std::vector<CellResult> run_grid(const GridConfig& config) {
  config.validate();
  std::vector<CellKey> keys;
  for (int f : config.functions) {
    for (std::size_t s = 0; s < config.sigma_t_grid.size(); ++s) {
      for (std::size_t m = 0; m < config.methods.size(); ++m) {
        for (std::uint64_t seed : config.seeds) {
          keys.push_back({f, s, m, seed});
        }
      }
    }
  }
  std::vector<CellResult> results(keys.size());
  const auto count = static_cast<long>(keys.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (long c = 0; c < count; ++c) {
    results[static_cast<std::size_t>(c)] = run_cell(config, keys[static_cast<std::size_t>(c)]);
  }
  return results;
}

void write_grid_outputs(const std::filesystem::path& dir, const std::vector<CellResult>& cells,
                        const std::string& timestamp) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "results.csv");
    out << "# generated " << timestamp << '\n';
    out << "function_id,sigma_t,sigma_y,method,seed,rmse,input_mae,baseline_mae,wall_time_s,error\n";
    for (const auto& c : cells) {
      out << c.function_id << ',' << format_double(c.sigma_t) << ',' << format_double(c.sigma_y) << ','
          << to_string(c.method) << ',' << c.seed << ',';
      if (c.error.empty()) {
        out << format_double(c.rmse) << ',' << format_double(c.input_mae) << ',' << format_double(c.baseline_mae)
            << ',' << format_double(c.wall_time_s) << ",\n";
      } else {
        out << ",,,," << csv_escape(c.error) << '\n';
      }
    }
  }

  // Panels keep grid order: functions, then sigma_t, then methods as first seen.
  std::vector<int> functions;
  std::vector<double> sigmas;
  std::vector<Method> methods;
  for (const auto& c : cells) {
    if (std::find(functions.begin(), functions.end(), c.function_id) == functions.end()) functions.push_back(c.function_id);
    if (std::find(sigmas.begin(), sigmas.end(), c.sigma_t) == sigmas.end()) sigmas.push_back(c.sigma_t);
    if (std::find(methods.begin(), methods.end(), c.method) == methods.end()) methods.push_back(c.method);
  }
  const std::pair<const char*, double CellResult::*> metrics[] = {
      {"rmse", &CellResult::rmse}, {"input_mae", &CellResult::input_mae}, {"baseline_mae", &CellResult::baseline_mae}};
  for (int f : functions) {
    for (const auto& [name, member] : metrics) {
      std::ofstream out(dir / ("fig_f" + std::to_string(f) + "_" + name + ".csv"));
      out << "sigma_t,method,mean,std\n";
      for (double s : sigmas) {
        for (Method m : methods) {
          std::vector<double> xs;
          for (const auto& c : cells) {
            if (c.function_id == f && c.sigma_t == s && c.method == m && c.error.empty()) xs.push_back(c.*member);
          }
          if (xs.empty()) continue;
          const Stats st = stats_of(xs);
          out << format_double(s) << ',' << to_string(m) << ',' << format_double(st.mean) << ','
              << format_double(st.sd) << '\n';
        }
      }
    }
  }

  std::ofstream out(dir / "timing.csv");
  out << "method,cells,mean_wall_time_s,std_wall_time_s\n";
  for (Method m : methods) {
    std::vector<double> xs;
    for (const auto& c : cells) {
      if (c.method == m && c.error.empty()) xs.push_back(c.wall_time_s);
    }
    const Stats st = stats_of(xs);
    out << to_string(m) << ',' << xs.size() << ',' << format_double(st.mean) << ',' << format_double(st.sd) << '\n';
  }
}

PairwiseTables pairwise_tables(const std::vector<Method>& methods,
                               const std::vector<std::vector<GaussianPrediction>>& predictions) {
  if (methods.size() != predictions.size()) {
    throw Error(ErrorCode::LengthMismatch, "one prediction set per method expected");
  }
  const auto m = static_cast<Eigen::Index>(methods.size());
  PairwiseTables tables{methods, Eigen::MatrixXd::Zero(m, m), Eigen::MatrixXd::Zero(m, m)};
  for (Eigen::Index a = 0; a < m; ++a) {
    for (Eigen::Index b = 0; b < m; ++b) {
      const auto& pa = predictions[static_cast<std::size_t>(a)];
      const auto& pb = predictions[static_cast<std::size_t>(b)];
      if (pa.size() != pb.size() || pa.empty()) {
        throw Error(ErrorCode::LengthMismatch, "prediction sets differ in length");
      }
      if (a == b) continue;
      double mad = 0.0;
      double kl = 0.0;
      for (std::size_t q = 0; q < pa.size(); ++q) {
        mad += std::abs(pa[q].mean - pb[q].mean);
        kl += sym_kl(pa[q], pb[q]);
      }
      tables.mean_abs_diff(a, b) = mad / static_cast<double>(pa.size());
      tables.sym_kl(a, b) = kl / static_cast<double>(pa.size());
    }
  }
  return tables;
}

PairwiseTables compare_methods(const Dataset& data, const std::vector<Method>& methods,
                               const MethodSettings& settings, std::uint64_t seed) {
  data.validate();
  const Eigen::VectorXd queries = query_grid(data.t.minCoeff(), data.t.maxCoeff());
  std::vector<std::vector<GaussianPrediction>> predictions;
  for (std::size_t k = 0; k < methods.size(); ++k) {
    predictions.push_back(run_method(methods[k], data, queries, settings, derive_seed(seed, k)).predictions);
  }
  return pairwise_tables(methods, predictions);
}

void write_pairwise(const std::filesystem::path& dir, const PairwiseTables& tables) {
  std::filesystem::create_directories(dir);
  const auto write = [&](const std::string& name, const Eigen::MatrixXd& values) {
    std::ofstream out(dir / name);
    out << "method";
    for (Method m : tables.methods) out << ',' << to_string(m);
    out << '\n';
    for (Eigen::Index a = 0; a < values.rows(); ++a) {
      out << to_string(tables.methods[static_cast<std::size_t>(a)]);
      for (Eigen::Index b = 0; b < values.cols(); ++b) out << ',' << format_double(values(a, b));
      out << '\n';
    }
  };
  write("pairwise_mad.csv", tables.mean_abs_diff);
  write("pairwise_symkl.csv", tables.sym_kl);
}

std::string current_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream out;
  out << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

}  // namespace ordgp::harness
