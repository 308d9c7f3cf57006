#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ordgp/gp.hpp"
#include "ordgp/harness/io.hpp"

namespace ordgp::harness {

enum class Method { NPV, MCMC, GP };

std::string to_string(Method method);
Method parse_method(const std::string& name);  // ParseError on unknown names

struct MethodSettings {
  int components = 3;
  int restarts = 5;
  int mcmc_iterations = 5000;
};

struct MethodOutput {
  std::vector<GaussianPrediction> predictions;  // at the query points
  Eigen::VectorXd tau_hat;                      // row order of the input dataset
  double wall_time_s = 0.0;
};

/// Fits one method to `data` and predicts at `queries` (latent input values).
MethodOutput run_method(Method method, const Dataset& data, const Eigen::VectorXd& queries,
                        const MethodSettings& settings, std::uint64_t seed);

double rmse(const Eigen::VectorXd& predicted, const Eigen::VectorXd& truth);
double mean_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b);
inline double input_mae(const Eigen::VectorXd& tau_hat, const Eigen::VectorXd& tau) {
  return mean_abs_diff(tau_hat, tau);
}
inline double baseline_mae(const Eigen::VectorXd& t, const Eigen::VectorXd& tau) { return mean_abs_diff(t, tau); }

Eigen::VectorXd prediction_means(const std::vector<GaussianPrediction>& predictions);

struct GridConfig {
  std::vector<int> functions{1, 2, 3, 4, 5};
  std::vector<double> sigma_t_grid{0.2, 1.0, 2.0, 3.0};
  double sigma_y = 0.05;
  bool large_noise = false;  // sigma_y = (max f - min f) / 10 per function
  std::vector<Method> methods{Method::NPV, Method::MCMC, Method::GP};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int n = 25;
  double lower = -10.0;
  double upper = 10.0;
  MethodSettings settings;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "results";

  /// Keys: functions, sigma_t_grid, sigma_y (number or `large-noise`), methods,
  /// seeds, n, K, restarts, mcmc_iterations, output_dir, master_seed.
  static GridConfig from(const KeyValueConfig& kv);
  void validate() const;
};

struct CellResult {
  int function_id = 0;
  double sigma_t = 0.0;
  double sigma_y = 0.0;
  Method method = Method::GP;
  std::uint64_t seed = 0;
  double rmse = 0.0;
  double input_mae = 0.0;
  double baseline_mae = 0.0;
  double wall_time_s = 0.0;
  std::string error;  // empty on success
};

/// Dataset seed of a cell. Methods share it, so every method sees the same data.
std::uint64_t cell_dataset_seed(std::uint64_t master, int function_id, std::size_t sigma_t_index,
                                std::uint64_t replicate);

/// Runs every (function, sigma_t, method, seed) cell. Cells run in parallel
/// under a dynamic schedule; results come back in grid order.
std::vector<CellResult> run_grid(const GridConfig& config);

/// Writes results.csv, fig_f<id>_<metric>.csv and timing.csv into `dir`.
/// `timestamp` goes into the first line of results.csv only.
void write_grid_outputs(const std::filesystem::path& dir, const std::vector<CellResult>& cells,
                        const std::string& timestamp);

struct PairwiseTables {
  std::vector<Method> methods;
  Eigen::MatrixXd mean_abs_diff;  // mean |mu_a - mu_b| over the query grid
  Eigen::MatrixXd sym_kl;         // mean symmetrized KL over the query grid
};

PairwiseTables pairwise_tables(const std::vector<Method>& methods,
                               const std::vector<std::vector<GaussianPrediction>>& predictions);

/// Runs each method on `data`, predicting on 201 points across range(t), and
/// tabulates pairwise differences.
PairwiseTables compare_methods(const Dataset& data, const std::vector<Method>& methods,
                               const MethodSettings& settings, std::uint64_t seed);

void write_pairwise(const std::filesystem::path& dir, const PairwiseTables& tables);

std::string current_timestamp();

}  // namespace ordgp::harness
