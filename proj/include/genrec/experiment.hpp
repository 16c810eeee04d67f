#pragma once

// Seeded Monte-Carlo sweeps over (m, l, solver, trial) and their CSV outputs.
//
// Every trial owns an instance seed derived from (base seed, m, l, trial); the
// instance (M, z0, e, eta) does not depend on which solvers run, so solvers in
// the same cell are compared on identical data.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "genrec/generator.hpp"
#include "genrec/sensing.hpp"
#include "genrec/solvers.hpp"

namespace genrec {

enum class SolverKind { admm_l1, gd_l1sq, gd_l2sq, gd_l2sq_reg };
std::string_view to_string(SolverKind kind);
SolverKind parse_solver_kind(std::string_view name);

struct NetSpec {
  std::vector<Index> dims{5, 20, 40};
  ActivationKind activation = ActivationKind::identity;
  double leak = kDefaultLeak;
  std::optional<Seed> seed;                       // unset: derived from the base seed
  std::optional<std::filesystem::path> weights;   // load instead of sampling
  bool gaussian_bias = false;

  Activation make_activation() const;
};

struct ExperimentConfig {
  NetSpec net;
  std::vector<Index> m_values{30};
  std::vector<Index> l_values{3};
  double noise_rms = 0.0;
  double outlier_lo = 5000.0;
  double outlier_hi = 10000.0;
  SignMode outlier_sign = SignMode::positive;
  std::vector<SolverKind> solvers{SolverKind::admm_l1};
  std::optional<double> rho;
  double reg_weight = 0.1;
  int max_iter = 1000;
  int restarts = 10;
  int trials = 1;
  Seed seed = 0;
  int jobs = 1;
  double success_threshold = 1e-4;  // on eps_r / n
  std::filesystem::path out_dir = "out";
  bool dump_observations = false;

  void validate() const;
};

/// Applies one key=value setting; keys mirror the CLI long flags without "--".
/// Throws InvalidInput for unknown keys or bad values.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Flat key=value text, one per line, '#' starts a comment.
std::vector<std::pair<std::string, std::string>> parse_key_value(std::istream& is);
void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path);

std::vector<Index> parse_index_list(std::string_view text);

GeneratorNet build_net(const NetSpec& spec, Seed base_seed);
SolverConfig make_solver_config(SolverKind kind, const ExperimentConfig& cfg);

struct Instance {
  Seed seed = 0;
  Matrix M;
  Observation obs;
};

Seed instance_seed(Seed base, Index m, Index l, int trial);
/// Restart stream of an instance; `replay --seed <results.csv seed>` reuses it.
Seed restart_base_seed(Seed instance);
Instance make_instance(const GeneratorNet& net, const ExperimentConfig& cfg, Index m, Index l, int trial);

struct TrialRecord {
  SolverKind solver = SolverKind::admm_l1;
  Index m = 0;
  Index l = 0;
  int trial = 0;
  Seed seed = 0;
  double eps_m = 0.0;
  double eps_r = 0.0;
  double eps_r_per_dim = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::max_iter;
  Vector z_hat;
};

struct Stats {
  double mean = 0.0;
  double std = 0.0;      // sample standard deviation
  double ci95 = 0.0;     // Student-t half-width; nan for fewer than two values
  std::size_t count = 0;
};
Stats summarize(const std::vector<double>& values);

struct CellResult {
  Index m = 0;
  Index l = 0;
  SolverKind solver = SolverKind::admm_l1;
  int trials = 0;
  int failures = 0;
  std::optional<Index> budget;
  Stats eps_r;
  Stats eps_m;
  Stats eps_r_per_dim;
  double success_rate = 0.0;
};

struct ExperimentResult {
  std::vector<TrialRecord> records;  // ordered by m, l, solver, trial
  std::vector<CellResult> cells;     // ordered by m, l, solver
  std::vector<std::string> warnings;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

void write_results_csv(std::ostream& os, const ExperimentResult& result);
void write_summary_csv(std::ostream& os, const ExperimentResult& result);

/// Creates out_dir and opens results.csv / summary.csv before computing, so an
/// unwritable destination fails with IoError up front.
ExperimentResult run_experiment_to_dir(const ExperimentConfig& cfg);

}  // namespace genrec
