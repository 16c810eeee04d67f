#pragma once

// Recovery of z from y ~ M G(z) + e:
//  - linearized ADMM for min ||M G(z) - y||_1
//  - descent on ||r||_1^2, ||r||_2^2 and ||r||_2^2 + reg_weight ||z||_2^2
//  - best-of-N restarts selected by measurement error.

#include <iosfwd>
#include <optional>
#include <string_view>
#include <variant>
#include <vector>

#include "genrec/generator.hpp"

namespace genrec {

enum class SolveStatus { converged, max_iter, numerical_failure };
std::string_view to_string(SolveStatus status);

/// Starting latent: an explicit vector, or a seed for a standard Gaussian draw.
using ZInit = std::variant<Vector, Seed>;
Vector initial_point(const ZInit& init, Index k);

/// Penalty used when AdmmConfig::rho is unset: 1 / mean(|y_i|), or 1 for y = 0.
/// Tying rho to the data scale makes the iterates equivariant under y -> c*y.
double auto_rho(const Vector& y);

struct AdmmConfig {
  std::optional<double> rho;  // unset: auto_rho(y)
  int max_iter = 1000;
  double primal_tol = 1e-8;
  double dual_tol = 1e-8;
  // false runs exactly max_iter iterations regardless of the residuals.
  bool early_stop = true;
  ZInit z_init = Seed{0};
};

enum class GdObjective { l1_squared, l2_squared, l2_squared_reg };
std::string_view to_string(GdObjective objective);

struct FixedStep {
  double gamma = 1e-3;
};

/// Armijo backtracking: start every step at gamma0, shrink until
/// f(z - g*gamma) <= f(z) - armijo * gamma * ||g||^2.
struct Backtracking {
  double gamma0 = 1.0;
  double shrink = 0.5;
  double armijo = 1e-4;
};

struct GdConfig {
  GdObjective objective = GdObjective::l2_squared;
  double reg_weight = 0.0;
  int max_steps = 1000;
  std::variant<Backtracking, FixedStep> step = Backtracking{};
  double grad_tol = 1e-9;
  ZInit z_init = Seed{0};
};

using SolverConfig = std::variant<AdmmConfig, GdConfig>;

struct TraceRow {
  int iter = 0;
  double objective = 0.0;
  std::optional<double> primal_residual;  // ADMM only
  std::optional<double> dual_residual;    // ADMM only
  double eps_m = 0.0;
};

struct SolveResult {
  Vector z_hat;
  Vector x_hat;  // forward(net, z_hat)
  double eps_m = 0.0;              // ||y - M x_hat||_1
  std::optional<double> eps_r;     // ||x0 - x_hat||_2^2 once ground truth is attached
  int iterations_run = 0;
  SolveStatus status = SolveStatus::max_iter;
  std::vector<TraceRow> trace;
};

double measurement_error(const GeneratorNet& net, const Matrix& M, const Vector& y, const Vector& z);
double reconstruction_error(const Vector& x0, const Vector& x_hat);
void attach_ground_truth(SolveResult& result, const Vector& x0);

/// Value of the configured descent objective at z.
double gd_objective(const GeneratorNet& net, const Matrix& M, const Vector& y, const Vector& z,
                    GdObjective objective, double reg_weight);
/// Gradient of the configured objective; the l1 term uses sign(0) = 0.
Vector gd_gradient(const GeneratorNet& net, const Matrix& M, const Vector& y, const Vector& z,
                   GdObjective objective, double reg_weight);

/// Iterate of the linearized ADMM: latent z, slack w = M G(z) - y, multiplier lambda.
struct AdmmState {
  Vector z;
  Vector w;
  Vector lambda;
};

struct AdmmStep {
  bool ok = true;      // false: pseudo-inverse failed or the iterate went non-finite
  double primal = 0.0; // ||M G(z) - w - y||_2 after the step
  double dual = 0.0;   // rho ||w_new - w_old||_2
};

/// One pass of z-, w- and lambda-updates; `state` is left untouched when !ok.
AdmmStep admm_step(const GeneratorNet& net, const Matrix& M, const Vector& y, double rho, AdmmState& state);

SolveResult admm_solve(const GeneratorNet& net, const Matrix& M, const Vector& y, const AdmmConfig& cfg);
SolveResult gd_solve(const GeneratorNet& net, const Matrix& M, const Vector& y, const GdConfig& cfg);
SolveResult solve(const GeneratorNet& net, const Matrix& M, const Vector& y, const SolverConfig& cfg);

/// Seed of the Gaussian initial point used by restart `r`.
Seed restart_seed(Seed seed, int r);

/// Runs `restarts` solves from independent Gaussian initial points and keeps the
/// one with the smallest eps_m (earliest wins ties). Throws NumericalFailure only
/// if every restart fails.
SolveResult solve_with_restarts(const GeneratorNet& net, const Matrix& M, const Vector& y,
                                const SolverConfig& base, int restarts, Seed seed);

/// CSV: iter,objective,primal_residual,dual_residual,eps_m
void write_trace_csv(std::ostream& os, const SolveResult& result);

}  // namespace genrec
