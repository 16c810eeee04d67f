#include "genrec/solvers.hpp"

#include <cmath>
#include <ostream>

#include "genrec/numerics.hpp"
#include "genrec/text_format.hpp"

namespace genrec {

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

std::string_view to_string(GdObjective objective) {
  switch (objective) {
    case GdObjective::l1_squared: return "l1_squared";
    case GdObjective::l2_squared: return "l2_squared";
    case GdObjective::l2_squared_reg: return "l2_squared_reg";
  }
  return "unknown";
}

Vector initial_point(const ZInit& init, Index k) {
  if (const auto* z = std::get_if<Vector>(&init)) {
    if (z->size() != k) throw ShapeError("initial point has length " + std::to_string(z->size()) +
                                         ", expected k = " + std::to_string(k));
    return *z;
  }
  Rng rng(std::get<Seed>(init));
  return gaussian_vector(k, rng);
}

double measurement_error(const GeneratorNet& net, const Matrix& M, const Vector& y, const Vector& z) {
  return (y - M * forward(net, z)).lpNorm<1>();
}

double reconstruction_error(const Vector& x0, const Vector& x_hat) {
  if (x0.size() != x_hat.size()) throw ShapeError("reconstruction_error: length mismatch");
  return (x0 - x_hat).squaredNorm();
}

void attach_ground_truth(SolveResult& result, const Vector& x0) {
  result.eps_r = reconstruction_error(x0, result.x_hat);
}

namespace {

void check_problem(const GeneratorNet& net, const Matrix& M, const Vector& y) {
  if (M.cols() != net.output_dim())
    throw ShapeError("M has " + std::to_string(M.cols()) + " columns, generator outputs " +
                     std::to_string(net.output_dim()));
  if (y.size() != M.rows())
    throw ShapeError("y has length " + std::to_string(y.size()) + ", M has " +
                     std::to_string(M.rows()) + " rows");
  if (!M.allFinite() || !y.allFinite()) throw InvalidInput("non-finite entries in M or y");
}

void finish(SolveResult& res, const GeneratorNet& net, const Matrix& M, const Vector& y, const Vector& z) {
  res.z_hat = z;
  res.x_hat = forward(net, z);
  res.eps_m = (y - M * res.x_hat).lpNorm<1>();
}

Vector sign_with_zero(const Vector& r) {
  return r.unaryExpr([](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); });
}

}  // namespace

double auto_rho(const Vector& y) {
  const double scale = y.size() > 0 ? y.cwiseAbs().mean() : 0.0;
  return scale > 0.0 && std::isfinite(scale) ? 1.0 / scale : 1.0;
}

AdmmStep admm_step(const GeneratorNet& net, const Matrix& M, const Vector& y, double rho, AdmmState& state) {
  AdmmStep step;
  // Linearize G at z^q; the z-update is then a least-squares problem.
  const Matrix A = M * jacobian(net, state.z);
  Vector z_next;
  try {
    const Vector rhs = state.w + y - state.lambda / rho - (M * forward(net, state.z) - A * state.z);
    z_next = pseudo_inverse(A) * rhs;
  } catch (const InvalidInput&) {
    step.ok = false;
    return step;
  }
  if (!z_next.allFinite()) {
    step.ok = false;
    return step;
  }
  const Vector mgz = M * forward(net, z_next);
  const Vector w_next = soft_threshold(Vector(mgz - y + state.lambda / rho), 1.0 / rho);
  const Vector constraint = mgz - w_next - y;
  const Vector lambda_next = state.lambda + rho * constraint;

  step.primal = constraint.norm();
  step.dual = rho * (w_next - state.w).norm();
  if (!std::isfinite(step.primal) || !lambda_next.allFinite()) {
    step.ok = false;
    return step;
  }
  state.z = std::move(z_next);
  state.w = w_next;
  state.lambda = lambda_next;
  return step;
}

SolveResult admm_solve(const GeneratorNet& net, const Matrix& M, const Vector& y, const AdmmConfig& cfg) {
  check_problem(net, M, y);
  if (cfg.rho && !(*cfg.rho > 0.0)) throw InvalidInput("admm: rho must be > 0");
  if (cfg.max_iter < 1) throw InvalidInput("admm: max_iter must be >= 1");
  if (!(cfg.primal_tol > 0.0) || !(cfg.dual_tol > 0.0)) throw InvalidInput("admm: tolerances must be > 0");

  const double rho = cfg.rho ? *cfg.rho : auto_rho(y);
  AdmmState state{initial_point(cfg.z_init, net.input_dim()), Vector::Zero(M.rows()), Vector::Zero(M.rows())};

  SolveResult res;
  res.status = SolveStatus::max_iter;
  for (int q = 0; q < cfg.max_iter; ++q) {
    const AdmmStep step = admm_step(net, M, y, rho, state);
    if (!step.ok) {
      res.status = SolveStatus::numerical_failure;
      break;
    }
    const double l1 = measurement_error(net, M, y, state.z);
    res.trace.push_back({q + 1, l1, step.primal, step.dual, l1});
    res.iterations_run = q + 1;
    if (cfg.early_stop && step.primal <= cfg.primal_tol && step.dual <= cfg.dual_tol) {
      res.status = SolveStatus::converged;
      break;
    }
  }
  finish(res, net, M, y, state.z);
  return res;
}

double gd_objective(const GeneratorNet& net, const Matrix& M, const Vector& y, const Vector& z,
                    GdObjective objective, double reg_weight) {
  const Vector r = M * forward(net, z) - y;
  switch (objective) {
    case GdObjective::l1_squared: {
      const double l1 = r.lpNorm<1>();
      return l1 * l1;
    }
    case GdObjective::l2_squared: return r.squaredNorm();
    case GdObjective::l2_squared_reg: return r.squaredNorm() + reg_weight * z.squaredNorm();
  }
  return r.squaredNorm();
}

Vector gd_gradient(const GeneratorNet& net, const Matrix& M, const Vector& y, const Vector& z,
                   GdObjective objective, double reg_weight) {
  const Vector r = M * forward(net, z) - y;
  const Matrix A = M * jacobian(net, z);
  switch (objective) {
    case GdObjective::l1_squared: return 2.0 * r.lpNorm<1>() * (A.transpose() * sign_with_zero(r));
    case GdObjective::l2_squared: return 2.0 * (A.transpose() * r);
    case GdObjective::l2_squared_reg: return 2.0 * (A.transpose() * r) + 2.0 * reg_weight * z;
  }
  return Vector::Zero(z.size());
}

SolveResult gd_solve(const GeneratorNet& net, const Matrix& M, const Vector& y, const GdConfig& cfg) {
  check_problem(net, M, y);
  if (cfg.max_steps < 1) throw InvalidInput("gd: max_steps must be >= 1");
  if (cfg.objective == GdObjective::l2_squared_reg ? !(cfg.reg_weight > 0.0) : cfg.reg_weight != 0.0)
    throw InvalidInput("gd: reg_weight must be > 0 for l2_squared_reg and 0 otherwise");
  if (const auto* bt = std::get_if<Backtracking>(&cfg.step)) {
    if (!(bt->gamma0 > 0.0) || !(bt->shrink > 0.0 && bt->shrink < 1.0) || !(bt->armijo > 0.0 && bt->armijo < 1.0))
      throw InvalidInput("gd: backtracking needs gamma0 > 0, shrink and armijo in (0, 1)");
  } else if (!(std::get<FixedStep>(cfg.step).gamma > 0.0)) {
    throw InvalidInput("gd: fixed step must be > 0");
  }

  const auto f = [&](const Vector& z) { return gd_objective(net, M, y, z, cfg.objective, cfg.reg_weight); };

  Vector z = initial_point(cfg.z_init, net.input_dim());
  double fz = f(z);
  SolveResult res;
  res.status = std::isfinite(fz) ? SolveStatus::max_iter : SolveStatus::numerical_failure;

  for (int t = 0; t < cfg.max_steps && res.status != SolveStatus::numerical_failure; ++t) {
    const Vector g = gd_gradient(net, M, y, z, cfg.objective, cfg.reg_weight);
    const double gnorm2 = g.squaredNorm();
    if (!std::isfinite(gnorm2)) {
      res.status = SolveStatus::numerical_failure;
      break;
    }
    if (std::sqrt(gnorm2) <= cfg.grad_tol) {
      res.status = SolveStatus::converged;
      break;
    }

    Vector z_next;
    double f_next = 0.0;
    if (const auto* bt = std::get_if<Backtracking>(&cfg.step)) {
      bool accepted = false;
      for (double gamma = bt->gamma0; gamma > 0.0; gamma *= bt->shrink) {
        z_next = z - gamma * g;
        if (z_next == z) break;  // step below resolution of z
        f_next = f(z_next);
        if (std::isfinite(f_next) && f_next <= fz - bt->armijo * gamma * gnorm2) {
          accepted = true;
          break;
        }
      }
      // No representable step decreases the objective: stationary to machine precision.
      if (!accepted) {
        res.status = SolveStatus::converged;
        break;
      }
    } else {
      z_next = z - std::get<FixedStep>(cfg.step).gamma * g;
      f_next = f(z_next);
      if (!std::isfinite(f_next)) {
        res.status = SolveStatus::numerical_failure;
        break;
      }
    }

    z = std::move(z_next);
    fz = f_next;
    res.trace.push_back({t + 1, fz, std::nullopt, std::nullopt, measurement_error(net, M, y, z)});
    res.iterations_run = t + 1;
  }
  finish(res, net, M, y, z);
  return res;
}

SolveResult solve(const GeneratorNet& net, const Matrix& M, const Vector& y, const SolverConfig& cfg) {
  return std::visit(
      [&](const auto& c) -> SolveResult {
        if constexpr (std::is_same_v<std::decay_t<decltype(c)>, AdmmConfig>)
          return admm_solve(net, M, y, c);
        else
          return gd_solve(net, M, y, c);
      },
      cfg);
}

Seed restart_seed(Seed seed, int r) { return derive_seed(seed, {static_cast<std::uint64_t>(r)}); }

SolveResult solve_with_restarts(const GeneratorNet& net, const Matrix& M, const Vector& y,
                                const SolverConfig& base, int restarts, Seed seed) {
  if (restarts < 1) throw InvalidInput("solve_with_restarts: restarts must be >= 1");
  std::optional<SolveResult> best;
  for (int r = 0; r < restarts; ++r) {
    SolverConfig cfg = base;
    std::visit([&](auto& c) { c.z_init = restart_seed(seed, r); }, cfg);
    SolveResult res = solve(net, M, y, cfg);
    if (res.status == SolveStatus::numerical_failure || !std::isfinite(res.eps_m)) continue;
    if (!best || res.eps_m < best->eps_m) best = std::move(res);
  }
  if (!best) throw NumericalFailure("solve_with_restarts: all " + std::to_string(restarts) + " restarts failed");
  return std::move(*best);
}

void write_trace_csv(std::ostream& os, const SolveResult& result) {
  os << "iter,objective,primal_residual,dual_residual,eps_m\n";
  for (const auto& row : result.trace) {
    os << row.iter << ',' << format_real(row.objective) << ','
       << (row.primal_residual ? format_real(*row.primal_residual) : "") << ','
       << (row.dual_residual ? format_real(*row.dual_residual) : "") << ',' << format_real(row.eps_m) << '\n';
  }
}

}  // namespace genrec
