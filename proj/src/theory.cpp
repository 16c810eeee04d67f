#include "genrec/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace genrec {

std::string_view to_string(RankMode mode) {
  return mode == RankMode::exhaustive ? "exhaustive" : "sampled";
}

std::string_view to_string(Condition condition) {
  switch (condition) {
    case Condition::l0_separation: return "l0_separation";
    case Condition::l1_support_inequality: return "l1_support_inequality";
    case Condition::beta_bounds: return "beta_bounds";
  }
  return "unknown";
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t r) {
  if (r > n) return 0;
  r = std::min(r, n - r);
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t c = 1;
  for (std::uint64_t i = 1; i <= r; ++i) {
    // c * (n - r + i) / i stays integral at every step.
    const std::uint64_t num = n - r + i;
    const std::uint64_t g = std::gcd(c, i);
    const std::uint64_t c_red = c / g, i_red = i / g;
    const std::uint64_t num_red = num / i_red;  // i_red divides num after reduction
    if (c_red > kMax / num_red) return kMax;
    c = c_red * num_red;
  }
  return c;
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

// Advances a sorted r-combination of {0..n-1}; false after the last one.
bool next_combination(std::vector<Index>& idx, Index n) {
  const Index r = static_cast<Index>(idx.size());
  for (Index i = r - 1; i >= 0; --i) {
    if (idx[static_cast<std::size_t>(i)] < n - r + i) {
      ++idx[static_cast<std::size_t>(i)];
      for (Index j = i + 1; j < r; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

std::vector<Index> sample_subset(Index n, Index r, Rng& rng) {
  std::vector<Index> pool(static_cast<std::size_t>(n));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < r; ++i) {
    std::uniform_int_distribution<Index> pick(i, n - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(r));
  std::sort(pool.begin(), pool.end());
  return pool;
}

Matrix take_rows(const Matrix& A, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), A.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = A.row(rows[i]);
  return out;
}

}  // namespace

RankCertificate certify_rank(const Matrix& A, Index k, Index l, const RankCheckOptions& opts) {
  if (A.cols() != k) throw ShapeError("certify_rank: matrix has " + std::to_string(A.cols()) +
                                      " columns, expected k = " + std::to_string(k));
  if (l < 0) throw InvalidInput("certify_rank: l must be >= 0");
  const Index m = A.rows();
  const Index r = m - (2 * l + 1);
  if (r < k)
    throw NoBudget("certify_rank: m - (2l+1) = " + std::to_string(r) + " < k = " + std::to_string(k));

  RankCertificate cert;
  cert.rows_total = m;
  cert.k = k;
  cert.l = l;
  cert.subset_size = r;
  cert.min_singular_value_seen = std::numeric_limits<double>::infinity();

  const std::uint64_t total = binomial(static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(r));
  cert.mode = opts.mode.value_or(total <= opts.exhaustive_limit ? RankMode::exhaustive : RankMode::sampled);
  if (total <= opts.exhaustive_limit) cert.mode = RankMode::exhaustive;

  const auto check = [&](const std::vector<Index>& rows) {
    const auto rank = numerical_rank(take_rows(A, rows), opts.rel_tol);
    const double sigma_k = static_cast<std::size_t>(k) <= rank.singular_values.size()
                               ? rank.singular_values[static_cast<std::size_t>(k - 1)]
                               : 0.0;
    if (sigma_k < cert.min_singular_value_seen) {
      cert.min_singular_value_seen = sigma_k;
      cert.tolerance = rank.tolerance_used;
    }
    ++cert.submatrices_checked;
    if (rank.rank < k && cert.all_full_rank) {
      cert.all_full_rank = false;
      cert.deficient_subset = rows;
    }
  };

  if (cert.mode == RankMode::exhaustive) {
    std::vector<Index> rows(static_cast<std::size_t>(r));
    std::iota(rows.begin(), rows.end(), Index{0});
    do check(rows);
    while (next_combination(rows, m));
  } else {
    Rng rng(opts.seed);
    for (std::uint64_t s = 0; s < opts.sample_count; ++s) check(sample_subset(m, r, rng));
  }
  return cert;
}

ConditionReport check_l0_condition(const GeneratorNet& net, const Matrix& M, const Vector& z0, Index l,
                                   const std::vector<Vector>& candidates, double rel_zero_tol) {
  const Vector base = M * forward(net, z0);
  const double scale = base.lpNorm<Eigen::Infinity>();
  const std::vector<double> alt_tols{1e-7, 1e-11};

  ConditionReport rep;
  rep.condition = Condition::l0_separation;
  std::vector<std::size_t> alt_counts(alt_tols.size(), 0);
  const auto nonzeros = [&](const Vector& d, double tol) {
    return static_cast<std::size_t>((d.array().abs() > tol * scale).count());
  };
  const std::size_t need = static_cast<std::size_t>(2 * l + 1);

  for (const auto& z : candidates) {
    if (z == z0) continue;
    const Vector d = M * forward(net, z) - base;
    ++rep.instances_tested;
    const std::size_t count = nonzeros(d, rel_zero_tol);
    if (count < need) rep.violations.push_back({to_std(z), {static_cast<double>(count)}});
    for (std::size_t t = 0; t < alt_tols.size(); ++t)
      if (nonzeros(d, alt_tols[t]) < need) ++alt_counts[t];
  }
  for (std::size_t t = 0; t < alt_tols.size(); ++t) rep.tolerance_sensitivity.emplace_back(alt_tols[t], alt_counts[t]);
  return rep;
}

ConditionReport check_l1_condition(const GeneratorNet& net, const Matrix& M, const Vector& z0,
                                   const std::vector<Index>& support, const std::vector<Vector>& candidates) {
  const Index m = M.rows();
  std::vector<bool> in_support(static_cast<std::size_t>(m), false);
  for (Index i : support) {
    if (i < 0 || i >= m) throw InvalidInput("check_l1_condition: support index out of range");
    in_support[static_cast<std::size_t>(i)] = true;
  }
  const Vector base = M * forward(net, z0);

  ConditionReport rep;
  rep.condition = Condition::l1_support_inequality;
  for (const auto& z : candidates) {
    if (z == z0) continue;
    const Vector d = base - M * forward(net, z);
    double on = 0.0, off = 0.0;
    for (Index i = 0; i < m; ++i) (in_support[static_cast<std::size_t>(i)] ? on : off) += std::abs(d(i));
    ++rep.instances_tested;
    if (!(on < off)) rep.violations.push_back({to_std(z), {on, off}});
  }
  return rep;
}

double difference_slope(const Activation& act, double x, double y) {
  if (x == y) return 1.0;
  switch (act.kind) {
    case ActivationKind::identity: return 1.0;
    case ActivationKind::relu:
      if (x >= 0.0 && y >= 0.0) return 1.0;
      if (x < 0.0 && y < 0.0) return 0.0;
      // mixed signs: (a(x) - a(y)) / (x - y) is the nonnegative one's share of the gap
      return x >= 0.0 ? x / (x - y) : y / (y - x);
    case ActivationKind::leaky_relu: {
      const double h = act.leak;
      if (x >= 0.0 && y >= 0.0) return 1.0;
      if (x < 0.0 && y < 0.0) return h;
      // (x - h y) / (x - y) rewritten as h + (1 - h) x / (x - y), which stays in
      // [h, 1] under rounding because the ratio is computed in [0, 1].
      const double share = x >= 0.0 ? x / (x - y) : y / (y - x);
      return h + (1.0 - h) * share;
    }
  }
  return 1.0;
}

ConditionReport check_beta_lemma(double h, const std::vector<std::pair<double, double>>& samples) {
  const Activation act = Activation::leaky_relu(h);
  ConditionReport rep;
  rep.condition = Condition::beta_bounds;
  for (const auto& [x, y] : samples) {
    if (x == y) continue;
    ++rep.instances_tested;
    const double beta = difference_slope(act, x, y);
    if (beta == 1.0) ++rep.beta_at_one;
    if (beta == h) ++rep.beta_at_leak;
    if (!(beta >= h && beta <= 1.0)) rep.violations.push_back({{x, y}, {beta}});
  }
  return rep;
}

L0RecoveryResult brute_force_l0_recovery(const GeneratorNet& net, const Matrix& M, const Vector& y,
                                         const std::vector<Vector>& grid, double rel_zero_tol) {
  if (grid.empty()) throw InvalidInput("brute_force_l0_recovery: empty grid");
  const double tol = rel_zero_tol * y.lpNorm<Eigen::Infinity>();

  std::vector<std::size_t> objective(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Vector r = M * forward(net, grid[i]) - y;
    objective[i] = static_cast<std::size_t>((r.array().abs() > tol).count());
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (objective[i] < objective[best] ||
        (objective[i] == objective[best] && grid[i].norm() < grid[best].norm()))
      best = i;
  }
  L0RecoveryResult out;
  out.index = best;
  out.z = grid[best];
  out.objective = objective[best];
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i == best) continue;
    if (!out.runner_up_objective || objective[i] < *out.runner_up_objective) out.runner_up_objective = objective[i];
  }
  return out;
}

Matrix scaled_product(const GeneratorNet& net, const Vector& z, const Vector& z0) {
  const auto pre = pre_activations(net, z);
  const auto pre0 = pre_activations(net, z0);
  Matrix P = Matrix::Identity(net.input_dim(), net.input_dim());
  for (std::size_t i = 0; i < net.depth(); ++i) {
    const auto& L = net.layers()[i];
    Vector gamma(L.weight.rows());
    for (Index j = 0; j < gamma.size(); ++j) gamma(j) = difference_slope(L.activation, pre[i](j), pre0[i](j));
    P = gamma.asDiagonal() * (L.weight * P);
  }
  return P;
}

std::vector<Vector> generate_candidates(const Vector& z0, std::size_t per_radius, Rng& rng) {
  const double base = std::max(z0.norm(), 1.0);
  std::vector<Vector> out;
  for (double radius : {0.1, 1.0, 10.0}) {
    for (std::size_t i = 0; i < per_radius; ++i) {
      Vector dir = gaussian_vector(z0.size(), rng);
      const double nrm = dir.norm();
      if (nrm == 0.0) continue;
      out.push_back(z0 + (radius * base / nrm) * dir);
    }
  }
  for (double delta : {1e-4, 1e-2}) {
    for (Index j = 0; j < z0.size(); ++j) {
      for (double s : {1.0, -1.0}) {
        Vector z = z0;
        z(j) += s * delta * base;
        out.push_back(std::move(z));
      }
    }
  }
  return out;
}

AdversarialInstance make_adversarial_instance(const GeneratorNet& net, const Matrix& M, const Vector& z0,
                                              Index l, Rng& rng) {
  const Matrix A = M * composite_weight(net);
  const Index m = A.rows(), k = A.cols();
  if (2 * l < m - k + 1)
    throw InvalidInput("make_adversarial_instance: need 2l >= m - k + 1 (l is inside the certified budget)");
  if (l > m - k + 1) throw InvalidInput("make_adversarial_instance: l exceeds the available nonzeros");

  // Zero out k-1 rows of A v with v in the null space of those rows.
  std::vector<Index> rows = sample_subset(m, k - 1, rng);
  Vector v;
  if (k == 1) {
    v = Vector::Ones(1);
  } else {
    Eigen::JacobiSVD<Matrix> svd(take_rows(A, rows), Eigen::ComputeFullV);
    v = svd.matrixV().col(k - 1);
  }
  v *= std::max(z0.norm(), 1.0);

  AdversarialInstance adv;
  adv.z_rival = z0 + v;
  const Vector base = M * forward(net, z0);
  const Vector d = M * forward(net, adv.z_rival) - base;

  std::vector<Index> free_rows;
  for (Index i = 0; i < m; ++i)
    if (!std::binary_search(rows.begin(), rows.end(), i)) free_rows.push_back(i);
  std::shuffle(free_rows.begin(), free_rows.end(), rng);
  adv.support.assign(free_rows.begin(), free_rows.begin() + l);
  std::sort(adv.support.begin(), adv.support.end());

  adv.e = Vector::Zero(m);
  for (Index i : adv.support) adv.e(i) = d(i);
  adv.y = base + adv.e;
  return adv;
}

std::optional<RankDeficiencyExhibit> find_rank_deficiency(const GeneratorNet& net, const Matrix& M,
                                                          const Vector& z0, Index l,
                                                          const std::vector<Vector>& candidates,
                                                          const RankCheckOptions& opts) {
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (candidates[i] == z0) continue;
    const Matrix A = M * scaled_product(net, candidates[i], z0);
    const RankCertificate cert = certify_rank(A, net.input_dim(), l, opts);
    if (!cert.all_full_rank)
      return RankDeficiencyExhibit{i, candidates[i], numerical_rank(A, opts.rel_tol).rank, *cert.deficient_subset};
  }
  return std::nullopt;
}

}  // namespace genrec
