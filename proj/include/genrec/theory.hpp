#pragma once

// Finite certificates for the exact-recovery conditions:
//  - every (m - (2l+1))-row submatrix of the composite M*W has rank k, which
//    forces M G(z) - M G(z0) to have at least 2l+1 nonzeros for z != z0;
//  - the l0 separation and l1 support inequalities on sampled candidates;
//  - the leaky-ReLU difference slope beta in [h, 1] and the scaled-product
//    reduction G(z) - G(z0) = P (z - z0) it enables.
//
// Conditions quantified over all z != z0 can only be sampled; a pass means
// "no violation found in N samples".

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "genrec/generator.hpp"

namespace genrec {

enum class RankMode { exhaustive, sampled };
std::string_view to_string(RankMode mode);

struct RankCheckOptions {
  std::optional<RankMode> mode;            // unset: exhaustive when C(m, r) <= exhaustive_limit
  std::uint64_t exhaustive_limit = 1'000'000;
  std::uint64_t sample_count = 10'000;
  Seed seed = 0;
  double rel_tol = 0.0;                    // <= 0: default_rank_tolerance
};

struct RankCertificate {
  Index rows_total = 0;
  Index k = 0;
  Index l = 0;
  Index subset_size = 0;                   // m - (2l + 1)
  std::uint64_t submatrices_checked = 0;
  RankMode mode = RankMode::exhaustive;
  bool all_full_rank = true;
  double min_singular_value_seen = 0.0;    // smallest sigma_k over checked subsets
  double tolerance = 0.0;                  // rank cutoff of the subset attaining the minimum
  std::optional<std::vector<Index>> deficient_subset;  // first rank-deficient witness
};

/// Saturating binomial coefficient.
std::uint64_t binomial(std::uint64_t n, std::uint64_t r);

/// Checks rank k for all (or sampled) row subsets of size m - (2l+1).
/// Throws NoBudget when m - (2l+1) < k.
RankCertificate certify_rank(const Matrix& A, Index k, Index l, const RankCheckOptions& opts = {});

enum class Condition { l0_separation, l1_support_inequality, beta_bounds };
std::string_view to_string(Condition condition);

struct Violation {
  std::vector<double> witness;   // candidate z (or the (x, y) pair)
  std::vector<double> observed;  // l0: {nonzeros}; l1: {||d_K||_1, ||d_Kbar||_1}; beta: {beta}
};

struct ConditionReport {
  Condition condition = Condition::l0_separation;
  std::size_t instances_tested = 0;
  std::vector<Violation> violations;
  // l0 only: violation counts at alternative zero tolerances.
  std::vector<std::pair<double, std::size_t>> tolerance_sensitivity;
  // beta only: exact boundary hits.
  std::size_t beta_at_one = 0;
  std::size_t beta_at_leak = 0;

  bool passed() const { return violations.empty(); }
};

inline constexpr double kZeroTolerance = 1e-9;

/// Counts nonzeros of M G(z) - M G(z0) (|d_i| > rel_zero_tol * ||M G(z0)||_inf)
/// per candidate; a count <= 2l is a violation. Candidates equal to z0 are skipped.
ConditionReport check_l0_condition(const GeneratorNet& net, const Matrix& M, const Vector& z0, Index l,
                                   const std::vector<Vector>& candidates,
                                   double rel_zero_tol = kZeroTolerance);

/// ||(M G(z0) - M G(z))_K||_1 < ||(M G(z0) - M G(z))_Kbar||_1 per candidate.
ConditionReport check_l1_condition(const GeneratorNet& net, const Matrix& M, const Vector& z0,
                                   const std::vector<Index>& support, const std::vector<Vector>& candidates);

/// beta with a(x) - a(y) = beta (x - y), by sign case; beta = 1 when x == y.
double difference_slope(const Activation& act, double x, double y);

/// Checks h <= beta <= 1 over (x, y) samples; x == y pairs are skipped.
ConditionReport check_beta_lemma(double h, const std::vector<std::pair<double, double>>& samples);

struct L0RecoveryResult {
  std::size_t index = 0;        // grid position of the winner
  Vector z;
  std::size_t objective = 0;    // nonzeros of M G(z) - y
  std::optional<std::size_t> runner_up_objective;  // best objective among the other points
  bool unique() const { return !runner_up_objective || objective < *runner_up_objective; }
};

/// Exhaustive l0 minimization over a finite grid. Ties: smaller ||z||_2, then lower index.
L0RecoveryResult brute_force_l0_recovery(const GeneratorNet& net, const Matrix& M, const Vector& y,
                                         const std::vector<Vector>& grid,
                                         double rel_zero_tol = kZeroTolerance);

/// P = Gamma_d W_d ... Gamma_1 W_1 with Gamma_i = diag of difference slopes at
/// layer i, so that G(z) - G(z0) = P (z - z0).
Matrix scaled_product(const GeneratorNet& net, const Vector& z, const Vector& z0);

/// Near/far probes around z0: `per_radius` random directions at radii
/// {0.1, 1, 10} * max(||z0||, 1), plus +-delta coordinate steps.
std::vector<Vector> generate_candidates(const Vector& z0, std::size_t per_radius, Rng& rng);

struct AdversarialInstance {
  Vector z_rival;                // z != z0 with ||M G(z) - M G(z0)||_0 <= 2l
  Vector e;                      // outliers copied from the difference on l of its entries
  std::vector<Index> support;
  Vector y;                      // M G(z0) + e
};

/// Identity-activation construction: z_rival = z0 + v with v orthogonal to k-1
/// rows of A = M W, so A v has at most m - k + 1 nonzeros; requires 2l >= m - k + 1.
AdversarialInstance make_adversarial_instance(const GeneratorNet& net, const Matrix& M, const Vector& z0,
                                              Index l, Rng& rng);

struct RankDeficiencyExhibit {
  std::size_t candidate_index = 0;
  Vector z;
  Index rank = 0;                // rank of M * P(z, z0)
  std::vector<Index> subset;     // a rank-deficient row subset of size m - (2l+1)
};

/// Searches candidates for a scaled product M * P(z, z0) that fails the row-subset rank test.
std::optional<RankDeficiencyExhibit> find_rank_deficiency(const GeneratorNet& net, const Matrix& M,
                                                          const Vector& z0, Index l,
                                                          const std::vector<Vector>& candidates,
                                                          const RankCheckOptions& opts = {});

}  // namespace genrec
