#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <algorithm>
#include <sstream>

#include "genrec/sensing.hpp"
#include "genrec/solvers.hpp"
#include "genrec/theory.hpp"
#include "genrec/theory_run.hpp"

using namespace genrec;

namespace {

// Subset-rank oracle: enumerates row subsets by bitmask and counts singular
// values above the LAPACK-style cutoff max(rows, cols) * eps * sigma_max.
struct SubsetOracle {
  std::uint64_t subsets = 0;
  bool all_full = true;
};

SubsetOracle subset_rank_oracle(const Matrix& A, Index k, Index r) {
  SubsetOracle out;
  const Index m = A.rows();
  for (std::uint32_t mask = 0; mask < (1u << m); ++mask) {
    if (std::popcount(mask) != r) continue;
    Matrix sub(r, A.cols());
    Index row = 0;
    for (Index i = 0; i < m; ++i)
      if (mask & (1u << i)) sub.row(row++) = A.row(i);
    const Vector s = Eigen::JacobiSVD<Matrix>(sub).singularValues();
    const double cut = std::max(sub.rows(), sub.cols()) * std::numeric_limits<double>::epsilon() * s(0);
    if ((s.array() > cut).count() < k) out.all_full = false;
    ++out.subsets;
  }
  return out;
}

struct System {
  GeneratorNet net;
  Matrix M;
  Vector z0;
};

System small_system(Seed seed, Activation act = Activation::identity(), std::vector<Index> dims = {2, 6, 10},
                    Index m = 8) {
  auto net = init_gaussian(dims, act, derive_seed(seed, {0}));
  Rng rng(derive_seed(seed, {1}));
  Matrix M = gaussian_matrix(m, net.output_dim(), rng);
  Vector z0 = gaussian_vector(net.input_dim(), rng);
  return {std::move(net), std::move(M), std::move(z0)};
}

std::size_t nonzeros(const Vector& v, double tol) { return static_cast<std::size_t>((v.array().abs() > tol).count()); }

const CheckRow& row_named(const TheoryReport& r, const std::string& name) {
  for (const auto& row : r.rows)
    if (row.check == name) return row;
  throw std::runtime_error("no row " + name);
}

}  // namespace

TEST(Binomial, Values) {
  EXPECT_EQ(binomial(8, 3), 56u);
  EXPECT_EQ(binomial(30, 15), 155117520u);
  EXPECT_EQ(binomial(5, 0), 1u);
  EXPECT_EQ(binomial(5, 6), 0u);
  EXPECT_EQ(binomial(200, 100), std::numeric_limits<std::uint64_t>::max());
}

TEST(CertifyRank, SmallSystemAgreesWithSvdOracle) {
  for (Seed s = 0; s < 10; ++s) {
    const auto sys = small_system(s);
    const Matrix A = sys.M * composite_weight(sys.net);
    const auto cert = certify_rank(A, 2, 2);
    EXPECT_EQ(cert.subset_size, 3);
    EXPECT_EQ(cert.submatrices_checked, 56u);
    EXPECT_EQ(cert.mode, RankMode::exhaustive);
    const auto oracle = subset_rank_oracle(A, 2, 3);
    EXPECT_EQ(oracle.subsets, 56u);
    EXPECT_EQ(cert.all_full_rank, oracle.all_full);
    EXPECT_TRUE(cert.all_full_rank);
    EXPECT_GT(cert.min_singular_value_seen, cert.tolerance);
  }
}

TEST(CertifyRank, DuplicatedRowsGiveWitness) {
  Matrix A = gaussian_matrix(8, 2, Seed{3});
  for (Index i = 1; i < 3; ++i) A.row(i) = 2.0 * A.row(0);
  const auto cert = certify_rank(A, 2, 2);
  EXPECT_FALSE(cert.all_full_rank);
  ASSERT_TRUE(cert.deficient_subset);
  ASSERT_EQ(cert.deficient_subset->size(), 3u);
  Matrix sub(3, 2);
  for (int i = 0; i < 3; ++i) sub.row(i) = A.row((*cert.deficient_subset)[i]);
  EXPECT_LT(numerical_rank(sub).rank, 2);
  EXPECT_FALSE(subset_rank_oracle(A, 2, 3).all_full);
}

TEST(CertifyRank, BudgetAndShapeErrors) {
  const Matrix A = gaussian_matrix(6, 2, Seed{1});
  EXPECT_THROW(certify_rank(A, 2, 2), NoBudget);  // m = k + 2l
  EXPECT_NO_THROW(certify_rank(A, 2, 1));
  EXPECT_THROW(certify_rank(A, 3, 1), ShapeError);
  EXPECT_THROW(certify_rank(A, 2, -1), InvalidInput);
}

TEST(CertifyRank, SampledModeRespectsCount) {
  const Matrix A = gaussian_matrix(30, 5, Seed{2});
  RankCheckOptions opts;
  opts.mode = RankMode::sampled;
  opts.sample_count = 500;
  const auto cert = certify_rank(A, 5, 3, opts);
  EXPECT_EQ(cert.mode, RankMode::sampled);
  EXPECT_EQ(cert.submatrices_checked, 500u);
  EXPECT_TRUE(cert.all_full_rank);
}

TEST(L0Condition, CertifiedSystemsHaveNoViolations) {
  Rng rng(5);
  for (Seed s = 0; s < 20; ++s) {
    const auto sys = small_system(40 + s);
    const auto cert = certify_rank(sys.M * composite_weight(sys.net), 2, 2);
    const auto cands = generate_candidates(sys.z0, 50, rng);
    const auto rep = check_l0_condition(sys.net, sys.M, sys.z0, 2, cands);
    if (cert.all_full_rank) {
      EXPECT_TRUE(rep.passed()) << "seed " << s;
    }
    EXPECT_EQ(rep.condition, Condition::l0_separation);
    EXPECT_GT(rep.instances_tested, 150u);
  }
}

TEST(L0Condition, SmallPerturbationsStillSeparate) {
  const auto sys = small_system(7);
  std::vector<Vector> probes;
  for (double d : {1e-6, 1e-4, 1e-2})
    for (Index j = 0; j < 2; ++j) {
      Vector z = sys.z0;
      z(j) += d;
      probes.push_back(z);
    }
  const auto rep = check_l0_condition(sys.net, sys.M, sys.z0, 2, probes);
  EXPECT_EQ(rep.instances_tested, probes.size());
  EXPECT_TRUE(rep.passed());
}

TEST(L0Condition, ZeroMeasurementViolatesEverywhere) {
  const auto sys = small_system(8);
  Rng rng(1);
  const auto cands = generate_candidates(sys.z0, 5, rng);
  const auto rep = check_l0_condition(sys.net, Matrix::Zero(8, 10), sys.z0, 2, cands);
  EXPECT_EQ(rep.violations.size(), rep.instances_tested);
  EXPECT_EQ(rep.violations.front().observed, std::vector<double>{0.0});
}

TEST(L0Condition, SkipsCandidateEqualToTruth) {
  const auto sys = small_system(8);
  const auto rep = check_l0_condition(sys.net, sys.M, sys.z0, 2, {sys.z0});
  EXPECT_EQ(rep.instances_tested, 0u);
}

TEST(L1Condition, EmptyAndFullSupport) {
  const auto sys = small_system(9);
  Rng rng(2);
  const auto cands = generate_candidates(sys.z0, 20, rng);
  const auto empty = check_l1_condition(sys.net, sys.M, sys.z0, {}, cands);
  EXPECT_TRUE(empty.passed());
  EXPECT_EQ(empty.condition, Condition::l1_support_inequality);
  const auto full = check_l1_condition(sys.net, sys.M, sys.z0, {0, 1, 2, 3, 4, 5, 6, 7}, cands);
  EXPECT_EQ(full.violations.size(), full.instances_tested);
  EXPECT_THROW(check_l1_condition(sys.net, sys.M, sys.z0, {8}, cands), InvalidInput);
}

TEST(L1Condition, ObservedNormsMatchDirectComputation) {
  const auto sys = small_system(10);
  Vector z = sys.z0;
  z(0) += 1.0;
  const std::vector<Index> K{0, 1, 2, 3, 4, 5, 6};
  const auto rep = check_l1_condition(sys.net, sys.M, sys.z0, K, {z});
  ASSERT_EQ(rep.violations.size(), 1u);
  const Vector d = sys.M * (forward(sys.net, sys.z0) - forward(sys.net, z));
  EXPECT_NEAR(rep.violations[0].observed[0], d.head(7).lpNorm<1>(), 1e-12 * d.lpNorm<1>());
  EXPECT_NEAR(rep.violations[0].observed[1], std::abs(d(7)), 1e-12 * d.lpNorm<1>());
}

TEST(DifferenceSlope, Examples) {
  const auto a = Activation::leaky_relu(0.5);
  EXPECT_NEAR(difference_slope(a, 2.0, -1.0), 5.0 / 6.0, 1e-15);
  EXPECT_EQ(difference_slope(a, 2.0, 1.0), 1.0);
  EXPECT_EQ(difference_slope(a, -2.0, -1.0), 0.5);
  EXPECT_EQ(difference_slope(a, 3.0, 3.0), 1.0);
  EXPECT_EQ(difference_slope(Activation::identity(), -2.0, 7.0), 1.0);
  EXPECT_EQ(difference_slope(Activation::relu(), -2.0, -1.0), 0.0);
}

TEST(BetaLemma, MillionSamplesPerLeak) {
  std::normal_distribution<double> nd;
  for (double h : {0.01, 0.2, 0.5, 0.99}) {
    Rng rng(derive_seed(1, {static_cast<std::uint64_t>(h * 100)}));
    std::vector<std::pair<double, double>> samples(1'000'000);
    for (auto& [x, y] : samples) {
      x = nd(rng);
      y = nd(rng);
    }
    samples.push_back({1.0, 1.0});
    const auto rep = check_beta_lemma(h, samples);
    EXPECT_TRUE(rep.passed()) << "h = " << h;
    EXPECT_EQ(rep.instances_tested, 1'000'000u);
    EXPECT_GT(rep.beta_at_one, 0u);
    EXPECT_GT(rep.beta_at_leak, 0u);
    // Same-sign pairs are a quarter each, so both boundary counts are near 250k.
    EXPECT_NEAR(static_cast<double>(rep.beta_at_one), 250000.0, 3000.0);
    EXPECT_NEAR(static_cast<double>(rep.beta_at_leak), 250000.0, 3000.0);
  }
  EXPECT_THROW(check_beta_lemma(0.0, {}), InvalidInput);
}

TEST(ScaledProduct, ReducesLeakyDifferenceToLinearMap) {
  Rng rng(12);
  double worst = 0.0;
  for (Seed s = 0; s < 30; ++s) {
    const auto net = init_gaussian({3, 7, 12, 15}, Activation::leaky_relu(0.05 + 0.03 * static_cast<double>(s)), s,
                                   s % 2 ? BiasInit::gaussian : BiasInit::zero);
    const Vector z0 = gaussian_vector(3, rng), z = gaussian_vector(3, rng);
    const Vector lhs = forward(net, z) - forward(net, z0);
    const Vector rhs = scaled_product(net, z, z0) * (z - z0);
    worst = std::max(worst, (lhs - rhs).norm() / lhs.norm());
  }
  EXPECT_LE(worst, 1e-10);
}

TEST(ScaledProduct, IdentityNetIsComposite) {
  const auto net = init_gaussian({2, 5, 9}, Activation::identity(), 3);
  const Matrix P = scaled_product(net, Vector::Ones(2), Vector::Zero(2));
  EXPECT_LE((P - composite_weight(net)).norm(), 1e-13 * P.norm());
}

TEST(Candidates, RadiiAndCoordinateSteps) {
  Vector z0(2);
  z0 << 3.0, 4.0;
  Rng rng(1);
  const auto c = generate_candidates(z0, 10, rng);
  std::size_t at_radius[3] = {0, 0, 0};
  for (const auto& z : c)
    for (int r = 0; r < 3; ++r)
      if (std::abs((z - z0).norm() - 5.0 * std::pow(10.0, r - 1)) < 1e-9) ++at_radius[r];
  for (auto n : at_radius) EXPECT_GE(n, 10u);
  EXPECT_GT(c.size(), 30u);
}

TEST(BruteForce, SinglePointAndEmptyGrid) {
  const auto sys = small_system(11);
  Vector y = sys.M * forward(sys.net, sys.z0);
  y(1) += 7000.0;
  const auto r = brute_force_l0_recovery(sys.net, sys.M, y, {sys.z0});
  EXPECT_EQ(r.index, 0u);
  EXPECT_EQ(r.objective, 1u);
  EXPECT_TRUE(r.unique());
  EXPECT_THROW(brute_force_l0_recovery(sys.net, sys.M, y, {}), InvalidInput);
}

TEST(BruteForce, TruthWinsUniquelyWithinBudget) {
  for (Seed s = 0; s < 5; ++s) {
    const auto sys = small_system(60 + s);
    const auto obs = observe(sys.net, SensingModel{sys.M, 0.0, OutlierSpec{2}}, sys.z0, s);
    Rng rng(s);
    std::vector<Vector> grid{sys.z0};
    for (int t = 0; t < 300; ++t) grid.push_back(gaussian_vector(2, rng));
    const auto r = brute_force_l0_recovery(sys.net, sys.M, obs.y, grid);
    EXPECT_EQ(r.index, 0u);
    EXPECT_EQ(r.objective, 2u);
    EXPECT_TRUE(r.unique());
  }
}

TEST(BruteForce, TiesPreferSmallerNormThenIndex) {
  const auto sys = small_system(12);
  const Vector y = Vector::Constant(8, 1e6);  // every point misses every entry
  Vector big = Vector::Constant(2, 5.0), small = Vector::Constant(2, 0.5);
  auto r = brute_force_l0_recovery(sys.net, sys.M, y, {big, small, big});
  EXPECT_EQ(r.index, 1u);
  EXPECT_FALSE(r.unique());
  r = brute_force_l0_recovery(sys.net, sys.M, y, {small, small});
  EXPECT_EQ(r.index, 0u);
}

TEST(Adversarial, RivalFitsAsWellAsTruth) {
  for (Seed s = 0; s < 10; ++s) {
    const auto sys = small_system(80 + s);
    const Index l = 4;  // (m - k + 2) / 2 for m = 8, k = 2
    Rng rng(s);
    const auto adv = make_adversarial_instance(sys.net, sys.M, sys.z0, l, rng);
    EXPECT_GT((adv.z_rival - sys.z0).norm(), 1e-6);
    const Vector mx0 = sys.M * forward(sys.net, sys.z0);
    const Vector diff = sys.M * forward(sys.net, adv.z_rival) - mx0;
    const double tol = 1e-9 * mx0.cwiseAbs().maxCoeff();
    EXPECT_LE(nonzeros(diff, tol), static_cast<std::size_t>(2 * l));
    EXPECT_LE(static_cast<Index>(adv.support.size()), l);
    EXPECT_EQ(adv.y, mx0 + adv.e);
    EXPECT_LE(nonzeros(adv.y - mx0, tol), static_cast<std::size_t>(l));
    EXPECT_LE(nonzeros(adv.y - sys.M * forward(sys.net, adv.z_rival), tol), static_cast<std::size_t>(l));
    const auto r = brute_force_l0_recovery(sys.net, sys.M, adv.y, {sys.z0, adv.z_rival});
    EXPECT_FALSE(r.unique() && r.index == 0u) << "seed " << s;
  }
  const auto sys = small_system(1);
  Rng rng(0);
  EXPECT_THROW(make_adversarial_instance(sys.net, sys.M, sys.z0, 2, rng), InvalidInput);
}

TEST(RankDeficiency, ReluWithCollapsedFirstLayer) {
  Matrix w1(6, 2);
  w1.col(0) << 1, 2, 3, 0.5, 1.5, 2.5;
  w1.col(1).setZero();
  const GeneratorNet net({Layer<double>{w1, Vector::Zero(6), Activation::relu()},
                          Layer<double>{gaussian_matrix(10, 6, Seed{1}), Vector::Zero(10), Activation::relu()}});
  const Matrix M = gaussian_matrix(8, 10, Seed{2});
  Vector z0(2);
  z0 << 1.0, 1.0;
  Rng rng(3);
  const auto ex = find_rank_deficiency(net, M, z0, 2, generate_candidates(z0, 5, rng));
  ASSERT_TRUE(ex);
  EXPECT_LT(ex->rank, 2);
  EXPECT_EQ(ex->subset.size(), 3u);
}

TEST(RankDeficiency, NoneForGenericLeakyNet) {
  const auto sys = small_system(13, Activation::leaky_relu(0.2));
  Rng rng(4);
  EXPECT_FALSE(find_rank_deficiency(sys.net, sys.M, sys.z0, 2, generate_candidates(sys.z0, 10, rng)));
}

TEST(RunTheory, DefaultSystemAllPass) {
  TheoryConfig cfg;
  const auto rep = run_theory(cfg);
  EXPECT_FALSE(rep.violations_found());
  for (const auto& row : rep.rows) EXPECT_NE(row.status, CheckStatus::fail) << row.check << ": " << row.detail;
  for (const char* name : {"budget", "rank_certificate", "l0_separation", "l1_support_inequality",
                           "l1_paired_admm", "beta_bounds h=0.2", "beta_bounds h=0.99", "l0_brute_force", "l0_adversarial"})
    EXPECT_EQ(row_named(rep, name).status, CheckStatus::pass) << name;
  EXPECT_EQ(row_named(rep, "rank_certificate").instances, 56u);
  EXPECT_EQ(row_named(rep, "l0_brute_force").instances, 1001u);
  EXPECT_GE(row_named(rep, "l0_separation").instances, 1000u);
}

TEST(RunTheory, LeakyAndReluReports) {
  TheoryConfig cfg;
  cfg.net.activation = ActivationKind::leaky_relu;
  auto rep = run_theory(cfg);
  EXPECT_EQ(row_named(rep, "scaled_product_reduction").status, CheckStatus::pass);
  EXPECT_EQ(row_named(rep, "rank_certificate_reduced").status, CheckStatus::pass);

  cfg.net.activation = ActivationKind::relu;
  rep = run_theory(cfg);
  const auto& ex = row_named(rep, "relu_rank_exhibit");
  EXPECT_EQ(ex.status, CheckStatus::info);
  EXPECT_NE(ex.detail.find("rank"), std::string::npos) << ex.detail;
  EXPECT_EQ(ex.detail.find("no rank-deficient"), std::string::npos) << ex.detail;
}

TEST(RunTheory, BudgetViolationIsReported) {
  TheoryConfig cfg;
  cfg.l = 3;  // budget for m = 8, k = 2 is 2
  const auto rep = run_theory(cfg);
  EXPECT_TRUE(rep.violations_found());
  EXPECT_EQ(row_named(rep, "budget").status, CheckStatus::fail);
}

TEST(RunTheory, InvalidLeakRejected) {
  TheoryConfig cfg;
  cfg.net.activation = ActivationKind::leaky_relu;
  cfg.net.leak = 0.0;
  EXPECT_THROW(run_theory(cfg), InvalidInput);
}

TEST(RunTheory, Settings) {
  TheoryConfig cfg;
  apply_theory_setting(cfg, "m", "12");
  apply_theory_setting(cfg, "outliers", "3");
  apply_theory_setting(cfg, "candidates", "10");
  apply_theory_setting(cfg, "dims", "3,6,12");
  EXPECT_EQ(cfg.m, 12);
  EXPECT_EQ(cfg.l, 3);
  EXPECT_EQ(cfg.candidates_per_radius, 10u);
  EXPECT_EQ(cfg.net.dims, (std::vector<Index>{3, 6, 12}));
  EXPECT_THROW(apply_theory_setting(cfg, "m", "8,9"), InvalidInput);
  EXPECT_THROW(apply_theory_setting(cfg, "bogus", "1"), InvalidInput);
}

TEST(RunTheory, TextAndCsvOutputs) {
  TheoryConfig cfg;
  cfg.beta_samples = 1000;
  cfg.grid_size = 50;
  const auto rep = run_theory(cfg);
  std::ostringstream text, csv;
  write_theory_text(text, rep);
  write_theory_csv(csv, rep);
  EXPECT_NE(text.str().find("PASS"), std::string::npos);
  const std::string table = csv.str();
  EXPECT_EQ(table.substr(0, table.find('\n')), "check,status,instances,violations,detail");
  EXPECT_EQ(static_cast<std::size_t>(std::count(table.begin(), table.end(), '\n')), rep.rows.size() + 1);
}
