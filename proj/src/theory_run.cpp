#include "genrec/theory_run.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <fstream>
#include <ostream>
#include <sstream>

#include "genrec/text_format.hpp"

namespace genrec {

namespace {

Index single_value(std::string_view key, std::string_view value) {
  const auto list = parse_index_list(value);
  if (list.size() != 1) throw InvalidInput(std::string(key) + ": theory takes a single value");
  return list.front();
}

std::size_t count_value(std::string_view key, std::string_view value) {
  const Index v = single_value(key, value);
  if (v < 0) throw InvalidInput(std::string(key) + " must be >= 0");
  return static_cast<std::size_t>(v);
}

constexpr int kExhibitReferences = 100;
constexpr int kExhibitCompanions = 20;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

void apply_theory_setting(TheoryConfig& cfg, std::string_view key, std::string_view value) {
  if (key == "m") {
    cfg.m = single_value(key, value);
  } else if (key == "outliers") {
    cfg.l = single_value(key, value);
  } else if (key == "candidates") {
    cfg.candidates_per_radius = count_value(key, value);
  } else if (key == "grid") {
    cfg.grid_size = count_value(key, value);
  } else if (key == "beta-samples") {
    cfg.beta_samples = count_value(key, value);
  } else if (key == "adversarial") {
    cfg.adversarial = static_cast<int>(count_value(key, value));
  } else if (key == "restarts") {
    cfg.restarts = static_cast<int>(count_value(key, value));
  } else if (key == "out") {
    ExperimentConfig tmp;
    apply_setting(tmp, key, value);
    cfg.out_dir = tmp.out_dir;
  } else {
    ExperimentConfig tmp;
    tmp.net = cfg.net;
    tmp.seed = cfg.seed;
    apply_setting(tmp, key, value);
    cfg.net = tmp.net;
    cfg.seed = tmp.seed;
  }
}

std::string_view to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::pass: return "PASS";
    case CheckStatus::fail: return "FAIL";
    case CheckStatus::info: return "INFO";
    case CheckStatus::skip: return "SKIP";
  }
  return "UNKNOWN";
}

bool TheoryReport::violations_found() const {
  for (const auto& r : rows)
    if (r.status == CheckStatus::fail) return true;
  return false;
}

TheoryReport run_theory(const TheoryConfig& cfg) {
  if (cfg.m < 1) throw InvalidInput("m must be >= 1");
  if (cfg.l < 0 || cfg.l > cfg.m) throw InvalidInput("outliers must lie in [0, m]");
  if (cfg.restarts < 1) throw InvalidInput("restarts must be >= 1");
  if (!cfg.net.weights) (void)cfg.net.make_activation();

  const GeneratorNet net = build_net(cfg.net, cfg.seed);
  const Index k = net.input_dim();
  const Index n = net.output_dim();
  const Index m = cfg.m;
  const Index l = cfg.l;
  const ActivationKind kind = net.uniform_activation() ? net.layers().front().activation.kind
                                                       : ActivationKind::leaky_relu;
  const bool relu = kind == ActivationKind::relu;
  const bool identity = kind == ActivationKind::identity;
  // Outside the leaky/identity guarantee, sampled conditions are documented rather than asserted.
  const CheckStatus on_fail = relu ? CheckStatus::info : CheckStatus::fail;

  Rng rng(derive_seed(cfg.seed, {10}));
  const Matrix M = gaussian_matrix(m, n, rng);
  const Vector z0 = gaussian_vector(k, rng);
  const std::vector<Vector> candidates = generate_candidates(z0, cfg.candidates_per_radius, rng);

  TheoryReport rep;
  {
    std::ostringstream dims;
    for (std::size_t i = 0; i < net.dims().size(); ++i) dims << (i ? "," : "") << net.dims()[i];
    rep.header.push_back("net: dims [" + dims.str() + "], activation " +
                         (net.uniform_activation() ? std::string(to_string(kind)) : std::string("mixed")) +
                         (kind == ActivationKind::leaky_relu && net.uniform_activation()
                              ? " (h = " + format_real(net.layers().front().activation.leak) + ")"
                              : std::string()));
    rep.header.push_back("system: m = " + std::to_string(m) + ", k = " + std::to_string(k) + ", n = " +
                         std::to_string(n) + ", l = " + std::to_string(l) + ", seed = " + std::to_string(cfg.seed));
    rep.header.push_back("conditions over all z != z0 are sampled: a pass reads \"no violation found in N samples\"");
    if (!net.satisfies_theory_dims())
      rep.header.push_back("warning: layer widths are not nondecreasing; the composite rank argument may not apply");
  }

  // Outlier budget.
  bool have_budget = m > k;
  Index budget = 0;
  if (have_budget) budget = outlier_budget(m, k);
  if (!have_budget) {
    rep.rows.push_back({"budget", CheckStatus::fail, 1, 1, "m <= k: no outlier budget"});
  } else if (l > budget) {
    rep.rows.push_back({"budget", CheckStatus::fail, 1, 1,
                        "l = " + std::to_string(l) + " exceeds floor((m-1-k)/2) = " + std::to_string(budget)});
  } else {
    rep.rows.push_back({"budget", CheckStatus::pass, 1, 0,
                        "l = " + std::to_string(l) + " <= floor((m-1-k)/2) = " + std::to_string(budget)});
  }
  const bool certifiable = have_budget && l <= budget;

  // Row-subset rank of the composite (identity) or of M P(z, z0) (leaky).
  RankCheckOptions rank_opts;
  rank_opts.seed = derive_seed(cfg.seed, {11});
  if (!certifiable) {
    rep.rows.push_back({"rank_certificate", CheckStatus::skip, 0, 0, "outside the outlier budget"});
  } else if (identity) {
    const RankCertificate cert = certify_rank(M * composite_weight(net), k, l, rank_opts);
    std::string detail = std::string(to_string(cert.mode)) + ", " + std::to_string(cert.submatrices_checked) +
                         " subsets of " + std::to_string(cert.subset_size) + " rows, min sigma_k " +
                         fmt(cert.min_singular_value_seen) + " (tolerance " + fmt(cert.tolerance) + ")";
    rep.rows.push_back({"rank_certificate", cert.all_full_rank ? CheckStatus::pass : CheckStatus::fail,
                        cert.submatrices_checked, cert.all_full_rank ? 0u : 1u, detail});
  } else if (!relu) {
    std::size_t systems = 0, deficient = 0;
    std::uint64_t subsets = 0;
    double min_sigma = std::numeric_limits<double>::infinity();
    const std::size_t limit = std::min<std::size_t>(candidates.size(), 50);
    for (std::size_t i = 0; i < limit; ++i) {
      const RankCertificate cert = certify_rank(M * scaled_product(net, candidates[i], z0), k, l, rank_opts);
      ++systems;
      subsets += cert.submatrices_checked;
      min_sigma = std::min(min_sigma, cert.min_singular_value_seen);
      if (!cert.all_full_rank) ++deficient;
    }
    rep.rows.push_back({"rank_certificate_reduced", deficient ? CheckStatus::fail : CheckStatus::pass, systems,
                        deficient,
                        "M P(z, z0) for " + std::to_string(systems) + " candidates, " + std::to_string(subsets) +
                            " subsets, min sigma_k " + fmt(min_sigma) +
                            "; the linear budget is applied to the reduced matrix"});
  }

  // Scaled-product reduction G(z) - G(z0) = P (z - z0).
  {
    const Vector g0 = forward(net, z0);
    std::size_t bad = 0;
    double worst = 0.0;
    for (const auto& z : candidates) {
      const Vector diff = forward(net, z) - g0;
      const Vector pred = scaled_product(net, z, z0) * (z - z0);
      const double err = (diff - pred).norm() / std::max(diff.norm(), std::numeric_limits<double>::min());
      worst = std::max(worst, err);
      if (!(err <= 1e-10)) ++bad;
    }
    rep.rows.push_back({"scaled_product_reduction", bad ? CheckStatus::fail : CheckStatus::pass, candidates.size(),
                        bad, "max relative error " + fmt(worst) + " (limit 1e-10)"});
  }

  // ReLU: the scaled product can lose rank. The search starts at the system's
  // z0, moves on to fresh seeded reference points, then to seeded companion
  // nets of the same shape (some nets keep two units alive in every direction).
  if (relu) {
    if (!certifiable) {
      rep.rows.push_back({"relu_rank_exhibit", CheckStatus::skip, 0, 0, "outside the outlier budget"});
    } else {
      Rng ex_rng(derive_seed(cfg.seed, {17}));
      std::optional<RankDeficiencyExhibit> ex = find_rank_deficiency(net, M, z0, l, candidates, rank_opts);
      std::size_t searched = candidates.size();
      std::string where = "at z0";
      const auto search = [&](const GeneratorNet& g, const std::string& label) {
        for (int a = 1; !ex && a <= kExhibitReferences; ++a) {
          const Vector ref = gaussian_vector(k, ex_rng);
          const auto local = generate_candidates(ref, 10, ex_rng);
          ex = find_rank_deficiency(g, M, ref, l, local, rank_opts);
          searched += local.size();
          if (ex) where = label + "reference point " + std::to_string(a);
        }
      };
      search(net, "at ");
      for (int c = 0; !ex && !cfg.net.weights && c < kExhibitCompanions; ++c) {
        NetSpec spec = cfg.net;
        spec.seed = derive_seed(cfg.seed, {18, static_cast<std::uint64_t>(c)});
        search(build_net(spec, cfg.seed), "on companion net (weight seed " + std::to_string(*spec.seed) + ") at ");
      }
      std::string detail;
      if (ex) {
        std::ostringstream rows;
        for (std::size_t i = 0; i < ex->subset.size(); ++i) rows << (i ? " " : "") << ex->subset[i];
        detail = where + ", candidate " + std::to_string(ex->candidate_index) + ": rank(M P) = " +
                 std::to_string(ex->rank) + ", deficient row subset {" + rows.str() +
                 "}; why the guarantee excludes ReLU";
      } else {
        detail = "no rank-deficient scaled product among " + std::to_string(searched) + " candidates";
      }
      rep.rows.push_back({"relu_rank_exhibit", CheckStatus::info, searched, ex ? 1u : 0u, detail});
    }
  }

  // l0 separation.
  {
    const ConditionReport r = check_l0_condition(net, M, z0, l, candidates);
    std::string detail = r.passed() ? "no violation found in " + std::to_string(r.instances_tested) + " samples"
                                    : std::to_string(r.violations.size()) + " candidates with <= 2l nonzeros";
    for (const auto& [tol, count] : r.tolerance_sensitivity)
      detail += "; at tolerance " + fmt(tol) + ": " + std::to_string(count) + " violations";
    rep.rows.push_back({"l0_separation", r.passed() ? CheckStatus::pass : on_fail, r.instances_tested,
                        r.violations.size(), detail});
  }

  // l1 support inequality, paired with an ADMM run on the same outliers. The
  // solver's endpoint joins the candidates: a point with a lower l1 objective
  // than z0 is a witness against the condition.
  Rng outlier_rng(derive_seed(cfg.seed, {12}));
  const OutlierDraw draw = make_outliers(m, OutlierSpec{l}, outlier_rng);
  const Vector x0 = forward(net, z0);
  const Vector y = M * x0 + draw.e;
  {
    SolveResult res = solve_with_restarts(net, M, y, AdmmConfig{}, cfg.restarts, derive_seed(cfg.seed, {13}));
    attach_ground_truth(res, x0);
    const bool recovered = *res.eps_r <= 1e-6;
    const double e1 = draw.e.lpNorm<1>();
    const bool lower = res.eps_m < e1 && !recovered;

    std::vector<Vector> l1_candidates = candidates;
    l1_candidates.push_back(res.z_hat);
    const ConditionReport r = check_l1_condition(net, M, z0, draw.support, l1_candidates);
    rep.rows.push_back({"l1_support_inequality", r.passed() ? CheckStatus::pass : on_fail, r.instances_tested,
                        r.violations.size(),
                        r.passed() ? "no violation found in " + std::to_string(r.instances_tested) + " samples"
                                   : std::to_string(r.violations.size()) + " candidates violate the inequality"});

    CheckStatus status = CheckStatus::pass;
    std::string verdict = "recovered";
    if (lower) {
      status = on_fail;
      verdict = "endpoint has a lower l1 objective than z0 (" + fmt(res.eps_m) + " < " + fmt(e1) + ")";
    } else if (!recovered) {
      // The identity-net objective is convex in z, so a miss there is a solver failure.
      status = identity ? CheckStatus::fail : CheckStatus::info;
      verdict = "stopped at a stationary point with objective " + fmt(res.eps_m) + " >= " + fmt(e1);
    }
    rep.rows.push_back({"l1_paired_admm", status, 1, status == CheckStatus::pass ? 0u : 1u,
                        verdict + ", eps_r = " + fmt(*res.eps_r) + " (limit 1e-6), status " +
                            std::string(to_string(res.status))});
  }

  // Leaky-ReLU difference slope.
  {
    std::vector<double> leaks{0.01, 0.2, 0.5, 0.99};
    if (kind == ActivationKind::leaky_relu && net.uniform_activation()) {
      const double h = net.layers().front().activation.leak;
      if (std::find(leaks.begin(), leaks.end(), h) == leaks.end()) leaks.push_back(h);
    }
    Rng beta_rng(derive_seed(cfg.seed, {14}));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::pair<double, double>> samples(cfg.beta_samples);
    for (auto& s : samples) s = {normal(beta_rng), normal(beta_rng)};
    for (double h : leaks) {
      const ConditionReport r = check_beta_lemma(h, samples);
      const bool boundaries = cfg.beta_samples == 0 || (r.beta_at_one > 0 && r.beta_at_leak > 0);
      rep.rows.push_back({"beta_bounds h=" + format_real(h),
                          r.passed() && boundaries ? CheckStatus::pass : CheckStatus::fail, r.instances_tested,
                          r.violations.size(),
                          "beta = 1 hit " + std::to_string(r.beta_at_one) + " times, beta = h hit " +
                              std::to_string(r.beta_at_leak) + " times"});
    }
  }

  // Brute-force l0 recovery on a grid containing z0.
  Rng grid_rng(derive_seed(cfg.seed, {15}));
  std::vector<Vector> grid{z0};
  for (std::size_t i = 0; i < cfg.grid_size; ++i) grid.push_back(gaussian_vector(k, grid_rng));
  {
    const L0RecoveryResult r = brute_force_l0_recovery(net, M, y, grid);
    const bool ok = r.index == 0 && r.unique();
    const std::string margin =
        r.runner_up_objective ? std::to_string(static_cast<long long>(*r.runner_up_objective) -
                                               static_cast<long long>(r.objective))
                              : std::string("n/a");
    rep.rows.push_back({"l0_brute_force", ok ? CheckStatus::pass : (certifiable ? on_fail : CheckStatus::info),
                        grid.size(), ok ? 0u : 1u,
                        std::string(ok ? "z0 recovered uniquely" : "z0 not the unique minimizer") +
                            ", objective " + std::to_string(r.objective) + ", margin " + margin});
  }

  // Necessity: with 2l >= m - k + 1 outliers a rival point ties or wins.
  if (!identity) {
    rep.rows.push_back({"l0_adversarial", CheckStatus::skip, 0, 0, "construction needs an identity net"});
  } else if (cfg.adversarial > 0) {
    const Index l_adv = (m - k + 2) / 2;
    if (k < 1 || l_adv > m - k + 1 || m < k) {
      rep.rows.push_back({"l0_adversarial", CheckStatus::skip, 0, 0, "m too small for the construction"});
    } else {
      Rng adv_rng(derive_seed(cfg.seed, {16}));
      int broken = 0;
      for (int a = 0; a < cfg.adversarial; ++a) {
        const AdversarialInstance adv = make_adversarial_instance(net, M, z0, l_adv, adv_rng);
        std::vector<Vector> g = grid;
        g.push_back(adv.z_rival);
        const L0RecoveryResult r = brute_force_l0_recovery(net, M, adv.y, g);
        if (r.index != 0 || !r.unique()) ++broken;
      }
      const auto failures = static_cast<std::size_t>(cfg.adversarial - broken);
      rep.rows.push_back({"l0_adversarial", failures ? CheckStatus::fail : CheckStatus::pass,
                          static_cast<std::size_t>(cfg.adversarial), failures,
                          "l = " + std::to_string(l_adv) + " outliers copied from a rival difference: uniqueness " +
                              "lost in " + std::to_string(broken) + "/" + std::to_string(cfg.adversarial)});
    }
  }
  return rep;
}

void write_theory_text(std::ostream& os, const TheoryReport& report) {
  for (const auto& h : report.header) os << h << '\n';
  os << '\n';
  for (const auto& r : report.rows)
    os << to_string(r.status) << "  " << r.check << ": " << r.detail << " [" << r.instances << " tested, "
       << r.violations << " violations]\n";
  os << '\n' << (report.violations_found() ? "violations found" : "no violations found") << '\n';
}

void write_theory_csv(std::ostream& os, const TheoryReport& report) {
  os << "check,status,instances,violations,detail\n";
  for (const auto& r : report.rows) {
    std::string detail = r.detail;
    std::string quoted;
    for (char c : detail) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    os << r.check << ',' << to_string(r.status) << ',' << r.instances << ',' << r.violations << ",\"" << quoted
       << "\"\n";
  }
}

TheoryReport run_theory_to_dir(const TheoryConfig& cfg) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir.string() + "': " + ec.message());
  std::ofstream text(cfg.out_dir / "theory_report.txt", std::ios::binary | std::ios::trunc);
  std::ofstream csv(cfg.out_dir / "theory_report.csv", std::ios::binary | std::ios::trunc);
  if (!text || !csv) throw IoError("cannot write reports in '" + cfg.out_dir.string() + "'");
  TheoryReport rep = run_theory(cfg);
  write_theory_text(text, rep);
  write_theory_csv(csv, rep);
  if (!text || !csv) throw IoError("write failed in '" + cfg.out_dir.string() + "'");
  return rep;
}

}  // namespace genrec
