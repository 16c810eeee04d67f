#include "genrec/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "genrec/text_format.hpp"
#include "genrec/weights_io.hpp"

namespace genrec {

std::string_view to_string(SolverKind kind) {
  switch (kind) {
    case SolverKind::admm_l1: return "admm_l1";
    case SolverKind::gd_l1sq: return "gd_l1sq";
    case SolverKind::gd_l2sq: return "gd_l2sq";
    case SolverKind::gd_l2sq_reg: return "gd_l2sq_reg";
  }
  return "unknown";
}

SolverKind parse_solver_kind(std::string_view name) {
  for (SolverKind k : {SolverKind::admm_l1, SolverKind::gd_l1sq, SolverKind::gd_l2sq, SolverKind::gd_l2sq_reg})
    if (name == to_string(k)) return k;
  throw InvalidInput("unknown solver '" + std::string(name) + "'");
}

Activation NetSpec::make_activation() const {
  switch (activation) {
    case ActivationKind::identity: return Activation::identity();
    case ActivationKind::relu: return Activation::relu();
    case ActivationKind::leaky_relu: return Activation::leaky_relu(leak);
  }
  return Activation::identity();
}

void ExperimentConfig::validate() const {
  if (m_values.empty() || l_values.empty()) throw InvalidInput("m and outlier lists must be nonempty");
  if (solvers.empty()) throw InvalidInput("solver list must be nonempty");
  if (trials < 1) throw InvalidInput("trials must be >= 1");
  if (restarts < 1) throw InvalidInput("restarts must be >= 1");
  if (max_iter < 1) throw InvalidInput("max-iter must be >= 1");
  if (!(noise_rms >= 0.0) || !std::isfinite(noise_rms)) throw InvalidInput("noise must be finite and >= 0");
  if (!(outlier_lo <= outlier_hi)) throw InvalidInput("outlier range needs lo <= hi");
  if (rho && !(*rho > 0.0)) throw InvalidInput("rho must be > 0");
  if (!(reg_weight > 0.0) &&
      std::find(solvers.begin(), solvers.end(), SolverKind::gd_l2sq_reg) != solvers.end())
    throw InvalidInput("gd_l2sq_reg needs reg-weight > 0");
  for (Index m : m_values)
    if (m < 1) throw InvalidInput("every m must be >= 1");
  for (std::size_t i = 0; i < m_values.size(); ++i)
    for (Index l : l_values)
      if (l < 0 || l > m_values[i]) throw InvalidInput("outlier count " + std::to_string(l) +
                                                       " not in [0, m] for m = " + std::to_string(m_values[i]));
  if (!net.weights) {
    if (net.dims.size() < 2) throw InvalidInput("dims needs at least [k, n]");
    (void)net.make_activation();
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  for (const auto& s : out)
    if (s.empty()) throw InvalidInput("empty element in list '" + std::string(text) + "'");
  return out;
}

long long parse_int(std::string_view key, std::string_view value) {
  try {
    std::size_t used = 0;
    const std::string s(value);
    const long long v = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw InvalidInput(std::string(key) + ": not an integer: '" + std::string(value) + "'");
  }
}

Seed parse_seed(std::string_view key, std::string_view value) {
  Seed v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty())
    throw InvalidInput(std::string(key) + ": not an unsigned 64-bit seed: '" + std::string(value) + "'");
  return v;
}

double parse_double(std::string_view key, std::string_view value) {
  try {
    return parse_real(trim(value));
  } catch (const FormatError&) {
    throw InvalidInput(std::string(key) + ": not a number: '" + std::string(value) + "'");
  }
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "1" || value == "true" || value == "yes" || value == "on") return true;
  if (value == "0" || value == "false" || value == "no" || value == "off") return false;
  throw InvalidInput(std::string(key) + ": not a boolean: '" + std::string(value) + "'");
}

}  // namespace

std::vector<Index> parse_index_list(std::string_view text) {
  std::vector<Index> out;
  for (const auto& s : split_list(text)) out.push_back(static_cast<Index>(parse_int("list", s)));
  return out;
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view raw) {
  const std::string value = trim(raw);
  if (key == "dims") {
    cfg.net.dims = parse_index_list(value);
  } else if (key == "activation") {
    cfg.net.activation = parse_activation_kind(value);
  } else if (key == "leak") {
    cfg.net.leak = parse_double(key, value);
  } else if (key == "net-seed") {
    cfg.net.seed = parse_seed(key, value);
  } else if (key == "weights") {
    cfg.net.weights = std::filesystem::path(value);
  } else if (key == "gaussian-bias") {
    cfg.net.gaussian_bias = parse_bool(key, value);
  } else if (key == "m") {
    cfg.m_values = parse_index_list(value);
  } else if (key == "outliers") {
    cfg.l_values = parse_index_list(value);
  } else if (key == "noise") {
    cfg.noise_rms = parse_double(key, value);
  } else if (key == "outlier-range") {
    const auto parts = split_list(value);
    if (parts.size() != 2) throw InvalidInput("outlier-range: expected LO,HI");
    cfg.outlier_lo = parse_double(key, parts[0]);
    cfg.outlier_hi = parse_double(key, parts[1]);
  } else if (key == "outlier-sign") {
    if (value == "positive") cfg.outlier_sign = SignMode::positive;
    else if (value == "random") cfg.outlier_sign = SignMode::random_sign;
    else throw InvalidInput("outlier-sign: expected positive or random");
  } else if (key == "solvers") {
    cfg.solvers.clear();
    for (const auto& s : split_list(value)) cfg.solvers.push_back(parse_solver_kind(s));
  } else if (key == "rho") {
    if (value == "auto") cfg.rho.reset();
    else cfg.rho = parse_double(key, value);
  } else if (key == "reg-weight") {
    cfg.reg_weight = parse_double(key, value);
  } else if (key == "max-iter") {
    cfg.max_iter = static_cast<int>(parse_int(key, value));
  } else if (key == "restarts") {
    cfg.restarts = static_cast<int>(parse_int(key, value));
  } else if (key == "trials") {
    cfg.trials = static_cast<int>(parse_int(key, value));
  } else if (key == "seed") {
    cfg.seed = parse_seed(key, value);
  } else if (key == "jobs") {
    cfg.jobs = static_cast<int>(parse_int(key, value));
  } else if (key == "success-threshold") {
    cfg.success_threshold = parse_double(key, value);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "dump-observations") {
    cfg.dump_observations = parse_bool(key, value);
  } else {
    throw InvalidInput("unknown setting '" + std::string(key) + "'");
  }
}

std::vector<std::pair<std::string, std::string>> parse_key_value(std::istream& is) {
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw InvalidInput("config line " + std::to_string(lineno) + ": expected key=value");
    out.emplace_back(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return out;
}

void load_config_file(ExperimentConfig& cfg, const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open config '" + path.string() + "'");
  for (const auto& [k, v] : parse_key_value(is)) apply_setting(cfg, k, v);
}

GeneratorNet build_net(const NetSpec& spec, Seed base_seed) {
  if (spec.weights) return load_weights_file(*spec.weights);
  const Seed seed = spec.seed.value_or(derive_seed(base_seed, {0}));
  return init_gaussian(spec.dims, spec.make_activation(), seed,
                       spec.gaussian_bias ? BiasInit::gaussian : BiasInit::zero);
}

SolverConfig make_solver_config(SolverKind kind, const ExperimentConfig& cfg) {
  if (kind == SolverKind::admm_l1) {
    AdmmConfig a;
    a.rho = cfg.rho;
    a.max_iter = cfg.max_iter;
    return a;
  }
  GdConfig g;
  g.max_steps = cfg.max_iter;
  switch (kind) {
    case SolverKind::gd_l1sq: g.objective = GdObjective::l1_squared; break;
    case SolverKind::gd_l2sq: g.objective = GdObjective::l2_squared; break;
    default:
      g.objective = GdObjective::l2_squared_reg;
      g.reg_weight = cfg.reg_weight;
      break;
  }
  return g;
}

Seed instance_seed(Seed base, Index m, Index l, int trial) {
  return derive_seed(base, {1, static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(l),
                            static_cast<std::uint64_t>(trial)});
}

Seed restart_base_seed(Seed instance) { return derive_seed(instance, {2}); }

Instance make_instance(const GeneratorNet& net, const ExperimentConfig& cfg, Index m, Index l, int trial) {
  Instance inst;
  inst.seed = instance_seed(cfg.seed, m, l, trial);
  Rng rng(inst.seed);
  inst.M = gaussian_matrix(m, net.output_dim(), rng);
  const Vector z0 = gaussian_vector(net.input_dim(), rng);
  SensingModel model{inst.M, cfg.noise_rms, OutlierSpec{l, cfg.outlier_lo, cfg.outlier_hi, cfg.outlier_sign}};
  inst.obs = observe(net, model, z0, derive_seed(inst.seed, {1}));
  return inst;
}

Stats summarize(const std::vector<double>& values) {
  Stats s;
  s.count = values.size();
  if (values.empty()) {
    s.mean = s.std = s.ci95 = std::nan("");
    return s;
  }
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) {
    s.std = 0.0;
    s.ci95 = std::nan("");
    return s;
  }
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  const double n = static_cast<double>(values.size());
  s.std = std::sqrt(ss / (n - 1.0));
  const boost::math::students_t dist(n - 1.0);
  s.ci95 = boost::math::quantile(dist, 0.975) * s.std / std::sqrt(n);
  return s;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const GeneratorNet net = build_net(cfg.net, cfg.seed);
  const Index k = net.input_dim();
  const Index n = net.output_dim();

  ExperimentResult out;
  for (Index m : cfg.m_values) {
    for (Index l : cfg.l_values) {
      if (m <= k) {
        out.warnings.push_back("m = " + std::to_string(m) + " <= k = " + std::to_string(k) +
                               ": no certified outlier budget");
      } else if (l > outlier_budget(m, k)) {
        out.warnings.push_back("l = " + std::to_string(l) + " exceeds the certified budget " +
                               std::to_string(outlier_budget(m, k)) + " at m = " + std::to_string(m));
      }
    }
  }

  struct Task {
    Index m, l;
    int trial;
  };
  std::vector<Task> tasks;
  for (Index m : cfg.m_values)
    for (Index l : cfg.l_values)
      for (int t = 0; t < cfg.trials; ++t) tasks.push_back({m, l, t});

  const std::size_t ns = cfg.solvers.size();
  std::vector<TrialRecord> by_task(tasks.size() * ns);

  const auto run_task = [&](std::size_t ti) {
    const Task& task = tasks[ti];
    const Instance inst = make_instance(net, cfg, task.m, task.l, task.trial);
    const Seed restart_base = restart_base_seed(inst.seed);
    for (std::size_t si = 0; si < ns; ++si) {
      TrialRecord rec;
      rec.solver = cfg.solvers[si];
      rec.m = task.m;
      rec.l = task.l;
      rec.trial = task.trial;
      rec.seed = inst.seed;
      try {
        SolveResult res = solve_with_restarts(net, inst.M, inst.obs.y, make_solver_config(rec.solver, cfg),
                                              cfg.restarts, restart_base);
        attach_ground_truth(res, inst.obs.x0);
        rec.eps_m = res.eps_m;
        rec.eps_r = *res.eps_r;
        rec.iterations = res.iterations_run;
        rec.status = res.status;
        rec.z_hat = std::move(res.z_hat);
      } catch (const NumericalFailure&) {
        rec.eps_m = rec.eps_r = std::nan("");
        rec.status = SolveStatus::numerical_failure;
        rec.z_hat = Vector::Constant(k, std::nan(""));
      }
      rec.eps_r_per_dim = rec.eps_r / static_cast<double>(n);
      by_task[ti * ns + si] = std::move(rec);
    }
  };

  const int jobs = cfg.jobs > 0 ? cfg.jobs : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (jobs <= 1 || tasks.size() <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> workers;
    for (int w = 0; w < std::min<int>(jobs, static_cast<int>(tasks.size())); ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
          try {
            run_task(i);
          } catch (...) {
            std::lock_guard<std::mutex> lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : workers) t.join();
    if (error) std::rethrow_exception(error);
  }

  // Reorder task-major records into (m, l, solver, trial) order.
  std::size_t cell_base = 0;
  for (Index m : cfg.m_values) {
    for (Index l : cfg.l_values) {
      for (std::size_t si = 0; si < ns; ++si) {
        CellResult cell;
        cell.m = m;
        cell.l = l;
        cell.solver = cfg.solvers[si];
        cell.trials = cfg.trials;
        if (m > k) cell.budget = outlier_budget(m, k);
        std::vector<double> er, em, erd;
        int successes = 0;
        for (int t = 0; t < cfg.trials; ++t) {
          const TrialRecord& rec = by_task[(cell_base + static_cast<std::size_t>(t)) * ns + si];
          out.records.push_back(rec);
          if (rec.status == SolveStatus::numerical_failure || !std::isfinite(rec.eps_r)) {
            ++cell.failures;
            continue;
          }
          er.push_back(rec.eps_r);
          em.push_back(rec.eps_m);
          erd.push_back(rec.eps_r_per_dim);
          if (rec.eps_r_per_dim <= cfg.success_threshold) ++successes;
        }
        cell.eps_r = summarize(er);
        cell.eps_m = summarize(em);
        cell.eps_r_per_dim = summarize(erd);
        cell.success_rate = static_cast<double>(successes) / static_cast<double>(cfg.trials);
        out.cells.push_back(cell);
      }
      cell_base += static_cast<std::size_t>(cfg.trials);
    }
  }
  return out;
}

void write_results_csv(std::ostream& os, const ExperimentResult& result) {
  os << "solver,m,l,trial,seed,eps_m,eps_r,eps_r_per_dim,iters,status\n";
  for (const auto& r : result.records) {
    os << to_string(r.solver) << ',' << r.m << ',' << r.l << ',' << r.trial << ',' << r.seed << ','
       << format_real(r.eps_m) << ',' << format_real(r.eps_r) << ',' << format_real(r.eps_r_per_dim) << ','
       << r.iterations << ',' << to_string(r.status) << '\n';
  }
}

void write_summary_csv(std::ostream& os, const ExperimentResult& result) {
  os << "solver,m,l,trials,failures,budget,over_budget,eps_r_mean,eps_r_std,eps_r_ci95,"
        "eps_r_per_dim_mean,eps_r_per_dim_ci95,eps_m_mean,eps_m_std,eps_m_ci95,success_rate\n";
  for (const auto& c : result.cells) {
    const bool over = !c.budget || c.l > *c.budget;
    os << to_string(c.solver) << ',' << c.m << ',' << c.l << ',' << c.trials << ',' << c.failures << ','
       << (c.budget ? std::to_string(*c.budget) : std::string()) << ',' << (over ? 1 : 0) << ','
       << format_real(c.eps_r.mean) << ',' << format_real(c.eps_r.std) << ',' << format_real(c.eps_r.ci95) << ','
       << format_real(c.eps_r_per_dim.mean) << ',' << format_real(c.eps_r_per_dim.ci95) << ','
       << format_real(c.eps_m.mean) << ',' << format_real(c.eps_m.std) << ',' << format_real(c.eps_m.ci95) << ','
       << format_real(c.success_rate) << '\n';
  }
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

}  // namespace

ExperimentResult run_experiment_to_dir(const ExperimentConfig& cfg) {
  cfg.validate();
  std::error_code ec;
  std::filesystem::create_directories(cfg.out_dir, ec);
  if (ec) throw IoError("cannot create output directory '" + cfg.out_dir.string() + "': " + ec.message());
  std::ofstream results = open_output(cfg.out_dir / "results.csv");
  std::ofstream summary = open_output(cfg.out_dir / "summary.csv");

  ExperimentResult res = run_experiment(cfg);
  write_results_csv(results, res);
  write_summary_csv(summary, res);
  if (!results || !summary) throw IoError("write failed in '" + cfg.out_dir.string() + "'");

  if (cfg.dump_observations) {
    const GeneratorNet net = build_net(cfg.net, cfg.seed);
    save_weights_file(cfg.out_dir / "net.genrec", net);
    const auto obs_dir = cfg.out_dir / "observations";
    std::filesystem::create_directories(obs_dir, ec);
    if (ec) throw IoError("cannot create '" + obs_dir.string() + "'");
    for (Index m : cfg.m_values)
      for (Index l : cfg.l_values)
        for (int t = 0; t < cfg.trials; ++t) {
          const Instance inst = make_instance(net, cfg, m, l, t);
          save_observation_file(obs_dir / ("obs_m" + std::to_string(m) + "_l" + std::to_string(l) + "_t" +
                                           std::to_string(t) + ".txt"),
                                inst.M, inst.obs);
        }
    std::ofstream zhat = open_output(cfg.out_dir / "zhat.csv");
    zhat << "solver,m,l,trial";
    for (Index i = 0; i < net.input_dim(); ++i) zhat << ",z" << i;
    zhat << '\n';
    for (const auto& r : res.records) {
      zhat << to_string(r.solver) << ',' << r.m << ',' << r.l << ',' << r.trial;
      for (Index i = 0; i < r.z_hat.size(); ++i) zhat << ',' << format_real(r.z_hat(i));
      zhat << '\n';
    }
  }
  return res;
}

}  // namespace genrec
