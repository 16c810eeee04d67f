// genrec: robust compressed sensing with generative priors.
//
//   genrec run         seeded Monte-Carlo sweep, writes results.csv and summary.csv
//   genrec theory      recovery-condition certificates, writes theory_report.{txt,csv}
//   genrec gen-weights sample a generator and write it as a weight file
//   genrec replay      re-solve a serialized observation
//
// Exit codes: 0 ok, 1 usage, 2 I/O, 3 theory violations found.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "genrec/experiment.hpp"
#include "genrec/sensing.hpp"
#include "genrec/solvers.hpp"
#include "genrec/text_format.hpp"
#include "genrec/theory_run.hpp"
#include "genrec/weights_io.hpp"

namespace {

using namespace genrec;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitViolations = 3;

// String-valued flags that map one-to-one onto config keys, applied after the
// config file in declaration order.
class Settings {
 public:
  void add(CLI::App* app, const std::string& key, const std::string& help) {
    auto& slot = values_[key];
    options_.emplace_back(key, app->add_option("--" + key, slot, help));
  }
  void add_flag(CLI::App* app, const std::string& key, const std::string& help) {
    options_.emplace_back(key, app->add_flag("--" + key, help));
  }
  template <class Apply>
  void apply(Apply&& fn) const {
    for (const auto& [key, opt] : options_) {
      if (opt->count() == 0) continue;
      const auto it = values_.find(key);
      fn(key, it == values_.end() ? std::string("true") : it->second);
    }
  }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::pair<std::string, CLI::Option*>> options_;
};

void add_net_flags(CLI::App* app, Settings& s) {
  s.add(app, "dims", "layer widths k,n1,...,n (comma list)");
  s.add(app, "activation", "identity, relu or leaky");
  s.add(app, "leak", "leaky-ReLU slope h in (0,1)");
  s.add(app, "weights", "load the generator from a weight file");
  s.add(app, "net-seed", "seed for the generator weights (default: derived from --seed)");
  s.add_flag(app, "gaussian-bias", "draw N(0,1) biases instead of zeros");
}

template <class Config, class ApplyFn>
void configure(Config& cfg, const std::string& config_path, const Settings& s, ApplyFn&& apply_fn) {
  if (!config_path.empty()) {
    std::ifstream is(config_path);
    if (!is) throw IoError("cannot open config '" + config_path + "'");
    for (const auto& [k, v] : parse_key_value(is)) apply_fn(cfg, k, v);
  }
  s.apply([&](const std::string& k, const std::string& v) { apply_fn(cfg, k, v); });
}

int cmd_run(const std::string& config_path, const Settings& s) {
  ExperimentConfig cfg;
  configure(cfg, config_path, s, [](ExperimentConfig& c, std::string_view k, std::string_view v) {
    apply_setting(c, k, v);
  });
  cfg.validate();
  const ExperimentResult res = run_experiment_to_dir(cfg);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << '\n';
  std::cout << "wrote " << res.records.size() << " trial rows and " << res.cells.size() << " cells to "
            << cfg.out_dir.string() << '\n';
  return kExitOk;
}

int cmd_theory(const std::string& config_path, const Settings& s) {
  TheoryConfig cfg;
  configure(cfg, config_path, s, [](TheoryConfig& c, std::string_view k, std::string_view v) {
    apply_theory_setting(c, k, v);
  });
  const TheoryReport rep = run_theory_to_dir(cfg);
  write_theory_text(std::cout, rep);
  return rep.violations_found() ? kExitViolations : kExitOk;
}

int cmd_gen_weights(const Settings& s, const std::string& bias, const std::string& out) {
  ExperimentConfig cfg;
  s.apply([&](const std::string& k, const std::string& v) { apply_setting(cfg, k, v); });
  if (bias != "zero" && bias != "gaussian") throw InvalidInput("--bias must be zero or gaussian");
  const GeneratorNet net = init_gaussian(cfg.net.dims, cfg.net.make_activation(), cfg.seed,
                                         bias == "gaussian" ? BiasInit::gaussian : BiasInit::zero);
  if (out.empty() || out == "-") {
    save_weights(std::cout, net);
  } else {
    save_weights_file(out, net);
  }
  return kExitOk;
}

struct ReplayArgs {
  std::string weights;
  std::string obs;
  std::string out;
  std::string trace_dir;
};

int cmd_replay(const std::string& config_path, const Settings& s, const ReplayArgs& args) {
  ExperimentConfig cfg;
  configure(cfg, config_path, s, [](ExperimentConfig& c, std::string_view k, std::string_view v) {
    apply_setting(c, k, v);
  });
  const GeneratorNet net = load_weights_file(args.weights);
  const ObservationRecord rec = load_observation_file(args.obs);
  const Index n = net.output_dim();

  std::ofstream file;
  if (!args.out.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(args.out, ec);
    file.open(std::filesystem::path(args.out) / "replay.csv", std::ios::binary | std::ios::trunc);
    if (!file) throw IoError("cannot write replay.csv in '" + args.out + "'");
  }
  if (!args.trace_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(args.trace_dir, ec);
    if (ec) throw IoError("cannot create '" + args.trace_dir + "'");
  }
  std::ostream& os = args.out.empty() ? std::cout : file;

  os << "solver,eps_m,eps_r,eps_r_per_dim,iters,status\n";
  for (SolverKind kind : cfg.solvers) {
    SolveResult res = solve_with_restarts(net, rec.M, rec.obs.y, make_solver_config(kind, cfg), cfg.restarts,
                                          restart_base_seed(cfg.seed));
    attach_ground_truth(res, rec.obs.x0);
    os << to_string(kind) << ',' << format_real(res.eps_m) << ',' << format_real(*res.eps_r) << ','
       << format_real(*res.eps_r / static_cast<double>(n)) << ',' << res.iterations_run << ','
       << to_string(res.status) << '\n';
    if (!args.trace_dir.empty()) {
      const auto path = std::filesystem::path(args.trace_dir) / ("trace_" + std::string(to_string(kind)) + ".csv");
      std::ofstream trace(path, std::ios::binary | std::ios::trunc);
      if (!trace) throw IoError("cannot write '" + path.string() + "'");
      write_trace_csv(trace, res);
    }
  }
  if (!os) throw IoError("write failed");
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust compressed sensing with generative priors"};
  app.require_subcommand(1);

  std::string config_path;

  auto* run = app.add_subcommand("run", "seeded Monte-Carlo sweep over m, l, solver and trial");
  Settings run_s;
  run->add_option("--config", config_path, "key=value config file; flags override it");
  add_net_flags(run, run_s);
  run_s.add(run, "m", "measurement counts (comma list)");
  run_s.add(run, "outliers", "outlier counts l (comma list)");
  run_s.add(run, "noise", "dense noise RMS");
  run_s.add(run, "outlier-range", "outlier magnitude range LO,HI");
  run_s.add(run, "outlier-sign", "positive or random");
  run_s.add(run, "solvers", "subset of admm_l1,gd_l1sq,gd_l2sq,gd_l2sq_reg");
  run_s.add(run, "rho", "ADMM penalty, or auto (1/mean|y|)");
  run_s.add(run, "reg-weight", "weight of ||z||^2 in gd_l2sq_reg");
  run_s.add(run, "max-iter", "iteration cap per solve");
  run_s.add(run, "restarts", "random restarts per solve");
  run_s.add(run, "trials", "trials per cell");
  run_s.add(run, "seed", "base seed");
  run_s.add(run, "jobs", "worker threads (0: all cores)");
  run_s.add(run, "success-threshold", "success when eps_r/n is at most this");
  run_s.add(run, "out", "output directory");
  run_s.add_flag(run, "dump-observations", "also write net.genrec, observations/ and zhat.csv");

  auto* theory = app.add_subcommand("theory", "certify the recovery conditions on one seeded system");
  Settings theory_s;
  theory->add_option("--config", config_path, "key=value config file; flags override it");
  add_net_flags(theory, theory_s);
  theory_s.add(theory, "m", "measurement count");
  theory_s.add(theory, "outliers", "outlier count l");
  theory_s.add(theory, "seed", "base seed");
  theory_s.add(theory, "candidates", "random candidates per radius");
  theory_s.add(theory, "grid", "random grid points for the brute-force l0 oracle");
  theory_s.add(theory, "beta-samples", "scalar pairs per leak value");
  theory_s.add(theory, "adversarial", "adversarial instances");
  theory_s.add(theory, "restarts", "restarts for the paired ADMM run");
  theory_s.add(theory, "out", "output directory");

  auto* gen = app.add_subcommand("gen-weights", "sample a Gaussian generator and write its weight file");
  Settings gen_s;
  gen_s.add(gen, "dims", "layer widths k,n1,...,n");
  gen_s.add(gen, "activation", "identity, relu or leaky");
  gen_s.add(gen, "leak", "leaky-ReLU slope h in (0,1)");
  gen_s.add(gen, "seed", "weight seed");
  std::string bias = "zero";
  std::string gen_out;
  gen->add_option("--bias", bias, "zero or gaussian")->capture_default_str();
  gen->add_option("--out", gen_out, "output file (default: stdout)");

  auto* replay = app.add_subcommand("replay", "re-solve a serialized observation");
  Settings replay_s;
  ReplayArgs rargs;
  replay->add_option("--config", config_path, "key=value config file; flags override it");
  replay->add_option("--weights", rargs.weights, "generator weight file")->required();
  replay->add_option("--obs", rargs.obs, "observation file")->required();
  replay->add_option("--out", rargs.out, "directory for replay.csv (default: stdout)");
  replay->add_option("--trace-dir", rargs.trace_dir, "write per-iteration traces here");
  replay_s.add(replay, "solvers", "subset of admm_l1,gd_l1sq,gd_l2sq,gd_l2sq_reg");
  replay_s.add(replay, "rho", "ADMM penalty, or auto");
  replay_s.add(replay, "reg-weight", "weight of ||z||^2 in gd_l2sq_reg");
  replay_s.add(replay, "max-iter", "iteration cap per solve");
  replay_s.add(replay, "restarts", "random restarts");
  replay_s.add(replay, "seed", "instance seed (the results.csv seed column reproduces that row)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run) return cmd_run(config_path, run_s);
    if (*theory) return cmd_theory(config_path, theory_s);
    if (*gen) return cmd_gen_weights(gen_s, bias, gen_out);
    if (*replay) return cmd_replay(config_path, replay_s, rargs);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
