// SPDX-License-Identifier: Apache-2.0
#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <system_error>

#include "spvr/spvr.hpp"

namespace fs = std::filesystem;
using namespace spvr;

namespace {

enum Exit : int { kOk = 0, kUsage = 1, kInfeasible = 2, kIo = 3 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void print_kv(const char* key, double v) { std::cout << key << '=' << std::setprecision(10) << v << '\n'; }

std::vector<Trace> load_traces(const ExperimentConfig& cfg, const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("trace directory not found: " + dir);
  auto traces = load_trace_dir(dir, cfg.tau, cfg.media.t_seg);
  if (traces.empty()) throw IoError("no .csv traces in " + dir);
  return traces;
}

TraceSplit split_traces(const ExperimentConfig& cfg, std::vector<Trace> traces) {
  return split(TraceSet{std::move(traces), cfg.split_seed, cfg.train_fraction});
}

int cmd_optimize(const std::string& config) {
  const auto cfg = load_config(config);
  const auto budget = cfg.budget();
  const auto r = optimize_durations(budget, cfg.privacy.rho_s, cfg.stream(), cfg.fov.n_fov);
  print_kv("t_obw", r.plan.t_obw);
  print_kv("t_com", r.plan.t_com);
  print_kv("t_cpt", r.plan.t_cpt);
  print_kv("t_cc", r.plan.t_cc());
  print_kv("r_cc_star", resources_rate(budget));
  std::cout << "n_p=" << r.plan.n_p << '\n';
  std::cout << "obw_samples=" << r.plan.obw_samples << '\n';
  std::cout << "status=" << to_string(r.status) << '\n';
  if (!r.feasible()) {
    std::cerr << "error: no observation window fits; t_cc* exceeds T_ps - tau by " << r.deficit << " s\n";
    return kInfeasible;
  }
  return kOk;
}

int cmd_train(const std::string& config, const std::string& traces_dir, const std::string& out) {
  const auto cfg = load_config(config);
  const auto parts = split_traces(cfg, load_traces(cfg, traces_dir));
  const auto plan = optimize_durations(cfg.budget(), cfg.privacy.rho_s, cfg.stream(), cfg.fov.n_fov);
  if (!plan.feasible()) {
    std::cerr << "error: configured sDoP leaves no observation window; nothing to train\n";
    return kInfeasible;
  }
  const auto shape = cfg.predictor_shape(plan.plan);
  const auto res = train_federated(cfg, parts.train, shape, cfg.workers);
  for (std::size_t r = 0; r < res.round_loss.size(); ++r)
    std::cout << "round=" << r + 1 << " loss=" << std::setprecision(10) << res.round_loss[r] << '\n';

  std::ofstream f(out, std::ios::binary);
  if (!f) throw IoError("cannot write " + out);
  save_model(f, res.model);
  if (!f.flush()) throw IoError("cannot write " + out);
  return kOk;
}

int cmd_sweep(const std::string& config, const std::string& traces_dir, const std::string& out,
              const std::string& model_path, int workers_override) {
  const auto cfg = load_config(config);
  const auto parts = split_traces(cfg, load_traces(cfg, traces_dir));
  std::optional<LinearArModel> model;
  if (!model_path.empty()) {
    std::ifstream in(model_path, std::ios::binary);
    if (!in) throw IoError("cannot open model " + model_path);
    model = load_model(in);
  }
  const unsigned workers = workers_override >= 0 ? static_cast<unsigned>(workers_override) : cfg.workers;
  const auto rows = run_sweep(cfg, parts.train, parts.test, model ? &*model : nullptr, workers);

  std::ostringstream csv;
  write_sweep_csv(csv, rows);
  std::ofstream f(out, std::ios::binary);
  if (!f) throw IoError("cannot write " + out);
  f << csv.str();
  if (!f.flush()) throw IoError("cannot write " + out);
  std::size_t infeasible = 0;
  for (const auto& r : rows) infeasible += r.status != PlanStatus::feasible;
  std::cout << "rows=" << rows.size() << " infeasible=" << infeasible << " test_traces=" << parts.test.size() << '\n';
  return kOk;
}

int cmd_rates(const std::string& config) {
  const auto cfg = load_config(config);
  const EnsembleOptions opt{cfg.mc_samples, cfg.mc_seed, cfg.workers};
  const double c_com = ensemble_rate(cfg.radio, opt);
  const double c_cpt = computing_rate(cfg.compute);
  auto b = cfg.budget();
  b.c_com = c_com;
  b.c_cpt = c_cpt;
  print_kv("c_com_bps", c_com);
  print_kv("c_cpt_bps", c_cpt);
  print_kv("r_cc_star", resources_rate(b));
  return kOk;
}

int cmd_gen_traces(std::uint64_t seed, std::size_t n, const std::string& out, std::size_t users, double duration,
                   double momentum, double tau, double t_seg) {
  if (n == 0) throw std::domain_error("--n must be positive");
  if (users == 0) users = std::min<std::size_t>(n, 30);
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out + ": " + ec.message());
  for (std::size_t i = 0; i < n; ++i) {
    std::mt19937_64 rng(detail::derive_seed(seed, i, 0));
    SynthOptions opt;
    opt.start = Gaze{std::uniform_real_distribution<double>(-180.0, 180.0)(rng),
                     std::uniform_real_distribution<double>(-30.0, 30.0)(rng)};
    char user[32], video[32];
    std::snprintf(user, sizeof user, "u%02zu", i % users);
    std::snprintf(video, sizeof video, "v%02zu", i / users);
    opt.user_id = user;
    opt.video_id = video;
    const auto t = synth_trace(detail::derive_seed(seed, i, 1), duration, tau, t_seg, momentum, opt);
    const auto path = fs::path(out) / (std::string(user) + "_" + video + ".csv");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write " + path.string());
    write_csv(f, t);
    if (!f.flush()) throw IoError("cannot write " + path.string());
  }
  std::cout << "traces=" << n << " users=" << users << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Privacy-aware tile streaming simulator"};
  app.require_subcommand(1);

  std::string config, traces, out, model;
  int workers = -1;

  auto* opt = app.add_subcommand("optimize", "Optimal observation, communication and computing durations");
  opt->add_option("--config", config, "Config file")->required();

  auto* train = app.add_subcommand("train", "Federated training of the linear predictor");
  train->add_option("--config", config, "Config file")->required();
  train->add_option("--traces", traces, "Directory of trace CSV files")->required();
  train->add_option("--out", out, "Output model file")->required();

  auto* sweep = app.add_subcommand("sweep", "QoE over the sDoP x resources-rate grid");
  sweep->add_option("--config", config, "Config file")->required();
  sweep->add_option("--traces", traces, "Directory of trace CSV files")->required();
  sweep->add_option("--out", out, "Output CSV")->required();
  sweep->add_option("--model", model, "Pre-trained linear model");
  sweep->add_option("--workers", workers, "Worker threads (0 = all cores); overrides the config");

  auto* rates = app.add_subcommand("rates", "Ensemble communication rate and computing rate");
  rates->add_option("--config", config, "Config file")->required();

  std::uint64_t seed = 0;
  std::size_t n = 0, users = 0;
  double duration = 60, momentum = 0.9, tau = 0.1, t_seg = 1.0;
  auto* gen = app.add_subcommand("gen-traces", "Write synthetic head-movement traces");
  gen->add_option("--seed", seed, "Seed")->required();
  gen->add_option("--n", n, "Number of traces")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--users", users, "Distinct user ids (default min(n, 30))");
  gen->add_option("--duration", duration, "Seconds per trace")->capture_default_str();
  gen->add_option("--momentum", momentum, "Velocity momentum in [0, 1)")->capture_default_str();
  gen->add_option("--tau", tau, "Sampling interval in seconds")->capture_default_str();
  gen->add_option("--t-seg", t_seg, "Segment length in seconds")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*opt) return cmd_optimize(config);
    if (*train) return cmd_train(config, traces, out);
    if (*sweep) return cmd_sweep(config, traces, out, model, workers);
    if (*rates) return cmd_rates(config);
    if (*gen) return cmd_gen_traces(seed, n, out, users, duration, momentum, tau, t_seg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const TraceFormatError& e) {
    std::cerr << "trace error: " << e.what() << '\n';
    return kIo;
  } catch (const std::system_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
