#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "uavsim/uavsim.hpp"

namespace fs = std::filesystem;
using namespace uavsim;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 2;
constexpr int kRunFailure = 3;

std::string default_out_dir() {
  const char* env = std::getenv("UAVSIM_OUT_DIR");
  return env && *env ? env : "out";
}

nlohmann::json vec3_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

void write_trace_csv(const SolveTrace& t, const fs::path& path) {
  std::ofstream o(path);
  o << "tau,after_association,after_placement,after_phase,sca_rounds,sca_failed,wall_ms\n";
  for (const auto& r : t.iterations)
    o << r.tau << ',' << format_double(r.after_association) << ',' << format_double(r.after_placement) << ','
      << format_double(r.after_phase) << ',' << r.sca_rounds << ',' << (r.sca_failed ? 1 : 0) << ','
      << format_double(r.wall_ms) << '\n';
}

struct SolveArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string phase = "lbl";
  std::string checkpoint;
  std::string out;
  bool wall_clock = false;
};

int cmd_solve(const SolveArgs& a) {
  ScenarioConfig cfg;
  std::unique_ptr<CvaeModel> model;
  try {
    cfg = load_config(a.config);
    if (a.phase == "cvae" && a.checkpoint.empty())
      throw ConfigError("--phase cvae needs a trained model; pass --checkpoint");
    if (!a.checkpoint.empty()) model = std::make_unique<CvaeModel>(load_checkpoint(a.checkpoint));
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::uint64_t seed = a.seed.value_or(cfg.seed);
  Trial trial;
  try {
    trial = make_trial(cfg, seed);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }

  PhaseStrategy strategy = PhaseStrategy::lbl_ipso;
  if (a.phase == "cvae") {
    if (!model_matches(*model, trial.scenario)) {
      std::cerr << "error: checkpoint " << a.checkpoint << " was trained for a different geometry\n";
      return kConfigError;
    }
    strategy = PhaseStrategy::cvae;
  } else if (a.phase == "auto") {
    const HgpsoChoice c = hgpso_select(trial.scenario, cfg.kappa_max, cfg.hgpso_budget, model.get());
    if (!c.warning.empty()) std::cerr << "warning: " << c.warning << '\n';
    strategy = c.strategy;
  }
  const PhaseStep step = strategy == PhaseStrategy::cvae ? cvae_step(*model) : lbl_step(cfg.kappa_max);
  AoOptions opt = ao_options(cfg);
  opt.wall_clock = a.wall_clock;
  const AoResult r = run_ao(trial, step, opt, "ao");

  const fs::path out = a.out.empty() ? fs::path(default_out_dir()) : fs::path(a.out);
  fs::create_directories(out);
  nlohmann::json sol{{"schema", "uavsim-solution/1"},
                     {"seed", seed},
                     {"phase_strategy", to_string(strategy)},
                     {"capacity_bits_s_hz", r.capacity},
                     {"termination", to_string(r.trace.termination)}};
  nlohmann::json assoc = nlohmann::json::array();
  for (int m = 0; m < trial.scenario.uav_count(); ++m) assoc.push_back(r.association.served_user(m));
  sol["served_user"] = assoc;
  nlohmann::json pos = nlohmann::json::array();
  for (const auto& p : r.positions) pos.push_back(vec3_json(p));
  sol["uav_positions"] = pos;
  nlohmann::json users = nlohmann::json::array();
  for (const auto& u : trial.scenario.users) users.push_back(vec3_json(u.position));
  sol["user_positions"] = users;
  nlohmann::json phases = nlohmann::json::array();
  for (int m = 0; m < r.phases.uavs(); ++m) {
    nlohmann::json layers = nlohmann::json::array();
    for (int l = 0; l < r.phases.layers(); ++l) {
      const auto th = r.phases.layer(m, l);
      layers.push_back(std::vector<double>(th.begin(), th.end()));
    }
    phases.push_back(layers);
  }
  sol["phases"] = phases;
  std::ofstream(out / "solution.json") << sol.dump(1) << '\n';
  std::ofstream(out / "trace.json") << trace_json(r.trace).dump(1) << '\n';
  write_trace_csv(r.trace, out / "trace.csv");

  std::cout << "capacity " << format_double(r.capacity) << " bits/s/Hz after " << r.trace.iterations.size()
            << " iterations (" << to_string(r.trace.termination) << "), written to " << out.string() << '\n';
  if (r.trace.termination == Termination::solver_failure) {
    std::cerr << "error: " << r.trace.message << '\n';
    return kRunFailure;
  }
  return kOk;
}

int cmd_experiment(const std::string& spec_path, int jobs, const std::string& out_dir, bool wall_clock, bool fresh) {
  ExperimentSpec spec;
  try {
    spec = load_experiment(spec_path);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string out = out_dir.empty() ? default_out_dir() : out_dir;
  ExperimentOptions opt;
  opt.jobs = jobs;
  opt.wall_clock = wall_clock;
  opt.resume = !fresh;
  const ExperimentOutcome r = run_experiment(spec, out, opt);
  for (const auto& e : r.errors) std::cerr << "error: " << e << '\n';
  std::cout << r.rows.size() << " rows (" << r.skipped_rows << " reused) in " << (fs::path(out) / "results.csv").string()
            << '\n';
  return r.failed_cells > 0 ? kRunFailure : kOk;
}

int cmd_dataset(const std::string& config, std::size_t count, const std::string& out_path,
                std::optional<std::uint64_t> seed) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string out = out_path.empty() ? (fs::path(default_out_dir()) / "dataset.bin").string() : out_path;
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  const Dataset d = generate_dataset(cfg, count, seed.value_or(cfg.seed), {cfg.kappa_max});
  const auto files = write_dataset(d, out);
  std::cout << d.samples.size() << " records in " << files.size() << " file(s), first " << files.front() << '\n';
  if (!d.error.empty()) {
    std::cerr << "error: generation stopped early: " << d.error << '\n';
    return kRunFailure;
  }
  return kOk;
}

struct TrainArgs {
  std::string dataset;
  int epochs = 300;
  double lr = 1e-4;
  int batch = 64;
  std::uint64_t seed = 1;
  std::string out;
  std::string loss_csv;
};

int cmd_train(const TrainArgs& a) {
  Dataset d;
  try {
    d = read_dataset(a.dataset);
    if (d.samples.empty()) throw ConfigError("dataset " + a.dataset + " is empty");
    if (a.epochs < 1 || !(a.lr > 0.0) || a.batch < 1) throw ConfigError("epochs, lr and batch must be positive");
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
  const std::string out = a.out.empty() ? (fs::path(default_out_dir()) / "cvae.ckpt").string() : a.out;
  if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
  const std::string loss_path = a.loss_csv.empty() ? out + ".loss.csv" : a.loss_csv;

  Rng init(derive_seed({a.seed, tag_hash("init")}));
  CvaeModel model = make_cvae(shape_for(d.header), d.header.thickness, d.header.wavelength, init);
  TrainOptions opt;
  opt.epochs = a.epochs;
  opt.learning_rate = a.lr;
  opt.batch_size = a.batch;
  opt.seed = a.seed;
  std::vector<LossTerms> curve;
  auto write_curve = [&] {
    std::ofstream o(loss_path);
    o << "epoch,total,recon,kl,capacity\n";
    for (std::size_t e = 0; e < curve.size(); ++e)
      o << e + 1 << ',' << format_double(curve[e].total) << ',' << format_double(curve[e].recon) << ','
        << format_double(curve[e].kl) << ',' << format_double(curve[e].capacity) << '\n';
  };
  try {
    train_cvae(model, d.samples, opt, &curve, [&](int epoch, const LossTerms& l) {
      if (epoch == 1 || epoch % 10 == 0 || epoch == a.epochs)
        std::cerr << "epoch " << epoch << " loss " << l.total << '\n';
    });
  } catch (const Divergence& e) {
    save_checkpoint(model, out);
    write_curve();
    std::cerr << "error: " << e.what() << "; best checkpoint kept in " << out << '\n';
    return kRunFailure;
  }
  save_checkpoint(model, out);
  write_curve();
  std::cout << "checkpoint " << out << ", loss curve " << loss_path << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV swarm with stacked metasurface receivers: joint association, placement and phase design"};
  app.require_subcommand(1);

  SolveArgs solve;
  std::uint64_t solve_seed = 0;
  auto* s = app.add_subcommand("solve", "Run the alternating optimization on one scenario");
  s->add_option("config", solve.config, "Scenario config (JSON)")->required();
  auto* seed_opt = s->add_option("--seed", solve_seed, "Scenario seed (default: the config's seed)");
  s->add_option("--phase", solve.phase, "Phase solver")->check(CLI::IsMember({"lbl", "cvae", "auto"}));
  s->add_option("--checkpoint", solve.checkpoint, "Trained CVAE checkpoint");
  s->add_option("--out", solve.out, "Output directory (default $UAVSIM_OUT_DIR or ./out)");
  s->add_flag("--wall-clock", solve.wall_clock, "Record wall time per iteration");

  std::string spec_path, exp_out;
  int jobs = 1;
  bool exp_wall = false, exp_fresh = false;
  auto* e = app.add_subcommand("experiment", "Run a parameter sweep and write results.csv");
  e->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  e->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  e->add_option("--out-dir", exp_out, "Output directory (default $UAVSIM_OUT_DIR or ./out)");
  e->add_flag("--wall-clock", exp_wall, "Fill the wall_ms column (makes output machine dependent)");
  e->add_flag("--fresh", exp_fresh, "Ignore rows already present in results.csv");

  std::string ds_config, ds_out;
  std::size_t ds_count = 1000;
  std::uint64_t ds_seed = 0;
  auto* d = app.add_subcommand("dataset", "Generate LBL-IPSO labelled links for CVAE training");
  d->add_option("config", ds_config, "Scenario config (JSON)")->required();
  d->add_option("--count", ds_count, "Number of records")->check(CLI::PositiveNumber);
  d->add_option("--out", ds_out, "Dataset file (default $UAVSIM_OUT_DIR/dataset.bin)");
  auto* ds_seed_opt = d->add_option("--seed", ds_seed, "Master seed (default: the config's seed)");

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train the phase generator on a dataset");
  t->add_option("dataset", train.dataset, "Dataset file")->required();
  t->add_option("--epochs", train.epochs, "Training epochs");
  t->add_option("--lr", train.lr, "Learning rate");
  t->add_option("--batch", train.batch, "Mini-batch size");
  t->add_option("--seed", train.seed, "Seed for initialization and shuffling");
  t->add_option("--out", train.out, "Checkpoint path (default $UAVSIM_OUT_DIR/cvae.ckpt)");
  t->add_option("--loss-csv", train.loss_csv, "Loss curve CSV (default <checkpoint>.loss.csv)");

  std::string defaults_out;
  auto* p = app.add_subcommand("defaults", "Print the paper-defaults scenario config");
  p->add_option("--out", defaults_out, "Write to a file instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*s) {
      if (*seed_opt) solve.seed = solve_seed;
      return cmd_solve(solve);
    }
    if (*e) return cmd_experiment(spec_path, jobs, exp_out, exp_wall, exp_fresh);
    if (*d) return cmd_dataset(ds_config, ds_count, ds_out, *ds_seed_opt ? std::optional(ds_seed) : std::nullopt);
    if (*t) return cmd_train(train);
    if (*p) {
      const std::string text = paper_defaults_json().dump(2) + "\n";
      if (defaults_out.empty())
        std::cout << text;
      else
        std::ofstream(defaults_out) << text;
      return kOk;
    }
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kConfigError;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kRunFailure;
  }
  return kOk;
}
