#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "uavsim/benchmarks.hpp"
#include "uavsim/config.hpp"
#include "uavsim/random.hpp"

namespace uavsim {

struct ResultRow {
  std::string sweep_var;
  int value = 0;
  int trial = 0;
  std::string method;
  double capacity = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
};

inline const char* kResultHeader = "sweep_var,value,trial,method,capacity_bits_s_hz,iterations,wall_ms,seed";

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string to_csv(const ResultRow& r) {
  std::ostringstream o;
  o << r.sweep_var << ',' << r.value << ',' << r.trial << ',' << r.method << ',' << format_double(r.capacity) << ','
    << r.iterations << ',' << format_double(r.wall_ms) << ',' << r.seed;
  return o.str();
}

// Rows of an existing results file; malformed lines are dropped.
inline std::vector<ResultRow> read_results(const std::string& path) {
  std::vector<ResultRow> rows;
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line) || line != kResultHeader) return rows;
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 8) continue;
    try {
      ResultRow r;
      r.sweep_var = f[0];
      r.value = std::stoi(f[1]);
      r.trial = std::stoi(f[2]);
      r.method = f[3];
      r.capacity = std::stod(f[4]);
      r.iterations = std::stoi(f[5]);
      r.wall_ms = std::stod(f[6]);
      r.seed = std::stoull(f[7]);
      rows.push_back(r);
    } catch (const std::exception&) {
    }
  }
  return rows;
}

inline std::uint64_t trial_seed(const ExperimentSpec& spec, int value, int trial) {
  return derive_seed({spec.seed, tag_hash(sweep_name(spec.sweep)), static_cast<std::uint64_t>(value),
                      static_cast<std::uint64_t>(trial)});
}

inline MethodResult run_method(const std::string& method, const Trial& trial) {
  if (method == "ao") return benchmark_ao(trial, lbl_step(trial.config.kappa_max));
  if (method == "ud") return benchmark_ud(trial);
  if (method == "pso") return benchmark_pso(trial);
  if (method == "de") return benchmark_de(trial);
  if (method == "rd") return benchmark_rd(trial);
  if (method == "no_sim") return benchmark_no_sim(trial);
  throw ConfigError("unknown method '" + method + "'");
}

inline nlohmann::json trace_json(const SolveTrace& t) {
  nlohmann::json it = nlohmann::json::array();
  for (const auto& r : t.iterations)
    it.push_back({{"tau", r.tau},
                  {"after_association", r.after_association},
                  {"after_placement", r.after_placement},
                  {"after_phase", r.after_phase},
                  {"sca_rounds", r.sca_rounds},
                  {"sca_failed", r.sca_failed},
                  {"wall_ms", r.wall_ms}});
  return {{"schema", "uavsim-trace/1"},
          {"initial_capacity", t.initial_capacity},
          {"termination", to_string(t.termination)},
          {"message", t.message},
          {"iterations", it}};
}

struct ExperimentOptions {
  int jobs = 1;
  bool wall_clock = false;
  bool resume = true;
  bool write_traces = true;
};

struct ExperimentOutcome {
  std::vector<ResultRow> rows;
  int failed_cells = 0;
  int skipped_rows = 0;
  std::vector<std::string> errors;
};

// Runs every (value, trial) cell of the sweep on `jobs` workers and writes
// results.csv (sorted by value, trial, method) plus one trace per AO-type run
// into `out_dir`. With `resume`, rows already present with a finite capacity
// are kept and not recomputed. Failed runs are recorded as NaN rows.
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                        const ExperimentOptions& opt = {}) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const fs::path csv = fs::path(out_dir) / "results.csv";
  const fs::path traces = fs::path(out_dir) / "traces";
  if (opt.write_traces) fs::create_directories(traces);
  const std::string sweep = sweep_name(spec.sweep);

  using Key = std::tuple<int, int, int>;  // value index, trial, method index
  std::map<Key, ResultRow> table;
  ExperimentOutcome outcome;
  auto method_index = [&](const std::string& m) {
    for (std::size_t i = 0; i < spec.methods.size(); ++i)
      if (spec.methods[i] == m) return static_cast<int>(i);
    return -1;
  };
  auto value_index = [&](int v) {
    for (std::size_t i = 0; i < spec.values.size(); ++i)
      if (spec.values[i] == v) return static_cast<int>(i);
    return -1;
  };
  if (opt.resume)
    for (const auto& r : read_results(csv.string())) {
      const int vi = value_index(r.value);
      const int mi = method_index(r.method);
      if (r.sweep_var != sweep || vi < 0 || mi < 0 || r.trial < 0 || r.trial >= spec.trials) continue;
      if (!std::isfinite(r.capacity) || r.seed != trial_seed(spec, r.value, r.trial)) continue;
      table[{vi, r.trial, mi}] = r;
      ++outcome.skipped_rows;
    }

  std::mutex mu;
  auto flush = [&] {
    const fs::path tmp = csv.string() + ".tmp";
    {
      std::ofstream o(tmp);
      o << kResultHeader << '\n';
      for (const auto& [key, row] : table) o << to_csv(row) << '\n';
    }
    fs::rename(tmp, csv);
  };

  std::vector<std::pair<int, int>> cells;
  for (std::size_t vi = 0; vi < spec.values.size(); ++vi)
    for (int t = 0; t < spec.trials; ++t) cells.emplace_back(static_cast<int>(vi), t);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cells.size(); i = next++) {
      const auto [vi, t] = cells[i];
      const int value = spec.values[static_cast<std::size_t>(vi)];
      std::vector<int> todo;
      {
        std::lock_guard lock(mu);
        for (int mi = 0; mi < static_cast<int>(spec.methods.size()); ++mi)
          if (!table.count({vi, t, mi})) todo.push_back(mi);
      }
      if (todo.empty()) continue;
      const std::uint64_t seed = trial_seed(spec, value, t);
      std::vector<std::pair<int, ResultRow>> done;
      std::vector<std::string> errors;
      std::unique_ptr<Trial> trial;
      try {
        trial = std::make_unique<Trial>(make_trial(apply_sweep(spec.base, spec.sweep, value), seed));
      } catch (const std::exception& e) {
        errors.push_back(sweep + "=" + std::to_string(value) + " trial " + std::to_string(t) + ": " + e.what());
      }
      for (int mi : todo) {
        const std::string& method = spec.methods[static_cast<std::size_t>(mi)];
        ResultRow row{sweep, value, t, method, std::nan(""), 0, 0.0, seed};
        if (trial) {
          try {
            const auto start = std::chrono::steady_clock::now();
            const MethodResult r = run_method(method, *trial);
            const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            row.capacity = r.capacity;
            row.iterations = r.iterations;
            if (opt.wall_clock) row.wall_ms = ms;
            if (opt.write_traces && !r.trace.iterations.empty()) {
              std::ofstream o(traces / (sweep + "-" + std::to_string(value) + "-t" + std::to_string(t) + "-" + method +
                                        ".json"));
              o << trace_json(r.trace).dump(1) << '\n';
            }
          } catch (const std::exception& e) {
            errors.push_back(sweep + "=" + std::to_string(value) + " trial " + std::to_string(t) + " " + method + ": " +
                             e.what());
          }
        }
        done.emplace_back(mi, row);
      }
      std::lock_guard lock(mu);
      for (auto& [mi, row] : done) table[{vi, t, mi}] = row;
      if (!errors.empty()) {
        ++outcome.failed_cells;
        outcome.errors.insert(outcome.errors.end(), errors.begin(), errors.end());
      }
      flush();
    }
  };

  const int jobs = std::max(1, opt.jobs);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::lock_guard lock(mu);
  flush();
  for (const auto& [key, row] : table) outcome.rows.push_back(row);
  return outcome;
}

}  // namespace uavsim
