#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "uavsim/random.hpp"
#include "uavsim/sim_channel.hpp"

namespace uavsim {

// Maximizes a function of a vector of angles; every coordinate lives on the circle.
using AngleObjective = std::function<double(std::span<const double>)>;

struct SearchResult {
  std::vector<double> best;
  double best_value = 0.0;
  std::vector<double> history;  // best value after each iteration
};

struct PsoOptions {
  int population = 30;
  int iterations = 50;
  double inertia = 0.729;
  double cognitive = 1.49;
  double social = 1.49;
};

struct DeOptions {
  int population = 30;
  int iterations = 50;
  double weight = 0.5;     // F
  double crossover = 0.9;  // CR
};

namespace detail {

// Shortest signed difference a - b on the circle, in (-pi, pi].
inline double angle_diff(double a, double b) {
  double d = std::remainder(a - b, kTwoPi);
  if (d <= -std::numbers::pi) d += kTwoPi;
  return d;
}

inline std::vector<std::vector<double>> initial_population(int population, std::size_t dim,
                                                           std::span<const double> seed_point, Rng& rng) {
  std::vector<std::vector<double>> pop(static_cast<std::size_t>(population), std::vector<double>(dim));
  for (auto& x : pop)
    for (auto& v : x) v = rng.uniform(0.0, kTwoPi);
  if (!seed_point.empty() && population > 0) std::copy(seed_point.begin(), seed_point.end(), pop[0].begin());
  return pop;
}

}  // namespace detail

// Global-best particle swarm. The first particle starts at `seed_point` when
// given, so the result is never worse than that point.
inline SearchResult pso_maximize(const AngleObjective& f, std::size_t dim, std::span<const double> seed_point, Rng& rng,
                                 const PsoOptions& opt = {}) {
  auto x = detail::initial_population(opt.population, dim, seed_point, rng);
  std::vector<std::vector<double>> v(x.size(), std::vector<double>(dim));
  for (auto& vi : v)
    for (auto& e : vi) e = rng.uniform(-std::numbers::pi, std::numbers::pi) * 0.1;
  auto pbest = x;
  std::vector<double> pval(x.size());
  SearchResult r;
  r.best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < x.size(); ++i) {
    pval[i] = f(x[i]);
    if (pval[i] > r.best_value) {
      r.best_value = pval[i];
      r.best = x[i];
    }
  }
  for (int it = 0; it < opt.iterations; ++it) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t d = 0; d < dim; ++d) {
        const double r1 = rng.uniform();
        const double r2 = rng.uniform();
        double vel = opt.inertia * v[i][d] + opt.cognitive * r1 * detail::angle_diff(pbest[i][d], x[i][d]) +
                     opt.social * r2 * detail::angle_diff(r.best[d], x[i][d]);
        vel = std::clamp(vel, -std::numbers::pi, std::numbers::pi);
        v[i][d] = vel;
        x[i][d] = wrap_phase(x[i][d] + vel);
      }
      const double val = f(x[i]);
      if (val > pval[i]) {
        pval[i] = val;
        pbest[i] = x[i];
      }
      if (val > r.best_value) {
        r.best_value = val;
        r.best = x[i];
      }
    }
    r.history.push_back(r.best_value);
  }
  return r;
}

// DE/rand/1/bin with greedy one-to-one selection.
inline SearchResult de_maximize(const AngleObjective& f, std::size_t dim, std::span<const double> seed_point, Rng& rng,
                                const DeOptions& opt = {}) {
  auto x = detail::initial_population(std::max(opt.population, 4), dim, seed_point, rng);
  const std::size_t np = x.size();
  std::vector<double> val(np);
  SearchResult r;
  r.best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < np; ++i) {
    val[i] = f(x[i]);
    if (val[i] > r.best_value) {
      r.best_value = val[i];
      r.best = x[i];
    }
  }
  std::vector<double> trial(dim);
  for (int it = 0; it < opt.iterations; ++it) {
    for (std::size_t i = 0; i < np; ++i) {
      std::size_t a, b, c;
      do a = rng.index(np); while (a == i);
      do b = rng.index(np); while (b == i || b == a);
      do c = rng.index(np); while (c == i || c == a || c == b);
      const std::size_t jrand = rng.index(dim);
      for (std::size_t d = 0; d < dim; ++d) {
        if (d == jrand || rng.uniform() < opt.crossover)
          trial[d] = wrap_phase(x[a][d] + opt.weight * detail::angle_diff(x[b][d], x[c][d]));
        else
          trial[d] = x[i][d];
      }
      const double tv = f(trial);
      if (tv >= val[i]) {
        x[i] = trial;
        val[i] = tv;
        if (tv > r.best_value) {
          r.best_value = tv;
          r.best = trial;
        }
      }
    }
    r.history.push_back(r.best_value);
  }
  return r;
}

}  // namespace uavsim
