#pragma once

// CMA-ES (maximization) over a box. The search runs in the unit cube: a
// candidate u in [0,1]^n maps to lower + u (upper - lower), so sigma is a
// fraction of each parameter's range.
//
// Update rules and constants follow Hansen, "The CMA Evolution Strategy: A
// Tutorial" (2016): log-rank weights, cumulative step-size adaptation and
// rank-one plus rank-mu covariance update, with c_m = 1.

#include "origami/error.hpp"
#include "origami/parallel.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace origami {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

struct CmaConfig {
  std::vector<double> lower, upper;
  double sigma0 = 0.025;                     // in unit-cube coordinates
  int population = 0;                        // 0: 4 + floor(3 ln n)
  int parents = 0;                           // 0: floor(population / 2)
  int max_generations = 200;
  std::uint64_t seed = 1;
  std::optional<std::vector<double>> start;  // real units; uniform random in the box if absent

  std::size_t dimension() const { return lower.size(); }
  int lambda() const { return population > 0 ? population : 4 + static_cast<int>(std::floor(3.0 * std::log(double(dimension())))); }
  int mu() const { return parents > 0 ? parents : lambda() / 2; }

  void check() const {
    if (lower.empty() || lower.size() != upper.size())
      throw Error(Errc::BadBounds, "lower and upper bounds must be non-empty and of equal length", "bounds");
    for (std::size_t i = 0; i < lower.size(); ++i)
      if (!(lower[i] < upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
        throw Error(Errc::BadBounds, "need finite lower < upper", "bounds[" + std::to_string(i) + "]");
    if (lambda() < 2) throw Error(Errc::InvalidArgument, "population must be at least 2", "population");
    if (mu() < 1 || mu() > lambda()) throw Error(Errc::InvalidArgument, "parents must be in [1, population]", "parents");
    if (!(sigma0 > 0)) throw Error(Errc::InvalidArgument, "sigma0 must be positive", "sigma0");
    if (max_generations < 0) throw Error(Errc::InvalidArgument, "max_generations must be non-negative", "max_generations");
    if (start && start->size() != lower.size()) throw Error(Errc::LengthMismatch, "start has the wrong dimension", "start");
  }
};

struct CmaState {
  CmaConfig config;
  VecX mean;  // unit-cube coordinates
  MatX C;
  double sigma = 0;
  VecX p_sigma, p_c;
  int generation = 0;
  std::mt19937_64 rng;

  // strategy constants
  VecX weights;
  double mu_eff = 0, c_sigma = 0, d_sigma = 0, c_c = 0, c_1 = 0, c_mu = 0, chi_n = 0;

  // eigendecomposition of C: C = B diag(D^2) B^T
  MatX B;
  VecX D;
};

namespace detail {

inline void decompose(CmaState& s) {
  Eigen::SelfAdjointEigenSolver<MatX> eig(s.C);
  s.B = eig.eigenvectors();
  s.D = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
}

inline VecX to_unit(const CmaConfig& c, const std::vector<double>& x) {
  VecX u(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) u[i] = (x[i] - c.lower[i]) / (c.upper[i] - c.lower[i]);
  return u;
}

}  // namespace detail

inline std::vector<double> to_real(const CmaConfig& c, const VecX& u) {
  std::vector<double> x(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) x[i] = c.lower[i] + u[i] * (c.upper[i] - c.lower[i]);
  return x;
}

inline CmaState cma_init(const CmaConfig& config) {
  config.check();
  CmaState s;
  s.config = config;
  const int n = static_cast<int>(config.dimension());
  const int lambda = config.lambda(), mu = config.mu();
  s.rng.seed(config.seed);
  if (config.start) {
    s.mean = detail::to_unit(config, *config.start);
  } else {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    s.mean.resize(n);
    for (int i = 0; i < n; ++i) s.mean[i] = unit(s.rng);
  }
  s.C = MatX::Identity(n, n);
  s.sigma = config.sigma0;
  s.p_sigma = VecX::Zero(n);
  s.p_c = VecX::Zero(n);

  s.weights.resize(mu);
  for (int i = 0; i < mu; ++i) s.weights[i] = std::log((lambda + 1) / 2.0) - std::log(i + 1.0);
  if (mu == 1) s.weights[0] = 1.0;
  s.weights /= s.weights.sum();
  s.mu_eff = 1.0 / s.weights.squaredNorm();
  const double nn = n;
  s.c_sigma = (s.mu_eff + 2) / (nn + s.mu_eff + 5);
  s.d_sigma = 1 + 2 * std::max(0.0, std::sqrt((s.mu_eff - 1) / (nn + 1)) - 1) + s.c_sigma;
  s.c_c = (4 + s.mu_eff / nn) / (nn + 4 + 2 * s.mu_eff / nn);
  s.c_1 = 2 / ((nn + 1.3) * (nn + 1.3) + s.mu_eff);
  s.c_mu = std::min(1 - s.c_1, 2 * (s.mu_eff - 2 + 1 / s.mu_eff) / ((nn + 2) * (nn + 2) + s.mu_eff));
  s.chi_n = std::sqrt(nn) * (1 - 1 / (4 * nn) + 1 / (21 * nn * nn));
  detail::decompose(s);
  return s;
}

// Candidates in unit-cube coordinates. A draw leaving the cube is redrawn up to
// 100 times, then clipped.
inline std::vector<VecX> ask(CmaState& s) {
  const int n = static_cast<int>(s.mean.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<VecX> out;
  for (int k = 0; k < s.config.lambda(); ++k) {
    VecX x(n);
    for (int attempt = 0; attempt <= 100; ++attempt) {
      VecX z(n);
      for (int i = 0; i < n; ++i) z[i] = normal(s.rng);
      x = s.mean + s.sigma * (s.B * s.D.cwiseProduct(z));
      if ((x.array() >= 0.0).all() && (x.array() <= 1.0).all()) break;
    }
    out.push_back(x.cwiseMax(0.0).cwiseMin(1.0));
  }
  return out;
}

inline void tell(CmaState& s, const std::vector<VecX>& candidates, const std::vector<double>& fitness) {
  const int lambda = s.config.lambda(), mu = static_cast<int>(s.weights.size());
  if (static_cast<int>(candidates.size()) != lambda || static_cast<int>(fitness.size()) != lambda)
    throw Error(Errc::LengthMismatch,
                "expected " + std::to_string(lambda) + " candidates and fitnesses, got " + std::to_string(candidates.size()) + " and " +
                    std::to_string(fitness.size()),
                "generation " + std::to_string(s.generation));
  const int n = static_cast<int>(s.mean.size());
  std::vector<int> order(lambda);
  for (int i = 0; i < lambda; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fitness[a] > fitness[b]; });

  const VecX old_mean = s.mean;
  VecX y_w = VecX::Zero(n);
  MatX rank_mu = MatX::Zero(n, n);
  for (int i = 0; i < mu; ++i) {
    const VecX y = (candidates[order[i]] - old_mean) / s.sigma;
    y_w += s.weights[i] * y;
    rank_mu += s.weights[i] * y * y.transpose();
  }
  s.mean = old_mean + s.sigma * y_w;

  // C^{-1/2} y_w via the eigendecomposition
  VecX inv_d = s.D;
  for (int i = 0; i < n; ++i) inv_d[i] = inv_d[i] > 0 ? 1.0 / inv_d[i] : 0.0;
  const VecX c_inv_sqrt_y = s.B * inv_d.cwiseProduct(s.B.transpose() * y_w);
  s.p_sigma = (1 - s.c_sigma) * s.p_sigma + std::sqrt(s.c_sigma * (2 - s.c_sigma) * s.mu_eff) * c_inv_sqrt_y;
  const double ps_norm = s.p_sigma.norm();
  const double decay = 1 - std::pow(1 - s.c_sigma, 2.0 * (s.generation + 1));
  const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (n + 1)) * s.chi_n;
  s.p_c = (1 - s.c_c) * s.p_c + (h_sigma ? std::sqrt(s.c_c * (2 - s.c_c) * s.mu_eff) : 0.0) * y_w;

  const double delta_h = h_sigma ? 0.0 : s.c_c * (2 - s.c_c);
  s.C = (1 - s.c_1 - s.c_mu) * s.C + s.c_1 * (s.p_c * s.p_c.transpose() + delta_h * s.C) + s.c_mu * rank_mu;
  s.C = 0.5 * (s.C + s.C.transpose());
  s.sigma *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1));

  // floor eigenvalues at 1e-14 of the trace
  Eigen::SelfAdjointEigenSolver<MatX> eig(s.C);
  const double floor = 1e-14 * s.C.trace();
  if (eig.eigenvalues().minCoeff() < floor) {
    const VecX ev = eig.eigenvalues().cwiseMax(floor);
    s.C = eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().transpose();
    s.C = 0.5 * (s.C + s.C.transpose());
  }
  detail::decompose(s);
  ++s.generation;
}

struct GenerationRecord {
  int generation = 0;
  std::vector<double> best_params;  // best of this generation, real units
  double best_fitness = 0;
  std::vector<double> mean;  // real units, after the update
  double sigma = 0;
  double best_so_far = 0;
};

struct OptResult {
  std::vector<double> best_params;
  double best_fitness = -std::numeric_limits<double>::infinity();
  std::vector<GenerationRecord> records;
  std::size_t evaluations = 0;
};

struct OptimizeOptions {
  unsigned threads = 1;
  int retries = 3;  // per candidate, for failures that are not origami::Error
  std::function<void(const GenerationRecord&)> on_generation;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Domain failures (origami::Error) score the worst possible fitness; other
// exceptions are retried and then propagated.
inline double evaluate_candidate(const Objective& f, const std::vector<double>& x, int retries) {
  for (int attempt = 0;; ++attempt) {
    try {
      const double v = f(x);
      return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
    } catch (const Error&) {
      return -std::numeric_limits<double>::infinity();
    } catch (...) {
      if (attempt >= retries) throw;
    }
  }
}

inline OptResult optimize(const Objective& objective, const CmaConfig& config, const OptimizeOptions& opt = {}) {
  CmaState s = cma_init(config);
  OptResult result;
  result.best_params = to_real(config, s.mean);
  result.best_fitness = evaluate_candidate(objective, result.best_params, opt.retries);
  result.evaluations = 1;
  for (int g = 0; g < config.max_generations; ++g) {
    const auto candidates = ask(s);
    std::vector<std::vector<double>> real(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) real[i] = to_real(config, candidates[i]);
    std::vector<double> fitness(candidates.size());
    parallel_for(candidates.size(), opt.threads, [&](std::size_t i) { fitness[i] = evaluate_candidate(objective, real[i], opt.retries); });
    result.evaluations += candidates.size();
    const std::size_t best = std::max_element(fitness.begin(), fitness.end()) - fitness.begin();
    if (fitness[best] > result.best_fitness) {
      result.best_fitness = fitness[best];
      result.best_params = real[best];
    }
    tell(s, candidates, fitness);
    GenerationRecord rec{g + 1, real[best], fitness[best], to_real(config, s.mean), s.sigma, result.best_fitness};
    if (opt.on_generation) opt.on_generation(rec);
    result.records.push_back(std::move(rec));
  }
  return result;
}

}  // namespace origami
