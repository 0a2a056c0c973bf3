// Copyright 2026 The posg-synth Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posg/error.hpp"
#include "posg/random.hpp"
#include "posg/strategy.hpp"

namespace posg {

enum class ObjectiveKind { kDiscountedCost, kReachProbability };
enum class SolveMethod { kLinearSolve, kFixedPointIteration };

inline constexpr double kDefaultDiscount = 0.95;

struct ValuationConfig {
  ObjectiveKind objective = ObjectiveKind::kReachProbability;
  double gamma = kDefaultDiscount;  // ignored for reach probability
  SolveMethod method = SolveMethod::kLinearSolve;
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
};

inline void CheckDiscount(double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0))
    throw Error(ErrorCode::kInvalidArgument, "discount must be < 1 and >= 0");
}

inline void CheckConfig(const ValuationConfig& config) {
  if (config.objective == ObjectiveKind::kDiscountedCost) CheckDiscount(config.gamma);
  if (!(config.tolerance > 0.0))
    throw Error(ErrorCode::kInvalidArgument, "tolerance must be positive");
}

struct ValueVector {
  std::vector<double> values;  // indexed by chain tuple id
  double initial_value = 0.0;
};

namespace detail {

// Row-compressed chain used by every solver path.
struct SparseChain {
  std::size_t size = 0;
  std::vector<std::size_t> row_start{0};
  std::vector<std::size_t> column;
  std::vector<double> probability;
  std::vector<double> cost;
  std::vector<char> target;

  void push(std::size_t col, double p) {
    column.push_back(col);
    probability.push_back(p);
  }
  void end_row(double step_cost, bool is_target) {
    row_start.push_back(column.size());
    cost.push_back(step_cost);
    target.push_back(is_target ? 1 : 0);
    ++size;
  }
};

inline SparseChain Compress(const InducedChain& chain) {
  SparseChain out;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    for (const auto& e : chain.transitions[i]) out.push(e.key, e.probability);
    out.end_row(chain.step_cost[i], chain.target[i] != 0);
  }
  return out;
}

// Unknowns of the linear system and the constant values of everything else.
struct FreeSet {
  std::vector<std::size_t> free_index;  // tuple -> unknown index or npos
  std::vector<std::size_t> free_tuples;
  std::vector<double> fixed_value;
};

inline constexpr std::size_t kNpos = static_cast<std::size_t>(-1);

// Tuples that reach a target with positive probability.
inline std::vector<char> CanReachTarget(const SparseChain& chain) {
  std::vector<std::vector<std::size_t>> reverse(chain.size);
  for (std::size_t i = 0; i < chain.size; ++i)
    for (std::size_t k = chain.row_start[i]; k < chain.row_start[i + 1]; ++k)
      if (chain.probability[k] > 0.0) reverse[chain.column[k]].push_back(i);
  std::vector<char> good(chain.size, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < chain.size; ++i)
    if (chain.target[i]) {
      good[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const std::size_t j = stack.back();
    stack.pop_back();
    for (std::size_t i : reverse[j])
      if (!good[i]) {
        good[i] = 1;
        stack.push_back(i);
      }
  }
  return good;
}

inline FreeSet Partition(const SparseChain& chain, ObjectiveKind objective) {
  FreeSet set;
  set.free_index.assign(chain.size, kNpos);
  set.fixed_value.assign(chain.size, 0.0);
  if (objective == ObjectiveKind::kReachProbability) {
    const auto good = CanReachTarget(chain);
    for (std::size_t i = 0; i < chain.size; ++i) {
      if (chain.target[i]) {
        set.fixed_value[i] = 1.0;
      } else if (good[i]) {
        set.free_index[i] = set.free_tuples.size();
        set.free_tuples.push_back(i);
      }
    }
  } else {
    for (std::size_t i = 0; i < chain.size; ++i)
      if (!chain.target[i]) {
        set.free_index[i] = set.free_tuples.size();
        set.free_tuples.push_back(i);
      }
  }
  return set;
}

inline void CheckClosedTarget(const SparseChain& chain) {
  for (std::size_t i = 0; i < chain.size; ++i) {
    if (!chain.target[i]) continue;
    for (std::size_t k = chain.row_start[i]; k < chain.row_start[i + 1]; ++k)
      if (chain.probability[k] > 0.0 && !chain.target[chain.column[k]])
        throw Error(ErrorCode::kNonAbsorbingTarget,
                    "target tuple " + std::to_string(i) + " leaves the target set");
  }
}

// Solution of v = c + g P v on the free set with the fixed values held, plus
// optionally the adjoint l solving (I - g P_FF)^T l = e_initial.
struct LinearSolution {
  std::vector<double> values;
  std::vector<double> adjoint;  // indexed by tuple; zero off the free set
};

inline LinearSolution SolveLinear(const SparseChain& chain, ObjectiveKind objective,
                                  double gamma, std::optional<std::size_t> adjoint_for) {
  const double g = objective == ObjectiveKind::kReachProbability ? 1.0 : gamma;
  const bool with_cost = objective == ObjectiveKind::kDiscountedCost;
  const FreeSet set = Partition(chain, objective);
  const std::size_t m = set.free_tuples.size();

  LinearSolution out;
  out.values = set.fixed_value;
  if (adjoint_for) out.adjoint.assign(chain.size, 0.0);
  if (m == 0) return out;

  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(chain.column.size() + m);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(m));
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t i = set.free_tuples[r];
    double b = with_cost ? chain.cost[i] : 0.0;
    double diagonal = 1.0;
    for (std::size_t k = chain.row_start[i]; k < chain.row_start[i + 1]; ++k) {
      const std::size_t j = chain.column[k];
      const double w = g * chain.probability[k];
      const std::size_t c = set.free_index[j];
      if (c == kNpos) {
        b += w * set.fixed_value[j];
      } else if (c == r) {
        diagonal -= w;
      } else {
        triplets.emplace_back(static_cast<int>(r), static_cast<int>(c), -w);
      }
    }
    triplets.emplace_back(static_cast<int>(r), static_cast<int>(r), diagonal);
    rhs[static_cast<Eigen::Index>(r)] = b;
  }
  Eigen::SparseMatrix<double> a(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  a.setFromTriplets(triplets.begin(), triplets.end());
  a.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
  lu.compute(a);
  if (lu.info() != Eigen::Success)
    throw Error(ErrorCode::kSolverDivergence, "linear system is singular");
  const Eigen::VectorXd x = lu.solve(rhs);
  for (std::size_t r = 0; r < m; ++r) out.values[set.free_tuples[r]] = x[static_cast<Eigen::Index>(r)];

  if (adjoint_for && set.free_index[*adjoint_for] != kNpos) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    e[static_cast<Eigen::Index>(set.free_index[*adjoint_for])] = 1.0;
    const Eigen::VectorXd l = lu.transpose().solve(e);
    for (std::size_t r = 0; r < m; ++r)
      out.adjoint[set.free_tuples[r]] = l[static_cast<Eigen::Index>(r)];
  }
  return out;
}

inline std::vector<double> SolveIterative(const SparseChain& chain, ObjectiveKind objective,
                                          double gamma, double tolerance,
                                          std::size_t max_iterations) {
  const bool probability = objective == ObjectiveKind::kReachProbability;
  const double g = probability ? 1.0 : gamma;
  const FreeSet set = Partition(chain, objective);
  auto sweep = [&](const std::vector<double>& v, std::vector<double>& next) {
    double delta = 0.0;
    for (std::size_t i : set.free_tuples) {
      double x = probability ? 0.0 : chain.cost[i];
      for (std::size_t k = chain.row_start[i]; k < chain.row_start[i + 1]; ++k)
        x += g * chain.probability[k] * v[chain.column[k]];
      delta = std::max(delta, std::abs(x - v[i]));
      next[i] = x;
    }
    return delta;
  };

  if (!probability) {
    // Contraction with modulus gamma: stop once the a-posteriori bound is met.
    std::vector<double> v = set.fixed_value, next = v;
    for (std::size_t it = 0; it < max_iterations; ++it) {
      const double delta = sweep(v, next);
      std::swap(v, next);
      if (delta <= tolerance && delta * g / (1.0 - g) <= tolerance) return v;
    }
  } else {
    // Interval iteration: bounds from below (0) and above (1) close in on the
    // unique fixed point of the restricted system.
    std::vector<double> lo = set.fixed_value, hi = lo;
    for (std::size_t i : set.free_tuples) hi[i] = 1.0;
    std::vector<double> lo_next = lo, hi_next = hi;
    for (std::size_t it = 0; it < max_iterations; ++it) {
      sweep(lo, lo_next);
      sweep(hi, hi_next);
      std::swap(lo, lo_next);
      std::swap(hi, hi_next);
      double width = 0.0;
      for (std::size_t i : set.free_tuples) width = std::max(width, hi[i] - lo[i]);
      if (width <= tolerance) {
        for (std::size_t i : set.free_tuples) lo[i] = 0.5 * (lo[i] + hi[i]);
        return lo;
      }
    }
  }
  throw Error(ErrorCode::kSolverDivergence,
              "fixed-point iteration hit the cap of " + std::to_string(max_iterations) +
                  " iterations");
}

}  // namespace detail

inline ValueVector Evaluate(const InducedChain& chain, const ValuationConfig& config = {}) {
  CheckConfig(config);
  const detail::SparseChain sparse = detail::Compress(chain);
  if (config.objective == ObjectiveKind::kReachProbability) detail::CheckClosedTarget(sparse);
  ValueVector out;
  if (config.method == SolveMethod::kLinearSolve) {
    out.values = detail::SolveLinear(sparse, config.objective, config.gamma, std::nullopt).values;
  } else {
    out.values = detail::SolveIterative(sparse, config.objective, config.gamma,
                                        config.tolerance, config.max_iterations);
  }
  // Clip rounding noise back into the provable range.
  for (double& v : out.values) {
    v = std::max(v, 0.0);
    if (config.objective == ObjectiveKind::kReachProbability) v = std::min(v, 1.0);
  }
  out.initial_value = out.values.at(chain.initial);
  return out;
}

// Sup-norm defect of the one-step Bellman equations, target pins included.
inline double BellmanResidual(const InducedChain& chain, const ValueVector& values,
                              const ValuationConfig& config = {}) {
  if (values.values.size() != chain.size())
    throw Error(ErrorCode::kDimensionMismatch,
                "value vector has " + std::to_string(values.values.size()) +
                    " entries for a chain of " + std::to_string(chain.size()));
  const bool probability = config.objective == ObjectiveKind::kReachProbability;
  const double g = probability ? 1.0 : config.gamma;
  double residual = 0.0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    double expected;
    if (chain.target[i]) {
      expected = probability ? 1.0 : 0.0;
    } else {
      expected = probability ? 0.0 : chain.step_cost[i];
      for (const auto& e : chain.transitions[i])
        expected += g * e.probability * values.values[e.key];
    }
    residual = std::max(residual, std::abs(values.values[i] - expected));
  }
  return residual;
}

// ---------------------------------------------------------------------------
// Simulation

struct TraceStep {
  std::size_t step = 0;
  ChainTuple tuple;
  ActionId action;
  double cost = 0.0;
  double cumulative = 0.0;
  std::size_t next_tuple = 0;
};

struct Episode {
  std::vector<TraceStep> trace;
  bool reached_target = false;
  double total_cost = 0.0;
  double discounted_cost = 0.0;
};

struct SimulationOptions {
  double gamma = kDefaultDiscount;
  // Ends an episode early in a non-target tuple that loops to itself surely,
  // or once neither a target nor a positive cost is reachable.
  bool stop_at_absorbing = true;
  // Also ends it once no target is reachable. Exact for reach frequencies;
  // cost totals then stop accruing early.
  bool stop_when_unreachable = false;
};

namespace detail {

template <typename Key>
const typename Distribution<Key>::Entry& Sample(const Distribution<Key>& dist, double u) {
  double acc = 0.0;
  for (const auto& e : dist) {
    acc += e.probability;
    if (u < acc) return e;
  }
  return dist.entries().back();
}

}  // namespace detail

// One episode drawn from the chain. For a given seed the trace is fixed: the
// stream is std::mt19937_64(seed) and each step consumes two uniforms (action,
// then successor).
namespace detail {

// Tuples from which no target and no positive cost is reachable. Nothing an
// episode reports can change once it enters one. With `ignore_cost` only the
// target counts.
inline std::vector<char> InertTuples(const InducedChain& chain, bool ignore_cost = false) {
  const std::size_t n = chain.size();
  std::vector<std::vector<std::size_t>> preds(n);
  for (std::size_t i = 0; i < n; ++i)
    for (const auto& e : chain.transitions[i]) preds[e.key].push_back(i);
  std::vector<char> live(n, 0);
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < n; ++i)
    if (chain.target[i] || (!ignore_cost && chain.step_cost[i] > 0.0)) {
      live[i] = 1;
      stack.push_back(i);
    }
  while (!stack.empty()) {
    const std::size_t t = stack.back();
    stack.pop_back();
    for (std::size_t p : preds[t])
      if (!live[p]) {
        live[p] = 1;
        stack.push_back(p);
      }
  }
  std::vector<char> inert(n);
  for (std::size_t i = 0; i < n; ++i) inert[i] = !live[i];
  return inert;
}

inline std::vector<char> StoppingSet(const InducedChain& chain, const SimulationOptions& options) {
  if (options.stop_when_unreachable) return InertTuples(chain, true);
  if (options.stop_at_absorbing) return InertTuples(chain);
  return std::vector<char>(chain.size(), 0);
}

inline Episode SimulateWith(const InducedChain& chain, const std::vector<char>& inert,
                            std::uint64_t seed, std::size_t horizon,
                            const SimulationOptions& options) {
  if (horizon == 0) throw Error(ErrorCode::kInvalidArgument, "horizon must be >= 1");
  Rng rng(seed);
  Episode episode;
  std::size_t current = chain.initial;
  double discount = 1.0;
  for (std::size_t step = 0; step < horizon; ++step) {
    if (chain.target[current]) break;
    const auto& row = chain.transitions[current];
    if (inert[current] ||
        (options.stop_at_absorbing && row.size() == 1 && row.entries()[0].key == current))
      break;
    const auto& branches = chain.branches[current];
    const double u_action = rng.uniform();
    const double u_next = rng.uniform();
    double acc = 0.0;
    const ChainBranch* chosen = &branches.back();
    for (const ChainBranch& b : branches) {
      acc += b.probability;
      if (u_action < acc) {
        chosen = &b;
        break;
      }
    }
    const std::size_t next = detail::Sample(chosen->successors, u_next).key;
    episode.total_cost += chosen->cost;
    episode.discounted_cost += discount * chosen->cost;
    discount *= options.gamma;
    episode.trace.push_back(
        {step, chain.tuples[current], chosen->action, chosen->cost, episode.total_cost, next});
    current = next;
  }
  episode.reached_target = chain.target[current] != 0;
  return episode;
}

}  // namespace detail

inline Episode Simulate(const InducedChain& chain, std::uint64_t seed, std::size_t horizon,
                        const SimulationOptions& options = {}) {
  const std::vector<char> inert = detail::StoppingSet(chain, options);
  return detail::SimulateWith(chain, inert, seed, horizon, options);
}

inline std::uint64_t EpisodeSeed(std::uint64_t seed, std::size_t episode) {
  return DeriveSeed(seed, {static_cast<std::uint64_t>(episode)});
}

struct SimulationSummary {
  std::size_t episodes = 0;
  std::size_t reached = 0;
  double reach_frequency = 0.0;
  double reach_standard_error = 0.0;
  double mean_cost = 0.0;
  double mean_discounted_cost = 0.0;
};

// Episode e uses EpisodeSeed(seed, e). `on_episode` sees every episode.
template <typename Callback>
SimulationSummary SimulateMany(const InducedChain& chain, std::uint64_t seed,
                               std::size_t episodes, std::size_t horizon,
                               const SimulationOptions& options, Callback&& on_episode) {
  const std::vector<char> inert = detail::StoppingSet(chain, options);
  SimulationSummary summary;
  summary.episodes = episodes;
  for (std::size_t e = 0; e < episodes; ++e) {
    Episode ep = detail::SimulateWith(chain, inert, EpisodeSeed(seed, e), horizon, options);
    summary.reached += ep.reached_target ? 1 : 0;
    summary.mean_cost += ep.total_cost;
    summary.mean_discounted_cost += ep.discounted_cost;
    on_episode(e, ep);
  }
  if (episodes > 0) {
    const double n = static_cast<double>(episodes);
    summary.reach_frequency = static_cast<double>(summary.reached) / n;
    summary.reach_standard_error =
        std::sqrt(summary.reach_frequency * (1.0 - summary.reach_frequency) / n);
    summary.mean_cost /= n;
    summary.mean_discounted_cost /= n;
  }
  return summary;
}

inline SimulationSummary SimulateMany(const InducedChain& chain, std::uint64_t seed,
                                      std::size_t episodes, std::size_t horizon,
                                      const SimulationOptions& options = {}) {
  return SimulateMany(chain, seed, episodes, horizon, options,
                      [](std::size_t, const Episode&) {});
}

}  // namespace posg
