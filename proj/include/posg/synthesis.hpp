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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "posg/detail/responder.hpp"
#include "posg/error.hpp"
#include "posg/json_io.hpp"
#include "posg/model.hpp"
#include "posg/random.hpp"
#include "posg/strategy.hpp"
#include "posg/valuation.hpp"

namespace posg {

enum class BestResponseMethod { kAuto, kEnumeration, kLocalSearch };

inline std::string_view MethodName(BestResponseMethod m) {
  switch (m) {
    case BestResponseMethod::kAuto: return "auto";
    case BestResponseMethod::kEnumeration: return "enumeration";
    case BestResponseMethod::kLocalSearch: return "local_search";
  }
  return "auto";
}

using InnerConfig = detail::InnerSearchConfig;

struct SynthesisConfig {
  std::size_t memory_circle = 1;
  std::size_t memory_square = 1;
  ObjectiveKind objective = ObjectiveKind::kReachProbability;
  double gamma = kDefaultDiscount;
  std::size_t outer_iterations = 50;
  std::size_t restarts = 16;
  InnerConfig inner;
  double epsilon = 1e-4;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  BestResponseMethod method = BestResponseMethod::kAuto;
  // kAuto also enumerates when the deterministic strategy count is this small.
  double auto_enumeration_cap = 4096;
  double enumeration_cap = kDefaultEnumerationCap;
  // Directory for memoized product games; empty disables the cache.
  std::string cache_dir;
};

inline void CheckConfig(const SynthesisConfig& config) {
  if (config.memory_circle == 0 || config.memory_square == 0)
    throw Error(ErrorCode::kInvalidArgument, "memory bounds must be >= 1");
  if (!(config.epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (config.outer_iterations == 0)
    throw Error(ErrorCode::kInvalidArgument, "outer_iterations must be >= 1");
  CheckDiscount(config.gamma);
}

struct BestResponseResult {
  FiniteStateStrategy strategy;
  double value = 0.0;  // value of the profile (fixed, strategy)
  BestResponseMethod method = BestResponseMethod::kLocalSearch;
};

struct SynthesisResult {
  FiniteStateStrategy circle_strategy;
  FiniteStateStrategy last_adversary;
  double guaranteed_value = 0.0;
  double gap = 0.0;
  std::size_t iterations_used = 0;
  bool converged = false;
};

// +1 when `player` wants larger values of the objective.
inline double Orientation(Player player, ObjectiveKind objective) {
  const bool circle_maximizes = objective == ObjectiveKind::kReachProbability;
  return (player == Player::kCircle) == circle_maximizes ? 1.0 : -1.0;
}

// ---------------------------------------------------------------------------
// Product game cache: canonical JSON of (game, fixed strategy) hashed with
// FNV-1a 64 names the file <dir>/product-<hash>.json.

inline std::uint64_t Fnv1a64(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

inline json ProductToJson(const ProductGame& product) {
  json origin = json::array();
  for (const auto& [s, n] : product.origin) origin.push_back({s.value, n});
  return {{"game", GameToJson(product.game)},
          {"fixed_owner", std::string(PlayerName(product.fixed_owner))},
          {"forced_action", product.forced_action.value},
          {"origin", origin}};
}

inline ProductGame ProductFromJson(const json& doc) {
  ProductGame p;
  p.game = GameFromJson(doc.at("game"));
  p.fixed_owner = *ParsePlayer(doc.at("fixed_owner").get<std::string>());
  p.forced_action = ActionId(doc.at("forced_action").get<std::size_t>());
  for (const json& o : doc.at("origin"))
    p.origin.emplace_back(StateId(o.at(0).get<std::size_t>()), o.at(1).get<std::size_t>());
  return p;
}

inline ProductGame CachedProductGame(const Posg& game, const FiniteStateStrategy& fixed,
                                     const std::string& cache_dir) {
  if (cache_dir.empty()) return BuildProductGame(game, fixed);
  const std::string key = CanonicalDump(GameToJson(game)) + "\n" + CanonicalDump(StrategyToJson(fixed));
  char name[64];
  std::snprintf(name, sizeof(name), "product-%016llx.json",
                static_cast<unsigned long long>(Fnv1a64(key)));
  const std::filesystem::path path = std::filesystem::path(cache_dir) / name;
  std::error_code ec;
  if (std::filesystem::exists(path, ec)) {
    try {
      return ProductFromJson(LoadJsonFile(path.string()));
    } catch (const std::exception&) {
      // Unreadable entries are rebuilt below.
    }
  }
  ProductGame product = BuildProductGame(game, fixed);
  std::filesystem::create_directories(cache_dir, ec);
  try {
    WriteFile(path.string(), CanonicalDump(ProductToJson(product)));
  } catch (const Error&) {
  }
  return product;
}

namespace detail {

enum SeedRole : std::uint64_t { kDefenderRole = 0, kAdversaryRole = 1, kStandaloneRole = 2 };

// Restart r of outer iteration t: DeriveSeed(master_seed, {t, r, role}).
inline std::uint64_t RestartSeed(std::uint64_t master, std::size_t t, std::size_t r, SeedRole role) {
  return DeriveSeed(master, {static_cast<std::uint64_t>(t), static_cast<std::uint64_t>(r),
                             static_cast<std::uint64_t>(role)});
}

// Runs the configured search for one responder against every problem in
// `set`. Restart 0 starts from uniform logits, restarts 1..R from random
// logits, and an optional warm start comes last.
inline SearchCandidate OptimizeResponder(const SearchSet& set, const SynthesisConfig& config,
                                         std::size_t outer, SeedRole role,
                                         const std::optional<Logits>& warm,
                                         BestResponseMethod* used) {
  const ResponderLayout& layout = *set.layout;
  const double count = DeterministicCount(layout);
  const bool want_enum =
      config.method == BestResponseMethod::kEnumeration ||
      (config.method == BestResponseMethod::kAuto && count <= config.auto_enumeration_cap);
  const bool want_local = config.method != BestResponseMethod::kEnumeration;
  if (config.method == BestResponseMethod::kEnumeration && count > config.enumeration_cap)
    throw Error(ErrorCode::kEnumerationTooLarge,
                std::to_string(count) + " deterministic strategies exceed the cap");

  SearchCandidate best;
  if (want_local) {
    std::vector<Logits> starts;
    starts.push_back(ZeroLogits(layout));
    for (std::size_t r = 1; r <= config.restarts; ++r)
      starts.push_back(RandomLogits(layout, RestartSeed(config.master_seed, outer, r, role)));
    if (warm) starts.push_back(*warm);
    std::vector<SearchCandidate> results(starts.size());
    ParallelFor(starts.size(), config.threads,
                [&](std::size_t i) { results[i] = RunLocalSearch(set, starts[i], config.inner); });
    // Reduction by value, ties to the lowest restart index.
    for (SearchCandidate& c : results)
      if (best.values.empty() || Improves(c.score, best.score)) best = std::move(c);
    if (used) *used = BestResponseMethod::kLocalSearch;
  }
  if (want_enum) {
    SearchCandidate e = EnumerateBest(set);
    if (best.values.empty() || !Improves(best.score, e.score)) {
      best = std::move(e);
      if (used) *used = BestResponseMethod::kEnumeration;
    }
  }
  return best;
}

inline BestResponseResult BestResponseImpl(const Posg& game, const GameIndex& index,
                                           const FiniteStateStrategy& fixed, std::size_t memory,
                                           const SynthesisConfig& config, std::size_t outer,
                                           SeedRole role) {
  const Player responder = Opponent(fixed.owner);
  const ProductGame product = CachedProductGame(game, fixed, config.cache_dir);
  const ResponderLayout layout(index, responder, memory);
  const CompiledProblem problem = Compile(product.game, layout);
  SearchSet set{&layout, {&problem}, config.objective, config.gamma,
                Orientation(responder, config.objective)};
  BestResponseResult out;
  const SearchCandidate best = OptimizeResponder(set, config, outer, role, std::nullopt, &out.method);
  out.strategy = ToStrategy(layout, best.policy);
  out.value = best.values.front();
  return out;
}

}  // namespace detail

// Best response of the opponent of `fixed.owner` with `responder_memory`
// nodes. Reach probability: Circle maximizes, Square minimizes; cost: the
// reverse.
inline BestResponseResult BestResponse(const Posg& game, const FiniteStateStrategy& fixed,
                                       std::size_t responder_memory, const SynthesisConfig& config) {
  CheckConfig(config);
  RequireValid(game);
  RequireCompatible(game, fixed, fixed.owner);
  const GameIndex index(game);
  return detail::BestResponseImpl(game, index, fixed, responder_memory, config, 0,
                                  detail::kStandaloneRole);
}

inline double ProfileValue(const Posg& game, const StrategyProfile& profile,
                           ObjectiveKind objective, double gamma) {
  ValuationConfig vc;
  vc.objective = objective;
  vc.gamma = gamma;
  return Evaluate(BuildInducedChain(game, profile), vc).initial_value;
}

// Alternating best response over a growing adversary pool. Each round the
// defender optimizes its worst case over the pool, then a fresh adversary best
// response (and every pool member) is checked against it; the weakest of those
// certifies the defender. The best certified defender is returned.
inline SynthesisResult SolveMinMax(const Posg& game, const SynthesisConfig& config) {
  CheckConfig(config);
  RequireValid(game);
  const GameIndex index(game);
  const detail::ResponderLayout defender_layout(index, Player::kCircle, config.memory_circle);
  const double sign = Orientation(Player::kCircle, config.objective);

  std::vector<FiniteStateStrategy> pool{UniformFss(game, Player::kSquare, config.memory_square)};
  std::vector<std::unique_ptr<detail::CompiledProblem>> problems;
  auto add_to_pool_problems = [&](const FiniteStateStrategy& adversary) {
    const ProductGame product = CachedProductGame(game, adversary, config.cache_dir);
    problems.push_back(
        std::make_unique<detail::CompiledProblem>(detail::Compile(product.game, defender_layout)));
  };
  add_to_pool_problems(pool.front());

  SynthesisResult result;
  double best_certified = -std::numeric_limits<double>::infinity();
  std::optional<detail::Logits> warm;
  for (std::size_t t = 0; t < config.outer_iterations; ++t) {
    detail::SearchSet set{&defender_layout, {}, config.objective, config.gamma, sign};
    for (const auto& p : problems) set.problems.push_back(p.get());
    const detail::SearchCandidate defender =
        detail::OptimizeResponder(set, config, t, detail::kDefenderRole, warm, nullptr);
    warm = defender.logits;
    const FiniteStateStrategy defender_fss = detail::ToStrategy(defender_layout, defender.policy);

    BestResponseResult fresh = detail::BestResponseImpl(game, index, defender_fss, config.memory_square,
                                                        config, t, detail::kAdversaryRole);
    double certified = sign * fresh.value;
    FiniteStateStrategy certifier = fresh.strategy;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const double v = sign * defender.values[j];
      if (v < certified) {
        certified = v;
        certifier = pool[j];
      }
    }
    result.iterations_used = t + 1;
    result.gap = defender.score - certified;
    if (detail::Improves(certified, best_certified) || t == 0) {
      best_certified = certified;
      result.circle_strategy = defender_fss;
      result.last_adversary = certifier;
    }
    if (result.gap < config.epsilon) {
      result.converged = true;
      break;
    }
    pool.push_back(fresh.strategy);
    add_to_pool_problems(fresh.strategy);
  }
  result.guaranteed_value = ProfileValue(
      game, {result.circle_strategy, result.last_adversary}, config.objective, config.gamma);
  return result;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle over deterministic strategies (independent of the search
// code above: enumeration plus the public chain and evaluation path).

struct ExhaustiveResult {
  double value = 0.0;
  StrategyProfile profile;
};

inline constexpr double kDefaultPairCap = 1e5;

inline ExhaustiveResult ExhaustiveMinMax(const Posg& game, std::size_t memory_circle,
                                         std::size_t memory_square,
                                         ObjectiveKind objective = ObjectiveKind::kReachProbability,
                                         double gamma = kDefaultDiscount,
                                         double pair_cap = kDefaultPairCap) {
  RequireValid(game);
  DeterministicFssEnumerator circles(game, Player::kCircle, memory_circle, pair_cap);
  DeterministicFssEnumerator squares_probe(game, Player::kSquare, memory_square, pair_cap);
  if (circles.count() * squares_probe.count() > pair_cap)
    throw Error(ErrorCode::kEnumerationTooLarge,
                std::to_string(circles.count() * squares_probe.count()) +
                    " strategy pairs exceed the cap of " + std::to_string(pair_cap));
  const std::vector<FiniteStateStrategy> squares =
      EnumerateDeterministicFss(game, Player::kSquare, memory_square, pair_cap);
  const double sign = Orientation(Player::kCircle, objective);

  ExhaustiveResult best;
  bool have = false;
  double best_score = 0.0;
  while (auto circle = circles.next()) {
    bool inner_have = false;
    double worst = 0.0;
    const FiniteStateStrategy* worst_square = nullptr;
    for (const FiniteStateStrategy& square : squares) {
      const double v = sign * ProfileValue(game, {*circle, square}, objective, gamma);
      if (!inner_have || v < worst) {
        worst = v;
        worst_square = &square;
        inner_have = true;
      }
    }
    if (!have || worst > best_score) {
      best_score = worst;
      best.profile = {*circle, *worst_square};
      have = true;
    }
  }
  best.value = sign * best_score;
  return best;
}

// ---------------------------------------------------------------------------

inline json ConfigToJson(const SynthesisConfig& c) {
  return {{"memory_circle", c.memory_circle},
          {"memory_square", c.memory_square},
          {"objective", c.objective == ObjectiveKind::kReachProbability ? "probability" : "cost"},
          {"gamma", c.gamma},
          {"outer_iterations", c.outer_iterations},
          {"restarts", c.restarts},
          {"max_inner_iterations", c.inner.max_iterations},
          {"initial_step", c.inner.initial_step},
          {"inner_tolerance", c.inner.tolerance},
          {"patience", c.inner.patience},
          {"epsilon", c.epsilon},
          {"seed", c.master_seed},
          {"method", std::string(MethodName(c.method))}};
}

inline json ResultToJson(const SynthesisResult& r, const SynthesisConfig& config) {
  return {{"guaranteed_value", r.guaranteed_value},
          {"gap", r.gap},
          {"converged", r.converged},
          {"iterations_used", r.iterations_used},
          {"circle_strategy", StrategyToJson(r.circle_strategy)},
          {"last_adversary", StrategyToJson(r.last_adversary)},
          {"config_echo", ConfigToJson(config)}};
}

}  // namespace posg
