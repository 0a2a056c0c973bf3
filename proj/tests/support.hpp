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

// Shared generators and small fixture builders for the test binaries.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "posg/posg.hpp"

namespace posg::testing {

inline std::string FixturePath(const std::string& name) {
  return std::string(POSG_FIXTURE_DIR) + "/" + name;
}

using Engine = std::mt19937_64;

inline double U01(Engine& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
inline std::size_t Pick(Engine& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Random positive weights normalized to one; the last entry absorbs rounding.
inline std::vector<double> RandomSimplex(Engine& rng, std::size_t n) {
  std::vector<double> w(n);
  double total = 0.0;
  for (double& x : w) {
    x = -std::log(1.0 - U01(rng)) + 1e-3;
    total += x;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    w[i] /= total;
    acc += w[i];
  }
  w[n - 1] = 1.0 - acc;
  return w;
}

struct RandomGameOptions {
  std::size_t min_states = 2;
  std::size_t max_states = 20;
  std::size_t max_actions_per_class = 3;
  std::size_t max_support = 3;
  bool absorbing_target = true;
};

// Valid random POSG. Each (player, observation) class has a fixed action set
// drawn from that player's id range, so observation-based strategies apply.
inline Posg RandomGame(Engine& rng, const RandomGameOptions& opt = {}) {
  const std::size_t n = Pick(rng, opt.min_states, opt.max_states);
  const std::size_t zc = Pick(rng, 1, std::max<std::size_t>(1, n / 2));
  const std::size_t zs = Pick(rng, 1, std::max<std::size_t>(1, n / 2));
  const std::size_t ac = Pick(rng, 1, opt.max_actions_per_class + 1);
  const std::size_t as = Pick(rng, 1, opt.max_actions_per_class + 1);

  auto class_actions = [&](std::size_t base, std::size_t range, std::size_t classes) {
    std::vector<std::vector<std::size_t>> out(classes);
    for (auto& set : out) {
      std::vector<std::size_t> all(range);
      for (std::size_t i = 0; i < range; ++i) all[i] = base + i;
      std::shuffle(all.begin(), all.end(), rng);
      all.resize(Pick(rng, 1, std::min(range, opt.max_actions_per_class)));
      std::sort(all.begin(), all.end());
      set = all;
    }
    return out;
  };
  const auto circle_sets = class_actions(0, ac, zc);
  const auto square_sets = class_actions(ac, as, zs);

  Posg g;
  std::vector<char> is_target(n, 0);
  const std::size_t targets = Pick(rng, 1, std::max<std::size_t>(1, n / 4));
  for (std::size_t t = 0; t < targets; ++t) is_target[Pick(rng, 0, n - 1)] = 1;
  for (std::size_t i = 0; i < n; ++i) {
    StateSpec s;
    s.id = StateId(i);
    s.player = U01(rng) < 0.5 ? Player::kCircle : Player::kSquare;
    s.observation_circle = ObservationId(Pick(rng, 0, zc - 1));
    s.observation_square = ObservationId(Pick(rng, 0, zs - 1));
    const auto& set = s.player == Player::kCircle ? circle_sets[s.observation_circle.value]
                                                  : square_sets[s.observation_square.value];
    for (std::size_t a : set) {
      ActionSpec spec;
      spec.id = ActionId(a);
      spec.cost = std::round(U01(rng) * 8.0) / 4.0;
      if (is_target[i] && opt.absorbing_target) {
        spec.transitions.add(StateId(i), 1.0);
      } else {
        std::vector<std::size_t> succ(n);
        for (std::size_t j = 0; j < n; ++j) succ[j] = j;
        std::shuffle(succ.begin(), succ.end(), rng);
        succ.resize(Pick(rng, 1, std::min(n, opt.max_support)));
        std::sort(succ.begin(), succ.end());
        const auto w = RandomSimplex(rng, succ.size());
        for (std::size_t j = 0; j < succ.size(); ++j) spec.transitions.add(StateId(succ[j]), w[j]);
      }
      s.actions.push_back(std::move(spec));
    }
    g.states.push_back(std::move(s));
  }
  g.initial = StateId(0);
  for (std::size_t i = 0; i < n; ++i)
    if (is_target[i]) g.target.push_back(StateId(i));
  // Declared observation counts keep every class id in range.
  for (std::size_t z = 0; z < zc; ++z) g.observation_names_circle.push_back("c" + std::to_string(z));
  for (std::size_t z = 0; z < zs; ++z) g.observation_names_square.push_back("s" + std::to_string(z));
  return g;
}

// Random valid k-node strategy for `owner`; deterministic rows when asked.
inline FiniteStateStrategy RandomFss(Engine& rng, const Posg& game, Player owner, std::size_t k,
                                     bool deterministic = false) {
  const GameIndex index(game);
  FiniteStateStrategy f;
  f.owner = owner;
  f.nodes = k;
  f.initial_node = Pick(rng, 0, k - 1);
  for (std::size_t n = 0; n < k; ++n) {
    for (const ObservationClass& cls : index.decision_classes(owner)) {
      Distribution<ActionId> row;
      std::vector<ActionId> support;
      if (deterministic) {
        support.push_back(cls.actions[Pick(rng, 0, cls.actions.size() - 1)]);
        row.add(support[0], 1.0);
      } else {
        const auto w = RandomSimplex(rng, cls.actions.size());
        for (std::size_t i = 0; i < cls.actions.size(); ++i) {
          row.add(cls.actions[i], w[i]);
          support.push_back(cls.actions[i]);
        }
      }
      f.action_map[{n, cls.observation}] = row;
      if (k == 1 && U01(rng) < 0.5) continue;  // implicit stay
      for (ActionId a : support) {
        Distribution<std::size_t> up;
        if (deterministic) {
          up.add(Pick(rng, 0, k - 1), 1.0);
        } else {
          const auto w = RandomSimplex(rng, k);
          for (std::size_t m = 0; m < k; ++m) up.add(m, w[m]);
        }
        f.memory_update[{n, cls.observation, a}] = up;
      }
    }
  }
  return f;
}

inline StrategyProfile RandomProfile(Engine& rng, const Posg& game, std::size_t kc = 0,
                                     std::size_t ks = 0) {
  return {RandomFss(rng, game, Player::kCircle, kc ? kc : Pick(rng, 1, 2)),
          RandomFss(rng, game, Player::kSquare, ks ? ks : Pick(rng, 1, 2))};
}

// ---------------------------------------------------------------------------
// Hand-built games

inline ActionSpec Act(std::size_t id, double cost, std::vector<std::pair<std::size_t, double>> to) {
  ActionSpec a;
  a.id = ActionId(id);
  a.cost = cost;
  for (auto [s, p] : to) a.transitions.add(StateId(s), p);
  return a;
}

inline StateSpec State(std::size_t id, Player p, std::size_t zc, std::size_t zs,
                       std::vector<ActionSpec> actions) {
  StateSpec s;
  s.id = StateId(id);
  s.player = p;
  s.observation_circle = ObservationId(zc);
  s.observation_square = ObservationId(zs);
  s.actions = std::move(actions);
  return s;
}

inline Posg MakeGame(std::vector<StateSpec> states, std::vector<std::size_t> target,
                     std::size_t initial = 0) {
  Posg g;
  g.states = std::move(states);
  g.initial = StateId(initial);
  for (std::size_t t : target) g.target.push_back(StateId(t));
  return g;
}

constexpr Player C = Player::kCircle;
constexpr Player S = Player::kSquare;

// Hidden coin: Square picks heads/tails (actions 2, 3) unseen by Circle, who
// then guesses (actions 0, 1). A match reaches the target (state 3), a
// mismatch the sink (state 4). Reach probability of the zero-sum solution is 1/2.
inline Posg MatchingPennies() {
  return MakeGame({State(0, S, 0, 0, {Act(2, 0, {{1, 1.0}}), Act(3, 0, {{2, 1.0}})}),
                   State(1, C, 1, 1, {Act(0, 0, {{3, 1.0}}), Act(1, 0, {{4, 1.0}})}),
                   State(2, C, 1, 1, {Act(0, 0, {{4, 1.0}}), Act(1, 0, {{3, 1.0}})}),
                   State(3, C, 2, 2, {Act(0, 0, {{3, 1.0}}), Act(1, 0, {{3, 1.0}})}),
                   State(4, C, 2, 2, {Act(0, 0, {{4, 1.0}}), Act(1, 0, {{4, 1.0}})})},
                  {3});
}

// Circle picks a branch (0 / 1); Square then weakens it. Worst cases: 0.3 for
// branch 0, 0.7 for branch 1.
inline Posg TwoBranchGame() {
  return MakeGame({State(0, C, 0, 0, {Act(0, 0, {{1, 1.0}}), Act(1, 0, {{2, 1.0}})}),
                   State(1, S, 1, 0, {Act(2, 0, {{3, 0.3}, {4, 0.7}}), Act(3, 0, {{3, 0.5}, {4, 0.5}})}),
                   State(2, S, 1, 1, {Act(4, 0, {{3, 0.7}, {4, 0.3}}), Act(5, 0, {{3, 0.9}, {4, 0.1}})}),
                   State(3, C, 2, 2, {Act(0, 0, {{3, 1.0}}), Act(1, 0, {{3, 1.0}})}),
                   State(4, C, 2, 2, {Act(0, 0, {{4, 1.0}}), Act(1, 0, {{4, 1.0}})})},
                  {3});
}

// Square's choice changes nothing.
inline Posg IrrelevantAdversaryGame() {
  return MakeGame({State(0, C, 0, 0, {Act(0, 1, {{1, 1.0}}), Act(1, 1, {{2, 0.5}, {4, 0.5}})}),
                   State(1, S, 1, 0, {Act(2, 0, {{2, 0.4}, {3, 0.6}}), Act(3, 0, {{2, 0.4}, {3, 0.6}})}),
                   State(2, C, 1, 1, {Act(0, 1, {{4, 0.8}, {3, 0.2}}), Act(1, 1, {{0, 0.5}, {3, 0.5}})}),
                   State(3, C, 2, 2, {Act(0, 0, {{3, 1.0}}), Act(1, 0, {{3, 1.0}})}),
                   State(4, C, 2, 2, {Act(0, 0, {{4, 1.0}}), Act(1, 0, {{4, 1.0}})})},
                  {4});
}

// Repeated hidden door: a wrong guess returns to the start half the time.
inline Posg HiddenDoorGame() {
  return MakeGame({State(0, S, 0, 0, {Act(2, 0, {{1, 1.0}}), Act(3, 0, {{2, 1.0}})}),
                   State(1, C, 0, 1, {Act(0, 1, {{3, 0.9}, {0, 0.1}}), Act(1, 1, {{0, 0.5}, {4, 0.5}})}),
                   State(2, C, 0, 1, {Act(0, 1, {{0, 0.5}, {4, 0.5}}), Act(1, 1, {{3, 0.6}, {0, 0.4}})}),
                   State(3, C, 1, 2, {Act(0, 0, {{3, 1.0}}), Act(1, 0, {{3, 1.0}})}),
                   State(4, C, 1, 2, {Act(0, 0, {{4, 1.0}}), Act(1, 0, {{4, 1.0}})})},
                  {3});
}

// Circle chooses a safe route (0.6) or a fast one that Square may ambush;
// Square only sees which route was taken, Circle then sees a noisy signal.
inline Posg AmbushGame() {
  return MakeGame(
      {State(0, C, 0, 0, {Act(0, 0, {{5, 0.6}, {6, 0.4}}), Act(1, 0, {{1, 1.0}})}),
       State(1, S, 1, 1, {Act(2, 0, {{2, 1.0}}), Act(3, 0, {{3, 1.0}})}),
       State(2, C, 1, 2, {Act(0, 0, {{5, 0.95}, {6, 0.05}}), Act(1, 0, {{4, 1.0}})}),
       State(3, C, 1, 2, {Act(0, 0, {{5, 0.2}, {6, 0.8}}), Act(1, 0, {{4, 1.0}})}),
       State(4, C, 2, 2, {Act(0, 0, {{5, 0.7}, {6, 0.3}}), Act(1, 0, {{5, 0.5}, {6, 0.5}})}),
       State(5, C, 3, 3, {Act(0, 0, {{5, 1.0}}), Act(1, 0, {{5, 1.0}})}),
       State(6, C, 3, 3, {Act(0, 0, {{6, 1.0}}), Act(1, 0, {{6, 1.0}})})},
      {5});
}

// Six states, both players partially informed, with a Square-owned target.
inline Posg SixStateGame() {
  return MakeGame(
      {State(0, C, 0, 0, {Act(0, 1, {{1, 0.5}, {2, 0.5}}), Act(1, 1, {{2, 1.0}})}),
       State(1, S, 1, 1, {Act(2, 0, {{3, 0.5}, {5, 0.5}}), Act(3, 0, {{0, 0.6}, {4, 0.4}})}),
       State(2, S, 1, 1, {Act(2, 0, {{3, 1.0}}), Act(3, 0, {{5, 0.3}, {4, 0.7}})}),
       State(3, C, 1, 2, {Act(0, 1, {{4, 0.5}, {5, 0.5}}), Act(1, 1, {{0, 1.0}})}),
       State(4, S, 2, 3, {Act(2, 0, {{4, 1.0}}), Act(3, 0, {{4, 1.0}})}),
       State(5, C, 2, 3, {Act(0, 0, {{5, 1.0}}), Act(1, 0, {{5, 1.0}})})},
      {4});
}

struct NamedGame {
  std::string name;
  Posg game;
};

inline std::vector<NamedGame> HandcraftedGames() {
  return {{"matching_pennies", MatchingPennies()}, {"two_branch", TwoBranchGame()},
          {"irrelevant_adversary", IrrelevantAdversaryGame()}, {"hidden_door", HiddenDoorGame()},
          {"ambush", AmbushGame()},
          {"six_state", SixStateGame()}};
}

// Single-row strategy helpers.
inline FiniteStateStrategy Memoryless(Player owner,
                                      std::vector<std::pair<std::size_t, std::vector<std::pair<std::size_t, double>>>> rows) {
  FiniteStateStrategy f;
  f.owner = owner;
  for (auto& [z, dist] : rows) {
    Distribution<ActionId> d;
    for (auto [a, p] : dist) d.add(ActionId(a), p);
    f.action_map[{0, ObservationId(z)}] = d;
  }
  return f;
}

}  // namespace posg::testing
