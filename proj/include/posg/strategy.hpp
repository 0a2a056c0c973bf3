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

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "posg/distribution.hpp"
#include "posg/error.hpp"
#include "posg/model.hpp"

namespace posg {

// Finite-state strategy: memory nodes, an action mapping keyed by
// (node, own observation) and a memory update keyed by
// (node, own observation, own action). Memory update rows are needed only for
// actions in the support of the corresponding action row; a one-node strategy
// may omit them entirely (the update is then the trivial Dirac on node 0).
struct FiniteStateStrategy {
  using ActionKey = std::pair<std::size_t, ObservationId>;
  using UpdateKey = std::tuple<std::size_t, ObservationId, ActionId>;

  Player owner = Player::kCircle;
  std::size_t nodes = 1;
  std::size_t initial_node = 0;
  std::map<ActionKey, Distribution<ActionId>> action_map;
  std::map<UpdateKey, Distribution<std::size_t>> memory_update;

  const Distribution<ActionId>* actions_at(std::size_t node, ObservationId z) const {
    auto it = action_map.find({node, z});
    return it == action_map.end() ? nullptr : &it->second;
  }

  // Falls back to Dirac(0) for one-node strategies.
  const Distribution<std::size_t>* update_at(std::size_t node, ObservationId z,
                                             ActionId a) const {
    auto it = memory_update.find({node, z, a});
    if (it != memory_update.end()) return &it->second;
    if (nodes == 1) {
      static const Distribution<std::size_t> kStay = Distribution<std::size_t>::Dirac(0);
      return &kStay;
    }
    return nullptr;
  }

  friend bool operator==(const FiniteStateStrategy&, const FiniteStateStrategy&) = default;
};

struct StrategyProfile {
  FiniteStateStrategy circle;
  FiniteStateStrategy square;

  const FiniteStateStrategy& of(Player p) const {
    return p == Player::kCircle ? circle : square;
  }
};

inline ValidationReport ValidateFss(const Posg& game, const FiniteStateStrategy& fss) {
  ValidationReport report;
  const GameIndex index(game);
  const Player owner = fss.owner;
  const std::size_t obs_count = ObservationCount(game, owner);
  auto loc = [](std::size_t n, ObservationId z) {
    return "node " + std::to_string(n) + " observation " + std::to_string(z.value);
  };

  if (fss.nodes == 0) {
    report.error("InvalidNodeCount", "nodes", "strategy needs at least one node");
    return report;
  }
  if (fss.initial_node >= fss.nodes)
    report.error("InvalidInitialNode", "initial_node",
                 "initial node " + std::to_string(fss.initial_node) + " out of range");

  std::map<std::size_t, Player> action_owner;
  for (const StateSpec& s : game.states)
    for (const ActionSpec& a : s.actions) action_owner.emplace(a.id.value, s.player);

  for (const auto& [key, dist] : fss.action_map) {
    const auto [node, z] = key;
    const std::string where = loc(node, z);
    if (node >= fss.nodes) {
      report.error("NodeOutOfRange", where, "action row for a nonexistent node");
      continue;
    }
    const std::size_t cls = index.class_index(owner, z);
    if (cls == GameIndex::kNone) {
      if (z.value >= obs_count)
        report.error("DanglingObservation", where, "observation is not declared");
      else
        report.warning("UnusedObservation", where,
                       "owner never decides under this observation");
      continue;
    }
    const auto& available = index.decision_classes(owner)[cls].actions;
    if (!dist.all_positive())
      report.error("InvalidProbability", where, "action probabilities must lie in (0, 1]");
    if (dist.empty() || std::abs(dist.total() - 1.0) > kProbabilityTolerance)
      report.error("DistributionNotNormalized", where,
                   "action probabilities sum to " + std::to_string(dist.total()));
    if (dist.has_duplicates())
      report.error("DuplicateAction", where, "action listed more than once");
    for (const auto& e : dist) {
      auto own = action_owner.find(e.key.value);
      if (own != action_owner.end() && own->second != owner) {
        report.error("WrongOwner", where,
                     "action " + std::to_string(e.key.value) + " belongs to the opponent");
      } else if (!std::binary_search(available.begin(), available.end(), e.key)) {
        report.error("ActionOutsideAvailableSet", where,
                     "action " + std::to_string(e.key.value) +
                         " is not available under this observation");
      }
      if (!(e.probability > 0.0)) continue;
      const auto* update = fss.update_at(node, z, e.key);
      const std::string uwhere = where + " action " + std::to_string(e.key.value);
      if (update == nullptr) {
        report.error("MissingMemoryUpdate", uwhere, "no memory update for a chosen action");
        continue;
      }
      if (!update->is_normalized())
        report.error("DistributionNotNormalized", uwhere,
                     "memory update probabilities sum to " + std::to_string(update->total()));
      if (update->has_duplicates())
        report.error("DuplicateNode", uwhere, "node listed more than once");
      for (const auto& u : *update)
        if (u.key >= fss.nodes)
          report.error("NodeOutOfRange", uwhere,
                       "memory update targets node " + std::to_string(u.key));
    }
  }
  for (const auto& [key, dist] : fss.memory_update)
    if (std::get<0>(key) >= fss.nodes)
      report.error("NodeOutOfRange", loc(std::get<0>(key), std::get<1>(key)),
                   "memory update row for a nonexistent node");

  for (std::size_t n = 0; n < fss.nodes; ++n)
    for (const ObservationClass& c : index.decision_classes(owner))
      if (fss.actions_at(n, c.observation) == nullptr)
        report.error("MissingActionRow", loc(n, c.observation),
                     "no action distribution for a decision observation");
  return report;
}

inline void RequireCompatible(const Posg& game, const FiniteStateStrategy& fss,
                              Player expected_owner) {
  if (fss.owner != expected_owner)
    throw Error(ErrorCode::kIncompatibleStrategy,
                "expected a " + std::string(PlayerName(expected_owner)) + " strategy");
  ValidationReport report = ValidateFss(game, fss);
  if (!report.ok()) throw Error(ErrorCode::kIncompatibleStrategy, report.summary());
}

inline bool IsMemoryless(const FiniteStateStrategy& fss) { return fss.nodes == 1; }

inline bool IsDeterministic(const FiniteStateStrategy& fss) {
  for (const auto& [key, dist] : fss.action_map) {
    if (!dist.is_dirac()) return false;
    const auto* update = fss.update_at(key.first, key.second, dist.entries().front().key);
    if (update != nullptr && !update->is_dirac()) return false;
  }
  return true;
}

// Uniform action choice; memory moves uniformly over all nodes.
inline FiniteStateStrategy UniformFss(const Posg& game, Player owner, std::size_t nodes = 1) {
  const GameIndex index(game);
  FiniteStateStrategy fss;
  fss.owner = owner;
  fss.nodes = nodes;
  std::vector<std::size_t> all_nodes;
  for (std::size_t n = 0; n < nodes; ++n) all_nodes.push_back(n);
  for (std::size_t n = 0; n < nodes; ++n)
    for (const ObservationClass& c : index.decision_classes(owner)) {
      fss.action_map[{n, c.observation}] = Distribution<ActionId>::Uniform(c.actions);
      if (nodes > 1)
        for (ActionId a : c.actions)
          fss.memory_update[{n, c.observation, a}] =
              Distribution<std::size_t>::Uniform(all_nodes);
    }
  return fss;
}

// Adds node `nodes` that is never entered; reachable behaviour is unchanged.
inline FiniteStateStrategy EmbedWithExtraNode(const FiniteStateStrategy& fss) {
  FiniteStateStrategy out = fss;
  const std::size_t fresh = fss.nodes;
  out.nodes = fss.nodes + 1;
  if (fss.nodes == 1) {
    for (const auto& [key, dist] : fss.action_map)
      for (const auto& e : dist)
        out.memory_update.try_emplace({key.first, key.second, e.key},
                                      Distribution<std::size_t>::Dirac(0));
  }
  for (const auto& [key, dist] : fss.action_map) {
    if (key.first != 0) continue;
    out.action_map[{fresh, key.second}] = dist;
    for (const auto& e : dist)
      out.memory_update[{fresh, key.second, e.key}] =
          Distribution<std::size_t>::Dirac(fresh);
  }
  return out;
}

// Conditional next-action distribution after replaying the owner's own
// (observation, action) history through the strategy's memory.
inline Distribution<ActionId> NextActionDistribution(
    const FiniteStateStrategy& fss,
    const std::vector<std::pair<ObservationId, ActionId>>& history,
    ObservationId next_observation) {
  std::vector<double> belief(fss.nodes, 0.0);
  belief.at(fss.initial_node) = 1.0;
  for (const auto& [z, a] : history) {
    std::vector<double> next(fss.nodes, 0.0);
    double mass = 0.0;
    for (std::size_t n = 0; n < fss.nodes; ++n) {
      if (belief[n] == 0.0) continue;
      const auto* row = fss.actions_at(n, z);
      if (row == nullptr) continue;
      const double pa = row->probability(a);
      if (pa == 0.0) continue;
      const auto* update = fss.update_at(n, z, a);
      if (update == nullptr)
        throw Error(ErrorCode::kIncompatibleStrategy, "missing memory update");
      for (const auto& u : *update) {
        next[u.key] += belief[n] * pa * u.probability;
        mass += belief[n] * pa * u.probability;
      }
    }
    if (mass <= 0.0)
      throw Error(ErrorCode::kInvalidPath, "history has probability zero under the strategy");
    for (double& b : next) b /= mass;
    belief = std::move(next);
  }
  std::map<ActionId, double> mix;
  for (std::size_t n = 0; n < fss.nodes; ++n) {
    if (belief[n] == 0.0) continue;
    const auto* row = fss.actions_at(n, next_observation);
    if (row == nullptr)
      throw Error(ErrorCode::kIncompatibleStrategy, "missing action row");
    for (const auto& e : *row) mix[e.key] += belief[n] * e.probability;
  }
  Distribution<ActionId> out;
  for (const auto& [a, p] : mix) out.add(a, p);
  return out;
}

// ---------------------------------------------------------------------------
// Induced Markov chain

struct ChainTuple {
  StateId state;
  std::size_t circle_node = 0;
  std::size_t square_node = 0;

  friend auto operator<=>(const ChainTuple&, const ChainTuple&) = default;
};

// One action of the acting player at a chain tuple.
struct ChainBranch {
  ActionId action;
  double probability = 0.0;
  double cost = 0.0;
  Distribution<std::size_t> successors;  // over tuple ids
};

struct InducedChain {
  std::vector<ChainTuple> tuples;  // tuple id = position; initial tuple is 0
  std::size_t initial = 0;
  std::vector<Distribution<std::size_t>> transitions;
  std::vector<double> step_cost;
  std::vector<char> target;
  std::vector<std::vector<ChainBranch>> branches;

  std::size_t size() const { return tuples.size(); }
};

// Fixing both strategies yields a chain over reachable
// (game state, circle node, square node) tuples. Only the acting player's
// node moves on a step.
inline InducedChain BuildInducedChain(const Posg& game, const StrategyProfile& profile) {
  const GameIndex index(game);
  RequireCompatible(game, profile.circle, Player::kCircle);
  RequireCompatible(game, profile.square, Player::kSquare);

  InducedChain chain;
  std::map<ChainTuple, std::size_t> ids;
  std::deque<std::size_t> frontier;
  auto intern = [&](const ChainTuple& t) {
    auto [it, inserted] = ids.emplace(t, chain.tuples.size());
    if (inserted) {
      chain.tuples.push_back(t);
      frontier.push_back(it->second);
    }
    return it->second;
  };
  intern({game.initial, profile.circle.initial_node, profile.square.initial_node});
  chain.initial = 0;

  while (!frontier.empty()) {
    const std::size_t id = frontier.front();
    frontier.pop_front();
    const ChainTuple tuple = chain.tuples[id];
    const StateSpec& s = game.state(tuple.state);
    const Player actor = s.player;
    const FiniteStateStrategy& fss = profile.of(actor);
    const std::size_t node = actor == Player::kCircle ? tuple.circle_node : tuple.square_node;
    const ObservationId z = s.observation(actor);
    const auto* row = fss.actions_at(node, z);
    if (row == nullptr)
      throw Error(ErrorCode::kIncompatibleStrategy,
                  "no action row at node " + std::to_string(node) + " observation " +
                      std::to_string(z.value));

    std::vector<ChainBranch> branches;
    std::map<std::size_t, double> merged;
    double cost = 0.0;
    for (const auto& choice : *row) {
      if (!(choice.probability > 0.0)) continue;
      const ActionSpec* action = s.find_action(choice.key);
      if (action == nullptr)
        throw Error(ErrorCode::kIncompatibleStrategy,
                    "action " + std::to_string(choice.key.value) +
                        " unavailable at state " + std::to_string(s.id.value));
      const auto* update = fss.update_at(node, z, choice.key);
      if (update == nullptr)
        throw Error(ErrorCode::kIncompatibleStrategy, "missing memory update");
      ChainBranch branch{choice.key, choice.probability, action->cost, {}};
      std::map<std::size_t, double> local;
      for (const auto& next : action->transitions)
        for (const auto& u : *update) {
          ChainTuple succ = tuple;
          succ.state = next.key;
          (actor == Player::kCircle ? succ.circle_node : succ.square_node) = u.key;
          local[intern(succ)] += next.probability * u.probability;
        }
      for (const auto& [t, p] : local) {
        branch.successors.add(t, p);
        merged[t] += choice.probability * p;
      }
      cost += choice.probability * action->cost;
      branches.push_back(std::move(branch));
    }
    Distribution<std::size_t> row_dist;
    for (const auto& [t, p] : merged) row_dist.add(t, p);

    if (chain.transitions.size() <= id) {
      chain.transitions.resize(id + 1);
      chain.step_cost.resize(id + 1);
      chain.branches.resize(id + 1);
    }
    chain.transitions[id] = std::move(row_dist);
    chain.step_cost[id] = cost;
    chain.branches[id] = std::move(branches);
  }
  chain.target.resize(chain.tuples.size());
  for (std::size_t i = 0; i < chain.tuples.size(); ++i)
    chain.target[i] = index.is_target(chain.tuples[i].state) ? 1 : 0;
  return chain;
}

// ---------------------------------------------------------------------------
// Product game: one player's fixed strategy folded into the transitions.

struct ProductGame {
  Posg game;
  Player fixed_owner = Player::kSquare;
  ActionId forced_action;
  // Product state id -> (original state, fixed player's node).
  std::vector<std::pair<StateId, std::size_t>> origin;
};

inline ProductGame BuildProductGame(const Posg& game, const FiniteStateStrategy& fixed) {
  const GameIndex index(game);
  RequireCompatible(game, fixed, fixed.owner);
  const Player owner = fixed.owner;
  const Player responder = Opponent(owner);

  ProductGame product;
  product.fixed_owner = owner;
  std::size_t max_action = 0;
  for (const StateSpec& s : game.states)
    for (const ActionSpec& a : s.actions) max_action = std::max(max_action, a.id.value);
  product.forced_action = ActionId(max_action + 1);

  Posg& out = product.game;
  out.action_names = game.action_names;
  if (!out.action_names.empty()) {
    out.action_names.resize(max_action + 2);
    out.action_names[max_action + 1] = "forced";
  }
  auto names_for = [&](Player p) {
    const auto& src =
        p == Player::kCircle ? game.observation_names_circle : game.observation_names_square;
    if (!src.empty()) return src;
    std::vector<std::string> generated;
    for (std::size_t z = 0; z < ObservationCount(game, p); ++z)
      generated.push_back("z" + std::to_string(z));
    return generated;
  };
  auto& responder_names =
      responder == Player::kCircle ? out.observation_names_circle : out.observation_names_square;
  auto& fixed_names =
      owner == Player::kCircle ? out.observation_names_circle : out.observation_names_square;
  responder_names = names_for(responder);
  fixed_names = {"forced"};

  std::map<std::pair<std::size_t, std::size_t>, std::size_t> ids;
  std::deque<std::size_t> frontier;
  auto intern = [&](StateId s, std::size_t n) {
    auto [it, inserted] = ids.emplace(std::make_pair(s.value, n), product.origin.size());
    if (inserted) {
      product.origin.emplace_back(s, n);
      frontier.push_back(it->second);
    }
    return StateId(it->second);
  };
  out.initial = intern(game.initial, fixed.initial_node);

  std::vector<StateSpec> states;
  while (!frontier.empty()) {
    const std::size_t id = frontier.front();
    frontier.pop_front();
    const auto [sid, node] = product.origin[id];
    const StateSpec& s = game.state(sid);
    StateSpec lifted;
    lifted.id = StateId(id);
    lifted.player = s.player;
    (responder == Player::kCircle ? lifted.observation_circle : lifted.observation_square) =
        s.observation(responder);
    (owner == Player::kCircle ? lifted.observation_circle : lifted.observation_square) =
        ObservationId(0);
    if (s.player == owner) {
      const ObservationId z = s.observation(owner);
      const auto* row = fixed.actions_at(node, z);
      std::map<StateId, double> merged;
      double cost = 0.0;
      for (const auto& choice : *row) {
        const ActionSpec* action = s.find_action(choice.key);
        const auto* update = fixed.update_at(node, z, choice.key);
        cost += choice.probability * action->cost;
        for (const auto& next : action->transitions)
          for (const auto& u : *update)
            merged[intern(next.key, u.key)] += choice.probability * next.probability * u.probability;
      }
      ActionSpec forced{product.forced_action, cost, {}};
      for (const auto& [t, p] : merged) forced.transitions.add(t, p);
      lifted.actions.push_back(std::move(forced));
    } else {
      for (const ActionSpec& a : s.actions) {
        ActionSpec copy{a.id, a.cost, {}};
        for (const auto& next : a.transitions)
          copy.transitions.add(intern(next.key, node), next.probability);
        lifted.actions.push_back(std::move(copy));
      }
    }
    if (states.size() <= id) states.resize(id + 1);
    states[id] = std::move(lifted);
  }
  out.states = std::move(states);
  for (std::size_t i = 0; i < product.origin.size(); ++i)
    if (index.is_target(product.origin[i].first)) out.target.push_back(StateId(i));
  Canonicalize(out);
  return product;
}

// The single-action strategy that plays the forced move of a product game.
inline FiniteStateStrategy ForcedStrategy(const ProductGame& product) {
  FiniteStateStrategy fss;
  fss.owner = product.fixed_owner;
  fss.action_map[{0, ObservationId(0)}] = Distribution<ActionId>::Dirac(product.forced_action);
  return fss;
}

// ---------------------------------------------------------------------------
// Enumeration of deterministic k-node strategies

inline constexpr double kDefaultEnumerationCap = 1e6;

// Yields every deterministic strategy with `nodes` memory states and initial
// node 0, in lexicographic order of the (node, observation) slots; each slot
// ranges over (action index, successor node) with the action as the major key.
class DeterministicFssEnumerator {
 public:
  DeterministicFssEnumerator(const Posg& game, Player player, std::size_t nodes,
                             double cap = kDefaultEnumerationCap)
      : player_(player), nodes_(nodes) {
    if (nodes == 0) throw Error(ErrorCode::kInvalidArgument, "nodes must be >= 1");
    const GameIndex index(game);
    classes_ = index.decision_classes(player);
    for (const ObservationClass& c : classes_)
      if (c.actions.empty())
        throw Error(ErrorCode::kNoAvailableAction,
                    "observation " + std::to_string(c.observation.value) + " has no actions");
    count_ = 1.0;
    for (std::size_t n = 0; n < nodes; ++n)
      for (const ObservationClass& c : classes_) {
        radix_.push_back(c.actions.size() * nodes);
        count_ *= static_cast<double>(c.actions.size() * nodes);
      }
    if (count_ > cap)
      throw Error(ErrorCode::kEnumerationTooLarge,
                  std::to_string(count_) + " strategies exceed the cap of " +
                      std::to_string(cap));
    digits_.assign(radix_.size(), 0);
  }

  double count() const { return count_; }

  std::optional<FiniteStateStrategy> next() {
    if (done_) return std::nullopt;
    FiniteStateStrategy fss = current();
    // Advance the odometer; the last slot moves fastest.
    std::size_t i = digits_.size();
    while (i > 0) {
      --i;
      if (++digits_[i] < radix_[i]) break;
      digits_[i] = 0;
      if (i == 0) done_ = true;
    }
    if (digits_.empty()) done_ = true;
    return fss;
  }

 private:
  FiniteStateStrategy current() const {
    FiniteStateStrategy fss;
    fss.owner = player_;
    fss.nodes = nodes_;
    std::size_t slot = 0;
    for (std::size_t n = 0; n < nodes_; ++n)
      for (const ObservationClass& c : classes_) {
        const std::size_t d = digits_[slot++];
        const ActionId a = c.actions[d / nodes_];
        fss.action_map[{n, c.observation}] = Distribution<ActionId>::Dirac(a);
        fss.memory_update[{n, c.observation, a}] = Distribution<std::size_t>::Dirac(d % nodes_);
      }
    return fss;
  }

  Player player_;
  std::size_t nodes_;
  std::vector<ObservationClass> classes_;
  std::vector<std::size_t> radix_;
  std::vector<std::size_t> digits_;
  double count_ = 0.0;
  bool done_ = false;
};

inline std::vector<FiniteStateStrategy> EnumerateDeterministicFss(
    const Posg& game, Player player, std::size_t nodes, double cap = kDefaultEnumerationCap) {
  DeterministicFssEnumerator it(game, player, nodes, cap);
  std::vector<FiniteStateStrategy> out;
  while (auto fss = it.next()) out.push_back(std::move(*fss));
  return out;
}

}  // namespace posg
