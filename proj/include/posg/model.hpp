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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "posg/distribution.hpp"
#include "posg/error.hpp"

namespace posg {

// Circle is the decision maker, Square the adversary.
enum class Player { kCircle, kSquare };

inline constexpr Player Opponent(Player p) {
  return p == Player::kCircle ? Player::kSquare : Player::kCircle;
}

inline std::string_view PlayerName(Player p) {
  return p == Player::kCircle ? "circle" : "square";
}

inline std::optional<Player> ParsePlayer(std::string_view name) {
  if (name == "circle") return Player::kCircle;
  if (name == "square") return Player::kSquare;
  return std::nullopt;
}

struct ActionSpec {
  ActionId id;
  double cost = 0.0;
  Distribution<StateId> transitions;

  friend bool operator==(const ActionSpec&, const ActionSpec&) = default;
};

struct StateSpec {
  StateId id;
  Player player = Player::kCircle;
  ObservationId observation_circle;
  ObservationId observation_square;
  std::vector<ActionSpec> actions;

  ObservationId observation(Player p) const {
    return p == Player::kCircle ? observation_circle : observation_square;
  }

  const ActionSpec* find_action(ActionId a) const {
    for (const ActionSpec& spec : actions)
      if (spec.id == a) return &spec;
    return nullptr;
  }

  friend bool operator==(const StateSpec&, const StateSpec&) = default;
};

// Two-player turn-based POSG. The owner of a state is the player who acts
// there; both observation maps are total over all states. In canonical form
// `states[i].id == i`, actions within a state are sorted by id and the target
// list is sorted and unique.
struct Posg {
  std::vector<StateSpec> states;
  StateId initial;
  std::vector<StateId> target;
  std::vector<std::string> action_names;
  std::vector<std::string> observation_names_circle;
  std::vector<std::string> observation_names_square;

  std::size_t num_states() const { return states.size(); }
  const StateSpec& state(StateId s) const { return states.at(s.value); }

  friend bool operator==(const Posg&, const Posg&) = default;
};

inline void Canonicalize(Posg& game) {
  std::stable_sort(game.states.begin(), game.states.end(),
                   [](const StateSpec& a, const StateSpec& b) {
                     return a.id < b.id;
                   });
  for (StateSpec& s : game.states) {
    std::stable_sort(s.actions.begin(), s.actions.end(),
                     [](const ActionSpec& a, const ActionSpec& b) {
                       return a.id < b.id;
                     });
    for (ActionSpec& a : s.actions) {
      auto& entries = a.transitions.mutable_entries();
      std::stable_sort(entries.begin(), entries.end(),
                       [](const auto& x, const auto& y) { return x.key < y.key; });
    }
  }
  std::sort(game.target.begin(), game.target.end());
  game.target.erase(std::unique(game.target.begin(), game.target.end()),
                    game.target.end());
}

// ---------------------------------------------------------------------------
// Validation

enum class Severity { kError, kWarning };

struct Finding {
  Severity severity = Severity::kError;
  std::string code;
  std::string location;
  std::string message;
};

struct ValidationReport {
  std::vector<Finding> findings;

  void error(std::string code, std::string location, std::string message) {
    findings.push_back(
        {Severity::kError, std::move(code), std::move(location), std::move(message)});
  }
  void warning(std::string code, std::string location, std::string message) {
    findings.push_back({Severity::kWarning, std::move(code), std::move(location),
                        std::move(message)});
  }

  bool ok() const { return error_count() == 0; }

  std::size_t error_count() const {
    return std::count_if(findings.begin(), findings.end(), [](const Finding& f) {
      return f.severity == Severity::kError;
    });
  }

  bool has(std::string_view code) const {
    return std::any_of(findings.begin(), findings.end(),
                       [&](const Finding& f) { return f.code == code; });
  }

  std::string summary() const {
    std::string out;
    for (const Finding& f : findings) {
      if (!out.empty()) out += "; ";
      out += f.code + " at " + f.location + ": " + f.message;
    }
    return out;
  }

  void merge(const ValidationReport& other) {
    findings.insert(findings.end(), other.findings.begin(), other.findings.end());
  }
};

namespace detail {

inline std::string StateLoc(std::size_t s) { return "state " + std::to_string(s); }
inline std::string ActionLoc(std::size_t s, std::size_t a) {
  return "state " + std::to_string(s) + " action " + std::to_string(a);
}

}  // namespace detail

// Number of observation symbols for `player`: the names table when present,
// otherwise one past the largest id in use.
inline std::size_t ObservationCount(const Posg& game, Player player) {
  const auto& names = player == Player::kCircle ? game.observation_names_circle
                                                : game.observation_names_square;
  if (!names.empty()) return names.size();
  std::size_t count = 0;
  for (const StateSpec& s : game.states)
    count = std::max(count, s.observation(player).value + 1);
  return count;
}

inline std::vector<StateId> ReachableStates(const Posg& game);

inline ValidationReport Validate(const Posg& game) {
  using detail::ActionLoc;
  using detail::StateLoc;
  ValidationReport report;
  const std::size_t n = game.states.size();
  if (n == 0) {
    report.error("EmptyGame", "states", "game has no states");
    return report;
  }

  // State ids: unique, dense, and consistent with position.
  std::map<std::size_t, Player> first_owner;
  bool ids_usable = true;
  for (std::size_t i = 0; i < n; ++i) {
    const StateSpec& s = game.states[i];
    auto [it, inserted] = first_owner.emplace(s.id.value, s.player);
    if (!inserted) {
      ids_usable = false;
      if (it->second != s.player) {
        report.error("PartitionViolation", StateLoc(s.id.value),
                     "state listed as both circle and square");
      } else {
        report.error("DuplicateState", StateLoc(s.id.value),
                     "state listed more than once");
      }
    } else if (s.id.value >= n) {
      ids_usable = false;
      report.error("InvalidStateId", StateLoc(s.id.value),
                   "state ids must be dense in [0, " + std::to_string(n) + ")");
    }
  }
  if (ids_usable) {
    for (std::size_t i = 0; i < n; ++i) {
      if (game.states[i].id.value != i) {
        report.error("InvalidStateId", StateLoc(game.states[i].id.value),
                     "states must be stored in id order");
        ids_usable = false;
        break;
      }
    }
  }
  auto exists = [&](StateId s) { return first_owner.count(s.value) > 0; };

  if (!exists(game.initial))
    report.error("DanglingState", "initial",
                 "initial state " + std::to_string(game.initial.value) +
                     " does not exist");
  for (StateId t : game.target)
    if (!exists(t))
      report.error("DanglingState", "target",
                   "target state " + std::to_string(t.value) + " does not exist");

  const std::size_t obs_counts[2] = {ObservationCount(game, Player::kCircle),
                                     ObservationCount(game, Player::kSquare)};
  std::map<std::size_t, Player> action_owner;
  // (player, observation) -> available action ids of the first state seen.
  std::map<std::pair<int, std::size_t>, std::pair<std::size_t, std::vector<std::size_t>>>
      class_actions;

  for (const StateSpec& s : game.states) {
    const std::size_t sid = s.id.value;
    for (Player p : {Player::kCircle, Player::kSquare}) {
      const std::size_t z = s.observation(p).value;
      if (z >= obs_counts[static_cast<int>(p)])
        report.error("DanglingObservation", StateLoc(sid),
                     std::string(PlayerName(p)) + " observation " +
                         std::to_string(z) + " is not declared");
    }
    if (s.actions.empty()) {
      report.error("MissingTransition", StateLoc(sid), "state has no available action");
      continue;
    }
    std::vector<std::size_t> ids;
    for (const ActionSpec& a : s.actions) {
      const std::size_t aid = a.id.value;
      ids.push_back(aid);
      auto [it, inserted] = action_owner.emplace(aid, s.player);
      if (!inserted && it->second != s.player)
        report.error("PartitionViolation", ActionLoc(sid, aid),
                     "action is available to both players");
      if (!std::isfinite(a.cost) || a.cost < 0.0)
        report.error("NegativeCost", ActionLoc(sid, aid),
                     "cost must be a finite nonnegative number");
      if (a.transitions.empty()) {
        report.error("MissingTransition", ActionLoc(sid, aid),
                     "action has no transition distribution");
        continue;
      }
      if (!a.transitions.all_positive())
        report.error("InvalidProbability", ActionLoc(sid, aid),
                     "transition probabilities must lie in (0, 1]");
      if (std::abs(a.transitions.total() - 1.0) > kProbabilityTolerance)
        report.error("DistributionNotNormalized", ActionLoc(sid, aid),
                     "transition probabilities sum to " +
                         std::to_string(a.transitions.total()));
      if (a.transitions.has_duplicates())
        report.error("DuplicateSuccessor", ActionLoc(sid, aid),
                     "successor listed more than once");
      for (const auto& e : a.transitions)
        if (!exists(e.key))
          report.error("DanglingState", ActionLoc(sid, aid),
                       "successor " + std::to_string(e.key.value) + " does not exist");
    }
    std::vector<std::size_t> sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
      report.error("DuplicateAction", StateLoc(sid), "action listed more than once");
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

    const auto key =
        std::make_pair(static_cast<int>(s.player), s.observation(s.player).value);
    auto [cls, fresh] = class_actions.emplace(key, std::make_pair(sid, sorted));
    if (!fresh && cls->second.second != sorted)
      report.error("ObservationActionMismatch", StateLoc(sid),
                   "states " + std::to_string(cls->second.first) + " and " +
                       std::to_string(sid) +
                       " share an observation but offer different actions");
  }

  if (report.ok() && ids_usable) {
    const auto reach = ReachableStates(game);
    std::vector<char> reachable(n, 0);
    for (StateId s : reach) reachable[s.value] = 1;
    const bool any = std::any_of(game.target.begin(), game.target.end(),
                                 [&](StateId t) { return reachable[t.value] != 0; });
    if (!any)
      report.warning("UnreachableTarget", "target",
                     "no target state is reachable from the initial state");
  }
  return report;
}

inline void RequireValid(const Posg& game) {
  ValidationReport report = Validate(game);
  if (!report.ok()) throw Error(ErrorCode::kInvalidGame, report.summary());
}

// Forward closure from the initial state under every available action.
inline std::vector<StateId> ReachableStates(const Posg& game) {
  const std::size_t n = game.states.size();
  std::vector<char> seen(n, 0);
  std::vector<StateId> order;
  if (game.initial.value >= n) return order;
  std::deque<std::size_t> frontier{game.initial.value};
  seen[game.initial.value] = 1;
  while (!frontier.empty()) {
    const std::size_t s = frontier.front();
    frontier.pop_front();
    order.push_back(StateId(s));
    for (const ActionSpec& a : game.states[s].actions)
      for (const auto& e : a.transitions) {
        const std::size_t t = e.key.value;
        if (t < n && !seen[t] && e.probability > 0.0) {
          seen[t] = 1;
          frontier.push_back(t);
        }
      }
  }
  std::sort(order.begin(), order.end());
  return order;
}

// ---------------------------------------------------------------------------
// Observation lifting

// A path step; the final state of a finite path carries no action.
struct PathStep {
  StateId state;
  std::optional<ActionId> action;
};

struct ObservedStep {
  ObservationId observation;
  std::optional<ActionId> action;

  friend bool operator==(const ObservedStep&, const ObservedStep&) = default;
};

inline std::vector<ObservedStep> ObservationSequence(const Posg& game, Player player,
                                                     const std::vector<PathStep>& path) {
  if (path.empty()) throw Error(ErrorCode::kInvalidPath, "path is empty");
  if (path.front().state != game.initial)
    throw Error(ErrorCode::kInvalidPath, "path must start at the initial state");
  std::vector<ObservedStep> out;
  out.reserve(path.size());
  for (std::size_t i = 0; i < path.size(); ++i) {
    const PathStep& step = path[i];
    if (step.state.value >= game.states.size())
      throw Error(ErrorCode::kInvalidPath,
                  "unknown state " + std::to_string(step.state.value));
    const StateSpec& s = game.state(step.state);
    if (i + 1 < path.size() && !step.action)
      throw Error(ErrorCode::kInvalidPath,
                  "step " + std::to_string(i) + " has no action");
    if (step.action) {
      const ActionSpec* a = s.find_action(*step.action);
      if (a == nullptr)
        throw Error(ErrorCode::kInvalidPath,
                    "action " + std::to_string(step.action->value) +
                        " is not available to the owner of state " +
                        std::to_string(s.id.value));
      if (i + 1 < path.size() && !(a->transitions.probability(path[i + 1].state) > 0.0))
        throw Error(ErrorCode::kInvalidPath,
                    "step " + std::to_string(i) + " has zero probability");
    }
    out.push_back({s.observation(player), step.action});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Precomputed lookups shared by the strategy and solver layers.

struct ObservationClass {
  ObservationId observation;
  std::vector<ActionId> actions;  // sorted
};

class GameIndex {
 public:
  explicit GameIndex(const Posg& game) : game_(&game) {
    for (std::size_t i = 0; i < game.states.size(); ++i)
      if (game.states[i].id.value != i)
        throw Error(ErrorCode::kInvalidGame, "game is not in canonical state order");
    target_.assign(game.states.size(), 0);
    for (StateId t : game.target)
      if (t.value < target_.size()) target_[t.value] = 1;
    for (Player p : {Player::kCircle, Player::kSquare}) {
      auto& table = classes_[static_cast<int>(p)];
      auto& lookup = class_of_[static_cast<int>(p)];
      lookup.assign(ObservationCount(game, p), kNone);
      std::map<std::size_t, std::vector<ActionId>> by_obs;
      for (const StateSpec& s : game.states) {
        if (s.player != p) continue;
        auto& acts = by_obs[s.observation(p).value];
        if (!acts.empty()) continue;
        for (const ActionSpec& a : s.actions) acts.push_back(a.id);
        std::sort(acts.begin(), acts.end());
      }
      for (auto& [z, acts] : by_obs) {
        if (z >= lookup.size()) lookup.resize(z + 1, kNone);
        lookup[z] = table.size();
        table.push_back({ObservationId(z), std::move(acts)});
      }
    }
  }

  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  const Posg& game() const { return *game_; }

  // Observations at which `p` has to choose, with the available actions.
  const std::vector<ObservationClass>& decision_classes(Player p) const {
    return classes_[static_cast<int>(p)];
  }

  // Position of observation `z` in decision_classes(p), or kNone.
  std::size_t class_index(Player p, ObservationId z) const {
    const auto& lookup = class_of_[static_cast<int>(p)];
    return z.value < lookup.size() ? lookup[z.value] : kNone;
  }

  bool is_target(StateId s) const { return target_[s.value] != 0; }
  const std::vector<char>& target_mask() const { return target_; }

 private:
  const Posg* game_;
  std::vector<char> target_;
  std::vector<ObservationClass> classes_[2];
  std::vector<std::size_t> class_of_[2];
};

}  // namespace posg
