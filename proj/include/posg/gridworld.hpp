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
#include <array>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <map>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "posg/error.hpp"
#include "posg/json_io.hpp"
#include "posg/model.hpp"

namespace posg::grid {

struct Cell {
  int x = 0;
  int y = 0;

  friend auto operator<=>(const Cell&, const Cell&) = default;
};

enum Agent : std::size_t { kSegway = 0, kQuadruped = 1, kFlipper = 2 };
inline constexpr std::size_t kAgents = 3;
inline constexpr std::size_t kSurveyors = 2;  // quadruped, flipper

inline std::string_view AgentName(std::size_t a) {
  static constexpr std::string_view kNames[] = {"segway", "quadruped", "flipper"};
  return kNames[a];
}

enum class Direction { kLeft, kRight, kUp, kDown };
inline constexpr std::array<Direction, 4> kDirections = {Direction::kLeft, Direction::kRight,
                                                         Direction::kUp, Direction::kDown};

inline std::string_view DirectionName(Direction d) {
  switch (d) {
    case Direction::kLeft: return "Left";
    case Direction::kRight: return "Right";
    case Direction::kUp: return "Up";
    case Direction::kDown: return "Down";
  }
  return "?";
}

// Up increases y.
inline Cell Step(Cell c, Direction d) {
  switch (d) {
    case Direction::kLeft: return {c.x - 1, c.y};
    case Direction::kRight: return {c.x + 1, c.y};
    case Direction::kUp: return {c.x, c.y + 1};
    case Direction::kDown: return {c.x, c.y - 1};
  }
  return c;
}

inline std::array<Direction, 2> Perpendicular(Direction d) {
  if (d == Direction::kLeft || d == Direction::kRight) return {Direction::kUp, Direction::kDown};
  return {Direction::kLeft, Direction::kRight};
}

enum class AdversaryModel { kFull, kWaitOnly };

struct GridScenario {
  int width = 3;
  int height = 3;
  Cell segway;
  Cell quadruped;
  Cell flipper;
  Cell target;
  std::vector<Cell> obstacles;
  double slip_probability = 0.0;
  std::size_t takedown_duration = 1;
  std::size_t horizon = 100;
  // Agents that may be moved; the others stay put.
  std::vector<std::size_t> movable = {kSegway, kQuadruped, kFlipper};
  // Marks the target as already located by both surveyors.
  bool pre_explored = false;
  AdversaryModel adversary = AdversaryModel::kFull;
  std::size_t state_cap = 200000;

  Cell start(std::size_t agent) const {
    return agent == kSegway ? segway : agent == kQuadruped ? quadruped : flipper;
  }
  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width && c.y < height; }
  bool is_obstacle(Cell c) const {
    return std::find(obstacles.begin(), obstacles.end(), c) != obstacles.end();
  }
};

inline void ValidateScenario(const GridScenario& s) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::kScenarioInvalid, m); };
  if (s.width < 1 || s.height < 1) fail("grid must be at least 1x1");
  for (std::size_t a = 0; a < kAgents; ++a) {
    if (!s.in_bounds(s.start(a))) fail(std::string(AgentName(a)) + " starts out of bounds");
    if (s.is_obstacle(s.start(a))) fail(std::string(AgentName(a)) + " starts on an obstacle");
  }
  if (!s.in_bounds(s.target)) fail("target out of bounds");
  if (s.is_obstacle(s.target)) fail("target is an obstacle");
  for (Cell o : s.obstacles)
    if (!s.in_bounds(o)) fail("obstacle out of bounds");
  if (s.segway == s.quadruped || s.segway == s.flipper || s.quadruped == s.flipper)
    fail("agents must start on distinct cells");
  if (!(s.slip_probability >= 0.0 && s.slip_probability < 1.0)) fail("slip_probability must be in [0, 1)");
  if (s.takedown_duration < 1) fail("takedown_duration must be >= 1");
  if (s.movable.empty()) fail("at least one agent must be movable");
  std::vector<std::size_t> m = s.movable;
  std::sort(m.begin(), m.end());
  if (std::adjacent_find(m.begin(), m.end()) != m.end() || m.back() >= kAgents)
    fail("movable agents must be distinct agent names");
}

struct GridState {
  std::array<Cell, kAgents> position{};
  std::array<std::size_t, kSurveyors> frozen{};  // remaining frozen Circle rounds
  std::array<bool, kSurveyors> explored{};
  bool square_turn = false;
  bool failed = false;

  friend auto operator<=>(const GridState&, const GridState&) = default;
};

inline int Chebyshev(Cell a, Cell b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

inline bool IsTarget(const GridScenario& s, const GridState& g) {
  return !g.failed && g.position[kSegway] == s.target && (g.explored[0] || g.explored[1]);
}

inline std::string CellName(Cell c) {
  return "(" + std::to_string(c.x) + "," + std::to_string(c.y) + ")";
}

// Circle sees positions, frozen counters and the explored flag of every
// surveyor that is not frozen; a frozen surveyor's flag reads "?".
inline std::string CircleObservationKey(const GridState& g) {
  if (g.failed) return "failure";
  std::string key;
  for (std::size_t a = 0; a < kAgents; ++a) key += std::string(AgentName(a)) + CellName(g.position[a]) + " ";
  for (std::size_t i = 0; i < kSurveyors; ++i) {
    key += "frozen" + std::to_string(g.frozen[i]) + " ";
    key += g.frozen[i] > 0 ? std::string("explored? ") : std::string(g.explored[i] ? "explored1 " : "explored0 ");
  }
  key += g.square_turn ? "square" : "circle";
  return key;
}

// Square sees agent positions only.
inline std::string SquareObservationKey(const GridState& g) {
  if (g.failed) return "failure";
  std::string key;
  for (std::size_t a = 0; a < kAgents; ++a) {
    if (a) key += " ";
    key += std::string(AgentName(a)) + CellName(g.position[a]);
  }
  return key;
}

inline std::string StateName(const GridState& g) {
  if (g.failed) return "failure";
  std::string name;
  for (std::size_t a = 0; a < kAgents; ++a) name += std::string(AgentName(a)) + CellName(g.position[a]) + " ";
  for (std::size_t i = 0; i < kSurveyors; ++i)
    name += "frozen" + std::to_string(g.frozen[i]) + " explored" + (g.explored[i] ? "1 " : "0 ");
  name += g.square_turn ? "square" : "circle";
  return name;
}

struct CircleAction {
  std::size_t agent;
  Direction direction;
};

enum class SquareAction { kTakeDownQuadruped, kTakeDownFlipper, kWait };

struct GridGameArtifacts {
  Posg game;
  std::vector<GridState> states;  // indexed by state id
  std::vector<std::string> state_names;
  std::vector<CircleAction> circle_actions;  // action id i
  std::vector<SquareAction> square_actions;  // action id circle_actions.size() + i
  std::size_t state_count = 0;
  std::array<std::size_t, 2> observation_counts{};
  std::size_t horizon = 0;

  json legend() const {
    json states_json = json::array();
    for (std::size_t i = 0; i < state_names.size(); ++i)
      states_json.push_back({{"id", i}, {"name", state_names[i]}});
    return {{"actions", game.action_names},
            {"states", states_json},
            {"observations",
             {{"circle", game.observation_names_circle}, {"square", game.observation_names_square}}},
            {"state_count", state_count},
            {"observation_counts", {{"circle", observation_counts[0]}, {"square", observation_counts[1]}}},
            {"horizon", horizon}};
  }
};

namespace detail {

class Builder {
 public:
  explicit Builder(const GridScenario& s) : s_(s) {
    for (std::size_t a : s.movable)
      for (Direction d : kDirections) circle_.push_back({a, d});
    std::sort(circle_.begin(), circle_.end(), [](const CircleAction& x, const CircleAction& y) {
      return std::make_pair(x.agent, static_cast<int>(x.direction)) <
             std::make_pair(y.agent, static_cast<int>(y.direction));
    });
    if (s.adversary == AdversaryModel::kFull)
      square_ = {SquareAction::kTakeDownQuadruped, SquareAction::kTakeDownFlipper, SquareAction::kWait};
    else
      square_ = {SquareAction::kWait};
  }

  GridGameArtifacts build() {
    GridState init;
    for (std::size_t a = 0; a < kAgents; ++a) init.position[a] = s_.start(a);
    for (std::size_t i = 0; i < kSurveyors; ++i)
      init.explored[i] = s_.pre_explored || Chebyshev(init.position[1 + i], s_.target) <= 1;
    intern(init);
    GridState sink;
    sink.failed = true;
    intern(sink);

    GridGameArtifacts out;
    for (const CircleAction& a : circle_)
      out.game.action_names.push_back(std::string(AgentName(a.agent)) + "." +
                                      std::string(DirectionName(a.direction)));
    for (SquareAction a : square_)
      out.game.action_names.push_back(a == SquareAction::kTakeDownQuadruped ? "TakeDown(quadruped)"
                                      : a == SquareAction::kTakeDownFlipper ? "TakeDown(flipper)"
                                                                            : "Wait");
    while (!frontier_.empty()) {
      const std::size_t id = frontier_.front();
      frontier_.pop_front();
      const GridState g = states_[id];
      StateSpec spec;
      spec.id = StateId(id);
      spec.player = g.square_turn ? Player::kSquare : Player::kCircle;
      spec.observation_circle = observation(obs_circle_, names_circle_, CircleObservationKey(g));
      spec.observation_square = observation(obs_square_, names_square_, SquareObservationKey(g));
      const bool absorbing = g.failed || IsTarget(s_, g);
      if (!g.square_turn) {
        for (std::size_t i = 0; i < circle_.size(); ++i) {
          ActionSpec a{ActionId(i), IsTarget(s_, g) ? 0.0 : 1.0, {}};
          if (absorbing) {
            a.transitions.add(StateId(id), 1.0);
          } else {
            for (const auto& [next, p] : circle_move(g, circle_[i])) a.transitions.add(StateId(intern(next)), p);
          }
          spec.actions.push_back(std::move(a));
        }
      } else {
        for (std::size_t i = 0; i < square_.size(); ++i) {
          ActionSpec a{ActionId(circle_.size() + i), 0.0, {}};
          a.transitions.add(StateId(absorbing ? id : intern(square_move(g, square_[i]))), 1.0);
          spec.actions.push_back(std::move(a));
        }
      }
      if (IsTarget(s_, g)) out.game.target.push_back(StateId(id));
      specs_.push_back(std::move(spec));
    }
    out.game.states = std::move(specs_);
    out.game.initial = StateId(0);
    out.game.observation_names_circle = names_circle_;
    out.game.observation_names_square = names_square_;
    Canonicalize(out.game);
    out.states = states_;
    for (const GridState& g : states_) out.state_names.push_back(StateName(g));
    out.circle_actions = circle_;
    out.square_actions = square_;
    out.state_count = states_.size();
    out.observation_counts = {names_circle_.size(), names_square_.size()};
    out.horizon = s_.horizon;
    return out;
  }

  // Outcome distribution of a Circle move, merged by successor.
  std::vector<std::pair<GridState, double>> circle_move(const GridState& g, CircleAction act) const {
    std::vector<std::pair<Direction, double>> directions;
    const bool frozen = act.agent != kSegway && g.frozen[act.agent - 1] > 0;
    if (!frozen) {
      directions.emplace_back(act.direction, 1.0 - s_.slip_probability);
      if (s_.slip_probability > 0.0)
        for (Direction d : Perpendicular(act.direction)) directions.emplace_back(d, s_.slip_probability / 2.0);
    }
    std::vector<std::pair<GridState, double>> out;
    auto emit = [&](GridState next, double p) {
      if (!next.failed) {
        for (std::size_t i = 0; i < kSurveyors; ++i) {
          if (g.frozen[i] == 0 && Chebyshev(next.position[1 + i], s_.target) <= 1) next.explored[i] = true;
          next.frozen[i] = g.frozen[i] > 0 ? g.frozen[i] - 1 : 0;
        }
        next.square_turn = true;
      }
      for (auto& [state, q] : out)
        if (state == next) {
          q += p;
          return;
        }
      out.emplace_back(next, p);
    };
    if (frozen) {
      emit(g, 1.0);
      return out;
    }
    for (const auto& [d, p] : directions) {
      if (!(p > 0.0)) continue;
      GridState next = g;
      const Cell cell = Step(g.position[act.agent], d);
      if (!s_.in_bounds(cell)) {
        // Off-grid moves leave the agent in place.
      } else if (s_.is_obstacle(cell)) {
        next = GridState{};
        next.failed = true;
      } else {
        next.position[act.agent] = cell;
      }
      emit(next, p);
    }
    return out;
  }

  GridState square_move(const GridState& g, SquareAction act) const {
    GridState next = g;
    if (act == SquareAction::kTakeDownQuadruped) next.frozen[0] = s_.takedown_duration;
    if (act == SquareAction::kTakeDownFlipper) next.frozen[1] = s_.takedown_duration;
    next.square_turn = false;
    return next;
  }

 private:
  std::size_t intern(const GridState& g) {
    auto [it, inserted] = ids_.emplace(g, states_.size());
    if (inserted) {
      if (states_.size() >= s_.state_cap)
        throw Error(ErrorCode::kStateSpaceTooLarge,
                    "more than " + std::to_string(s_.state_cap) + " states");
      states_.push_back(g);
      frontier_.push_back(it->second);
    }
    return it->second;
  }

  static ObservationId observation(std::map<std::string, std::size_t>& table,
                                   std::vector<std::string>& names, const std::string& key) {
    auto [it, inserted] = table.emplace(key, names.size());
    if (inserted) names.push_back(key);
    return ObservationId(it->second);
  }

  const GridScenario& s_;
  std::vector<CircleAction> circle_;
  std::vector<SquareAction> square_;
  std::map<GridState, std::size_t> ids_;
  std::vector<GridState> states_;
  std::deque<std::size_t> frontier_;
  std::vector<StateSpec> specs_;
  std::map<std::string, std::size_t> obs_circle_, obs_square_;
  std::vector<std::string> names_circle_, names_square_;
};

}  // namespace detail

// Turn-alternating game: Circle moves one agent, then Square may take down a
// surveyor, which freezes it and masks its exploration report for
// takedown_duration Circle rounds. Only reachable states are generated; the
// collision sink always has id 1.
inline GridGameArtifacts Generate(const GridScenario& scenario) {
  ValidateScenario(scenario);
  return detail::Builder(scenario).build();
}

// Observation tables aligned with Generate's state ids.
inline std::pair<std::vector<ObservationId>, std::vector<ObservationId>> ObservationModel(
    const GridScenario& scenario) {
  const GridGameArtifacts art = Generate(scenario);
  std::pair<std::vector<ObservationId>, std::vector<ObservationId>> out;
  for (const StateSpec& s : art.game.states) {
    out.first.push_back(s.observation_circle);
    out.second.push_back(s.observation_square);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scenario files

inline GridScenario ScenarioFromJson(const json& doc) {
  auto cell = [](const json& v, const char* what) {
    if (!v.is_array() || v.size() != 2 || !v[0].is_number_integer() || !v[1].is_number_integer())
      throw Error(ErrorCode::kParseError, std::string(what) + ": expected [x, y]");
    return Cell{v[0].get<int>(), v[1].get<int>()};
  };
  auto need = [&](const char* key) -> const json& {
    auto it = doc.find(key);
    if (it == doc.end()) throw Error(ErrorCode::kParseError, std::string("scenario: missing key '") + key + "'");
    return *it;
  };
  if (!doc.is_object()) throw Error(ErrorCode::kParseError, "scenario: expected an object");
  GridScenario s;
  s.width = need("width").get<int>();
  s.height = need("height").get<int>();
  s.segway = cell(need("segway"), "segway");
  s.quadruped = cell(need("quadruped"), "quadruped");
  s.flipper = cell(need("flipper"), "flipper");
  s.target = cell(need("target"), "target");
  if (auto it = doc.find("obstacles"); it != doc.end())
    for (const json& o : *it) s.obstacles.push_back(cell(o, "obstacle"));
  if (auto it = doc.find("slip_probability"); it != doc.end()) s.slip_probability = it->get<double>();
  if (auto it = doc.find("takedown_duration"); it != doc.end()) s.takedown_duration = it->get<std::size_t>();
  if (auto it = doc.find("horizon"); it != doc.end()) s.horizon = it->get<std::size_t>();
  if (auto it = doc.find("pre_explored"); it != doc.end()) s.pre_explored = it->get<bool>();
  if (auto it = doc.find("state_cap"); it != doc.end()) s.state_cap = it->get<std::size_t>();
  if (auto it = doc.find("adversary"); it != doc.end()) {
    const std::string a = it->get<std::string>();
    if (a == "full") s.adversary = AdversaryModel::kFull;
    else if (a == "wait_only") s.adversary = AdversaryModel::kWaitOnly;
    else throw Error(ErrorCode::kParseError, "adversary must be 'full' or 'wait_only'");
  }
  if (auto it = doc.find("movable"); it != doc.end()) {
    s.movable.clear();
    for (const json& m : *it) {
      const std::string name = m.get<std::string>();
      std::size_t a = kAgents;
      for (std::size_t i = 0; i < kAgents; ++i)
        if (AgentName(i) == name) a = i;
      if (a == kAgents) throw Error(ErrorCode::kParseError, "unknown agent '" + name + "'");
      s.movable.push_back(a);
    }
  }
  return s;
}

inline GridScenario LoadScenario(const std::string& path) {
  try {
    return ScenarioFromJson(LoadJsonFile(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, path + ": " + e.what());
  }
}

}  // namespace posg::grid
