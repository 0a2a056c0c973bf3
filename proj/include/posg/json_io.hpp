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
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "posg/error.hpp"
#include "posg/model.hpp"
#include "posg/strategy.hpp"

namespace posg {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical text: sorted keys, no whitespace, floats as %.17g.

namespace detail {

inline void WriteCanonical(const json& value, std::string& out) {
  switch (value.type()) {
    case json::value_t::object: {
      out += '{';
      bool first = true;
      for (auto it = value.begin(); it != value.end(); ++it) {
        if (!first) out += ',';
        first = false;
        out += json(it.key()).dump();
        out += ':';
        WriteCanonical(it.value(), out);
      }
      out += '}';
      break;
    }
    case json::value_t::array: {
      out += '[';
      for (std::size_t i = 0; i < value.size(); ++i) {
        if (i) out += ',';
        WriteCanonical(value[i], out);
      }
      out += ']';
      break;
    }
    case json::value_t::number_float: {
      const double x = value.get<double>();
      if (!std::isfinite(x)) {
        out += "null";
        break;
      }
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      out += buf;
      break;
    }
    default:
      out += value.dump();
  }
}

}  // namespace detail

inline std::string CanonicalDump(const json& value) {
  std::string out;
  detail::WriteCanonical(value, out);
  return out;
}

inline json ParseJsonText(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError,
                source + ": byte " + std::to_string(e.byte) + ": " + e.what());
  }
}

inline std::string ReadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kParseError, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void WriteFile(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kInvalidArgument, "cannot write " + path);
  out << text;
}

inline json LoadJsonFile(const std::string& path) { return ParseJsonText(ReadFile(path), path); }

namespace detail {

inline const json& Field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw Error(ErrorCode::kParseError, where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end())
    throw Error(ErrorCode::kParseError, where + ": missing key '" + key + "'");
  return *it;
}

inline std::size_t Index(const json& v, const std::string& where) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
    throw Error(ErrorCode::kParseError, where + ": expected a nonnegative integer");
  return v.get<std::size_t>();
}

inline double Number(const json& v, const std::string& where) {
  if (!v.is_number()) throw Error(ErrorCode::kParseError, where + ": expected a number");
  return v.get<double>();
}

inline const json& Array(const json& v, const std::string& where) {
  if (!v.is_array()) throw Error(ErrorCode::kParseError, where + ": expected an array");
  return v;
}

inline std::vector<std::string> Strings(const json& v, const std::string& where) {
  std::vector<std::string> out;
  for (const json& s : Array(v, where)) {
    if (!s.is_string()) throw Error(ErrorCode::kParseError, where + ": expected strings");
    out.push_back(s.get<std::string>());
  }
  return out;
}

inline Player PlayerField(const json& v, const std::string& where) {
  if (!v.is_string()) throw Error(ErrorCode::kParseError, where + ": expected a player name");
  auto p = ParsePlayer(v.get<std::string>());
  if (!p) throw Error(ErrorCode::kParseError, where + ": unknown player '" + v.get<std::string>() + "'");
  return *p;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Game files

inline Posg GameFromJson(const json& doc) {
  using namespace detail;
  Posg game;
  for (const json& s : Array(Field(doc, "states", "game"), "states")) {
    StateSpec state;
    state.id = StateId(Index(Field(s, "id", "state"), "state id"));
    const std::string where = "state " + std::to_string(state.id.value);
    state.player = PlayerField(Field(s, "player", where), where);
    state.observation_circle = ObservationId(Index(Field(s, "observation_circle", where), where));
    state.observation_square = ObservationId(Index(Field(s, "observation_square", where), where));
    for (const json& a : Array(Field(s, "actions", where), where)) {
      ActionSpec action;
      action.id = ActionId(Index(Field(a, "id", where), where + " action id"));
      const std::string awhere = where + " action " + std::to_string(action.id.value);
      action.cost = Number(Field(a, "cost", awhere), awhere);
      for (const json& t : Array(Field(a, "transitions", awhere), awhere))
        action.transitions.add(StateId(Index(Field(t, "to", awhere), awhere)),
                               Number(Field(t, "p", awhere), awhere));
      state.actions.push_back(std::move(action));
    }
    game.states.push_back(std::move(state));
  }
  game.initial = StateId(Index(Field(doc, "initial", "game"), "initial"));
  for (const json& t : Array(Field(doc, "target", "game"), "target"))
    game.target.push_back(StateId(Index(t, "target")));
  if (auto it = doc.find("action_names"); it != doc.end())
    game.action_names = Strings(*it, "action_names");
  if (auto it = doc.find("observation_names"); it != doc.end()) {
    if (!it->is_object()) throw Error(ErrorCode::kParseError, "observation_names: expected an object");
    if (auto c = it->find("circle"); c != it->end())
      game.observation_names_circle = Strings(*c, "observation_names.circle");
    if (auto q = it->find("square"); q != it->end())
      game.observation_names_square = Strings(*q, "observation_names.square");
  }
  Canonicalize(game);
  return game;
}

inline json GameToJson(const Posg& input) {
  Posg game = input;
  Canonicalize(game);
  json states = json::array();
  for (const StateSpec& s : game.states) {
    json actions = json::array();
    for (const ActionSpec& a : s.actions) {
      json transitions = json::array();
      for (const auto& e : a.transitions) transitions.push_back({{"to", e.key.value}, {"p", e.probability}});
      actions.push_back({{"id", a.id.value}, {"cost", a.cost}, {"transitions", transitions}});
    }
    states.push_back({{"id", s.id.value},
                      {"player", std::string(PlayerName(s.player))},
                      {"observation_circle", s.observation_circle.value},
                      {"observation_square", s.observation_square.value},
                      {"actions", actions}});
  }
  json target = json::array();
  for (StateId t : game.target) target.push_back(t.value);
  json doc = {{"states", states}, {"initial", game.initial.value}, {"target", target}};
  if (!game.action_names.empty()) doc["action_names"] = game.action_names;
  if (!game.observation_names_circle.empty() || !game.observation_names_square.empty())
    doc["observation_names"] = {{"circle", game.observation_names_circle},
                                {"square", game.observation_names_square}};
  return doc;
}

inline Posg LoadGame(const std::string& path) { return GameFromJson(LoadJsonFile(path)); }

// ---------------------------------------------------------------------------
// Strategy files

inline FiniteStateStrategy StrategyFromJson(const json& doc) {
  using namespace detail;
  FiniteStateStrategy fss;
  fss.owner = PlayerField(Field(doc, "owner", "strategy"), "owner");
  fss.nodes = Index(Field(doc, "nodes", "strategy"), "nodes");
  fss.initial_node = Index(Field(doc, "initial_node", "strategy"), "initial_node");
  for (const json& row : Array(Field(doc, "action_map", "strategy"), "action_map")) {
    const std::size_t node = Index(Field(row, "node", "action_map"), "action_map node");
    const ObservationId z(Index(Field(row, "observation", "action_map"), "action_map observation"));
    Distribution<ActionId> dist;
    for (const json& e : Array(Field(row, "dist", "action_map"), "action_map dist"))
      dist.add(ActionId(Index(Field(e, "action", "dist"), "dist action")), Number(Field(e, "p", "dist"), "dist p"));
    if (!fss.action_map.emplace(std::make_pair(node, z), std::move(dist)).second)
      throw Error(ErrorCode::kParseError, "action_map: duplicate row");
  }
  if (auto it = doc.find("memory_update"); it != doc.end()) {
    for (const json& row : Array(*it, "memory_update")) {
      const std::size_t node = Index(Field(row, "node", "memory_update"), "memory_update node");
      const ObservationId z(Index(Field(row, "observation", "memory_update"), "memory_update observation"));
      const ActionId a(Index(Field(row, "action", "memory_update"), "memory_update action"));
      Distribution<std::size_t> dist;
      for (const json& e : Array(Field(row, "dist", "memory_update"), "memory_update dist"))
        dist.add(Index(Field(e, "node", "dist"), "dist node"), Number(Field(e, "p", "dist"), "dist p"));
      if (!fss.memory_update.emplace(std::make_tuple(node, z, a), std::move(dist)).second)
        throw Error(ErrorCode::kParseError, "memory_update: duplicate row");
    }
  }
  return fss;
}

inline json StrategyToJson(const FiniteStateStrategy& fss) {
  json action_map = json::array();
  for (const auto& [key, dist] : fss.action_map) {
    json entries = json::array();
    for (const auto& e : dist.canonical()) entries.push_back({{"action", e.key.value}, {"p", e.probability}});
    action_map.push_back({{"node", key.first}, {"observation", key.second.value}, {"dist", entries}});
  }
  json memory_update = json::array();
  for (const auto& [key, dist] : fss.memory_update) {
    json entries = json::array();
    for (const auto& e : dist.canonical()) entries.push_back({{"node", e.key}, {"p", e.probability}});
    memory_update.push_back({{"node", std::get<0>(key)},
                             {"observation", std::get<1>(key).value},
                             {"action", std::get<2>(key).value},
                             {"dist", entries}});
  }
  return {{"owner", std::string(PlayerName(fss.owner))},
          {"nodes", fss.nodes},
          {"initial_node", fss.initial_node},
          {"action_map", action_map},
          {"memory_update", memory_update}};
}

inline FiniteStateStrategy LoadStrategy(const std::string& path) {
  return StrategyFromJson(LoadJsonFile(path));
}

// ---------------------------------------------------------------------------

inline json ReportToJson(const ValidationReport& report) {
  json errors = json::array();
  json warnings = json::array();
  for (const Finding& f : report.findings) {
    json entry = {{"code", f.code}, {"location", f.location}, {"message", f.message}};
    (f.severity == Severity::kError ? errors : warnings).push_back(entry);
  }
  return {{"ok", report.ok()}, {"errors", errors}, {"warnings", warnings}};
}

}  // namespace posg
