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

// Acceptance checks. One PASS/FAIL line per criterion; exit status is the
// number of failures (capped), so ctest fails on any of them.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <sstream>

#include "oracles.hpp"
#include "support.hpp"

using namespace posg;
using namespace posg::testing;
namespace fs = std::filesystem;

namespace {

// Pinned tolerances.
constexpr double kResidualTol = 1e-8;          // AC1 Bellman residual
constexpr double kSolverAgreementTol = 1e-9;   // AC1 LinearSolve vs iteration
constexpr double kAc1Seconds = 10.0;
constexpr double kAc2Seconds = 30.0;
constexpr double kAc3Seconds = 120.0;
constexpr double kAc4Seconds = 30.0;
constexpr double kAc5Seconds = 120.0;
constexpr std::size_t kMcEpisodes = 100000;    // AC2
constexpr double kMcSigmas = 3.0;              // AC2
constexpr double kOracleSlack = 1e-3;          // AC3 solve vs exhaustive
constexpr double kSoundnessTol = 1e-6;         // AC3 random adversaries
constexpr double kPenniesTol = 1e-2;           // AC4 value
constexpr double kUniformTol = 0.05;           // AC4 action distribution
constexpr double kGridBenignFloor = 0.999;     // AC5
constexpr double kMonotoneSlack = 1e-12;       // AC6 exact oracle values
constexpr double kInvariantTol = 1e-9;         // AC8 row sums
constexpr double kProductTol = 1e-8;           // AC8 product valuation
constexpr std::size_t kFuzzCases = 200;        // AC8

using Clock = std::chrono::steady_clock;
double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

int failures = 0;

void Report(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s %s\n", id, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string Fmt(const char* fmt, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, fmt, a, b, c);
  return buf;
}

// Runs a check body; an escaped exception counts as failure.
void Criterion(const char* id, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    Report(id, false, std::string("exception: ") + e.what());
  }
}

ValuationConfig Reach(SolveMethod m = SolveMethod::kLinearSolve) {
  ValuationConfig vc;
  vc.objective = ObjectiveKind::kReachProbability;
  vc.method = m;
  return vc;
}

ValuationConfig Cost(SolveMethod m = SolveMethod::kLinearSolve) {
  ValuationConfig vc = Reach(m);
  vc.objective = ObjectiveKind::kDiscountedCost;
  vc.gamma = 0.95;
  return vc;
}

// -- AC1: evaluation accuracy ----------------------------------------------
void Ac1() {
  const auto start = Clock::now();
  Engine rng(20261);
  double worst_residual = 0.0, worst_gap = 0.0, worst_oracle = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Posg g = RandomGame(rng);
    const StrategyProfile prof = RandomProfile(rng, g);
    const InducedChain chain = BuildInducedChain(g, prof);
    for (ValuationConfig vc : {Reach(), Cost()}) {
      const ValueVector lin = Evaluate(chain, vc);
      worst_residual = std::max(worst_residual, BellmanResidual(chain, lin, vc));
      vc.method = SolveMethod::kFixedPointIteration;
      vc.max_iterations = 5000000;  // slowly leaking classes need long runs
      const ValueVector fpi = Evaluate(chain, vc);
      const std::vector<double> dense = DenseOracle(chain, vc.objective, vc.gamma);
      for (std::size_t t = 0; t < chain.size(); ++t) {
        worst_gap = std::max(worst_gap, std::abs(lin.values[t] - fpi.values[t]));
        worst_oracle = std::max(worst_oracle, std::abs(lin.values[t] - dense[t]));
      }
    }
  }
  const bool pass = worst_residual <= kResidualTol && worst_gap <= kSolverAgreementTol &&
                    worst_oracle <= kSolverAgreementTol && Seconds(start) < kAc1Seconds;
  Report("AC1", pass,
         Fmt("residual=%.3g linear_vs_iterative=%.3g", worst_residual, worst_gap) +
             Fmt(" linear_vs_dense=%.3g seconds=%.2f", worst_oracle, Seconds(start)));
}

// -- AC2: Monte Carlo agreement -----------------------------------------------
void Ac2() {
  const std::vector<std::string> names = {"matching_pennies", "two_branch", "irrelevant_adversary",
                                          "hidden_door", "ambush", "six_state",
                                          "random_0", "random_1", "random_2", "random_3"};
  const auto start = Clock::now();
  int ok = 0;
  double worst_sigma = 0.0;
  for (std::size_t i = 0; i < names.size(); ++i) {
    const std::string base = FixturePath("mc/" + names[i]);
    const Posg g = LoadGame(base + ".game.json");
    const StrategyProfile prof{LoadStrategy(base + ".circle.json"), LoadStrategy(base + ".square.json")};
    const InducedChain chain = BuildInducedChain(g, prof);
    const double v = Evaluate(chain, Reach()).initial_value;
    SimulationOptions opts;
    opts.stop_when_unreachable = true;
    const SimulationSummary sum = SimulateMany(chain, DeriveSeed(77, {i}), kMcEpisodes, 100000, opts);
    const double se = std::sqrt(v * (1.0 - v) / static_cast<double>(kMcEpisodes));
    const double dev = std::abs(sum.reach_frequency - v);
    if (dev <= kMcSigmas * se + 1e-12) ++ok;
    if (se > 0) worst_sigma = std::max(worst_sigma, dev / se);
    else if (dev > 0) worst_sigma = INFINITY;
  }
  Report("AC2", ok == static_cast<int>(names.size()) && Seconds(start) < kAc2Seconds,
         Fmt("fixtures=%.0f within_3se=%.0f worst_sigma=%.3f", names.size(), ok, worst_sigma) +
             Fmt(" seconds=%.2f", Seconds(start)));
}

SynthesisConfig SolveConfig(std::uint64_t seed) {
  SynthesisConfig c;
  c.master_seed = seed;
  return c;
}

// -- AC3: synthesis against the exhaustive oracle, soundness ------------------
void Ac3() {
  const auto start = Clock::now();
  int games = 0, dominated = 0, sound = 0;
  double worst_violation = 0.0;
  Engine rng(303);
  for (const NamedGame& ng : HandcraftedGames()) {
    ++games;
    const SynthesisResult r = SolveMinMax(ng.game, SolveConfig(3));
    const ExhaustiveResult oracle = ExhaustiveMinMax(ng.game, 1, 1);
    if (r.guaranteed_value >= oracle.value - kOracleSlack) ++dominated;
    double worst = INFINITY;
    for (int k = 0; k < 100; ++k) {
      const FiniteStateStrategy adv = RandomFss(rng, ng.game, Player::kSquare, Pick(rng, 1, 2), k % 2 == 0);
      worst = std::min(worst, ProfileValue(ng.game, {r.circle_strategy, adv},
                                           ObjectiveKind::kReachProbability, kDefaultDiscount));
    }
    worst_violation = std::max(worst_violation, r.guaranteed_value - worst);
    if (worst >= r.guaranteed_value - kSoundnessTol) ++sound;
  }
  Report("AC3", games >= 5 && dominated == games && sound == games && Seconds(start) < kAc3Seconds,
         Fmt("games=%.0f dominating=%.0f sound=%.0f", games, dominated, sound) +
             Fmt(" worst_violation=%.3g seconds=%.2f", worst_violation, Seconds(start)));
}

// -- AC4: matching pennies ------------------------------------------------------
void Ac4() {
  const auto start = Clock::now();
  const Posg g = MatchingPennies();
  const SynthesisResult r = SolveMinMax(g, SolveConfig(4));
  const Distribution<ActionId>* row = r.circle_strategy.actions_at(0, ObservationId(1));
  double p0 = 0.0;
  if (row)
    for (const auto& e : *row)
      if (e.key == ActionId(0)) p0 = e.probability;
  const double det = ExhaustiveMinMax(g, 1, 1).value;
  const double secs = Seconds(start);
  Report("AC4",
         std::abs(r.guaranteed_value - 0.5) <= kPenniesTol && std::abs(p0 - 0.5) <= kUniformTol &&
             det == 0.0 && secs < kAc4Seconds,
         Fmt("guaranteed=%.6f p_first=%.4f deterministic_best=%.3f", r.guaranteed_value, p0, det) +
             Fmt(" seconds=%.2f", secs));
}

// -- AC5: gridworld --------------------------------------------------------------
grid::GridScenario Ac5Scenario() {
  grid::GridScenario s;
  s.width = s.height = 3;
  s.segway = {0, 0};
  s.quadruped = {2, 0};
  s.flipper = {0, 2};
  s.target = {2, 2};
  s.obstacles = {{1, 1}};
  s.movable = {grid::kSegway, grid::kQuadruped};
  return s;
}

void Ac5() {
  grid::GridScenario benign = Ac5Scenario();
  benign.adversary = grid::AdversaryModel::kWaitOnly;
  grid::GridScenario full = Ac5Scenario();
  full.adversary = grid::AdversaryModel::kFull;
  const bool path = PathExists(benign);
  const auto t0 = Clock::now();
  const grid::GridGameArtifacts bart = grid::Generate(benign);
  SynthesisConfig c = SolveConfig(5);
  c.restarts = 4;
  c.outer_iterations = 10;
  const SynthesisResult rb = SolveMinMax(bart.game, c);
  const grid::GridGameArtifacts fart = grid::Generate(full);
  const SynthesisResult rf = SolveMinMax(fart.game, c);
  const double secs = Seconds(t0);
  const bool pass = path && rb.guaranteed_value >= kGridBenignFloor &&
                    rf.guaranteed_value <= rb.guaranteed_value + kSoundnessTol && secs < kAc5Seconds;
  Report("AC5", pass,
         Fmt("states=%.0f/%.0f path_oracle=%.0f", bart.state_count, fart.state_count, path) +
             Fmt(" benign=%.6f full=%.6f seconds=%.2f", rb.guaranteed_value, rf.guaranteed_value, secs));
}

// -- AC6: memory monotonicity of the exhaustive oracle ----------------------
void Ac6() {
  int checked = 0, monotone = 0;
  std::string detail;
  for (const NamedGame& ng : {NamedGame{"hidden_door", HiddenDoorGame()}, NamedGame{"two_branch", TwoBranchGame()},
                              NamedGame{"matching_pennies", MatchingPennies()}}) {
    double v[3][3];
    for (std::size_t c = 1; c <= 2; ++c)
      for (std::size_t q = 1; q <= 2; ++q) v[c][q] = ExhaustiveMinMax(ng.game, c, q).value;
    bool ok = true;
    for (std::size_t q = 1; q <= 2; ++q) ok = ok && v[2][q] >= v[1][q] - kMonotoneSlack;
    for (std::size_t c = 1; c <= 2; ++c) ok = ok && v[c][2] <= v[c][1] + kMonotoneSlack;
    ++checked;
    monotone += ok;
    detail += " " + ng.name + Fmt("=%.4f/%.4f/%.4f", v[1][1], v[2][1], v[1][2]) + Fmt("/%.4f", v[2][2]);
  }
  Report("AC6", checked == 3 && monotone == checked,
         Fmt("fixtures=%.0f monotone=%.0f values(11/21/12/22)", checked, monotone) + detail);
}

// -- AC7: byte-identical CLI output -----------------------------------------
std::string Capture(const std::string& args, int& code) {
  const std::string cmd = std::string(POSG_CLI_PATH) + " " + args + " 2>/dev/null";
  std::string out;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (!pipe) return out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
  const int status = ::pclose(pipe);
  code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return out;
}

void Ac7() {
  int cases = 0, identical = 0;
  for (const char* name : {"hidden_door", "ambush", "random_1"}) {
    const std::string game = FixturePath(std::string("mc/") + name + ".game.json");
    const std::string base = "solve " + game + " --seed 11 --mem-circle 2 --restarts 6";
    int c1 = -1, c2 = -1, c3 = -1, c4 = -1;
    const std::string a = Capture(base, c1), b = Capture(base, c2);
    const std::string t1 = Capture(base + " --threads 1", c3), t4 = Capture(base + " --threads 4", c4);
    ++cases;
    if (!a.empty() && c1 != 2 && c1 == c2 && a == b && a == t1 && t1 == t4 && c3 == c4) ++identical;
  }
  Report("AC7", identical == cases, Fmt("cases=%.0f identical=%.0f", cases, identical));
}

// -- AC8: malformed input fuzz ---------------------------------------------
// True when the input is rejected: parse error, validation error or a thrown
// compatibility check.
bool GameRejected(const json& doc) {
  try {
    return !Validate(GameFromJson(doc)).ok();
  } catch (const Error&) {
    return true;
  }
}

bool StrategyRejected(const Posg& g, const json& doc, Player owner) {
  try {
    const FiniteStateStrategy f = StrategyFromJson(doc);
    if (!ValidateFss(g, f).ok()) return true;
    RequireCompatible(g, f, owner);
    return false;
  } catch (const Error&) {
    return true;
  }
}

json& AnyOf(Engine& rng, json& arr) { return arr[Pick(rng, 0, arr.size() - 1)]; }

// Applies one game mutation that makes the document ill-formed; returns false
// when the kind does not apply to this game.
bool MutateGame(Engine& rng, json& doc, int kind, std::string& label) {
  json& states = doc["states"];
  json& s = AnyOf(rng, states);
  json& a = AnyOf(rng, s["actions"]);
  switch (kind) {
    case 0:
      label = "normalization";
      AnyOf(rng, a["transitions"])["p"] = AnyOf(rng, a["transitions"])["p"].get<double>() * 0.5;
      return true;
    case 1:
      label = "negative_cost";
      a["cost"] = -(a["cost"].get<double>() + 0.25);
      return true;
    case 2:
      label = "missing_transition";
      a["transitions"] = json::array();
      return true;
    case 3:
      label = "no_actions";
      s["actions"] = json::array();
      return true;
    case 4:
      label = "dangling_successor";
      AnyOf(rng, a["transitions"])["to"] = states.size() + Pick(rng, 0, 5);
      return true;
    case 5:
      label = "negative_probability";
      AnyOf(rng, a["transitions"])["p"] = -0.5;
      return true;
    case 6:
      label = "dangling_initial";
      doc["initial"] = states.size() + Pick(rng, 0, 5);
      return true;
    case 7:
      label = "dangling_target";
      doc["target"].push_back(states.size() + Pick(rng, 0, 5));
      return true;
    case 8:
      label = "duplicate_action";
      s["actions"].push_back(s["actions"][0]);
      return true;
    case 9: {
      label = "undeclared_observation";
      const char* key = U01(rng) < 0.5 ? "observation_circle" : "observation_square";
      const char* names = key[12] == 'c' ? "circle" : "square";
      s[key] = doc["observation_names"][names].size() + Pick(rng, 0, 3);
      return true;
    }
    case 10: {
      // Give one state an extra action, then move a same-player state with
      // the original action set into its observation class.
      label = "partition";
      const std::string p = s["player"];
      const char* key = p == "circle" ? "observation_circle" : "observation_square";
      std::size_t max_id = 0;
      for (const json& st : states)
        for (const json& ac : st["actions"]) max_id = std::max(max_id, ac["id"].get<std::size_t>());
      for (json& t : states) {
        if (&t == &s || t["player"] != p) continue;
        t[key] = s[key];
        json extra = s["actions"][0];
        extra["id"] = max_id + 1;
        s["actions"].push_back(extra);
        return true;
      }
      return false;
    }
    case 11: {
      // Hand an action id to the other player while the owner keeps it.
      label = "owner";
      const std::string p = s["player"];
      for (json& t : states) {
        if (t["player"] == p) continue;
        json stolen = a;
        t["actions"].push_back(stolen);
        return true;
      }
      return false;
    }
    case 12:
      label = "bad_player";
      s["player"] = "triangle";
      return true;
    case 13:
      label = "truncated";
      doc = json();
      return true;
  }
  return false;
}

// Strategy mutations against a valid game.
bool MutateStrategy(Engine& rng, const Posg& g, json& doc, int kind, std::string& label) {
  json& rows = doc["action_map"];
  if (rows.empty()) return false;
  json& row = AnyOf(rng, rows);
  json& entry = AnyOf(rng, row["dist"]);
  const Player owner = doc["owner"] == "circle" ? Player::kCircle : Player::kSquare;
  switch (kind) {
    case 0: {
      label = "fss_wrong_owner";
      for (const StateSpec& s : g.states)
        if (s.player != owner) {
          entry["action"] = s.actions.front().id.value;
          return true;
        }
      return false;
    }
    case 1: {
      label = "fss_outside_available";
      std::size_t max_id = 0;
      for (const StateSpec& s : g.states)
        for (const ActionSpec& a : s.actions) max_id = std::max(max_id, a.id.value);
      entry["action"] = max_id + 1 + Pick(rng, 0, 4);
      return true;
    }
    case 2:
      label = "fss_normalization";
      entry["p"] = entry["p"].get<double>() * 0.5;
      return true;
    case 3:
      label = "fss_initial_node";
      doc["initial_node"] = doc["nodes"].get<std::size_t>() + Pick(rng, 0, 2);
      return true;
    case 4:
      label = "fss_missing_row";
      rows.erase(rows.begin() + static_cast<std::ptrdiff_t>(Pick(rng, 0, rows.size() - 1)));
      return true;
    case 5:
      label = "fss_zero_nodes";
      doc["nodes"] = 0;
      return true;
    case 6: {
      label = "fss_update_out_of_range";
      json& updates = doc["memory_update"];
      if (updates.empty()) return false;
      AnyOf(rng, AnyOf(rng, updates)["dist"])["node"] = doc["nodes"].get<std::size_t>() + 1;
      return true;
    }
  }
  return false;
}

// Model and strategy invariants on a valid (game, strategy) pair; returns the
// name of the first one that fails.
std::string BrokenInvariant(Engine& rng, const Posg& g, const json& gdoc, const FiniteStateStrategy& f,
                            const json& fdoc) {
  std::size_t circle = 0, square = 0;
  for (const StateSpec& s : g.states) {
    (s.player == Player::kCircle ? circle : square) += 1;
    for (const ActionSpec& a : s.actions)
      if (std::abs(a.transitions.total() - 1.0) > kInvariantTol) return "normalization";
  }
  if (circle + square != g.num_states()) return "partition";
  if (CanonicalDump(GameToJson(GameFromJson(gdoc))) != CanonicalDump(gdoc)) return "game_round_trip";
  if (CanonicalDump(StrategyToJson(StrategyFromJson(fdoc))) != CanonicalDump(fdoc))
    return "strategy_round_trip";

  const Player other = Opponent(f.owner);
  const FiniteStateStrategy o = RandomFss(rng, g, other, Pick(rng, 1, 2), false);
  const StrategyProfile profile = f.owner == Player::kCircle ? StrategyProfile{f, o} : StrategyProfile{o, f};
  const InducedChain chain = BuildInducedChain(g, profile);
  for (const auto& row : chain.transitions)
    if (std::abs(row.total() - 1.0) > kInvariantTol) return "chain_stochastic";

  StrategyProfile embedded = profile;
  (f.owner == Player::kCircle ? embedded.circle : embedded.square) = EmbedWithExtraNode(f);
  const InducedChain bigger = BuildInducedChain(g, embedded);
  const ValuationConfig vc = Reach();
  const ValueVector direct = Evaluate(chain, vc);
  if (bigger.size() != chain.size() ||
      std::abs(Evaluate(bigger, vc).initial_value - direct.initial_value) > 1e-12)
    return "embedding";

  const ProductGame product = BuildProductGame(g, profile.square);
  const double via = Evaluate(BuildInducedChain(product.game, {profile.circle, ForcedStrategy(product)}), vc)
                         .initial_value;
  if (std::abs(via - direct.initial_value) > kProductTol) return "product_valuation";
  return "";
}

void Ac8() {
  Engine rng(808);
  std::size_t cases = 0, caught = 0, valid_cases = 0, valid_accepted = 0;
  std::map<std::string, std::size_t> missed, broken;
  while (cases < kFuzzCases) {
    const Posg g = RandomGame(rng);
    const json gdoc = GameToJson(g);
    ++valid_cases;
    valid_accepted += !GameRejected(gdoc);
    const Player owner = U01(rng) < 0.5 ? Player::kCircle : Player::kSquare;
    const FiniteStateStrategy f = RandomFss(rng, g, owner, Pick(rng, 1, 3), false);
    const json fdoc = StrategyToJson(f);
    ++valid_cases;
    valid_accepted += !StrategyRejected(g, fdoc, owner);
    if (const std::string b = BrokenInvariant(rng, g, gdoc, f, fdoc); !b.empty()) ++broken[b];

    std::string label;
    if (U01(rng) < 0.65) {
      json doc = gdoc;
      if (!MutateGame(rng, doc, static_cast<int>(Pick(rng, 0, 13)), label)) continue;
      ++cases;
      if (GameRejected(doc)) ++caught;
      else ++missed[label];
    } else {
      json doc = fdoc;
      if (!MutateStrategy(rng, g, doc, static_cast<int>(Pick(rng, 0, 6)), label)) continue;
      ++cases;
      if (StrategyRejected(g, doc, owner)) ++caught;
      else ++missed[label];
    }
  }
  std::string detail = "cases=" + std::to_string(cases) + " caught=" + std::to_string(caught) +
                       " valid_accepted=" + std::to_string(valid_accepted) + "/" +
                       std::to_string(valid_cases);
  for (const auto& [k, n] : missed) detail += " missed_" + k + "=" + std::to_string(n);
  for (const auto& [k, n] : broken) detail += " broken_" + k + "=" + std::to_string(n);
  Report("AC8", caught == cases && valid_accepted == valid_cases && broken.empty(), detail);
}

}  // namespace

int main() {
  Criterion("AC1", Ac1);
  Criterion("AC2", Ac2);
  Criterion("AC3", Ac3);
  Criterion("AC4", Ac4);
  Criterion("AC5", Ac5);
  Criterion("AC6", Ac6);
  Criterion("AC7", Ac7);
  Criterion("AC8", Ac8);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
