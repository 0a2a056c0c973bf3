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

// posg-synth: validate, solve, evaluate and simulate partially observable
// stochastic games, and generate grid-world scenarios.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "posg/posg.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNotConverged = 3;

int ExitCodeFor(posg::ErrorCode code) {
  switch (code) {
    case posg::ErrorCode::kParseError:
    case posg::ErrorCode::kInvalidArgument:
      return kExitUsage;
    default:
      return kExitInvalid;
  }
}

void Emit(const posg::json& doc, const std::string& out) {
  const std::string text = posg::CanonicalDump(doc) + "\n";
  if (out.empty())
    std::cout << text;
  else
    posg::WriteFile(out, text);
}

posg::ObjectiveKind ParseObjective(const std::string& name) {
  return name == "cost" ? posg::ObjectiveKind::kDiscountedCost : posg::ObjectiveKind::kReachProbability;
}

std::uint64_t ResolveSeed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t drawn = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << drawn << "\n";
  return drawn;
}

// Loads a game and enforces validity (exit 1 on errors, report on stderr).
posg::Posg LoadValidGame(const std::string& path) {
  posg::Posg game = posg::LoadGame(path);
  const posg::ValidationReport report = posg::Validate(game);
  if (!report.ok()) {
    std::cerr << posg::CanonicalDump(posg::ReportToJson(report)) << "\n";
    throw posg::Error(posg::ErrorCode::kInvalidGame, path + ": " + report.summary());
  }
  return game;
}

posg::StrategyProfile LoadProfile(const posg::Posg& game, const std::string& circle,
                                  const std::string& square) {
  posg::StrategyProfile profile{posg::LoadStrategy(circle), posg::LoadStrategy(square)};
  posg::RequireCompatible(game, profile.circle, posg::Player::kCircle);
  posg::RequireCompatible(game, profile.square, posg::Player::kSquare);
  return profile;
}

std::string TupleKey(const posg::ChainTuple& t) {
  return std::to_string(t.state.value) + "," + std::to_string(t.circle_node) + "," +
         std::to_string(t.square_node);
}

struct Options {
  std::string game;
  std::string circle;
  std::string square;
  std::string scenario;
  std::string out;
  std::string legend;
  std::string trace_dir;
  std::string objective = "probability";
  double gamma = posg::kDefaultDiscount;
  std::optional<std::uint64_t> seed;
  std::size_t mem_circle = 1;
  std::size_t mem_square = 1;
  std::size_t threads = 0;
  std::size_t outer_iterations = 50;
  std::size_t restarts = 16;
  std::size_t max_inner_iterations = 2000;
  double epsilon = 1e-4;
  std::size_t episodes = 1000;
  std::size_t horizon = 100;
};

int CmdValidate(const Options& o) {
  const posg::Posg game = posg::LoadGame(o.game);
  const posg::ValidationReport report = posg::Validate(game);
  Emit(posg::ReportToJson(report), o.out);
  return report.ok() ? kExitOk : kExitInvalid;
}

int CmdSolve(const Options& o) {
  posg::SynthesisConfig config;
  config.memory_circle = o.mem_circle;
  config.memory_square = o.mem_square;
  config.objective = ParseObjective(o.objective);
  config.gamma = o.gamma;
  config.outer_iterations = o.outer_iterations;
  config.restarts = o.restarts;
  config.inner.max_iterations = o.max_inner_iterations;
  config.epsilon = o.epsilon;
  config.threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
  if (const char* dir = std::getenv("POSG_SYNTH_CACHE_DIR")) config.cache_dir = dir;
  posg::CheckConfig(config);
  config.master_seed = ResolveSeed(o.seed);
  const posg::Posg game = LoadValidGame(o.game);
  const posg::SynthesisResult result = posg::SolveMinMax(game, config);
  Emit(posg::ResultToJson(result, config), o.out);
  if (!result.converged) {
    std::cerr << "not converged: gap " << result.gap << " after " << result.iterations_used
              << " iterations\n";
    return kExitNotConverged;
  }
  return kExitOk;
}

int CmdEval(const Options& o) {
  posg::ValuationConfig vc;
  vc.objective = ParseObjective(o.objective);
  vc.gamma = o.gamma;
  posg::CheckDiscount(vc.gamma);
  const posg::Posg game = LoadValidGame(o.game);
  const posg::StrategyProfile profile = LoadProfile(game, o.circle, o.square);
  const posg::InducedChain chain = posg::BuildInducedChain(game, profile);
  const posg::ValueVector values = posg::Evaluate(chain, vc);
  posg::json per_tuple = posg::json::object();
  for (std::size_t i = 0; i < chain.size(); ++i) per_tuple[TupleKey(chain.tuples[i])] = values.values[i];
  Emit({{"initial_value", values.initial_value}, {"values", per_tuple}}, o.out);
  return kExitOk;
}

int CmdSimulate(const Options& o) {
  posg::CheckDiscount(o.gamma);
  if (o.horizon == 0) throw posg::Error(posg::ErrorCode::kInvalidArgument, "horizon must be >= 1");
  const std::uint64_t seed = ResolveSeed(o.seed);
  const posg::Posg game = LoadValidGame(o.game);
  const posg::StrategyProfile profile = LoadProfile(game, o.circle, o.square);
  const posg::InducedChain chain = posg::BuildInducedChain(game, profile);
  if (!o.trace_dir.empty()) std::filesystem::create_directories(o.trace_dir);
  posg::SimulationOptions options;
  options.gamma = o.gamma;
  const posg::SimulationSummary summary = posg::SimulateMany(
      chain, seed, o.episodes, o.horizon, options, [&](std::size_t e, const posg::Episode& ep) {
        if (o.trace_dir.empty()) return;
        std::string text = "step\tstate\tcnode\tsnode\taction\tcost\tcumulative\n";
        char buf[64];
        for (const posg::TraceStep& s : ep.trace) {
          text += std::to_string(s.step) + "\t" + std::to_string(s.tuple.state.value) + "\t" +
                  std::to_string(s.tuple.circle_node) + "\t" + std::to_string(s.tuple.square_node) +
                  "\t" + std::to_string(s.action.value) + "\t";
          std::snprintf(buf, sizeof buf, "%.17g", s.cost);
          text += buf;
          std::snprintf(buf, sizeof buf, "\t%.17g\n", s.cumulative);
          text += buf;
        }
        posg::WriteFile((std::filesystem::path(o.trace_dir) / ("episode-" + std::to_string(e) + ".tsv")).string(),
                        text);
      });
  Emit({{"episodes", summary.episodes},
        {"reached", summary.reached},
        {"reach_frequency", summary.reach_frequency},
        {"reach_standard_error", summary.reach_standard_error},
        {"mean_cost", summary.mean_cost},
        {"mean_discounted_cost", summary.mean_discounted_cost},
        {"horizon", o.horizon},
        {"seed", seed}},
       o.out);
  return kExitOk;
}

int CmdGridworld(const Options& o) {
  const posg::grid::GridScenario scenario = posg::grid::LoadScenario(o.scenario);
  const posg::grid::GridGameArtifacts art = posg::grid::Generate(scenario);
  Emit(posg::GameToJson(art.game), o.out);
  std::string legend_path = o.legend;
  if (legend_path.empty() && !o.out.empty()) {
    std::filesystem::path p(o.out);
    legend_path = (p.parent_path() / (p.stem().string() + ".legend.json")).string();
  }
  if (!legend_path.empty()) posg::WriteFile(legend_path, posg::CanonicalDump(art.legend()) + "\n");
  std::cerr << "states: " << art.state_count << ", observations: " << art.observation_counts[0]
            << " (circle) " << art.observation_counts[1] << " (square)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strategy synthesis for partially observable stochastic games", "posg-synth"};
  app.require_subcommand(1);
  Options o;

  auto common_out = [&](CLI::App* sub) { sub->add_option("--out", o.out, "Write output here instead of stdout"); };
  auto objective = [&](CLI::App* sub) {
    sub->add_option("--objective", o.objective, "probability or cost")
        ->check(CLI::IsMember({"probability", "cost"}));
    sub->add_option("--gamma", o.gamma, "Discount factor for the cost objective");
  };

  CLI::App* validate = app.add_subcommand("validate", "Check a game file");
  validate->add_option("game", o.game)->required();
  common_out(validate);

  CLI::App* solve = app.add_subcommand("solve", "Synthesize a defender strategy");
  solve->add_option("game", o.game)->required();
  solve->add_option("--mem-circle", o.mem_circle, "Defender memory nodes");
  solve->add_option("--mem-square", o.mem_square, "Adversary memory nodes");
  objective(solve);
  solve->add_option("--seed", o.seed, "Master seed");
  solve->add_option("--threads", o.threads, "Restart parallelism (0 = all cores)");
  solve->add_option("--outer-iterations", o.outer_iterations);
  solve->add_option("--restarts", o.restarts);
  solve->add_option("--max-inner-iterations", o.max_inner_iterations);
  solve->add_option("--epsilon", o.epsilon, "Certificate gap tolerance");
  common_out(solve);

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a strategy profile");
  eval->add_option("game", o.game)->required();
  eval->add_option("circle", o.circle, "Circle strategy file")->required();
  eval->add_option("square", o.square, "Square strategy file")->required();
  objective(eval);
  common_out(eval);

  CLI::App* simulate = app.add_subcommand("simulate", "Sample episodes of a strategy profile");
  simulate->add_option("game", o.game)->required();
  simulate->add_option("circle", o.circle)->required();
  simulate->add_option("square", o.square)->required();
  simulate->add_option("--seed", o.seed);
  simulate->add_option("--episodes", o.episodes);
  simulate->add_option("--horizon", o.horizon);
  simulate->add_option("--gamma", o.gamma);
  simulate->add_option("--trace-dir", o.trace_dir, "Write one TSV trace per episode");
  common_out(simulate);

  CLI::App* gridworld = app.add_subcommand("gridworld", "Generate a grid-world game");
  gridworld->add_option("scenario", o.scenario)->required();
  gridworld->add_option("--legend", o.legend, "Legend path (default: next to --out)");
  common_out(gridworld);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (validate->parsed()) return CmdValidate(o);
    if (solve->parsed()) return CmdSolve(o);
    if (eval->parsed()) return CmdEval(o);
    if (simulate->parsed()) return CmdSimulate(o);
    if (gridworld->parsed()) return CmdGridworld(o);
  } catch (const posg::Error& e) {
    std::cerr << "error [" << posg::ErrorCodeName(e.code()) << "]: " << e.what() << "\n";
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvalid;
  }
  return kExitUsage;
}
