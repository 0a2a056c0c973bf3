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

// Fast path for best responses: the responder's finite-state strategy is held
// as flat probability arrays over a fixed layout, and every opponent is
// already folded into a compiled product game.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <optional>
#include <thread>
#include <utility>
#include <vector>

#include "posg/error.hpp"
#include "posg/model.hpp"
#include "posg/random.hpp"
#include "posg/strategy.hpp"
#include "posg/valuation.hpp"

namespace posg::detail {

class ResponderLayout {
 public:
  ResponderLayout(const GameIndex& index, Player player, std::size_t nodes)
      : player_(player), nodes_(nodes), classes_(index.decision_classes(player)) {
    if (nodes == 0) throw Error(ErrorCode::kInvalidArgument, "memory bound must be >= 1");
    for (const ObservationClass& c : classes_) {
      if (c.actions.empty())
        throw Error(ErrorCode::kNoAvailableAction,
                    "observation " + std::to_string(c.observation.value) + " has no actions");
      if (c.observation.value >= class_of_.size())
        class_of_.resize(c.observation.value + 1, GameIndex::kNone);
      class_of_[c.observation.value] = &c - classes_.data();
    }
    for (std::size_t n = 0; n < nodes; ++n)
      for (const ObservationClass& c : classes_) {
        action_base_.push_back(action_size_);
        action_size_ += c.actions.size();
      }
  }

  Player player() const { return player_; }
  std::size_t nodes() const { return nodes_; }
  std::size_t num_classes() const { return classes_.size(); }
  std::size_t num_slots() const { return nodes_ * classes_.size(); }
  const ObservationClass& cls(std::size_t c) const { return classes_[c]; }
  std::size_t width(std::size_t c) const { return classes_[c].actions.size(); }

  std::size_t class_of(ObservationId z) const {
    return z.value < class_of_.size() ? class_of_[z.value] : GameIndex::kNone;
  }

  std::size_t slot(std::size_t node, std::size_t c) const {
    return node * classes_.size() + c;
  }
  std::size_t action_size() const { return action_size_; }
  std::size_t memory_size() const { return action_size_ * nodes_; }
  std::size_t action_at(std::size_t node, std::size_t c, std::size_t a) const {
    return action_base_[slot(node, c)] + a;
  }
  std::size_t memory_at(std::size_t node, std::size_t c, std::size_t a, std::size_t next) const {
    return action_at(node, c, a) * nodes_ + next;
  }

 private:
  Player player_;
  std::size_t nodes_;
  std::vector<ObservationClass> classes_;
  std::vector<std::size_t> class_of_;
  std::vector<std::size_t> action_base_;
  std::size_t action_size_ = 0;
};

struct Policy {
  std::vector<double> action;  // indexed by action_at
  std::vector<double> memory;  // indexed by memory_at
};

// Deterministic policy: one action per slot and one successor node per
// (slot, action).
struct DeterministicPolicy {
  std::vector<std::size_t> action;  // per slot, local action index
  std::vector<std::size_t> next;    // per action_at index
};

inline Policy ToPolicy(const ResponderLayout& layout, const DeterministicPolicy& det) {
  Policy p;
  p.action.assign(layout.action_size(), 0.0);
  p.memory.assign(layout.memory_size(), 0.0);
  for (std::size_t n = 0; n < layout.nodes(); ++n)
    for (std::size_t c = 0; c < layout.num_classes(); ++c) {
      const std::size_t chosen = det.action[layout.slot(n, c)];
      p.action[layout.action_at(n, c, chosen)] = 1.0;
      for (std::size_t a = 0; a < layout.width(c); ++a)
        p.memory[layout.memory_at(n, c, a, det.next[layout.action_at(n, c, a)])] = 1.0;
    }
  return p;
}

inline FiniteStateStrategy ToStrategy(const ResponderLayout& layout, const Policy& policy) {
  FiniteStateStrategy fss;
  fss.owner = layout.player();
  fss.nodes = layout.nodes();
  for (std::size_t n = 0; n < layout.nodes(); ++n)
    for (std::size_t c = 0; c < layout.num_classes(); ++c) {
      const ObservationClass& cls = layout.cls(c);
      Distribution<ActionId> row;
      for (std::size_t a = 0; a < cls.actions.size(); ++a) {
        const double w = policy.action[layout.action_at(n, c, a)];
        if (!(w > 0.0)) continue;
        row.add(cls.actions[a], w);
        if (layout.nodes() == 1) continue;
        Distribution<std::size_t> update;
        for (std::size_t m = 0; m < layout.nodes(); ++m) {
          const double q = policy.memory[layout.memory_at(n, c, a, m)];
          if (q > 0.0) update.add(m, q);
        }
        fss.memory_update[{n, cls.observation, cls.actions[a]}] = std::move(update);
      }
      fss.action_map[{n, cls.observation}] = std::move(row);
    }
  return fss;
}

// Product game compiled against a responder layout.
struct CompiledProblem {
  struct Action {
    std::size_t local = 0;
    double cost = 0.0;
    std::vector<std::pair<std::size_t, double>> successors;
  };
  struct State {
    bool decision = false;
    bool target = false;
    std::size_t cls = 0;
    std::vector<Action> actions;  // a single entry for forced states
  };
  std::vector<State> states;
  std::size_t initial = 0;
};

inline CompiledProblem Compile(const Posg& product, const ResponderLayout& layout) {
  const GameIndex index(product);
  CompiledProblem out;
  out.initial = product.initial.value;
  out.states.resize(product.num_states());
  for (std::size_t i = 0; i < product.num_states(); ++i) {
    const StateSpec& s = product.states[i];
    CompiledProblem::State& cs = out.states[i];
    cs.target = index.is_target(s.id);
    cs.decision = s.player == layout.player();
    if (cs.decision) {
      cs.cls = layout.class_of(s.observation(layout.player()));
      if (cs.cls == GameIndex::kNone)
        throw Error(ErrorCode::kIncompatibleStrategy, "product observation unknown to responder");
    } else if (s.actions.size() != 1) {
      throw Error(ErrorCode::kIncompatibleStrategy, "opponent state is not forced");
    }
    for (const ActionSpec& a : s.actions) {
      CompiledProblem::Action ca;
      ca.cost = a.cost;
      if (cs.decision) {
        const auto& acts = layout.cls(cs.cls).actions;
        ca.local = std::lower_bound(acts.begin(), acts.end(), a.id) - acts.begin();
      }
      for (const auto& e : a.transitions) ca.successors.emplace_back(e.key.value, e.probability);
      cs.actions.push_back(std::move(ca));
    }
  }
  return out;
}

struct PolicyValue {
  double value = 0.0;
  // d value / d(joint weight of choosing action a and moving to node m) at
  // each slot, indexed by memory_at. Empty unless requested.
  std::vector<double> joint;
};

inline PolicyValue EvaluatePolicy(const CompiledProblem& problem, const ResponderLayout& layout,
                                  const Policy& policy, ObjectiveKind objective, double gamma,
                                  bool with_joint) {
  const std::size_t k = layout.nodes();
  const bool cost_mode = objective == ObjectiveKind::kDiscountedCost;
  const double g = cost_mode ? gamma : 1.0;
  SparseChain chain;
  for (std::size_t s = 0; s < problem.states.size(); ++s) {
    const CompiledProblem::State& st = problem.states[s];
    for (std::size_t n = 0; n < k; ++n) {
      double cost = 0.0;
      if (!st.target) {
        if (st.decision) {
          for (const auto& a : st.actions) {
            const double w = policy.action[layout.action_at(n, st.cls, a.local)];
            if (w == 0.0) continue;
            cost += w * a.cost;
            for (std::size_t m = 0; m < k; ++m) {
              const double q = k == 1 ? 1.0 : policy.memory[layout.memory_at(n, st.cls, a.local, m)];
              if (q == 0.0) continue;
              for (const auto& [t, p] : a.successors) chain.push(t * k + m, w * p * q);
            }
          }
        } else {
          const auto& a = st.actions.front();
          cost = a.cost;
          for (const auto& [t, p] : a.successors) chain.push(t * k + n, p);
        }
      }
      chain.end_row(cost, st.target);
    }
  }
  const std::size_t init = problem.initial * k;
  const LinearSolution sol =
      SolveLinear(chain, objective, gamma, with_joint ? std::optional<std::size_t>(init) : std::nullopt);
  PolicyValue out;
  out.value = sol.values[init];
  if (!with_joint) return out;
  out.joint.assign(layout.memory_size(), 0.0);
  for (std::size_t s = 0; s < problem.states.size(); ++s) {
    const CompiledProblem::State& st = problem.states[s];
    if (!st.decision || st.target) continue;
    for (std::size_t n = 0; n < k; ++n) {
      const double lambda = sol.adjoint[s * k + n];
      if (lambda == 0.0) continue;
      for (const auto& a : st.actions)
        for (std::size_t m = 0; m < k; ++m) {
          double q = cost_mode ? a.cost : 0.0;
          for (const auto& [t, p] : a.successors) q += g * p * sol.values[t * k + m];
          out.joint[layout.memory_at(n, st.cls, a.local, m)] += lambda * q;
        }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search over responder policies. The responder maximizes
// score = min_j sign * V_j over the opponents j in the set.

struct InnerSearchConfig {
  double initial_step = 1.0;
  double max_step = 16.0;
  std::size_t max_iterations = 2000;
  double tolerance = 1e-6;   // relative improvement considered stagnant
  std::size_t patience = 25; // stagnant iterations before stopping
  std::size_t polish_rounds = 200;
};

struct SearchSet {
  const ResponderLayout* layout = nullptr;
  std::vector<const CompiledProblem*> problems;
  ObjectiveKind objective = ObjectiveKind::kReachProbability;
  double gamma = kDefaultDiscount;
  double sign = 1.0;
};

struct Scored {
  double score = -std::numeric_limits<double>::infinity();  // exact min over the set
  double smooth = 0.0;
  std::vector<double> values;  // unsigned V_j
  std::vector<double> joint;   // d smooth / d joint weights, sign applied
  bool failed = false;         // some chain was numerically singular
};

inline Scored ScorePolicy(const SearchSet& set, const Policy& policy, double temperature,
                          bool with_joint) {
  Scored out;
  std::vector<std::vector<double>> joints;
  std::vector<double> signed_values;
  for (const CompiledProblem* p : set.problems) {
    PolicyValue v;
    try {
      v = EvaluatePolicy(*p, *set.layout, policy, set.objective, set.gamma, with_joint);
    } catch (const Error& e) {
      // Near-zero mixing can leave a class whose leak vanishes in rounding.
      if (e.code() != ErrorCode::kSolverDivergence) throw;
      Scored bad;
      bad.smooth = -std::numeric_limits<double>::infinity();
      bad.failed = true;
      return bad;
    }
    out.values.push_back(v.value);
    signed_values.push_back(set.sign * v.value);
    if (with_joint) joints.push_back(std::move(v.joint));
  }
  out.score = *std::min_element(signed_values.begin(), signed_values.end());
  // Soft minimum: -t log sum exp(-x/t), shifted for stability.
  std::vector<double> weights(signed_values.size());
  double z = 0.0;
  for (std::size_t j = 0; j < signed_values.size(); ++j) {
    weights[j] = std::exp(-(signed_values[j] - out.score) / temperature);
    z += weights[j];
  }
  out.smooth = out.score - temperature * std::log(z);
  if (with_joint) {
    out.joint.assign(set.layout->memory_size(), 0.0);
    for (std::size_t j = 0; j < joints.size(); ++j) {
      const double w = set.sign * weights[j] / z;
      for (std::size_t i = 0; i < out.joint.size(); ++i) out.joint[i] += w * joints[j][i];
    }
  }
  return out;
}

struct Logits {
  std::vector<double> action;
  std::vector<double> memory;
};

inline Logits ZeroLogits(const ResponderLayout& layout) {
  return {std::vector<double>(layout.action_size(), 0.0),
          std::vector<double>(layout.memory_size(), 0.0)};
}

inline Logits RandomLogits(const ResponderLayout& layout, std::uint64_t seed) {
  Rng rng(seed);
  Logits l = ZeroLogits(layout);
  for (double& x : l.action) x = rng.normal();
  if (layout.nodes() > 1)
    for (double& x : l.memory) x = rng.normal();
  return l;
}

inline void SoftmaxInto(const double* logits, double* out, std::size_t n) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) hi = std::max(hi, logits[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(logits[i] - hi);
    z += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= z;
}

inline Policy PolicyFromLogits(const ResponderLayout& layout, const Logits& logits) {
  Policy p;
  p.action.assign(layout.action_size(), 0.0);
  p.memory.assign(layout.memory_size(), 1.0);
  const std::size_t k = layout.nodes();
  for (std::size_t n = 0; n < k; ++n)
    for (std::size_t c = 0; c < layout.num_classes(); ++c) {
      const std::size_t base = layout.action_at(n, c, 0);
      SoftmaxInto(&logits.action[base], &p.action[base], layout.width(c));
      if (k > 1)
        for (std::size_t a = 0; a < layout.width(c); ++a) {
          const std::size_t mb = layout.memory_at(n, c, a, 0);
          SoftmaxInto(&logits.memory[mb], &p.memory[mb], k);
        }
    }
  return p;
}

// Chain rule from joint weights through the probability rows to the logits.
inline Logits LogitGradient(const ResponderLayout& layout, const Policy& p,
                            const std::vector<double>& joint) {
  Logits grad = ZeroLogits(layout);
  const std::size_t k = layout.nodes();
  for (std::size_t n = 0; n < k; ++n)
    for (std::size_t c = 0; c < layout.num_classes(); ++c) {
      const std::size_t width = layout.width(c);
      std::vector<double> ga(width, 0.0);
      for (std::size_t a = 0; a < width; ++a)
        for (std::size_t m = 0; m < k; ++m) {
          const std::size_t idx = layout.memory_at(n, c, a, m);
          ga[a] += p.memory[idx] * joint[idx];
        }
      double mean = 0.0;
      for (std::size_t a = 0; a < width; ++a) mean += p.action[layout.action_at(n, c, a)] * ga[a];
      for (std::size_t a = 0; a < width; ++a) {
        const std::size_t ai = layout.action_at(n, c, a);
        grad.action[ai] = p.action[ai] * (ga[a] - mean);
        if (k == 1) continue;
        double mm = 0.0;
        for (std::size_t m = 0; m < k; ++m) {
          const std::size_t idx = layout.memory_at(n, c, a, m);
          mm += p.memory[idx] * joint[idx];
        }
        for (std::size_t m = 0; m < k; ++m) {
          const std::size_t idx = layout.memory_at(n, c, a, m);
          grad.memory[idx] = p.action[ai] * p.memory[idx] * (joint[idx] - mm);
        }
      }
    }
  return grad;
}

struct SearchCandidate {
  Policy policy;
  Logits logits;
  double score = -std::numeric_limits<double>::infinity();
  std::vector<double> values;
  bool deterministic = false;
  bool from_enumeration = false;
};

inline bool Improves(double candidate, double incumbent) {
  return candidate > incumbent + 1e-12 * std::max(1.0, std::abs(incumbent));
}

// Logits stay within +-kLogitBound, which keeps every mixed probability near
// or above 1e-6. Smaller weights leave classes whose only exit vanishes in
// rounding, both here and in games built from the resulting strategy.
inline constexpr double kLogitBound = 7.0;

// Backtracking ascent on the smoothed score; the step is the largest logit
// change and adapts to acceptance.
inline Logits AscendLogits(const SearchSet& set, Logits logits, const InnerSearchConfig& config,
                           double temperature) {
  const ResponderLayout& layout = *set.layout;
  Policy policy = PolicyFromLogits(layout, logits);
  Scored current = ScorePolicy(set, policy, temperature, true);
  if (current.failed) return logits;
  double step = config.initial_step;
  std::size_t stagnant = 0;
  for (std::size_t it = 0; it < config.max_iterations; ++it) {
    const Logits grad = LogitGradient(layout, policy, current.joint);
    double norm = 0.0;
    for (double x : grad.action) norm = std::max(norm, std::abs(x));
    for (double x : grad.memory) norm = std::max(norm, std::abs(x));
    if (norm < 1e-14) break;
    bool accepted = false;
    while (step > 1e-7) {
      Logits trial = logits;
      auto move = [&](double& x, double g) {
        x = std::clamp(x + step * g / norm, -kLogitBound, kLogitBound);
      };
      for (std::size_t i = 0; i < trial.action.size(); ++i) move(trial.action[i], grad.action[i]);
      for (std::size_t i = 0; i < trial.memory.size(); ++i) move(trial.memory[i], grad.memory[i]);
      Policy trial_policy = PolicyFromLogits(layout, trial);
      Scored scored = ScorePolicy(set, trial_policy, temperature, true);
      if (scored.smooth > current.smooth) {
        const double gain = (scored.smooth - current.smooth) / std::max(std::abs(current.smooth), 1e-12);
        stagnant = gain < config.tolerance ? stagnant + 1 : 0;
        logits = std::move(trial);
        policy = std::move(trial_policy);
        current = std::move(scored);
        step = std::min(step * 2.0, config.max_step);
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || stagnant >= config.patience) break;
  }
  return logits;
}

inline DeterministicPolicy RoundLogits(const ResponderLayout& layout, const Logits& logits) {
  DeterministicPolicy det;
  det.action.assign(layout.num_slots(), 0);
  det.next.assign(layout.action_size(), 0);
  const std::size_t k = layout.nodes();
  for (std::size_t n = 0; n < k; ++n)
    for (std::size_t c = 0; c < layout.num_classes(); ++c) {
      std::size_t best = 0;
      for (std::size_t a = 1; a < layout.width(c); ++a)
        if (logits.action[layout.action_at(n, c, a)] > logits.action[layout.action_at(n, c, best)]) best = a;
      det.action[layout.slot(n, c)] = best;
      for (std::size_t a = 0; a < layout.width(c); ++a) {
        std::size_t m_best = 0;
        for (std::size_t m = 1; m < k; ++m)
          if (logits.memory[layout.memory_at(n, c, a, m)] > logits.memory[layout.memory_at(n, c, a, m_best)])
            m_best = m;
        det.next[layout.action_at(n, c, a)] = m_best;
      }
    }
  return det;
}

// Greedy choice of (action, successor node) per slot from joint weights;
// returns the policy and the largest per-slot margin over `base`.
inline DeterministicPolicy GreedyFromJoint(const ResponderLayout& layout,
                                           const DeterministicPolicy& base,
                                           const std::vector<double>& joint,
                                           std::vector<std::pair<double, std::size_t>>* margins) {
  DeterministicPolicy out = base;
  const std::size_t k = layout.nodes();
  for (std::size_t n = 0; n < k; ++n)
    for (std::size_t c = 0; c < layout.num_classes(); ++c) {
      const std::size_t slot = layout.slot(n, c);
      const std::size_t a0 = base.action[slot];
      const double current = joint[layout.memory_at(n, c, a0, base.next[layout.action_at(n, c, a0)])];
      double best = current;
      std::size_t best_a = a0;
      std::size_t best_m = base.next[layout.action_at(n, c, a0)];
      for (std::size_t a = 0; a < layout.width(c); ++a)
        for (std::size_t m = 0; m < k; ++m) {
          const double v = joint[layout.memory_at(n, c, a, m)];
          if (Improves(v, best)) {
            best = v;
            best_a = a;
            best_m = m;
          }
        }
      if (best_a != a0 || best_m != base.next[layout.action_at(n, c, a0)]) {
        out.action[slot] = best_a;
        out.next[layout.action_at(n, c, best_a)] = best_m;
        if (margins) margins->emplace_back(best - current, slot);
      }
    }
  return out;
}

// Policy-improvement style local search over deterministic policies.
inline SearchCandidate PolishDeterministic(const SearchSet& set, DeterministicPolicy det,
                                           const InnerSearchConfig& config, double temperature) {
  const ResponderLayout& layout = *set.layout;
  Scored current = ScorePolicy(set, ToPolicy(layout, det), temperature, true);
  for (std::size_t round = 0; round < config.polish_rounds && !current.failed; ++round) {
    std::vector<std::pair<double, std::size_t>> margins;
    DeterministicPolicy all = GreedyFromJoint(layout, det, current.joint, &margins);
    if (margins.empty()) break;
    Scored scored = ScorePolicy(set, ToPolicy(layout, all), temperature, true);
    if (Improves(scored.score, current.score)) {
      det = std::move(all);
      current = std::move(scored);
      continue;
    }
    // Fall back to the single switch with the largest margin.
    const auto best = std::max_element(margins.begin(), margins.end());
    DeterministicPolicy single = det;
    const std::size_t slot = best->second;
    single.action[slot] = all.action[slot];
    const std::size_t n = slot / layout.num_classes();
    const std::size_t c = slot % layout.num_classes();
    single.next[layout.action_at(n, c, all.action[slot])] =
        all.next[layout.action_at(n, c, all.action[slot])];
    scored = ScorePolicy(set, ToPolicy(layout, single), temperature, true);
    if (!Improves(scored.score, current.score)) break;
    det = std::move(single);
    current = std::move(scored);
  }
  SearchCandidate out;
  out.policy = ToPolicy(layout, det);
  out.score = current.score;
  out.values = current.values;
  out.deterministic = true;
  out.logits = ZeroLogits(layout);
  for (std::size_t i = 0; i < out.logits.action.size(); ++i)
    out.logits.action[i] = out.policy.action[i] > 0.0 ? 4.0 : 0.0;
  for (std::size_t i = 0; i < out.logits.memory.size(); ++i)
    out.logits.memory[i] = out.policy.memory[i] > 0.0 ? 4.0 : 0.0;
  return out;
}

inline double Temperature(const SearchSet& set, const Logits& start) {
  const Scored s = ScorePolicy(set, PolicyFromLogits(*set.layout, start), 1.0, false);
  double scale = 1.0;  // also the fallback when the start cannot be scored
  for (double v : s.values) scale = std::max(scale, std::abs(v));
  return 1e-3 * scale;
}

// One local-search run: ascent from `start`, then deterministic polishing
// from the rounded logits and from the greedy step at the ascent optimum.
inline SearchCandidate RunLocalSearch(const SearchSet& set, const Logits& start,
                                      const InnerSearchConfig& config) {
  const ResponderLayout& layout = *set.layout;
  const double temperature = Temperature(set, start);
  SearchCandidate stochastic;
  stochastic.logits = AscendLogits(set, start, config, temperature);
  stochastic.policy = PolicyFromLogits(layout, stochastic.logits);
  const Scored at_opt = ScorePolicy(set, stochastic.policy, temperature, true);
  stochastic.score = at_opt.score;
  stochastic.values = at_opt.values;

  const DeterministicPolicy rounded = RoundLogits(layout, stochastic.logits);
  DeterministicPolicy greedy = rounded;
  if (!at_opt.failed) {
    // Greedy against the stochastic optimum's joint weights from scratch.
    for (std::size_t n = 0; n < layout.nodes(); ++n)
      for (std::size_t c = 0; c < layout.num_classes(); ++c) {
        double best = -std::numeric_limits<double>::infinity();
        for (std::size_t a = 0; a < layout.width(c); ++a)
          for (std::size_t m = 0; m < layout.nodes(); ++m) {
            const double v = at_opt.joint[layout.memory_at(n, c, a, m)];
            if (v > best) {
              best = v;
              greedy.action[layout.slot(n, c)] = a;
              greedy.next[layout.action_at(n, c, a)] = m;
            }
          }
      }
  }
  SearchCandidate best = PolishDeterministic(set, rounded, config, temperature);
  SearchCandidate other = PolishDeterministic(set, greedy, config, temperature);
  if (Improves(other.score, best.score)) best = std::move(other);
  // Prefer the deterministic strategy unless the stochastic one is better.
  if (Improves(stochastic.score, best.score)) return stochastic;
  return best;
}

// Exhaustive search over deterministic policies with initial node 0.
inline SearchCandidate EnumerateBest(const SearchSet& set) {
  const ResponderLayout& layout = *set.layout;
  const std::size_t k = layout.nodes();
  std::vector<std::size_t> radix;
  for (std::size_t n = 0; n < k; ++n)
    for (std::size_t c = 0; c < layout.num_classes(); ++c) radix.push_back(layout.width(c) * k);
  std::vector<std::size_t> digits(radix.size(), 0);
  DeterministicPolicy det;
  det.action.assign(layout.num_slots(), 0);
  det.next.assign(layout.action_size(), 0);
  SearchCandidate best;
  while (true) {
    for (std::size_t slot = 0; slot < digits.size(); ++slot) {
      const std::size_t n = slot / layout.num_classes();
      const std::size_t c = slot % layout.num_classes();
      const std::size_t a = digits[slot] / k;
      det.action[slot] = a;
      for (std::size_t b = 0; b < layout.width(c); ++b) det.next[layout.action_at(n, c, b)] = 0;
      det.next[layout.action_at(n, c, a)] = digits[slot] % k;
    }
    Policy policy = ToPolicy(layout, det);
    const Scored s = ScorePolicy(set, policy, 1.0, false);
    if (Improves(s.score, best.score) || best.values.empty()) {
      best.policy = std::move(policy);
      best.score = s.score;
      best.values = s.values;
    }
    std::size_t i = digits.size();
    bool carry = true;
    while (carry && i > 0) {
      --i;
      if (++digits[i] < radix[i]) carry = false;
      else digits[i] = 0;
    }
    if (carry) break;
  }
  best.deterministic = true;
  best.from_enumeration = true;
  best.logits = ZeroLogits(layout);
  return best;
}

inline double DeterministicCount(const ResponderLayout& layout) {
  double count = 1.0;
  for (std::size_t n = 0; n < layout.nodes(); ++n)
    for (std::size_t c = 0; c < layout.num_classes(); ++c)
      count *= static_cast<double>(layout.width(c) * layout.nodes());
  return count;
}

// Runs `fn(i)` for i in [0, count) on up to `threads` workers. Results must be
// written to per-index slots so the outcome is independent of scheduling.
template <typename Fn>
void ParallelFor(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t w = 0; w < threads; ++w)
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += threads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace posg::detail
