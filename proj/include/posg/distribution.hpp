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
#include <compare>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <utility>
#include <vector>

namespace posg {

inline constexpr double kProbabilityTolerance = 1e-9;

// Dense integer identifier tagged by what it indexes.
template <typename Tag>
struct Id {
  std::size_t value = 0;

  constexpr Id() = default;
  constexpr explicit Id(std::size_t v) : value(v) {}

  friend constexpr auto operator<=>(const Id&, const Id&) = default;
};

struct StateTag {};
struct ActionTag {};
struct ObservationTag {};

using StateId = Id<StateTag>;
using ActionId = Id<ActionTag>;
using ObservationId = Id<ObservationTag>;

template <typename T>
struct KeyIndex {
  static std::size_t get(const T& key) { return static_cast<std::size_t>(key); }
};
template <typename Tag>
struct KeyIndex<Id<Tag>> {
  static std::size_t get(const Id<Tag>& key) { return key.value; }
};

// Finitely supported distribution. Entries are kept in insertion order and
// only positive masses are meaningful; checks are left to the caller so that
// malformed input can be reported instead of rejected on construction.
template <typename Key>
class Distribution {
 public:
  struct Entry {
    Key key;
    double probability;

    friend bool operator==(const Entry&, const Entry&) = default;
  };

  Distribution() = default;
  Distribution(std::initializer_list<Entry> entries) : entries_(entries) {}
  explicit Distribution(std::vector<Entry> entries)
      : entries_(std::move(entries)) {}

  static Distribution Dirac(Key key) { return Distribution({{key, 1.0}}); }

  // Uniform over `keys`; callers pass a nonempty list.
  static Distribution Uniform(const std::vector<Key>& keys) {
    Distribution d;
    const double p = 1.0 / static_cast<double>(keys.size());
    for (const Key& k : keys) d.entries_.push_back({k, p});
    return d;
  }

  void add(Key key, double probability) {
    entries_.push_back({key, probability});
  }

  // Adds mass to an existing key, or appends it.
  void accumulate(Key key, double probability) {
    for (Entry& e : entries_) {
      if (e.key == key) {
        e.probability += probability;
        return;
      }
    }
    entries_.push_back({key, probability});
  }

  const std::vector<Entry>& entries() const { return entries_; }
  std::vector<Entry>& mutable_entries() { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  double total() const {
    double sum = 0.0;
    for (const Entry& e : entries_) sum += e.probability;
    return sum;
  }

  double probability(const Key& key) const {
    double p = 0.0;
    for (const Entry& e : entries_)
      if (e.key == key) p += e.probability;
    return p;
  }

  bool all_positive() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const Entry& e) {
      return std::isfinite(e.probability) && e.probability > 0.0 &&
             e.probability <= 1.0 + kProbabilityTolerance;
    });
  }

  bool has_duplicates() const {
    std::vector<std::size_t> keys;
    keys.reserve(entries_.size());
    for (const Entry& e : entries_) keys.push_back(KeyIndex<Key>::get(e.key));
    std::sort(keys.begin(), keys.end());
    return std::adjacent_find(keys.begin(), keys.end()) != keys.end();
  }

  bool is_normalized(double tolerance = kProbabilityTolerance) const {
    return !entries_.empty() && all_positive() &&
           std::abs(total() - 1.0) <= tolerance;
  }

  bool is_dirac() const { return entries_.size() == 1; }

  std::vector<Key> support() const {
    std::vector<Key> keys;
    for (const Entry& e : entries_)
      if (e.probability > 0.0) keys.push_back(e.key);
    return keys;
  }

  // Sorts by key and merges duplicate keys; drops non-positive masses.
  Distribution canonical() const {
    std::vector<Entry> sorted = entries_;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const Entry& a, const Entry& b) {
                       return KeyIndex<Key>::get(a.key) <
                              KeyIndex<Key>::get(b.key);
                     });
    std::vector<Entry> merged;
    for (const Entry& e : sorted) {
      if (!(e.probability > 0.0)) continue;
      if (!merged.empty() && merged.back().key == e.key) {
        merged.back().probability += e.probability;
      } else {
        merged.push_back(e);
      }
    }
    return Distribution(std::move(merged));
  }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<Entry> entries_;
};

}  // namespace posg
