// Copyright 2026 The Authors.
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

#ifndef DKPP_SUBSET_HPP
#define DKPP_SUBSET_HPP

#include "core.hpp"

#include <cstdint>
#include <initializer_list>
#include <ostream>
#include <vector>

namespace dkpp {

/// A subset of the ground set {0, ..., N-1}, stored as strictly increasing
/// item indices.
class Subset {
 public:
  Subset() = default;

  /// Sorts the indices; throws on duplicates or negative indices.
  explicit Subset(std::vector<Index> items) : items_(std::move(items)) {
    std::sort(items_.begin(), items_.end());
    for (std::size_t s = 0; s < items_.size(); ++s) {
      if (items_[s] < 0) throw InvalidArgument("negative item index");
      if (s > 0 && items_[s] == items_[s - 1]) {
        throw InvalidArgument("duplicate item " + std::to_string(items_[s]));
      }
    }
  }

  Subset(std::initializer_list<Index> items)
      : Subset(std::vector<Index>(items)) {}

  static Subset full(Index n) {
    Subset a;
    a.items_.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) a.items_[static_cast<std::size_t>(i)] = i;
    return a;
  }

  /// Bit i of `mask` selects item i.
  static Subset from_mask(std::uint64_t mask) {
    Subset a;
    for (Index i = 0; mask != 0; ++i, mask >>= 1) {
      if (mask & 1u) a.items_.push_back(i);
    }
    return a;
  }

  std::uint64_t to_mask() const {
    std::uint64_t mask = 0;
    for (Index i : items_) {
      if (i >= 64) throw InvalidArgument("item index too large for a bit mask");
      mask |= std::uint64_t{1} << i;
    }
    return mask;
  }

  const std::vector<Index>& items() const { return items_; }
  Index size() const { return static_cast<Index>(items_.size()); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }
  Index operator[](Index s) const { return items_[static_cast<std::size_t>(s)]; }

  bool contains(Index i) const {
    return std::binary_search(items_.begin(), items_.end(), i);
  }

  /// Throws unless every item is below n.
  void validate(Index n) const {
    if (!items_.empty() && items_.back() >= n) {
      throw InvalidArgument("item " + std::to_string(items_.back()) +
                            " out of range for ground set of size " +
                            std::to_string(n));
    }
  }

  Subset with(Index i) const {
    Subset a = *this;
    auto it = std::lower_bound(a.items_.begin(), a.items_.end(), i);
    if (it == a.items_.end() || *it != i) a.items_.insert(it, i);
    return a;
  }

  Subset without(Index i) const {
    Subset a = *this;
    auto it = std::lower_bound(a.items_.begin(), a.items_.end(), i);
    if (it != a.items_.end() && *it == i) a.items_.erase(it);
    return a;
  }

  bool is_subset_of(const Subset& other) const {
    return std::includes(other.items_.begin(), other.items_.end(),
                         items_.begin(), items_.end());
  }

  friend Subset set_union(const Subset& a, const Subset& b) {
    Subset r;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(),
                   std::back_inserter(r.items_));
    return r;
  }

  friend Subset set_intersection(const Subset& a, const Subset& b) {
    Subset r;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                          std::back_inserter(r.items_));
    return r;
  }

  friend Subset set_difference(const Subset& a, const Subset& b) {
    Subset r;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(r.items_));
    return r;
  }

  friend bool operator==(const Subset&, const Subset&) = default;

  /// Lexicographic order on the sorted item sequences; the empty set is
  /// smallest.
  friend bool operator<(const Subset& a, const Subset& b) {
    return a.items_ < b.items_;
  }

  friend std::ostream& operator<<(std::ostream& os, const Subset& a) {
    os << '{';
    for (std::size_t s = 0; s < a.items_.size(); ++s) {
      if (s) os << ',';
      os << a.items_[s];
    }
    return os << '}';
  }

 private:
  std::vector<Index> items_;
};

/// Space-separated item indices, as used by the text formats.
inline std::string to_item_list(const Subset& a) {
  std::string out;
  for (Index i : a) {
    if (!out.empty()) out += ' ';
    out += std::to_string(i);
  }
  return out;
}

}  // namespace dkpp

#endif  // DKPP_SUBSET_HPP
