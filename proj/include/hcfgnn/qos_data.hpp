// Copyright 2026 The hcfgnn Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Dense QoS matrix ingestion and reproducible train/valid/test splits.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hcfgnn/error.hpp"
#include "hcfgnn/random.hpp"

namespace hcfgnn {

// WSDREAM uses -1 for failed invocations.
inline constexpr double kDefaultMissingMark = -1.0;

class QosMatrix {
 public:
  QosMatrix() = default;

  // Builds a matrix from row-major values. An entry is unobserved when it equals
  // missing_mark or, if negative_is_missing, when it is negative.
  QosMatrix(std::size_t n_users, std::size_t n_items, std::vector<double> values,
            double missing_mark = kDefaultMissingMark, bool negative_is_missing = true)
      : n_users_(n_users), n_items_(n_items), missing_mark_(missing_mark), values_(std::move(values)) {
    if (n_users == 0 || n_items == 0) throw FormatError("QosMatrix: empty shape");
    if (values_.size() != n_users * n_items) throw ShapeError("QosMatrix: value count does not match shape");
    observed_.resize(values_.size());
    for (std::size_t k = 0; k < values_.size(); ++k) {
      const double v = values_[k];
      if (!std::isfinite(v)) throw FormatError("QosMatrix: non-finite value at flat index " + std::to_string(k));
      const bool missing = v == missing_mark || (negative_is_missing && v < 0.0);
      observed_[k] = missing ? 0 : 1;
      observed_count_ += observed_[k];
    }
  }

  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  double missing_mark() const { return missing_mark_; }
  std::size_t observed_count() const { return observed_count_; }

  double value(std::size_t user, std::size_t item) const { return values_[user * n_items_ + item]; }
  bool observed(std::size_t user, std::size_t item) const { return observed_[user * n_items_ + item] != 0; }
  std::span<const double> values() const { return values_; }

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  double missing_mark_ = kDefaultMissingMark;
  std::size_t observed_count_ = 0;
  std::vector<double> values_;
  std::vector<std::uint8_t> observed_;
};

namespace detail {

inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

}  // namespace detail

// Parses whitespace-delimited dense text. Rows are newline separated; blank
// lines are ignored.
inline QosMatrix parse_matrix(std::string_view text, double missing_mark = kDefaultMissingMark,
                              bool negative_is_missing = true) {
  std::vector<double> values;
  std::size_t n_cols = 0;
  std::size_t n_rows = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;

    std::size_t cols = 0;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && detail::is_space(line[i])) ++i;
      if (i >= line.size()) break;
      std::size_t j = i;
      while (j < line.size() && !detail::is_space(line[j])) ++j;
      const std::string_view tok = line.substr(i, j - i);
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
      if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
        throw ParseError("line " + std::to_string(line_no) + ", column " + std::to_string(cols + 1) +
                         ": cannot parse '" + std::string(tok) + "'");
      }
      values.push_back(v);
      ++cols;
      i = j;
    }
    if (cols == 0) continue;
    if (n_rows == 0) {
      n_cols = cols;
    } else if (cols != n_cols) {
      throw FormatError("row " + std::to_string(n_rows) + " (line " + std::to_string(line_no) + ") has " +
                        std::to_string(cols) + " columns, expected " + std::to_string(n_cols));
    }
    ++n_rows;
  }
  if (n_rows == 0) throw EmptyInputError("matrix input is empty");
  return QosMatrix(n_rows, n_cols, std::move(values), missing_mark, negative_is_missing);
}

inline QosMatrix load_matrix(const std::string& path, double missing_mark = kDefaultMissingMark,
                             bool negative_is_missing = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open matrix file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matrix(ss.str(), missing_mark, negative_is_missing);
}

// Writes observed values verbatim and unobserved cells as the missing mark.
inline void save_matrix(const std::string& path, const QosMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write matrix file: " + path);
  const std::string mark = detail::format_double(m.missing_mark());
  std::string line;
  for (std::size_t u = 0; u < m.n_users(); ++u) {
    line.clear();
    for (std::size_t i = 0; i < m.n_items(); ++i) {
      if (i) line += '\t';
      line += m.observed(u, i) ? detail::format_double(m.value(u, i)) : mark;
    }
    line += '\n';
    out << line;
  }
}

struct Interaction {
  std::uint32_t user = 0;
  std::uint32_t item = 0;
  double value = 0.0;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

inline bool user_major_less(const Interaction& a, const Interaction& b) {
  return a.user != b.user ? a.user < b.user : a.item < b.item;
}

enum class Role { kTrain, kValid, kTest };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::kTrain: return "train";
    case Role::kValid: return "valid";
    case Role::kTest: return "test";
  }
  return "?";
}

struct SplitSpec {
  std::string name = "custom";
  double train_frac = 0.0;
  double valid_frac = 0.0;
  double test_frac = 0.0;
  std::uint64_t seed = 0;
  // Per-user stratified assignment instead of one global shuffle.
  bool stratified = false;

  void validate() const {
    if (train_frac < 0 || valid_frac < 0 || test_frac < 0)
      throw ConfigError("split fractions must be non-negative");
    if (std::abs(train_frac + valid_frac + test_frac - 1.0) > 1e-9)
      throw ConfigError("split fractions must sum to 1");
  }

  // RT1..RT4 and TP1..TP4 share fractions: n% train, 4n% valid, rest test.
  static SplitSpec named(const std::string& name, std::uint64_t seed = 0) {
    if (name.size() != 3 || !(name.starts_with("RT") || name.starts_with("TP")) || name[2] < '1' ||
        name[2] > '4') {
      throw ConfigError("unknown split name: " + name);
    }
    const int n = name[2] - '0';
    SplitSpec s;
    s.name = name;
    s.train_frac = n / 100.0;
    s.valid_frac = 4 * n / 100.0;
    s.test_frac = (100 - 5 * n) / 100.0;
    s.seed = seed;
    return s;
  }
};

// One role's triples, sorted user-major then item, with per-user offsets.
class InteractionSet {
 public:
  InteractionSet() = default;
  InteractionSet(Role role, std::size_t n_users, std::size_t n_items, std::vector<Interaction> entries)
      : role_(role), n_users_(n_users), n_items_(n_items), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(), user_major_less);
    offsets_.assign(n_users_ + 1, 0);
    for (const auto& e : entries_) {
      if (e.user >= n_users_ || e.item >= n_items_) throw ShapeError("interaction id out of range");
      ++offsets_[e.user + 1];
    }
    for (std::size_t u = 0; u < n_users_; ++u) offsets_[u + 1] += offsets_[u];
  }

  Role role() const { return role_; }
  std::size_t n_users() const { return n_users_; }
  std::size_t n_items() const { return n_items_; }
  std::size_t size() const { return entries_.size(); }
  std::span<const Interaction> entries() const { return entries_; }

  std::span<const Interaction> for_user(std::size_t user) const {
    return std::span<const Interaction>(entries_).subspan(offsets_[user], offsets_[user + 1] - offsets_[user]);
  }

 private:
  Role role_ = Role::kTrain;
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::vector<Interaction> entries_;
  std::vector<std::size_t> offsets_{0};
};

struct Split {
  InteractionSet train;
  InteractionSet valid;
  InteractionSet test;
};

inline std::vector<Interaction> observed_entries(const QosMatrix& m) {
  std::vector<Interaction> out;
  out.reserve(m.observed_count());
  for (std::size_t u = 0; u < m.n_users(); ++u)
    for (std::size_t i = 0; i < m.n_items(); ++i)
      if (m.observed(u, i))
        out.push_back({static_cast<std::uint32_t>(u), static_cast<std::uint32_t>(i), m.value(u, i)});
  return out;
}

// Role sizes for n entries: floor for train and valid, remainder to test.
inline std::array<std::size_t, 3> role_counts(std::size_t n, const SplitSpec& spec) {
  const auto tr = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.train_frac));
  const auto va = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spec.valid_frac));
  return {tr, va, n - tr - va};
}

inline Split split(const QosMatrix& m, const SplitSpec& spec) {
  spec.validate();
  if (m.observed_count() < 3) throw EmptyInputError("split needs at least 3 observed entries");
  std::vector<Interaction> all = observed_entries(m);
  Rng rng = make_rng(spec.seed, Stream::kSplit);
  std::vector<Interaction> parts[3];

  auto assign = [&](std::span<Interaction> group) {
    shuffle(group.begin(), group.end(), rng);
    const auto counts = role_counts(group.size(), spec);
    std::size_t k = 0;
    for (int r = 0; r < 3; ++r)
      for (std::size_t c = 0; c < counts[r]; ++c) parts[r].push_back(group[k++]);
  };

  if (spec.stratified) {
    // observed_entries is already user-major.
    std::size_t begin = 0;
    while (begin < all.size()) {
      std::size_t end = begin;
      while (end < all.size() && all[end].user == all[begin].user) ++end;
      assign(std::span<Interaction>(all).subspan(begin, end - begin));
      begin = end;
    }
  } else {
    assign(all);
  }
  return {InteractionSet(Role::kTrain, m.n_users(), m.n_items(), std::move(parts[0])),
          InteractionSet(Role::kValid, m.n_users(), m.n_items(), std::move(parts[1])),
          InteractionSet(Role::kTest, m.n_users(), m.n_items(), std::move(parts[2]))};
}

// Client u's list holds exactly the triples with user == u; its size is num_u.
inline std::vector<std::vector<Interaction>> partition_by_user(const InteractionSet& set) {
  std::vector<std::vector<Interaction>> out(set.n_users());
  for (std::size_t u = 0; u < set.n_users(); ++u) {
    const auto span = set.for_user(u);
    out[u].assign(span.begin(), span.end());
  }
  return out;
}

// Audit manifest: "user item value role" lines, user-major then item.
inline void write_manifest(std::ostream& out, const Split& s) {
  struct Row {
    Interaction e;
    Role role;
  };
  std::vector<Row> rows;
  rows.reserve(s.train.size() + s.valid.size() + s.test.size());
  for (const InteractionSet* set : {&s.train, &s.valid, &s.test})
    for (const auto& e : set->entries()) rows.push_back({e, set->role()});
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return user_major_less(a.e, b.e); });
  std::string line;
  for (const auto& r : rows) {
    line = std::to_string(r.e.user);
    line += ' ';
    line += std::to_string(r.e.item);
    line += ' ';
    line += detail::format_double(r.e.value);
    line += ' ';
    line += role_name(r.role);
    line += '\n';
    out << line;
  }
}

}  // namespace hcfgnn
