#pragma once

// Shared fixtures and independent reference implementations for the tests and
// the acceptance runner. Nothing here calls into the code it checks.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "crembo/core.hpp"
#include "crembo/learners.hpp"
#include "crembo/oracle.hpp"

namespace crembo::testkit {

struct Instance {
  Dataset data;
  OracleSource oracle;
};

/// Random probability row on the 1/20 grid, so ties among values are common.
inline std::vector<double> grid_row(std::mt19937_64& rng, int K) {
  std::vector<int> units(static_cast<std::size_t>(K), 0);
  std::uniform_int_distribution<int> pick(0, K - 1);
  for (int u = 0; u < 20; ++u)
    ++units[static_cast<std::size_t>(pick(rng))];
  std::vector<double> row;
  for (int u : units)
    row.push_back(u / 20.0);
  return row;
}

/// m rows, one feature with small integer values (duplicates allowed), K
/// classes, random labels and a random grid oracle.
inline Instance random_instance(std::mt19937_64& rng, std::size_t m, int K, int featureRange = 4) {
  std::uniform_int_distribution<int> feat(0, featureRange);
  std::uniform_int_distribution<int> lab(0, K - 1);
  std::vector<double> x, probs;
  std::vector<ClassId> y;
  for (std::size_t i = 0; i < m; ++i) {
    x.push_back(feat(rng));
    y.push_back(lab(rng));
    for (double p : grid_row(rng, K))
      probs.push_back(p);
  }
  return {Dataset(m, 1, std::move(x), std::move(y), K), OracleSource(m, K, std::move(probs))};
}

inline Instance random_small_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> rows(2, 6), classes(2, 3);
  const auto m = static_cast<std::size_t>(rows(rng));
  return random_instance(rng, m, classes(rng));
}

/// Every labelling of the rows realisable by a constant or a single-feature
/// stump (left when x < cut), enumerated from the distinct feature values.
inline std::vector<std::vector<ClassId>> stump_labelings(const Dataset& d) {
  std::set<std::vector<ClassId>> out;
  const std::size_t m = d.num_rows();
  const int K = d.num_classes();
  for (ClassId c = 0; c < K; ++c)
    out.insert(std::vector<ClassId>(m, c));
  for (std::size_t a = 0; a < d.num_attrs(); ++a) {
    std::set<double> values;
    for (std::size_t i = 0; i < m; ++i)
      values.insert(d.at(i, a));
    for (double cut : values) // rows with x < cut go left
      for (ClassId l = 0; l < K; ++l)
        for (ClassId r = 0; r < K; ++r) {
          std::vector<ClassId> f(m);
          for (std::size_t i = 0; i < m; ++i)
            f[i] = d.at(i, a) < cut ? l : r;
          out.insert(f);
        }
  }
  return {out.begin(), out.end()};
}

inline double min_depth(const std::vector<ClassId>& f, const OracleSource& o) {
  double best = 1.0;
  for (std::size_t i = 0; i < f.size(); ++i)
    best = std::min(best, o.prob(i, f[i]));
  return best;
}

/// Brute-force maximum of the empirical depth over constants and stumps.
inline double brute_force_max_depth(const Dataset& d, const OracleSource& o) {
  double best = -1.0;
  for (const auto& f : stump_labelings(d))
    best = std::max(best, min_depth(f, o));
  return best;
}

/// Routes a row by walking the node array directly.
inline ClassId walk(const TreeModel& t, std::span<const double> x) {
  const auto& nodes = t.nodes();
  std::size_t i = 0;
  for (std::size_t guard = 0; guard <= nodes.size(); ++guard) {
    const TreeNode& n = nodes.at(i);
    if (n.feature < 0)
      return n.label;
    i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return -1; // cycle
}

/// Independent constraint checker: every constrained row's prediction lies in
/// its allowed set, and the tree is well formed.
inline bool check_constraints(const TreeModel& t, const Dataset& d, const ConstraintSample& s) {
  const auto& nodes = t.nodes();
  if (nodes.empty())
    return false;
  for (const auto& n : nodes) {
    if (n.feature >= 0) {
      if (n.left <= 0 || n.right <= 0 || static_cast<std::size_t>(n.left) >= nodes.size() ||
          static_cast<std::size_t>(n.right) >= nodes.size())
        return false;
    } else if (n.label < 0 || n.label >= d.num_classes()) {
      return false;
    }
  }
  for (const auto& p : s.pairs) {
    const ClassId c = walk(t, d.row(p.row));
    if (c < 0 || !((p.allowed.bits() >> c) & 1U))
      return false;
  }
  return true;
}

} // namespace crembo::testkit
