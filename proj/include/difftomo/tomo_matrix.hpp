#pragma once

// Routing matrices over {0,1}, differential routing matrices over {-1,0,1},
// mutual coherence with exact integer certification, and the executable
// check of the coherence dichotomy: a complementary column pair (two columns
// differing in every row) forces mu = 1 for every choice of reference row,
// and its absence keeps mu < 1 for every choice.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "difftomo/error.hpp"
#include "difftomo/topology.hpp"

namespace difftomo {

struct RoutingMatrix {
  int path_count = 0;  // I
  int link_count = 0;  // J
  std::vector<std::int8_t> entries;  // row-major, values in {0,1}
  std::vector<std::string> path_labels;  // link sequences, e.g. "1-5-4"
  std::vector<int> link_labels;  // 1..J in topology order

  std::int8_t at(int i, int j) const { return entries[static_cast<std::size_t>(i) * link_count + j]; }
};

struct DifferentialRoutingMatrix {
  int row_count = 0;  // I - 1
  int link_count = 0;
  std::vector<std::int8_t> entries;  // row-major, values in {-1,0,1}
  int reference_index = 0;  // 1-based row of the original matrix
  std::vector<std::int8_t> reference_row;
  RoutingMatrix original;

  std::int8_t at(int i, int j) const { return entries[static_cast<std::size_t>(i) * link_count + j]; }
};

// Lightweight read-only view; all analysis ops take this so they apply to
// both matrix kinds.
struct MatrixView {
  int rows = 0;
  int cols = 0;
  const std::int8_t* data = nullptr;

  MatrixView(int r, int c, const std::int8_t* d) : rows(r), cols(c), data(d) {}
  MatrixView(const RoutingMatrix& m)  // NOLINT: implicit by design
      : rows(m.path_count), cols(m.link_count), data(m.entries.data()) {}
  MatrixView(const DifferentialRoutingMatrix& m)  // NOLINT
      : rows(m.row_count), cols(m.link_count), data(m.entries.data()) {}

  std::int8_t at(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
};

inline std::string path_label(const Path& p) {
  std::string s;
  for (std::size_t i = 0; i < p.link_indices.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(p.link_indices[i]);
  }
  return s;
}

// entries[i][j] = 1 iff link j belongs to path i; row order = path order,
// column order = topology link order. Duplicate rows are an error, never a
// silent dedup.
inline RoutingMatrix build_routing_matrix(const PathSet& ps) {
  const int I = static_cast<int>(ps.paths.size());
  const int J = static_cast<int>(ps.topology.links.size());
  if (I < 1) throw Error("path set is empty");
  if (J < 1) throw Error("topology has no links");
  RoutingMatrix m;
  m.path_count = I;
  m.link_count = J;
  m.entries.assign(static_cast<std::size_t>(I) * J, 0);
  for (int i = 0; i < I; ++i) {
    const Path& p = ps.paths[static_cast<std::size_t>(i)];
    node_sequence(ps.topology, p);  // re-validate against the topology
    for (int idx : p.link_indices)
      m.entries[static_cast<std::size_t>(i) * J + (idx - 1)] = 1;
    m.path_labels.push_back(path_label(p));
  }
  for (int j = 1; j <= J; ++j) m.link_labels.push_back(j);
  for (int a = 0; a < I; ++a)
    for (int b = a + 1; b < I; ++b) {
      bool same = true;
      for (int j = 0; j < J && same; ++j) same = m.at(a, j) == m.at(b, j);
      if (same)
        throw Error("duplicate rows " + std::to_string(a + 1) + " and " +
                    std::to_string(b + 1));
    }
  return m;
}

// Subtracts the reference row from every other row and drops it; the link
// delay vector solving y = Ax also solves the differential system.
inline DifferentialRoutingMatrix build_differential_matrix(const RoutingMatrix& m,
                                                           int reference) {
  if (m.path_count < 2) throw Error("differential matrix needs at least 2 paths");
  if (reference < 1 || reference > m.path_count)
    throw Error("reference row " + std::to_string(reference) + " out of range 1.." +
                std::to_string(m.path_count));
  DifferentialRoutingMatrix d;
  d.row_count = m.path_count - 1;
  d.link_count = m.link_count;
  d.reference_index = reference;
  d.reference_row.assign(m.entries.begin() + static_cast<std::size_t>(reference - 1) * m.link_count,
                         m.entries.begin() + static_cast<std::size_t>(reference) * m.link_count);
  d.entries.reserve(static_cast<std::size_t>(d.row_count) * d.link_count);
  for (int i = 0; i < m.path_count; ++i) {
    if (i == reference - 1) continue;
    for (int j = 0; j < m.link_count; ++j)
      d.entries.push_back(static_cast<std::int8_t>(m.at(i, j) - d.reference_row[static_cast<std::size_t>(j)]));
  }
  d.original = m;
  return d;
}

inline double lp_norm(std::span<const double> v, double p) {
  if (!(p >= 1.0)) throw Error("lp_norm requires p >= 1");
  if (p == 1.0) {
    double s = 0;
    for (double x : v) s += std::fabs(x);
    return s;
  }
  if (p == 2.0) {
    double s = 0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  double s = 0;
  for (double x : v) s += std::pow(std::fabs(x), p);
  return std::pow(s, 1.0 / p);
}

inline std::vector<double> row_values(MatrixView m, int i) {
  std::vector<double> v(static_cast<std::size_t>(m.cols));
  for (int j = 0; j < m.cols; ++j) v[static_cast<std::size_t>(j)] = m.at(i, j);
  return v;
}

struct CoherenceReport {
  double mu = 0.0;
  std::pair<int, int> argmax_pair{0, 0};  // 1-based column indices, first < second
  bool exact_unit = false;  // mu == 1 certified by integer arithmetic
  int k_max = 0;  // largest k with k < (1 + 1/mu)/2; link_count when mu == 0
};

namespace detail {

using i128 = __int128;

// Integer column statistics: dot products and squared norms are exact for
// entries in {-1,0,1}.
inline long long column_dot(MatrixView m, int j, int j2) {
  long long d = 0;
  for (int i = 0; i < m.rows; ++i) d += static_cast<long long>(m.at(i, j)) * m.at(i, j2);
  return d;
}

// Largest k >= 1 with (2k-1)^2 * dot^2 < n2 * n2m, 0 if none.
inline int exact_k_max(long long dot, long long n2, long long n2m) {
  const i128 d2 = static_cast<i128>(dot) * dot;
  const i128 nn = static_cast<i128>(n2) * n2m;
  int k = 0;
  while (true) {
    const i128 odd = 2 * static_cast<i128>(k + 1) - 1;
    if (odd * odd * d2 < nn) ++k; else break;
  }
  return k;
}

}  // namespace detail

// Maximum over distinct column pairs of |a_j . a_j'| / (|a_j| |a_j'|).
// Pair comparisons and the mu = 1 test use exact cross-multiplied integers;
// only the reported real value is floating point. Argmax ties keep the
// lexicographically smallest pair.
inline CoherenceReport mutual_coherence(MatrixView m) {
  if (m.cols < 2) throw Error("mutual coherence needs at least 2 columns");
  if (m.rows < 1) throw Error("matrix has no rows");
  std::vector<long long> n2(static_cast<std::size_t>(m.cols));
  for (int j = 0; j < m.cols; ++j) {
    n2[static_cast<std::size_t>(j)] = detail::column_dot(m, j, j);
    if (n2[static_cast<std::size_t>(j)] == 0)
      throw Error("zero column: link " + std::to_string(j + 1) +
                  " covered by no path / cancelled by reference");
  }
  long long best_dot = std::llabs(detail::column_dot(m, 0, 1));
  std::pair<int, int> best{0, 1};
  for (int j = 0; j < m.cols; ++j)
    for (int j2 = j + 1; j2 < m.cols; ++j2) {
      if (j == 0 && j2 == 1) continue;
      const long long d = std::llabs(detail::column_dot(m, j, j2));
      // d/sqrt(n2 n2') > best/sqrt(...) iff d^2 * best_norms > best^2 * norms
      const detail::i128 lhs = static_cast<detail::i128>(d) * d *
                               n2[static_cast<std::size_t>(best.first)] *
                               n2[static_cast<std::size_t>(best.second)];
      const detail::i128 rhs = static_cast<detail::i128>(best_dot) * best_dot *
                               n2[static_cast<std::size_t>(j)] * n2[static_cast<std::size_t>(j2)];
      if (lhs > rhs) {
        best = {j, j2};
        best_dot = d;
      }
    }
  const long long na = n2[static_cast<std::size_t>(best.first)];
  const long long nb = n2[static_cast<std::size_t>(best.second)];
  CoherenceReport r;
  r.argmax_pair = {best.first + 1, best.second + 1};
  r.exact_unit =
      static_cast<detail::i128>(best_dot) * best_dot == static_cast<detail::i128>(na) * nb;
  r.mu = r.exact_unit
             ? 1.0
             : static_cast<double>(best_dot) / (std::sqrt(static_cast<double>(na)) *
                                                std::sqrt(static_cast<double>(nb)));
  r.k_max = best_dot == 0 ? m.cols : detail::exact_k_max(best_dot, na, nb);
  return r;
}

struct MaskedCoherenceReport {
  std::optional<CoherenceReport> report;  // absent when < 2 nonzero columns remain
  std::vector<int> zero_columns;  // 1-based, ascending
};

// Coherence over the nonzero columns only; zero columns are reported, not
// fatal. Argmax indices refer to the original column numbering.
inline MaskedCoherenceReport mutual_coherence_masked(MatrixView m) {
  MaskedCoherenceReport out;
  std::vector<int> keep;
  for (int j = 0; j < m.cols; ++j) {
    bool zero = true;
    for (int i = 0; i < m.rows && zero; ++i) zero = m.at(i, j) == 0;
    if (zero) out.zero_columns.push_back(j + 1); else keep.push_back(j);
  }
  if (keep.size() < 2) return out;
  std::vector<std::int8_t> packed(static_cast<std::size_t>(m.rows) * keep.size());
  for (int i = 0; i < m.rows; ++i)
    for (std::size_t c = 0; c < keep.size(); ++c)
      packed[static_cast<std::size_t>(i) * keep.size() + c] = m.at(i, keep[c]);
  CoherenceReport r = mutual_coherence(
      MatrixView(m.rows, static_cast<int>(keep.size()), packed.data()));
  r.argmax_pair = {keep[static_cast<std::size_t>(r.argmax_pair.first - 1)] + 1,
                   keep[static_cast<std::size_t>(r.argmax_pair.second - 1)] + 1};
  if (r.mu == 0.0) r.k_max = m.cols;  // convention: orthogonal columns cap at J
  out.report = r;
  return out;
}

// 1/3 <= mu < 1; the lower bound uses a 1e-12 tolerance, the upper bound is
// the exact-unit certificate.
inline bool is_one_identifiable(MatrixView m) {
  const CoherenceReport r = mutual_coherence(m);
  return r.mu >= 1.0 / 3.0 - 1e-12 && !r.exact_unit;
}

// Largest integer k with k < (1 + 1/mu)/2, from a real mu alone. Boundary
// values within 1e-9 of an integer are treated as exact.
inline int k_max_from_mu(double mu) {
  if (!(mu > 0.0)) throw Error("k_max_from_mu requires mu > 0");
  if (mu >= 1.0) return 0;
  const double bound = 0.5 * (1.0 + 1.0 / mu);
  const double snapped = std::round(bound);
  if (std::fabs(bound - snapped) < 1e-9) return static_cast<int>(snapped) - 1;
  return static_cast<int>(std::floor(bound));
}

// Lexicographically smallest pair of columns differing in every row, if any.
// For {0,1} matrices this is exactly the bit-complement relationship.
inline std::optional<std::pair<int, int>> find_complementary_pair(MatrixView m) {
  for (int j = 0; j < m.cols; ++j)
    for (int j2 = j + 1; j2 < m.cols; ++j2) {
      bool all_differ = true;
      for (int i = 0; i < m.rows && all_differ; ++i) all_differ = m.at(i, j) != m.at(i, j2);
      if (all_differ) return std::pair{j + 1, j2 + 1};
    }
  return std::nullopt;
}

struct ReferenceCoherence {
  int reference_index = 0;
  std::optional<CoherenceReport> coherence;  // absent when masking leaves < 2 columns
  std::vector<int> cancelled_links;  // links rendered invisible by this reference
};

struct TheoremReport {
  bool premise_one_identifiable = false;
  std::optional<std::pair<int, int>> complementary_pair;
  std::vector<ReferenceCoherence> per_reference;  // one entry per reference row
  std::vector<int> counterexample_references;  // nonempty would mean a bug

  bool holds() const { return counterexample_references.empty(); }
};

// Checks the dichotomy over every reference choice: with the premise (matrix
// 1-identifiable), a complementary pair forces mu = 1 for all references and
// its absence forces mu < 1 for all references, both certified exactly.
// References that cancel columns are flagged and judged on the remainder.
inline TheoremReport verify_coherence_theorem(const RoutingMatrix& m) {
  TheoremReport rep;
  rep.premise_one_identifiable = is_one_identifiable(m);  // throws on zero column in m
  rep.complementary_pair = find_complementary_pair(m);
  for (int r = 1; r <= m.path_count; ++r) {
    const DifferentialRoutingMatrix d = build_differential_matrix(m, r);
    MaskedCoherenceReport mc = mutual_coherence_masked(d);
    rep.per_reference.push_back({r, mc.report, std::move(mc.zero_columns)});
    if (!rep.premise_one_identifiable || !rep.per_reference.back().coherence) continue;
    const bool unit = rep.per_reference.back().coherence->exact_unit;
    const bool expected_unit = rep.complementary_pair.has_value();
    if (unit != expected_unit) rep.counterexample_references.push_back(r);
  }
  return rep;
}

// Dump format: first line "I J", then I rows of space-separated integers.
inline std::string dump_matrix(const RoutingMatrix& m) {
  std::ostringstream out;
  out << m.path_count << " " << m.link_count << "\n";
  for (int i = 0; i < m.path_count; ++i) {
    for (int j = 0; j < m.link_count; ++j) {
      if (j) out << " ";
      out << static_cast<int>(m.at(i, j));
    }
    out << "\n";
  }
  return out.str();
}

// Differential dumps prepend a "reference r" line.
inline std::string dump_matrix(const DifferentialRoutingMatrix& m) {
  std::ostringstream out;
  out << "reference " << m.reference_index << "\n";
  out << m.row_count << " " << m.link_count << "\n";
  for (int i = 0; i < m.row_count; ++i) {
    for (int j = 0; j < m.link_count; ++j) {
      if (j) out << " ";
      out << static_cast<int>(m.at(i, j));
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace difftomo
