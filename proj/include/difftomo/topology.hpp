#pragma once

// Undirected measurement networks: the topology file format, loop-free
// source->receiver path enumeration, and path-set selection strategies.
//
// Link indices are 1-based in declaration order everywhere; that order fixes
// the column order of every matrix built downstream.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "difftomo/error.hpp"
#include "difftomo/rng.hpp"

namespace difftomo {

struct Topology {
  std::vector<std::string> nodes;  // declaration order
  std::vector<std::pair<std::string, std::string>> links;  // 1-indexed externally
  std::string source;
  std::string receiver;

  bool operator==(const Topology&) const = default;

  bool has_node(std::string_view id) const {
    return std::find(nodes.begin(), nodes.end(), id) != nodes.end();
  }
};

// A walk from source to receiver, stored as 1-based link indices.
struct Path {
  std::vector<int> link_indices;

  std::size_t hops() const { return link_indices.size(); }
  bool operator==(const Path&) const = default;
  bool operator<(const Path& o) const { return link_indices < o.link_indices; }
};

struct PathSet {
  std::vector<Path> paths;  // indexed 1..I externally
  Topology topology;

  std::size_t size() const { return paths.size(); }
};

namespace detail {

// Adjacency as (link index, neighbour) per node, links in index order so a
// DFS over it visits link sequences lexicographically.
inline std::map<std::string, std::vector<std::pair<int, std::string>>>
adjacency(const Topology& t) {
  std::map<std::string, std::vector<std::pair<int, std::string>>> adj;
  for (std::size_t j = 0; j < t.links.size(); ++j) {
    const auto& [u, v] = t.links[j];
    adj[u].emplace_back(static_cast<int>(j + 1), v);
    adj[v].emplace_back(static_cast<int>(j + 1), u);
  }
  return adj;
}

inline std::pair<std::string, std::string> sorted_pair(std::string a, std::string b) {
  if (b < a) std::swap(a, b);
  return {std::move(a), std::move(b)};
}

}  // namespace detail

// Throws if the topology violates its invariants: no self-loops, no duplicate
// links, endpoints declared, source != receiver and both declared.
inline void validate_topology(const Topology& t) {
  std::set<std::string> seen;
  for (const auto& n : t.nodes) {
    if (!seen.insert(n).second) throw Error("duplicate node '" + n + "'");
  }
  std::set<std::pair<std::string, std::string>> link_set;
  for (std::size_t j = 0; j < t.links.size(); ++j) {
    const auto& [u, v] = t.links[j];
    const std::string where = "link " + std::to_string(j + 1);
    if (u == v) throw Error(where + ": self-loop (" + u + "," + v + ")");
    if (!seen.count(u)) throw Error(where + ": unknown node '" + u + "'");
    if (!seen.count(v)) throw Error(where + ": unknown node '" + v + "'");
    if (!link_set.insert(detail::sorted_pair(u, v)).second)
      throw Error(where + ": duplicate link (" + u + "," + v + ")");
  }
  if (t.source.empty()) throw Error("missing source directive");
  if (t.receiver.empty()) throw Error("missing receiver directive");
  if (!seen.count(t.source)) throw Error("source '" + t.source + "' is not a declared node");
  if (!seen.count(t.receiver)) throw Error("receiver '" + t.receiver + "' is not a declared node");
  if (t.source == t.receiver) throw Error("source and receiver must differ");
}

// Parses the line-oriented topology format:
//   node <id> ... / link <id> <id> ... / source <id> / receiver <id>
// '#' starts a comment; errors carry the 1-based line number.
inline Topology parse_topology(std::string_view text) {
  Topology t;
  std::set<std::string> declared;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  bool have_source = false, have_receiver = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    auto one_token = [&](const char* what) {
      std::string v, extra;
      if (!(ls >> v)) throw Error(where + std::string("expected ") + what);
      if (ls >> extra) throw Error(where + "trailing token '" + extra + "'");
      return v;
    };
    if (kw == "node") {
      std::string id = one_token("node id");
      if (!declared.insert(id).second) throw Error(where + "duplicate node '" + id + "'");
      t.nodes.push_back(id);
    } else if (kw == "link") {
      std::string u, v, extra;
      if (!(ls >> u >> v)) throw Error(where + "expected two node ids");
      if (ls >> extra) throw Error(where + "trailing token '" + extra + "'");
      if (u == v) throw Error(where + "self-loop link (" + u + "," + v + ")");
      if (!declared.count(u)) throw Error(where + "unknown node '" + u + "'");
      if (!declared.count(v)) throw Error(where + "unknown node '" + v + "'");
      for (const auto& l : t.links)
        if (detail::sorted_pair(l.first, l.second) == detail::sorted_pair(u, v))
          throw Error(where + "duplicate link (" + u + "," + v + ")");
      t.links.emplace_back(u, v);
    } else if (kw == "source") {
      if (have_source) throw Error(where + "source declared twice");
      t.source = one_token("node id");
      have_source = true;
    } else if (kw == "receiver") {
      if (have_receiver) throw Error(where + "receiver declared twice");
      t.receiver = one_token("node id");
      have_receiver = true;
    } else {
      throw Error(where + "unknown directive '" + kw + "'");
    }
  }
  validate_topology(t);
  return t;
}

inline std::string serialize_topology(const Topology& t) {
  std::ostringstream out;
  for (const auto& n : t.nodes) out << "node " << n << "\n";
  for (const auto& [u, v] : t.links) out << "link " << u << " " << v << "\n";
  out << "source " << t.source << "\n";
  out << "receiver " << t.receiver << "\n";
  return out.str();
}

// Walks a path's links from the source, checking the Path invariants, and
// returns the visited node sequence (source first, receiver last). Throws on
// any violation: bad index, disconnected links, revisited node, wrong ends.
inline std::vector<std::string> node_sequence(const Topology& t, const Path& p) {
  if (p.link_indices.empty()) throw Error("empty path");
  std::vector<std::string> seq{t.source};
  std::set<std::string> visited{t.source};
  std::string at = t.source;
  for (int idx : p.link_indices) {
    if (idx < 1 || static_cast<std::size_t>(idx) > t.links.size())
      throw Error("path refers to unknown link index " + std::to_string(idx));
    const auto& [u, v] = t.links[static_cast<std::size_t>(idx - 1)];
    std::string next;
    if (u == at) next = v;
    else if (v == at) next = u;
    else throw Error("link " + std::to_string(idx) + " does not touch node '" + at + "'");
    if (!visited.insert(next).second)
      throw Error("path revisits node '" + next + "'");
    seq.push_back(next);
    at = next;
  }
  if (at != t.receiver)
    throw Error("path ends at '" + at + "', not the receiver");
  return seq;
}

// All simple source->receiver paths with at most max_hops links, ordered
// lexicographically by link-index sequence and truncated to max_paths.
// Fewer than two simple paths is an error ("insufficient paths").
inline PathSet enumerate_simple_paths(const Topology& t, std::size_t max_paths,
                                      std::size_t max_hops) {
  validate_topology(t);
  if (max_paths < 2) throw Error("max_paths must be at least 2");
  const auto adj = detail::adjacency(t);
  std::vector<Path> found;
  std::vector<int> stack;
  std::set<std::string> visited{t.source};

  // DFS over links in index order; preorder yields lexicographic sequences.
  auto dfs = [&](auto&& self, const std::string& at) -> void {
    if (at == t.receiver) {
      found.push_back(Path{stack});
      return;
    }
    if (stack.size() == max_hops) return;
    auto it = adj.find(at);
    if (it == adj.end()) return;
    for (const auto& [idx, next] : it->second) {
      if (visited.count(next)) continue;
      visited.insert(next);
      stack.push_back(idx);
      self(self, next);
      stack.pop_back();
      visited.erase(next);
    }
  };
  dfs(dfs, t.source);

  std::sort(found.begin(), found.end());
  if (found.size() < 2)
    throw Error("insufficient paths: found " + std::to_string(found.size()) +
                " simple path(s) between " + t.source + " and " + t.receiver);
  if (found.size() > max_paths) found.resize(max_paths);
  return PathSet{std::move(found), t};
}

// max_hops defaults to |V|-1: no truncation beyond simplicity.
inline PathSet enumerate_simple_paths(const Topology& t, std::size_t max_paths) {
  return enumerate_simple_paths(t, max_paths,
                                t.nodes.empty() ? 0 : t.nodes.size() - 1);
}

enum class SelectionStrategy { ShortestFirst, CoverageGreedy, Random };

inline SelectionStrategy parse_strategy(std::string_view s) {
  if (s == "shortest-first") return SelectionStrategy::ShortestFirst;
  if (s == "coverage-greedy") return SelectionStrategy::CoverageGreedy;
  if (s == "random") return SelectionStrategy::Random;
  throw Error("unknown selection strategy '" + std::string(s) +
              "' (expected shortest-first, coverage-greedy or random)");
}

inline std::string_view strategy_name(SelectionStrategy s) {
  switch (s) {
    case SelectionStrategy::ShortestFirst: return "shortest-first";
    case SelectionStrategy::CoverageGreedy: return "coverage-greedy";
    case SelectionStrategy::Random: return "random";
  }
  return "?";
}

// Picks `count` paths from the candidates.
//  - shortest-first: ascending (hop count, link sequence); prefixes nest.
//  - coverage-greedy: repeatedly take the path adding the most uncovered
//    links, ties broken by shorter path then lower candidate index.
//  - random: seeded Fisher-Yates draw, result in draw order.
inline PathSet select_paths(const PathSet& candidates, std::size_t count,
                            SelectionStrategy strategy, std::uint64_t seed = 0) {
  if (count > candidates.size())
    throw Error("cannot select " + std::to_string(count) + " paths from " +
                std::to_string(candidates.size()) + " candidates");
  if (count == 0) throw Error("cannot select 0 paths");
  std::vector<Path> picked;
  picked.reserve(count);
  switch (strategy) {
    case SelectionStrategy::ShortestFirst: {
      std::vector<Path> sorted = candidates.paths;
      std::sort(sorted.begin(), sorted.end(), [](const Path& a, const Path& b) {
        return std::pair(a.hops(), a.link_indices) < std::pair(b.hops(), b.link_indices);
      });
      picked.assign(sorted.begin(), sorted.begin() + static_cast<long>(count));
      break;
    }
    case SelectionStrategy::CoverageGreedy: {
      std::set<int> covered;
      std::vector<bool> taken(candidates.size(), false);
      for (std::size_t round = 0; round < count; ++round) {
        std::size_t best = candidates.size();
        std::size_t best_new = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          if (taken[i]) continue;
          const Path& p = candidates.paths[i];
          std::size_t fresh = 0;
          for (int idx : p.link_indices) fresh += covered.count(idx) == 0;
          const bool better =
              best == candidates.size() || fresh > best_new ||
              (fresh == best_new && p.hops() < candidates.paths[best].hops());
          if (better) { best = i; best_new = fresh; }
        }
        taken[best] = true;
        picked.push_back(candidates.paths[best]);
        for (int idx : candidates.paths[best].link_indices) covered.insert(idx);
      }
      break;
    }
    case SelectionStrategy::Random: {
      std::mt19937_64 g(seed);
      std::vector<std::size_t> order(candidates.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[bounded_draw(g, i)]);
      for (std::size_t i = 0; i < count; ++i)
        picked.push_back(candidates.paths[order[i]]);
      break;
    }
  }
  return PathSet{std::move(picked), candidates.topology};
}

// Paths file: one `path <link-index> ...` per line, '#' comments. Each path
// is validated against the topology; duplicates are rejected.
inline PathSet parse_paths(std::string_view text, const Topology& t) {
  PathSet ps{{}, t};
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto pos = line.find('#'); pos != std::string::npos) line.resize(pos);
    std::istringstream ls(line);
    std::string kw;
    if (!(ls >> kw)) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (kw != "path") throw Error(where + "unknown directive '" + kw + "'");
    Path p;
    int idx;
    while (ls >> idx) p.link_indices.push_back(idx);
    if (!ls.eof()) throw Error(where + "malformed link index");
    try {
      node_sequence(t, p);
    } catch (const Error& e) {
      throw Error(where + e.what());
    }
    for (const auto& q : ps.paths) {
      std::vector<int> a = p.link_indices, b = q.link_indices;
      std::sort(a.begin(), a.end());
      std::sort(b.begin(), b.end());
      if (a == b) throw Error(where + "duplicate path");
    }
    ps.paths.push_back(std::move(p));
  }
  if (ps.paths.empty()) throw Error("paths file declares no paths");
  return ps;
}

inline std::string serialize_paths(const PathSet& ps) {
  std::ostringstream out;
  for (const auto& p : ps.paths) {
    out << "path";
    for (int idx : p.link_indices) out << " " << idx;
    out << "\n";
  }
  return out.str();
}

}  // namespace difftomo
