#pragma once

// Experiment harness: enumerates (or samples) congested k-subsets, simulates
// contaminated measurements, runs the recovery scheme, and aggregates the
// k-identifiability ratio R = identified / evaluated, plus the reference-row
// sweep and row-count comparisons built on top of it.

#include <algorithm>
#include <cstdint>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "difftomo/error.hpp"
#include "difftomo/format.hpp"
#include "difftomo/measurement.hpp"
#include "difftomo/rng.hpp"
#include "difftomo/sparse_solver.hpp"
#include "difftomo/tomo_matrix.hpp"
#include "difftomo/topology.hpp"

namespace difftomo {

enum class Scheme { Original, Differential };
enum class DeltaMode { Zero, Random };

inline std::string_view scheme_name(Scheme s) {
  return s == Scheme::Original ? "original" : "differential";
}

inline Scheme parse_scheme(std::string_view s) {
  if (s == "original") return Scheme::Original;
  if (s == "differential") return Scheme::Differential;
  throw Error("unknown scheme '" + std::string(s) + "' (expected original or differential)");
}

inline std::string_view delta_mode_name(DeltaMode m) {
  return m == DeltaMode::Zero ? "zero" : "random";
}

inline DeltaMode parse_delta_mode(std::string_view s) {
  if (s == "zero") return DeltaMode::Zero;
  if (s == "random") return DeltaMode::Random;
  throw Error("unknown delta mode '" + std::string(s) + "' (expected zero or random)");
}

struct ExperimentConfig {
  PathSet paths;
  Scheme scheme = Scheme::Differential;
  int reference_index = 1;  // differential only
  std::vector<int> k_range;
  DelayParams delay;  // its seed field is ignored; per-set seeds derive from `seed`
  SolveOptions solver;
  DeltaMode delta_mode = DeltaMode::Random;
  double delta_min_abs = 0.0;  // |delta| drawn uniformly from [min_abs, max_abs]
  double delta_max_abs = 1e6;
  std::uint64_t seed = 0;  // master seed; the only randomness source
  std::uint64_t enumeration_cap = 100000;  // above this, sample instead
  std::uint64_t sample_size = 10000;
  int repeats = 1;  // independent delay/offset redraws per congested set
  int jobs = 1;  // evaluation threads; never affects results
  bool restrict_to_visible = false;  // universe = links the scheme can see
};

struct PerKRatio {
  int k = 0;
  std::uint64_t total = 0;  // evaluated trials (sets x repeats)
  std::uint64_t identified = 0;
  double ratio = 0.0;
  bool sampled = false;
  std::uint64_t sample_seed = 0;
};

struct RatioReport {
  Scheme scheme = Scheme::Differential;
  int reference_index = 0;  // 0 for the original scheme
  double reference_l1 = 0.0;  // hop count of the reference path; 0 for original
  int path_count = 0;
  int link_count = 0;
  std::vector<PerKRatio> per_k;
  std::vector<int> cancelled_links;  // links invisible to the scheme
  DeltaMode delta_mode = DeltaMode::Random;
  std::uint64_t seed = 0;
};

namespace detail {

// The matrix actually handed to the solver: zero columns dropped, with the
// map back to 1-based topology link indices.
struct SolveSystem {
  int rows = 0;
  int cols = 0;
  std::vector<std::int8_t> entries;
  std::vector<int> col_link;  // packed column -> link index
  std::vector<char> visible;  // indexed by link 1..J

  MatrixView view() const { return {rows, cols, entries.data()}; }
};

inline SolveSystem mask_zero_columns(MatrixView m) {
  SolveSystem s;
  s.rows = m.rows;
  s.visible.assign(static_cast<std::size_t>(m.cols) + 1, 0);
  for (int j = 0; j < m.cols; ++j) {
    bool zero = true;
    for (int i = 0; i < m.rows && zero; ++i) zero = m.at(i, j) == 0;
    if (!zero) {
      s.visible[static_cast<std::size_t>(j) + 1] = 1;
      s.col_link.push_back(j + 1);
    }
  }
  s.cols = static_cast<int>(s.col_link.size());
  s.entries.resize(static_cast<std::size_t>(s.rows) * s.cols);
  for (int i = 0; i < s.rows; ++i)
    for (int c = 0; c < s.cols; ++c)
      s.entries[static_cast<std::size_t>(i) * s.cols + c] = m.at(i, s.col_link[static_cast<std::size_t>(c)] - 1);
  return s;
}

inline double draw_delta(std::uint64_t seed, double min_abs, double max_abs) {
  std::mt19937_64 g(seed);
  const double mag = uniform_in(g, min_abs, max_abs);
  return (g() & 1u) ? mag : -mag;
}

// Enumerates (colex, exhaustive) or samples (without replacement, draw order)
// k-subsets of `universe`, which is ascending.
struct SubsetPlan {
  std::vector<std::vector<int>> sets;
  bool sampled = false;
  std::uint64_t sample_seed = 0;
};

inline SubsetPlan plan_subsets(const std::vector<int>& universe, int k,
                               std::uint64_t cap, std::uint64_t sample_size,
                               std::uint64_t master_seed, int k_tag) {
  SubsetPlan plan;
  const int n = static_cast<int>(universe.size());
  if (k > n) return plan;
  const std::uint64_t count = binomial_capped(n, k, cap);
  if (count <= cap) {
    std::vector<int> comb(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) comb[static_cast<std::size_t>(i)] = i;
    for (std::uint64_t t = 0; t < count; ++t) {
      std::vector<int> s(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i) s[static_cast<std::size_t>(i)] = universe[static_cast<std::size_t>(comb[static_cast<std::size_t>(i)])];
      plan.sets.push_back(std::move(s));
      if (t + 1 < count) colex_next(comb);
    }
    return plan;
  }
  plan.sampled = true;
  plan.sample_seed = derive_seed(master_seed, static_cast<std::uint64_t>(k_tag), 0,
                                 ~static_cast<std::uint64_t>(0));
  std::mt19937_64 g(plan.sample_seed);
  std::set<std::vector<int>> seen;
  std::vector<int> pool(universe);
  std::uint64_t guard = 0;
  while (plan.sets.size() < sample_size) {
    if (++guard > 50 * sample_size + 1000)
      throw Error("subset sampling failed to find enough distinct sets");
    for (int i = 0; i < k; ++i) {
      const std::size_t j = static_cast<std::size_t>(i) + bounded_draw(g, pool.size() - static_cast<std::size_t>(i));
      std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
    }
    std::vector<int> s(pool.begin(), pool.begin() + k);
    std::sort(s.begin(), s.end());
    if (seen.insert(s).second) plan.sets.push_back(std::move(s));
  }
  return plan;
}

}  // namespace detail

inline void validate_config(const ExperimentConfig& cfg) {
  if (cfg.paths.paths.empty()) throw Error("config has no paths");
  const int J = static_cast<int>(cfg.paths.topology.links.size());
  if (cfg.k_range.empty()) throw Error("k range is empty");
  for (int k : cfg.k_range)
    if (k < 1 || k > J)
      throw Error("k = " + std::to_string(k) + " out of range 1.." + std::to_string(J));
  if (cfg.scheme == Scheme::Differential) {
    const int I = static_cast<int>(cfg.paths.paths.size());
    if (I < 2) throw Error("differential scheme needs at least 2 paths");
    if (cfg.reference_index < 1 || cfg.reference_index > I)
      throw Error("reference row " + std::to_string(cfg.reference_index) +
                  " out of range 1.." + std::to_string(I));
  }
  if (cfg.repeats < 1) throw Error("repeats must be >= 1");
  if (cfg.jobs < 1) throw Error("jobs must be >= 1");
  if (cfg.enumeration_cap < 1) throw Error("enumeration cap must be >= 1");
  if (cfg.sample_size < 1) throw Error("sample size must be >= 1");
  if (!(cfg.delta_min_abs >= 0.0)) throw Error("delta_min_abs must be >= 0");
  if (!(cfg.delta_max_abs >= cfg.delta_min_abs))
    throw Error("delta_max_abs must be >= delta_min_abs");
  validate_delay_params({cfg.delay.congested_delay, cfg.delay.background_mean, 0});
  validate_solve_options(cfg.solver);
}

// Per congested set: fresh background delays and a fresh offset (both derived
// from the master seed, independent of scheme and reference so sweeps compare
// the same noise), solve, and count an exact support match. Estimates below
// -tau veto the match: strong negativity signals an ambiguous system.
inline RatioReport k_identifiability_ratio(const ExperimentConfig& cfg) {
  validate_config(cfg);
  const RoutingMatrix a = build_routing_matrix(cfg.paths);
  const int J = a.link_count;
  const bool differential = cfg.scheme == Scheme::Differential;

  RatioReport rep;
  rep.scheme = cfg.scheme;
  rep.path_count = a.path_count;
  rep.link_count = J;
  rep.delta_mode = cfg.delta_mode;
  rep.seed = cfg.seed;

  DifferentialRoutingMatrix d;
  detail::SolveSystem sys;
  if (differential) {
    d = build_differential_matrix(a, cfg.reference_index);
    sys = detail::mask_zero_columns(d);
    rep.reference_index = cfg.reference_index;
    std::vector<double> ref_row(d.reference_row.begin(), d.reference_row.end());
    rep.reference_l1 = lp_norm(ref_row, 1.0);
  } else {
    sys = detail::mask_zero_columns(a);
  }
  for (int j = 1; j <= J; ++j)
    if (!sys.visible[static_cast<std::size_t>(j)]) rep.cancelled_links.push_back(j);
  if (sys.cols < 1) throw Error("no links remain visible to the scheme");

  std::vector<int> universe;
  if (cfg.restrict_to_visible) universe = sys.col_link;
  else for (int j = 1; j <= J; ++j) universe.push_back(j);

  for (int k : cfg.k_range) {
    detail::SubsetPlan plan = detail::plan_subsets(universe, k, cfg.enumeration_cap,
                                                   cfg.sample_size, cfg.seed, k);
    PerKRatio pk;
    pk.k = k;
    pk.sampled = plan.sampled;
    pk.sample_seed = plan.sample_seed;
    const std::uint64_t trials =
        plan.sets.size() * static_cast<std::uint64_t>(cfg.repeats);
    pk.total = trials;
    if (trials == 0) {
      rep.per_k.push_back(pk);
      continue;
    }
    std::vector<std::uint8_t> hit(trials, 0);
    auto evaluate_range = [&](std::uint64_t lo, std::uint64_t hi) {
      for (std::uint64_t t = lo; t < hi; ++t) {
        const std::uint64_t set_idx = t / static_cast<std::uint64_t>(cfg.repeats);
        const std::uint64_t rep_idx = t % static_cast<std::uint64_t>(cfg.repeats);
        const std::vector<int>& s = plan.sets[set_idx];
        bool all_visible = true;
        for (int j : s) all_visible = all_visible && sys.visible[static_cast<std::size_t>(j)];
        if (!all_visible) continue;  // untouchable set: counted, never identified
        DelayParams dp = cfg.delay;
        dp.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(k), set_idx, 2 * rep_idx);
        LinkDelayVector x;
        try {
          x = generate_link_delays(J, s, dp);
        } catch (const Error&) {
          continue;
        }
        const std::vector<double> y = path_delays(a, x.delays);
        const double delta =
            cfg.delta_mode == DeltaMode::Zero
                ? 0.0
                : detail::draw_delta(
                      derive_seed(cfg.seed, static_cast<std::uint64_t>(k), set_idx, 2 * rep_idx + 1),
                      cfg.delta_min_abs, cfg.delta_max_abs);
        const std::vector<double> z = apply_clock_offset(y, delta);
        std::vector<double> b =
            differential ? differential_measurements(z, cfg.reference_index) : z;
        SolveResult r;
        try {
          r = solve_l1_l2(sys.view(), b, cfg.solver);
        } catch (const Error&) {
          continue;  // recorded as unidentified, not fatal
        }
        std::vector<int> mapped;
        for (int c : r.support) mapped.push_back(sys.col_link[static_cast<std::size_t>(c - 1)]);
        if (mapped != s) continue;
        bool clean = true;
        for (double e : r.estimate)
          clean = clean && e >= -cfg.solver.support_threshold_ms;
        if (clean) hit[t] = 1;
      }
    };
    const std::uint64_t workers =
        std::min<std::uint64_t>(static_cast<std::uint64_t>(cfg.jobs), trials);
    if (workers <= 1) {
      evaluate_range(0, trials);
    } else {
      std::vector<std::thread> pool;
      const std::uint64_t chunk = (trials + workers - 1) / workers;
      for (std::uint64_t w = 0; w < workers; ++w) {
        const std::uint64_t lo = w * chunk;
        const std::uint64_t hi = std::min(trials, lo + chunk);
        if (lo < hi) pool.emplace_back(evaluate_range, lo, hi);
      }
      for (std::thread& th : pool) th.join();
    }
    for (std::uint8_t h : hit) pk.identified += h;
    pk.ratio = static_cast<double>(pk.identified) / static_cast<double>(pk.total);
    rep.per_k.push_back(pk);
  }
  return rep;
}

// One report per reference row, ordered by (reference hop count, index).
// Every run restricts the congested-set universe to links the reference
// leaves visible, so degenerate references are flagged and still comparable.
inline std::vector<RatioReport> reference_sweep(const ExperimentConfig& cfg) {
  if (cfg.scheme != Scheme::Differential)
    throw Error("reference sweep requires the differential scheme");
  const int I = static_cast<int>(cfg.paths.paths.size());
  if (I < 2) throw Error("reference sweep needs at least 2 paths");
  std::vector<RatioReport> out;
  for (int r = 1; r <= I; ++r) {
    ExperimentConfig c = cfg;
    c.reference_index = r;
    c.restrict_to_visible = true;
    out.push_back(k_identifiability_ratio(c));
  }
  std::stable_sort(out.begin(), out.end(), [](const RatioReport& x, const RatioReport& y) {
    return std::pair(x.reference_l1, x.reference_index) <
           std::pair(y.reference_l1, y.reference_index);
  });
  return out;
}

// Nested path sets (each a strict prefix-extension of the previous) evaluated
// under both schemes: original with delta forced to zero (the synchronized
// baseline) and differential with the configured reference and delta mode.
inline std::vector<RatioReport> row_count_comparison(const ExperimentConfig& cfg,
                                                     const std::vector<PathSet>& nested) {
  if (nested.empty()) throw Error("row-count comparison needs at least one path set");
  for (std::size_t t = 1; t < nested.size(); ++t) {
    const PathSet& small = nested[t - 1];
    const PathSet& big = nested[t];
    if (!(big.topology == small.topology))
      throw Error("nested path sets must share one topology");
    if (big.paths.size() <= small.paths.size())
      throw Error("path sets must strictly grow");
    if (!std::equal(small.paths.begin(), small.paths.end(), big.paths.begin()))
      throw Error("path set " + std::to_string(t + 1) +
                  " does not extend its predecessor");
  }
  std::vector<RatioReport> out;
  for (const PathSet& ps : nested) {
    ExperimentConfig c = cfg;
    c.paths = ps;
    c.scheme = Scheme::Original;
    c.delta_mode = DeltaMode::Zero;
    out.push_back(k_identifiability_ratio(c));
    c.scheme = Scheme::Differential;
    c.reference_index = cfg.reference_index;
    c.delta_mode = cfg.delta_mode;
    out.push_back(k_identifiability_ratio(c));
  }
  return out;
}

inline std::uint64_t config_hash(const ExperimentConfig& cfg) {
  std::ostringstream s;
  s << serialize_topology(cfg.paths.topology) << "|" << serialize_paths(cfg.paths) << "|"
    << scheme_name(cfg.scheme) << "|" << cfg.reference_index << "|";
  for (int k : cfg.k_range) s << k << ",";
  s << "|" << fmt_g(cfg.delay.congested_delay, 17) << "|" << fmt_g(cfg.delay.background_mean, 17)
    << "|" << fmt_g(cfg.solver.lambda_rel, 17) << "|" << cfg.solver.max_iters << "|"
    << fmt_g(cfg.solver.rel_tol, 17) << "|" << fmt_g(cfg.solver.support_threshold_ms, 17)
    << "|" << delta_mode_name(cfg.delta_mode) << "|" << fmt_g(cfg.delta_min_abs, 17) << "|"
    << fmt_g(cfg.delta_max_abs, 17) << "|" << cfg.seed << "|" << cfg.enumeration_cap << "|"
    << cfg.sample_size << "|" << cfg.repeats << "|" << cfg.restrict_to_visible;
  const std::string text = s.str();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Results CSV. '#' metadata records the config hash, generator, sampling
// modes, and any links a scheme cannot see.
inline std::string ratio_csv(const std::vector<RatioReport>& reports,
                             std::uint64_t cfg_hash) {
  std::ostringstream out;
  char hex[32];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(cfg_hash));
  out << "# config=" << hex << " generator=" << kGeneratorName << "\n";
  for (const RatioReport& r : reports) {
    if (!r.cancelled_links.empty()) {
      out << "# cancelled scheme=" << scheme_name(r.scheme)
          << " reference=" << r.reference_index << " links=";
      for (std::size_t i = 0; i < r.cancelled_links.size(); ++i)
        out << (i ? "," : "") << r.cancelled_links[i];
      out << "\n";
    }
    for (const PerKRatio& pk : r.per_k)
      if (pk.sampled)
        out << "# sampled scheme=" << scheme_name(r.scheme)
            << " reference=" << r.reference_index << " k=" << pk.k
            << " seed=" << pk.sample_seed << " size=" << pk.total << "\n";
  }
  out << "scheme,reference_index,reference_l1,I,J,k,total_sets,identified,R,delta_mode,seed\n";
  for (const RatioReport& r : reports)
    for (const PerKRatio& pk : r.per_k)
      out << scheme_name(r.scheme) << "," << r.reference_index << ","
          << fmt_g(r.reference_l1) << "," << r.path_count << "," << r.link_count << ","
          << pk.k << "," << pk.total << "," << pk.identified << "," << fmt_g(pk.ratio)
          << "," << delta_mode_name(r.delta_mode) << "," << r.seed << "\n";
  return out.str();
}

}  // namespace difftomo
