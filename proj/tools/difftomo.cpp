// difftomo: batch front end for routing-matrix analysis, differential
// measurement simulation, and k-identifiability experiments.
//
// Every run is deterministic: all randomness flows from --seed, and rerunning
// with identical flags reproduces outputs byte for byte.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "difftomo/difftomo.hpp"

namespace {

using difftomo::Error;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot read '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

// Assembled in memory and renamed into place, so a failed run never leaves a
// partial output file behind.
void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + tmp + "' for writing");
    f << content;
    f.flush();
    if (!f) {
      std::remove(tmp.c_str());
      throw Error("failed writing '" + path + "'");
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot move output into '" + path + "'");
  }
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::fputs(content.c_str(), stdout);
  } else {
    write_file_atomic(out_path, content);
  }
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  std::string token;
  std::istringstream in(s);
  while (std::getline(in, token, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(token, &used);
      if (used != token.size()) throw std::invalid_argument(token);
      out.push_back(v);
    } catch (const std::exception&) {
      throw Error(std::string("malformed ") + what + " entry '" + token + "'");
    }
  }
  if (out.empty()) throw Error(std::string("empty ") + what + " list");
  return out;
}

// "2", "1,2,3", or "1..3".
std::vector<int> parse_k_range(const std::string& s) {
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const std::vector<int> lo = parse_int_list(s.substr(0, dots), "k");
    const std::vector<int> hi = parse_int_list(s.substr(dots + 2), "k");
    if (lo.size() != 1 || hi.size() != 1 || lo[0] > hi[0])
      throw Error("malformed k range '" + s + "'");
    std::vector<int> out;
    for (int k = lo[0]; k <= hi[0]; ++k) out.push_back(k);
    return out;
  }
  return parse_int_list(s, "k");
}

// Shared path acquisition: an explicit paths file, or enumeration with an
// optional "COUNT:STRATEGY" selection.
struct PathFlags {
  std::string topology_file;
  std::string paths_file;
  std::string select_spec;
  std::size_t max_paths = 1000;
  int max_hops = 0;  // 0 = default |V|-1
};

void add_path_flags(CLI::App* cmd, PathFlags& pf) {
  cmd->add_option("--topology", pf.topology_file, "topology file")->required();
  cmd->add_option("--paths", pf.paths_file, "paths file (overrides enumeration)");
  cmd->add_option("--select", pf.select_spec,
                  "pick COUNT:STRATEGY from enumerated candidates "
                  "(shortest-first, coverage-greedy, random)");
  cmd->add_option("--max-paths", pf.max_paths, "enumeration truncation (default 1000)");
  cmd->add_option("--max-hops", pf.max_hops, "hop limit for enumeration (default |V|-1)");
}

difftomo::PathSet load_paths(const PathFlags& pf, std::optional<std::uint64_t> seed) {
  const difftomo::Topology t = difftomo::parse_topology(read_file(pf.topology_file));
  if (!pf.paths_file.empty() && !pf.select_spec.empty())
    throw Error("--paths and --select are mutually exclusive");
  if (!pf.paths_file.empty())
    return difftomo::parse_paths(read_file(pf.paths_file), t);
  const std::size_t hops =
      pf.max_hops > 0 ? static_cast<std::size_t>(pf.max_hops)
                      : (t.nodes.empty() ? 0 : t.nodes.size() - 1);
  difftomo::PathSet candidates = difftomo::enumerate_simple_paths(t, pf.max_paths, hops);
  if (pf.select_spec.empty()) return candidates;
  const auto colon = pf.select_spec.find(':');
  if (colon == std::string::npos)
    throw Error("--select expects COUNT:STRATEGY, got '" + pf.select_spec + "'");
  std::size_t count = 0;
  try {
    count = std::stoul(pf.select_spec.substr(0, colon));
  } catch (const std::exception&) {
    throw Error("malformed selection count in '" + pf.select_spec + "'");
  }
  const difftomo::SelectionStrategy strategy =
      difftomo::parse_strategy(pf.select_spec.substr(colon + 1));
  if (strategy == difftomo::SelectionStrategy::Random && !seed)
    throw Error("random path selection requires --seed");
  return difftomo::select_paths(candidates, count, strategy, seed.value_or(0));
}

std::string coherence_lines(const difftomo::CoherenceReport& c) {
  std::ostringstream out;
  out << "mu: " << difftomo::fmt_g(c.mu) << "\n";
  out << "argmax pair: links " << c.argmax_pair.first << " and " << c.argmax_pair.second
      << "\n";
  out << "k_max: " << c.k_max << "\n";
  return out.str();
}

struct EvalFlags {
  PathFlags pf;
  std::string k_spec;
  std::string scheme = "differential";
  std::string reference = "1";
  std::uint64_t seed = 0;
  std::string out_path;
  std::string delta_mode = "random";
  double delta_min_abs = 0.0;
  double delta_max_abs = 1e6;
  double congested_delay = 10.0;
  double background_mean = 0.05;
  double lambda_rel = 0.1;
  int max_iters = 10000;
  double rel_tol = 1e-8;
  double tau = 1.0;
  std::uint64_t cap = 100000;
  std::uint64_t sample_size = 10000;
  int repeats = 1;
  int jobs = 1;
  bool restrict_visible = false;
};

void add_eval_flags(CLI::App* cmd, EvalFlags& ef, bool with_scheme) {
  add_path_flags(cmd, ef.pf);
  cmd->add_option("--k", ef.k_spec, "congested-set sizes: N, N,M,... or A..B")->required();
  if (with_scheme) {
    cmd->add_option("--scheme", ef.scheme, "original or differential")->required();
    cmd->add_option("--reference", ef.reference,
                    "reference row for the differential scheme, or 'sweep'");
  }
  cmd->add_option("--seed", ef.seed, "master seed (required; sole randomness source)")
      ->required();
  cmd->add_option("--out", ef.out_path, "results CSV path")->required();
  cmd->add_option("--delta-mode", ef.delta_mode, "zero or random (default random)");
  cmd->add_option("--delta-min-abs", ef.delta_min_abs, "lower |delta| bound, ms");
  cmd->add_option("--delta-max-abs", ef.delta_max_abs, "upper |delta| bound, ms");
  cmd->add_option("--congested-delay", ef.congested_delay, "congested link delay, ms");
  cmd->add_option("--background-mean", ef.background_mean,
                  "mean background delay, ms (0 = noiseless)");
  cmd->add_option("--lambda-rel", ef.lambda_rel, "l1 weight relative to |M^T b|_inf");
  cmd->add_option("--max-iters", ef.max_iters, "solver iteration cap");
  cmd->add_option("--rel-tol", ef.rel_tol, "solver convergence tolerance");
  cmd->add_option("--tau", ef.tau, "support threshold, ms");
  cmd->add_option("--cap", ef.cap, "exhaustive enumeration cap");
  cmd->add_option("--sample-size", ef.sample_size, "sets sampled above the cap");
  cmd->add_option("--repeats", ef.repeats, "delay redraws per congested set");
  cmd->add_option("--jobs", ef.jobs, "evaluation threads (default 1)");
  cmd->add_flag("--restrict-visible", ef.restrict_visible,
                "draw congested sets only from links the scheme can see");
}

difftomo::ExperimentConfig build_config(const EvalFlags& ef, difftomo::Scheme scheme,
                                        int reference) {
  difftomo::ExperimentConfig cfg;
  cfg.paths = load_paths(ef.pf, ef.seed);
  cfg.scheme = scheme;
  cfg.reference_index = reference;
  cfg.k_range = parse_k_range(ef.k_spec);
  cfg.delay.congested_delay = ef.congested_delay;
  cfg.delay.background_mean = ef.background_mean;
  cfg.solver.lambda_rel = ef.lambda_rel;
  cfg.solver.max_iters = ef.max_iters;
  cfg.solver.rel_tol = ef.rel_tol;
  cfg.solver.support_threshold_ms = ef.tau;
  cfg.delta_mode = difftomo::parse_delta_mode(ef.delta_mode);
  cfg.delta_min_abs = ef.delta_min_abs;
  cfg.delta_max_abs = ef.delta_max_abs;
  cfg.seed = ef.seed;
  cfg.enumeration_cap = ef.cap;
  cfg.sample_size = ef.sample_size;
  cfg.repeats = ef.repeats;
  cfg.jobs = ef.jobs;
  cfg.restrict_to_visible = ef.restrict_visible;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synchronization-free delay tomography toolkit"};
  app.require_subcommand(1);

  // analyze: routing-matrix recoverability report
  auto* analyze = app.add_subcommand("analyze", "coherence and identifiability of A");
  PathFlags an_pf;
  std::optional<std::uint64_t> an_seed;
  std::string an_out;
  add_path_flags(analyze, an_pf);
  analyze->add_option("--seed", an_seed, "seed for random path selection");
  analyze->add_option("--out", an_out, "write report here instead of stdout");
  analyze->callback([&] {
    const difftomo::PathSet ps = load_paths(an_pf, an_seed);
    const difftomo::RoutingMatrix a = difftomo::build_routing_matrix(ps);
    const difftomo::CoherenceReport c = difftomo::mutual_coherence(a);
    const auto pair = difftomo::find_complementary_pair(a);
    const bool one_id = c.mu >= 1.0 / 3.0 - 1e-12 && !c.exact_unit;
    std::ostringstream out;
    out << "paths (I): " << a.path_count << "\n";
    out << "links (J): " << a.link_count << "\n";
    out << coherence_lines(c);
    out << "one_identifiable: " << (one_id ? "yes" : "no") << "\n";
    if (pair)
      out << "complementary pair: links " << pair->first << " and " << pair->second << "\n";
    else
      out << "no complementary pair\n";
    emit(an_out, out.str());
  });

  // diff: differential matrix dump plus its coherence
  auto* diff = app.add_subcommand("diff", "differential matrix for a reference row");
  PathFlags df_pf;
  std::optional<std::uint64_t> df_seed;
  int df_reference = 0;
  std::string df_out;
  add_path_flags(diff, df_pf);
  diff->add_option("--reference", df_reference, "reference row (1-based)")->required();
  diff->add_option("--seed", df_seed, "seed for random path selection");
  diff->add_option("--out", df_out, "write output here instead of stdout");
  diff->callback([&] {
    const difftomo::PathSet ps = load_paths(df_pf, df_seed);
    const difftomo::RoutingMatrix a = difftomo::build_routing_matrix(ps);
    const difftomo::DifferentialRoutingMatrix d =
        difftomo::build_differential_matrix(a, df_reference);
    std::ostringstream out;
    out << difftomo::dump_matrix(d);
    const difftomo::MaskedCoherenceReport mc = difftomo::mutual_coherence_masked(d);
    if (!mc.zero_columns.empty()) {
      out << "cancelled links:";
      for (int j : mc.zero_columns) out << " " << j;
      out << "\n";
    }
    if (mc.report)
      out << coherence_lines(*mc.report);
    else
      out << "mu: undefined (fewer than 2 visible links)\n";
    emit(df_out, out.str());
  });

  // simulate: one measurement round as CSV
  auto* simulate = app.add_subcommand("simulate", "simulate one measurement round");
  PathFlags sm_pf;
  std::string sm_congested;
  double sm_delta = 0.0;
  std::uint64_t sm_seed = 0;
  std::optional<int> sm_reference;
  double sm_congested_delay = 10.0;
  double sm_background_mean = 0.05;
  std::string sm_out;
  add_path_flags(simulate, sm_pf);
  simulate->add_option("--congested", sm_congested, "congested links, e.g. 1,5")->required();
  simulate->add_option("--delta", sm_delta, "clock offset, ms (any sign)")->required();
  simulate->add_option("--seed", sm_seed, "background delay seed")->required();
  simulate->add_option("--reference", sm_reference, "emit the differential variant");
  simulate->add_option("--congested-delay", sm_congested_delay, "congested link delay, ms");
  simulate->add_option("--background-mean", sm_background_mean,
                       "mean background delay, ms (0 = noiseless)");
  simulate->add_option("--out", sm_out, "write CSV here instead of stdout");
  simulate->callback([&] {
    const difftomo::PathSet ps = load_paths(sm_pf, sm_seed);
    const difftomo::RoutingMatrix a = difftomo::build_routing_matrix(ps);
    const difftomo::LinkDelayVector x = difftomo::generate_link_delays(
        a.link_count, parse_int_list(sm_congested, "congested"),
        {sm_congested_delay, sm_background_mean, sm_seed});
    const difftomo::MeasurementSet ms =
        difftomo::simulate_measurements(a, x, sm_delta, sm_reference);
    emit(sm_out, difftomo::measurement_csv(ms));
  });

  // evaluate: k-identifiability ratios
  auto* evaluate = app.add_subcommand("evaluate", "k-identifiability ratio experiments");
  EvalFlags ev;
  add_eval_flags(evaluate, ev, true);
  evaluate->callback([&] {
    const difftomo::Scheme scheme = difftomo::parse_scheme(ev.scheme);
    if (scheme == difftomo::Scheme::Original && evaluate->count("--reference") > 0)
      throw Error("--reference only applies to the differential scheme");
    std::vector<difftomo::RatioReport> reports;
    difftomo::ExperimentConfig cfg;
    if (scheme == difftomo::Scheme::Differential && ev.reference == "sweep") {
      cfg = build_config(ev, scheme, 1);
      reports = difftomo::reference_sweep(cfg);
    } else {
      int reference = 1;
      if (scheme == difftomo::Scheme::Differential) {
        try {
          std::size_t used = 0;
          reference = std::stoi(ev.reference, &used);
          if (used != ev.reference.size()) throw std::invalid_argument(ev.reference);
        } catch (const std::exception&) {
          throw Error("--reference expects a row index or 'sweep', got '" + ev.reference +
                      "'");
        }
      }
      cfg = build_config(ev, scheme, reference);
      reports.push_back(difftomo::k_identifiability_ratio(cfg));
    }
    emit(ev.out_path, difftomo::ratio_csv(reports, difftomo::config_hash(cfg)));
  });

  // sweep: differential ratios for every reference row
  auto* sweep = app.add_subcommand("sweep", "reference-row sweep (differential scheme)");
  EvalFlags sw;
  add_eval_flags(sweep, sw, false);
  sweep->callback([&] {
    const difftomo::ExperimentConfig cfg =
        build_config(sw, difftomo::Scheme::Differential, 1);
    const std::vector<difftomo::RatioReport> reports = difftomo::reference_sweep(cfg);
    emit(sw.out_path, difftomo::ratio_csv(reports, difftomo::config_hash(cfg)));
  });

  // paths: enumeration / selection as a paths file
  auto* paths = app.add_subcommand("paths", "enumerate or select source->receiver paths");
  PathFlags pt_pf;
  std::optional<std::uint64_t> pt_seed;
  std::string pt_out;
  add_path_flags(paths, pt_pf);
  paths->add_option("--seed", pt_seed, "seed for random selection");
  paths->add_option("--out", pt_out, "write paths file here instead of stdout");
  paths->callback([&] {
    emit(pt_out, difftomo::serialize_paths(load_paths(pt_pf, pt_seed)));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
