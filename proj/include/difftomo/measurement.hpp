#pragma once

// Delay simulation: congested links carry a fixed large delay, the rest draw
// i.i.d. exponential background delays; path delays are contaminated by a
// single unknown clock offset which the differential construction cancels.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "difftomo/error.hpp"
#include "difftomo/format.hpp"
#include "difftomo/rng.hpp"
#include "difftomo/tomo_matrix.hpp"

namespace difftomo {

struct DelayParams {
  double congested_delay = 10.0;  // ms
  double background_mean = 0.05;  // ms; 0 is the documented zero-noise limit
  std::uint64_t seed = 0;
};

inline void validate_delay_params(const DelayParams& p) {
  if (!(p.background_mean >= 0.0)) throw Error("background_mean must be >= 0");
  if (!(p.congested_delay > p.background_mean))
    throw Error("congested_delay must exceed background_mean");
}

struct LinkDelayVector {
  std::vector<double> delays;  // length J, ms
  std::vector<int> congested;  // 1-based, ascending
  DelayParams params;
};

// Congested links get exactly congested_delay; all others an inverse-CDF
// exponential draw, in ascending link order so the stream is reproducible.
// The vector is fixed for a whole experiment run (stationary link states).
inline LinkDelayVector generate_link_delays(int link_count, std::vector<int> congested,
                                            const DelayParams& p) {
  if (link_count < 1) throw Error("link count must be >= 1");
  validate_delay_params(p);
  std::sort(congested.begin(), congested.end());
  if (std::adjacent_find(congested.begin(), congested.end()) != congested.end())
    throw Error("congested set has duplicate links");
  if (static_cast<int>(congested.size()) > link_count)
    throw Error("congested set larger than link count");
  for (int j : congested)
    if (j < 1 || j > link_count)
      throw Error("congested link " + std::to_string(j) + " out of range 1.." +
                  std::to_string(link_count));
  LinkDelayVector v;
  v.congested = congested;
  v.params = p;
  v.delays.resize(static_cast<std::size_t>(link_count));
  std::mt19937_64 g(p.seed);
  std::size_t c = 0;
  for (int j = 1; j <= link_count; ++j) {
    if (c < congested.size() && congested[c] == j) {
      v.delays[static_cast<std::size_t>(j - 1)] = p.congested_delay;
      ++c;
    } else {
      v.delays[static_cast<std::size_t>(j - 1)] =
          p.background_mean > 0.0 ? exponential_draw(g, p.background_mean) : 0.0;
    }
  }
  return v;
}

// y_i = sum over links of a_ij x_j; works for both matrix kinds.
inline std::vector<double> path_delays(MatrixView m, std::span<const double> x) {
  if (static_cast<int>(x.size()) != m.cols)
    throw Error("delay vector length " + std::to_string(x.size()) +
                " does not match link count " + std::to_string(m.cols));
  std::vector<double> y(static_cast<std::size_t>(m.rows), 0.0);
  for (int i = 0; i < m.rows; ++i) {
    double s = 0;
    for (int j = 0; j < m.cols; ++j)
      if (const int e = m.at(i, j); e != 0) s += e * x[static_cast<std::size_t>(j)];
    y[static_cast<std::size_t>(i)] = s;
  }
  return y;
}

inline std::vector<double> apply_clock_offset(std::span<const double> y, double delta) {
  std::vector<double> z(y.begin(), y.end());
  for (double& v : z) v += delta;
  return z;
}

// z^(r)_i = z_i - z_r for every non-reference i in row order; any constant
// offset in z cancels exactly up to floating round-off.
inline std::vector<double> differential_measurements(std::span<const double> z, int reference) {
  const int I = static_cast<int>(z.size());
  if (I < 2) throw Error("differential measurements need at least 2 paths");
  if (reference < 1 || reference > I)
    throw Error("reference row " + std::to_string(reference) + " out of range 1.." +
                std::to_string(I));
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(I - 1));
  const double zr = z[static_cast<std::size_t>(reference - 1)];
  for (int i = 0; i < I; ++i)
    if (i != reference - 1) d.push_back(z[static_cast<std::size_t>(i)] - zr);
  return d;
}

struct MeasurementSet {
  std::vector<double> true_delays;  // y, ms
  double clock_offset = 0.0;  // delta, ms, any sign
  std::vector<double> observed;  // z = y + delta
  std::optional<int> reference_index;
  std::vector<double> differential;  // z^(r), empty unless reference set
};

inline MeasurementSet simulate_measurements(const RoutingMatrix& m, const LinkDelayVector& x,
                                            double delta, std::optional<int> reference) {
  MeasurementSet ms;
  ms.true_delays = path_delays(m, x.delays);
  ms.clock_offset = delta;
  ms.observed = apply_clock_offset(ms.true_delays, delta);
  if (reference) {
    ms.reference_index = reference;
    ms.differential = differential_measurements(ms.observed, *reference);
  }
  return ms;
}

// CSV dump, columns path_index,y_ms,z_ms. The differential variant keeps the
// original path indices, drops the reference row, carries differential values
// in both delay columns, and records the reference in a '#' metadata line.
inline std::string measurement_csv(const MeasurementSet& ms) {
  std::ostringstream out;
  if (ms.reference_index) {
    const int r = *ms.reference_index;
    out << "# reference_index=" << r << "\n";
    out << "path_index,y_ms,z_ms\n";
    const double yr = ms.true_delays[static_cast<std::size_t>(r - 1)];
    std::size_t d = 0;
    for (std::size_t i = 0; i < ms.true_delays.size(); ++i) {
      if (static_cast<int>(i) == r - 1) continue;
      out << (i + 1) << "," << fmt_g(ms.true_delays[i] - yr, 9) << ","
          << fmt_g(ms.differential[d++], 9) << "\n";
    }
  } else {
    out << "path_index,y_ms,z_ms\n";
    for (std::size_t i = 0; i < ms.true_delays.size(); ++i)
      out << (i + 1) << "," << fmt_g(ms.true_delays[i], 9) << ","
          << fmt_g(ms.observed[i], 9) << "\n";
  }
  return out.str();
}

}  // namespace difftomo
