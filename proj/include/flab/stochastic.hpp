#pragma once

#include <cstdint>
#include <vector>

#include "flab/exec.hpp"
#include "flab/json_io.hpp"
#include "flab/lattice.hpp"

namespace flab {

/// SplitMix64 stream. Path p of an ensemble with seed s starts from
/// mix(s ^ mix(p + 1)), so each path draws from its own counter-indexed
/// substream no matter which worker runs it.
class PathStream {
 public:
  PathStream(std::uint64_t seed, std::uint64_t path);

  std::uint64_t next_u64();
  /// Uniform on (0, 1].
  double next_open01();

 private:
  std::uint64_t state_;
};

struct TrajectoryEnsemble {
  int n_paths = 0;
  std::uint64_t seed = 0;
  double horizon = 0.0;
  int start = 0;                     // signed node index
  std::vector<int> final_states;     // signed node index per path
  // Per storage slot. Every drawn holding time is tallied, including the last
  // one of each path that runs past the horizon.
  std::vector<std::int64_t> hold_count;
  std::vector<double> hold_sum;
  std::vector<double> hold_sum_sq;
  std::vector<std::int64_t> jumps_right;
  std::vector<std::int64_t> jumps_left;

  double mean_holding(int slot) const;
  /// Standard error of mean_holding from the sample variance.
  double holding_standard_error(int slot) const;
};

/// Exact jump simulation of n_paths paths from node `start` up to `horizon`.
/// Paths run in blocks of 256; block tallies are merged in block order, so the
/// result is bitwise identical for any number of threads.
TrajectoryEnsemble simulate(const RateField& r, const Lattice& lat, int start, double horizon,
                            int n_paths, std::uint64_t seed, Exec exec = Exec::parallel);

/// Plain path-by-path loop with a single set of tallies. Integer tallies match
/// simulate exactly; floating sums agree up to summation order.
TrajectoryEnsemble simulate_reference(const RateField& r, const Lattice& lat, int start,
                                      double horizon, int n_paths, std::uint64_t seed);

/// Normalised histogram of final states over the window.
GridFunction empirical_law(const TrajectoryEnsemble& e, const Lattice& lat);

/// 1/2 sum |p_i - q_i|. Both must sum to 1 within 1e-9.
double tv_distance(const GridFunction& p, const GridFunction& q);

/// {n_paths, seed, horizon, tv_to_stationary, per_node:[{i, visits, mean_holding,
/// expected_holding}]}; mean_holding is null for unvisited nodes.
Json ensemble_summary(const TrajectoryEnsemble& e, const RateField& r, const Lattice& lat,
                      const StationaryMeasure& m);

}  // namespace flab
