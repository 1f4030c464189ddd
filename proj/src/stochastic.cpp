#include "flab/stochastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace flab {

namespace {

constexpr int kBlock = 256;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

struct Tally {
  std::vector<std::int64_t> hold_count;
  std::vector<double> hold_sum;
  std::vector<double> hold_sum_sq;
  std::vector<std::int64_t> right;
  std::vector<std::int64_t> left;

  explicit Tally(int n)
      : hold_count(n, 0), hold_sum(n, 0.0), hold_sum_sq(n, 0.0), right(n, 0), left(n, 0) {}

  void merge_into(TrajectoryEnsemble& e) const {
    for (std::size_t k = 0; k < hold_count.size(); ++k) {
      e.hold_count[k] += hold_count[k];
      e.hold_sum[k] += hold_sum[k];
      e.hold_sum_sq[k] += hold_sum_sq[k];
      e.jumps_right[k] += right[k];
      e.jumps_left[k] += left[k];
    }
  }
};

// One path; returns the final storage slot.
int run_path(const RateField& r, int slot, double horizon, PathStream& rng, Tally& tally) {
  double t = 0.0;
  for (;;) {
    const double a = r.alpha[slot];
    const double total = a + r.beta[slot];
    if (total <= 0.0) return slot;
    const double hold = -std::log(rng.next_open01()) / total;
    // The full draw is tallied even when it overruns the horizon; dropping it
    // would keep only holds short enough to finish and bias the mean low.
    tally.hold_count[slot] += 1;
    tally.hold_sum[slot] += hold;
    tally.hold_sum_sq[slot] += hold * hold;
    if (t + hold > horizon) return slot;
    t += hold;
    if (rng.next_open01() * total <= a) {
      tally.right[slot] += 1;
      ++slot;
    } else {
      tally.left[slot] += 1;
      --slot;
    }
  }
}

TrajectoryEnsemble empty_ensemble(const Lattice& lat, int start, double horizon, int n_paths,
                                  std::uint64_t seed) {
  if (n_paths <= 0) throw Error("simulate: n_paths must be positive");
  if (!(horizon >= 0.0) || !std::isfinite(horizon)) {
    throw Error("simulate: horizon must be finite and nonnegative");
  }
  if (start < -lat.n_half || start > lat.n_half) {
    throw Error("simulate: start node " + std::to_string(start) + " is outside the window");
  }
  TrajectoryEnsemble e;
  e.n_paths = n_paths;
  e.seed = seed;
  e.horizon = horizon;
  e.start = start;
  e.final_states.assign(n_paths, start);
  const int n = lat.size();
  e.hold_count.assign(n, 0);
  e.hold_sum.assign(n, 0.0);
  e.hold_sum_sq.assign(n, 0.0);
  e.jumps_right.assign(n, 0);
  e.jumps_left.assign(n, 0);
  return e;
}

void check_rates(const RateField& r, const Lattice& lat, int start, double horizon) {
  require_same_size(r.alpha.size(), static_cast<std::size_t>(lat.size()), "simulate");
  const int s = lat.slot(start);
  if (lat.size() > 1 && horizon > 0.0 && !(r.alpha[s] + r.beta[s] > 0.0)) {
    throw Error("simulate: total jump rate at the start node is zero");
  }
}

}  // namespace

PathStream::PathStream(std::uint64_t seed, std::uint64_t path)
    : state_(mix64(seed ^ mix64(path + 1))) {}

std::uint64_t PathStream::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  return mix64(state_);
}

double PathStream::next_open01() {
  return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
}

double TrajectoryEnsemble::mean_holding(int slot) const {
  const auto c = hold_count.at(slot);
  return c > 0 ? hold_sum[slot] / static_cast<double>(c)
               : std::numeric_limits<double>::quiet_NaN();
}

double TrajectoryEnsemble::holding_standard_error(int slot) const {
  const auto c = hold_count.at(slot);
  if (c < 2) return std::numeric_limits<double>::quiet_NaN();
  const double n = static_cast<double>(c);
  const double mean = hold_sum[slot] / n;
  const double var = std::max(0.0, (hold_sum_sq[slot] - n * mean * mean) / (n - 1.0));
  return std::sqrt(var / n);
}

TrajectoryEnsemble simulate(const RateField& r, const Lattice& lat, int start, double horizon,
                            int n_paths, std::uint64_t seed, Exec exec) {
  TrajectoryEnsemble e = empty_ensemble(lat, start, horizon, n_paths, seed);
  check_rates(r, lat, start, horizon);
  const int n = lat.size();
  const int blocks = (n_paths + kBlock - 1) / kBlock;
  std::vector<Tally> tallies(blocks, Tally(0));
  auto run_block = [&](int blk) {
    Tally t(n);
    const int first = blk * kBlock;
    const int last = std::min(n_paths, first + kBlock);
    for (int p = first; p < last; ++p) {
      PathStream rng(seed, static_cast<std::uint64_t>(p));
      e.final_states[p] = run_path(r, lat.slot(start), horizon, rng, t) - lat.n_half;
    }
    tallies[blk] = std::move(t);
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (int blk = 0; blk < blocks; ++blk) run_block(blk);
  } else {
    for (int blk = 0; blk < blocks; ++blk) run_block(blk);
  }
  for (const Tally& t : tallies) t.merge_into(e);
  return e;
}

TrajectoryEnsemble simulate_reference(const RateField& r, const Lattice& lat, int start,
                                      double horizon, int n_paths, std::uint64_t seed) {
  TrajectoryEnsemble e = empty_ensemble(lat, start, horizon, n_paths, seed);
  check_rates(r, lat, start, horizon);
  Tally t(lat.size());
  for (int p = 0; p < n_paths; ++p) {
    PathStream rng(seed, static_cast<std::uint64_t>(p));
    e.final_states[p] = run_path(r, lat.slot(start), horizon, rng, t) - lat.n_half;
  }
  t.merge_into(e);
  return e;
}

GridFunction empirical_law(const TrajectoryEnsemble& e, const Lattice& lat) {
  if (e.n_paths <= 0) throw Error("empirical_law: empty ensemble");
  std::vector<std::int64_t> counts(lat.size(), 0);
  for (int s : e.final_states) {
    if (s < -lat.n_half || s > lat.n_half) throw Error("empirical_law: final state outside window");
    ++counts[lat.slot(s)];
  }
  GridFunction p(lat.size());
  for (int k = 0; k < lat.size(); ++k) p[k] = static_cast<double>(counts[k]) / e.n_paths;
  return p;
}

double tv_distance(const GridFunction& p, const GridFunction& q) {
  require_same_size(p.size(), q.size(), "tv_distance");
  double sp = 0.0, sq = 0.0, acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    sp += p[k];
    sq += q[k];
    acc += std::abs(p[k] - q[k]);
  }
  if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
    throw Error("tv_distance: inputs must be probability vectors (sums " + std::to_string(sp) +
                ", " + std::to_string(sq) + ")");
  }
  return std::min(1.0, 0.5 * acc);
}

Json ensemble_summary(const TrajectoryEnsemble& e, const RateField& r, const Lattice& lat,
                      const StationaryMeasure& m) {
  Json j;
  j["n_paths"] = e.n_paths;
  j["seed"] = e.seed;
  j["horizon"] = e.horizon;
  j["tv_to_stationary"] = tv_distance(empirical_law(e, lat), m.weights);
  Json nodes = Json::array();
  for (int k = 0; k < lat.size(); ++k) {
    Json row;
    row["i"] = k - lat.n_half;
    row["visits"] = e.hold_count[k];
    if (e.hold_count[k] > 0) {
      row["mean_holding"] = e.mean_holding(k);
    } else {
      row["mean_holding"] = nullptr;
    }
    const double total = r.alpha[k] + r.beta[k];
    if (total > 0.0) {
      row["expected_holding"] = 1.0 / total;
    } else {
      row["expected_holding"] = nullptr;
    }
    nodes.push_back(row);
  }
  j["per_node"] = nodes;
  return j;
}

}  // namespace flab
