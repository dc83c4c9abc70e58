#include "pointlab/lyapunov.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "pointlab/errors.hpp"
#include "pointlab/rng.hpp"

namespace pointlab {

namespace {

constexpr int kCheckpoints = 64;

struct ReplicaRun {
  double log_norm = 0.0;
  std::vector<double> profile;  // log||M_k|| at the checkpoints
};

std::vector<std::int64_t> checkpoints(std::int64_t n) {
  std::vector<std::int64_t> ks;
  const std::int64_t half = n / 2;
  for (int i = 0; i <= kCheckpoints; ++i) {
    const std::int64_t k = half + (n - half) * i / kCheckpoints;
    if (k >= 1 && (ks.empty() || ks.back() != k)) ks.push_back(k);
  }
  return ks;
}

ReplicaRun run_replica(const DisorderMeasure& measure, const std::vector<Mat2>& transfers,
                       std::uint64_t seed, std::int64_t first_index, std::int64_t n,
                       const std::vector<std::int64_t>& marks) {
  ReplicaRun run;
  run.profile.reserve(marks.size());
  LogNormAccumulator acc;
  std::size_t next = 0;
  for (std::int64_t k = 1; k <= n; ++k) {
    const std::size_t atom = draw_atom(measure, seed, first_index + k - 1);
    acc.push(transfers[atom]);
    if (next < marks.size() && marks[next] == k) {
      run.profile.push_back(acc.log_norm());
      ++next;
    }
  }
  run.log_norm = acc.log_norm();
  return run;
}

}  // namespace

std::vector<Mat2> atom_transfers(const DisorderMeasure& measure, double E) {
  std::vector<Mat2> out;
  out.reserve(measure.size());
  for (const SupportAtom& a : measure.atoms()) {
    if (a.condition.is_separating()) {
      throw DomainError("Lyapunov exponent undefined: measure has separating atoms");
    }
    out.push_back(transfer(E, a.ell, a.condition.matrix()));
  }
  return out;
}

double finite_exponent(const DisorderMeasure& measure, double E, std::uint64_t seed,
                       std::int64_t first_index, std::int64_t n) {
  if (n < 1) throw DomainError("finite_exponent: n must be positive");
  const auto transfers = atom_transfers(measure, E);
  return run_replica(measure, transfers, seed, first_index, n, {}).log_norm /
         static_cast<double>(n);
}

LyapunovEstimate lyapunov_mc(const DisorderMeasure& measure, double E, std::int64_t n,
                             int replicas, std::uint64_t seed) {
  if (n < 1000) throw DomainError("lyapunov_mc: n must be at least 1000");
  if (replicas < 1) throw DomainError("lyapunov_mc: replicas must be at least 1");
  const auto transfers = atom_transfers(measure, E);
  const auto marks = checkpoints(n);
  const double dn = static_cast<double>(n);

  std::vector<double> values(static_cast<std::size_t>(replicas));
  std::vector<double> mean_profile(marks.size(), 0.0);
  for (int r = 0; r < replicas; ++r) {
    const ReplicaRun run =
        run_replica(measure, transfers, derive_seed(seed, static_cast<std::uint64_t>(r)), 1, n,
                    marks);
    values[static_cast<std::size_t>(r)] = run.log_norm / dn;
    for (std::size_t i = 0; i < marks.size(); ++i) mean_profile[i] += run.profile[i] / replicas;
  }

  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= replicas;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double stat2 = replicas > 1 ? var / (replicas - 1) / replicas : 0.0;

  double tau = 0.0;
  const double slope = mean_profile.back() / static_cast<double>(marks.back());
  for (std::size_t i = 0; i < marks.size(); ++i) {
    tau = std::max(tau, std::abs(mean_profile[i] - slope * static_cast<double>(marks[i])));
  }
  tau /= dn;
  const double floor = 1e-12 * std::max(1.0, std::abs(mean));

  LyapunovEstimate est;
  est.E = E;
  est.raw = mean;
  est.value = std::max(0.0, mean);
  est.std_error = std::sqrt(stat2 + tau * tau + floor * floor);
  est.steps = n;
  est.replicas = replicas;
  return est;
}

double lyapunov_periodic(const CellAtom& atom, double E) {
  const double tr = std::abs(transfer(E, atom.ell, atom.B).trace());
  if (tr <= 2.0) return 0.0;
  // Larger root of lambda^2 - tr lambda + 1.
  return std::log(0.5 * (tr + std::sqrt((tr - 2.0) * (tr + 2.0))));
}

double lyapunov_periodic(const SupportAtom& atom, double E) {
  return lyapunov_periodic(CellAtom{atom.ell, atom.condition.matrix()}, E);
}

LyapunovCurve lyapunov_curve(const DisorderMeasure& measure, const std::vector<double>& grid,
                             std::int64_t n, int replicas, std::uint64_t seed, int threads) {
  if (grid.empty()) throw DomainError("lyapunov_curve: empty grid");
  LyapunovCurve curve;
  curve.grid = grid;
  curve.mean_length = mean_length(measure);
  curve.estimates.resize(grid.size());

  std::size_t workers = threads > 0 ? static_cast<std::size_t>(threads)
                                    : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, grid.size());

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      try {
        curve.estimates[i] = lyapunov_mc(measure, grid[i], n, replicas, derive_seed(seed, i));
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return curve;
}

std::vector<EnergyInterval> exceptional_scan(const LyapunovCurve& curve, double threshold) {
  if (!(threshold > 0.0)) throw DomainError("exceptional_scan: threshold must be positive");
  for (const auto& e : curve.estimates) {
    if (e.std_error >= threshold / 3.0) {
      throw PrecisionError("exceptional_scan: std error " + std::to_string(e.std_error) +
                           " at E=" + std::to_string(e.E) + " exceeds threshold/3");
    }
  }
  std::vector<EnergyInterval> runs;
  bool open = false;
  for (std::size_t i = 0; i < curve.estimates.size(); ++i) {
    const bool low = curve.estimates[i].value < threshold;
    if (low && !open) {
      runs.push_back({curve.grid[i], curve.grid[i]});
      open = true;
    } else if (low) {
      runs.back().hi = curve.grid[i];
    } else {
      open = false;
    }
  }
  return runs;
}

double flagged_fraction(const LyapunovCurve& curve, double threshold) {
  const auto low = std::count_if(curve.estimates.begin(), curve.estimates.end(),
                                 [&](const LyapunovEstimate& e) { return e.value < threshold; });
  return static_cast<double>(low) / static_cast<double>(curve.estimates.size());
}

std::vector<double> linspace(double lo, double hi, std::size_t points) {
  if (points == 0) return {};
  if (points == 1) return {lo};
  std::vector<double> out(points);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
  }
  out.back() = hi;
  return out;
}

}  // namespace pointlab
