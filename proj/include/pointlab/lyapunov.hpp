#pragma once

#include <cstdint>
#include <vector>

#include "pointlab/model.hpp"

namespace pointlab {

struct LyapunovEstimate {
  double E = 0.0;
  // Per-vertex exponent, clamped at 0 for reporting.
  double value = 0.0;
  // Replica standard error combined in quadrature with the finite-length
  // truncation estimate (see lyapunov_mc).
  double std_error = 0.0;
  double raw = 0.0;
  std::int64_t steps = 0;
  int replicas = 0;
};

struct LyapunovCurve {
  std::vector<double> grid;
  std::vector<LyapunovEstimate> estimates;
  double mean_length = 1.0;

  // L(E) / mean_length: exponent per unit length.
  double continuum(std::size_t i) const { return estimates.at(i).value / mean_length; }
};

struct EnergyInterval {
  double lo = 0.0;
  double hi = 0.0;
};

inline constexpr std::int64_t kDefaultSteps = 100000;
inline constexpr int kDefaultReplicas = 32;
inline constexpr double kDefaultExceptionalThreshold = 0.01;

// Transfer matrices of every support atom at energy E (phases dropped).
// Throws DomainError when the measure has separating atoms.
std::vector<Mat2> atom_transfers(const DisorderMeasure& measure, double E);

// F_n = (1/n) log ||M_n|| over draws first_index .. first_index + n - 1 of the
// realization keyed by seed.
double finite_exponent(const DisorderMeasure& measure, double E, std::uint64_t seed,
                       std::int64_t first_index, std::int64_t n);

// Mean of F_n over independent replicas (replica r uses derive_seed(seed, r)).
//
// std_error = sqrt(s^2 / R + tau^2 + floor^2): s is the replica spread, tau
// the largest deviation of the replica-averaged profile log||M_k|| from the
// straight line k F_n over checkpoints k in [n/2, n] (divided by n), and
// floor = 1e-12 max(1, F_n) absorbs rounding.  tau carries the O(1/n)
// truncation bias that replica spread cannot see; for a single-atom support
// every replica is identical and tau is the whole error bar.
LyapunovEstimate lyapunov_mc(const DisorderMeasure& measure, double E, std::int64_t n,
                             int replicas, std::uint64_t seed);

// Closed form for a periodic (single-atom) support: log of the spectral
// radius of the one-step matrix; exactly 0 when |trace| <= 2.
double lyapunov_periodic(const CellAtom& atom, double E);
double lyapunov_periodic(const SupportAtom& atom, double E);

// Grid point i uses seed derive_seed(seed, i); threads <= 0 means hardware
// concurrency.  Output is independent of threads.
LyapunovCurve lyapunov_curve(const DisorderMeasure& measure, const std::vector<double>& grid,
                             std::int64_t n, int replicas, std::uint64_t seed, int threads = 1);

// Maximal runs of grid points with value < threshold, as [first E, last E].
// Throws PrecisionError if some std_error >= threshold / 3.
std::vector<EnergyInterval> exceptional_scan(const LyapunovCurve& curve, double threshold);

// Fraction of grid points with value < threshold.
double flagged_fraction(const LyapunovCurve& curve, double threshold);

std::vector<double> linspace(double lo, double hi, std::size_t points);

}  // namespace pointlab
