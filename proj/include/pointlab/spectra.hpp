#pragma once

// Finite-box restrictions H_[m,n] of the point-interaction Laplacian.
//
// A box covers the cells between vertices m and n of a realization.  The
// left end carries w u(t_m+) + z u'(t_m+) = 0, the right end
// x u(t_n-) + y u'(t_n-) = 0, interior connecting vertices act through their
// SL(2,R) matrix (phases are gauged away).  Interior separating vertices cut
// the box into independent segments.
//
// Spectra come from the secular function (right boundary form of the solution
// obeying the left condition) and are certified by a Pruefer winding count:
// the lifted angle of (u, u') at the right end is strictly decreasing in E,
// and every time it passes a level of the right boundary direction modulo pi
// exactly one eigenvalue is crossed.

#include <cstdint>
#include <vector>

#include "pointlab/model.hpp"
#include "pointlab/sl2.hpp"

namespace pointlab {

// a u + b u' = 0.
struct Robin {
  double a = 0.0;
  double b = 1.0;

  static constexpr Robin neumann() { return {0.0, 1.0}; }
  static constexpr Robin dirichlet() { return {1.0, 0.0}; }
  // Unit vector (u, u') satisfying the condition.
  Vec2 kernel() const;
};

class FiniteBox {
 public:
  // Cells [first_cell, end_cell) bounded by Robin conditions.
  struct Segment {
    std::size_t first_cell = 0;
    std::size_t end_cell = 0;
    Robin left;
    Robin right;
  };

  // interior.size() == lengths.size() - 1; interior[k-1] sits at vertex k.
  FiniteBox(double left_position, std::vector<double> lengths,
            std::vector<VertexCondition> interior, Robin left = Robin::neumann(),
            Robin right = Robin::neumann());

  // Cells m+1 .. n of the realization (draws m+1 .. n, interior vertices
  // m+1 .. n-1); the window must contain [m+1, n].
  static FiniteBox from_realization(const Realization& realization, std::int64_t m,
                                    std::int64_t n, Robin left = Robin::neumann(),
                                    Robin right = Robin::neumann());

  std::size_t cells() const { return lengths_.size(); }
  double length() const { return positions_.back() - positions_.front(); }
  const std::vector<double>& lengths() const { return lengths_; }
  // Vertex positions, cells() + 1 entries.
  const std::vector<double>& positions() const { return positions_; }
  const std::vector<VertexCondition>& interior() const { return interior_; }
  Robin left() const { return left_; }
  Robin right() const { return right_; }

  bool decoupled() const { return segments_.size() > 1; }
  const std::vector<Segment>& segments() const { return segments_; }
  // Stand-alone box for one segment.
  FiniteBox segment_box(std::size_t s) const;

  // Connecting matrix at interior vertex k (1 <= k < cells()).
  const Mat2& vertex_matrix(std::size_t k) const { return matrices_.at(k - 1); }
  const IwasawaFactors& vertex_factors(std::size_t k) const { return factors_.at(k - 1); }

 private:
  std::vector<double> lengths_;
  std::vector<double> positions_;
  std::vector<VertexCondition> interior_;
  std::vector<Mat2> matrices_;
  std::vector<IwasawaFactors> factors_;
  Robin left_;
  Robin right_;
  std::vector<Segment> segments_;
};

struct Eigenpair {
  double E = 0.0;
  // (u, u') at t_k+ for k < cells, at t_cells- for the last entry.
  std::vector<Vec2> traces;
  std::vector<double> positions;
  double norm = 1.0;
  int multiplicity_index = 0;
  std::size_t segment = 0;
  // Vertex range of the segment carrying the eigenfunction.
  std::size_t support_first = 0;
  std::size_t support_last = 0;

  double value(double x) const;
  double derivative(double x) const;
};

struct DecayFit {
  std::size_t center = 0;  // vertex index zeta
  double rate = 0.0;       // per unit length; +inf for compact support
  double rate_per_vertex = 0.0;
  double r_squared = 0.0;
  std::size_t points = 0;
};

struct GreenEval {
  double E = 0.0;
  double x = 0.0;
  double y = 0.0;
  double value = 0.0;
};

struct SegmentSpectrum {
  std::size_t first_vertex = 0;
  std::size_t last_vertex = 0;
  std::vector<double> eigenvalues;
};

inline constexpr double kDefaultEigenTol = 1e-10;

// x u(t_n-) + y u'(t_n-) for the solution starting from the unit left kernel
// vector; product over segments of a decoupled box.
double secular(const FiniteBox& box, double E);

// Number of eigenvalues strictly below E.
std::int64_t pruefer_count(const FiniteBox& box, double E);

// Eigenvalues in [emin, emax] in [emin, emax) intervals isolated by winding
// counts, refined by bisection on the secular sign to width < tol.  Repeated
// entries for degenerate eigenvalues of decoupled boxes.  Throws
// ConsistencyError when winding and sign changes cannot be reconciled.
std::vector<double> eigenvalues(const FiniteBox& box, double emin, double emax,
                                double tol = kDefaultEigenTol);

// Normalized eigenfunction; multiplicity_index picks among segments sharing E.
Eigenpair eigenfunction(const FiniteBox& box, double E, int multiplicity_index = 0);

// Per-cell Gauss-Legendre inner product of two eigenfunctions of one box.
double inner_product(const FiniteBox& box, const Eigenpair& f, const Eigenpair& g);

// Exponential tail fit around the amplitude maximum.
DecayFit decay_fit(const Eigenpair& pair, double mean_length);

// psi_-(min) psi_+(max) / W(psi_+, psi_-) at positions inside the box.
GreenEval green(const FiniteBox& box, double E, double x, double y);

struct MomentSample {
  double t = 0.0;
  double moment = 0.0;
};

// <psi_t| |X|^p |psi_t> with psi_t = exp(-i t H) P_I chi_K / |K|^(1/2) and P_I
// the box spectral projection onto [e1, e2].
std::vector<MomentSample> dynamical_moments(const FiniteBox& box, double e1, double e2, double p,
                                            double k_lo, double k_hi,
                                            const std::vector<double>& times);
double dynamical_moment(const FiniteBox& box, double e1, double e2, double p, double k_lo,
                        double k_hi, const std::vector<double>& times);

// Spectra of the segments cut out by separating vertices.
std::vector<SegmentSpectrum> separated_spectrum(const FiniteBox& box, double emin, double emax,
                                                double tol = kDefaultEigenTol);

// Box over realization cells m+1..n; outer ends take the given Robin data.
std::vector<SegmentSpectrum> separated_spectrum(const Realization& realization, std::int64_t m,
                                                std::int64_t n, double emin, double emax,
                                                Robin left = Robin::neumann(),
                                                Robin right = Robin::neumann(),
                                                double tol = kDefaultEigenTol);

}  // namespace pointlab
