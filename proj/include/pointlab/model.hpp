#pragma once

// Vertex conditions, finitely supported disorder measures and their i.i.d.
// realizations.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pointlab/sl2.hpp"

namespace pointlab {

// (A, B) = (I, e^{i theta} I).
struct TrivialCondition {
  double theta = 0.0;
  friend bool operator==(const TrivialCondition&, const TrivialCondition&) = default;
};

// (A, B) = (I, e^{i theta} B), B in SL(2,R).
struct ConnectingCondition {
  double theta = 0.0;
  Mat2 B;
  friend bool operator==(const ConnectingCondition&, const ConnectingCondition&) = default;
};

// (A, B) = ([[x, y], [0, 0]], [[0, 0], [w, z]]).  Decouples the line: the
// cell ending at the vertex sees x u + y u' = 0, the cell starting at it sees
// w u + z u' = 0.
struct SeparatingCondition {
  double x = 1.0;
  double y = 0.0;
  double w = 1.0;
  double z = 0.0;
  friend bool operator==(const SeparatingCondition&, const SeparatingCondition&) = default;
};

class VertexCondition {
 public:
  using Kind = std::variant<TrivialCondition, ConnectingCondition, SeparatingCondition>;

  VertexCondition() = default;
  static VertexCondition trivial(double theta = 0.0);
  static VertexCondition connecting(double theta, const Mat2& B);
  static VertexCondition connecting(const Mat2& B) { return connecting(0.0, B); }
  static VertexCondition separating(double x, double y, double w, double z);

  const Kind& kind() const { return kind_; }
  bool is_trivial() const { return std::holds_alternative<TrivialCondition>(kind_); }
  bool is_connecting() const { return !is_separating(); }
  bool is_separating() const { return std::holds_alternative<SeparatingCondition>(kind_); }

  // Phase theta (0 for separating conditions).
  double phase() const;
  // Real SL(2,R) part; identity for trivial conditions.  Throws DomainError
  // for separating conditions.
  Mat2 matrix() const;
  const SeparatingCondition& separation() const;

  // Same kind and parameters within tol.
  bool approx_equal(const VertexCondition& other, double tol) const;

  friend bool operator==(const VertexCondition&, const VertexCondition&) = default;

 private:
  explicit VertexCondition(Kind k) : kind_(std::move(k)) {}
  Kind kind_ = TrivialCondition{};
};

struct SupportAtom {
  double ell = 1.0;
  VertexCondition condition;
  double weight = 1.0;
};

class DisorderMeasure {
 public:
  // Validates: nonempty, ell > 0, weights in (0, 1] summing to 1 within
  // 1e-12, atoms pairwise distinct.
  explicit DisorderMeasure(std::vector<SupportAtom> atoms, std::string name = "");
  // Rescales positive weights to sum to one before validating.
  static DisorderMeasure normalized(std::vector<SupportAtom> atoms, std::string name = "");

  const std::vector<SupportAtom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }
  const SupportAtom& atom(std::size_t i) const { return atoms_.at(i); }
  const std::string& name() const { return name_; }

  double min_length() const;
  double max_length() const;
  bool has_separating() const;

  // Atom index selected by a uniform u in [0, 1).
  std::size_t pick(double u) const;

 private:
  std::vector<SupportAtom> atoms_;
  std::vector<double> cumulative_;
  std::string name_;
};

// Index of the atom drawn at site j under seed.
std::size_t draw_atom(const DisorderMeasure& measure, std::uint64_t seed, std::int64_t j);

// A window [jmin, jmax] of an i.i.d. sample.  Draw j owns the cell
// (t_{j-1}, t_j) and the vertex condition at t_j; t_0 = 0.
class Realization {
 public:
  Realization(DisorderMeasure measure, std::uint64_t seed, std::int64_t jmin, std::int64_t jmax);

  std::uint64_t seed() const { return seed_; }
  std::int64_t jmin() const { return jmin_; }
  std::int64_t jmax() const { return jmax_; }
  const DisorderMeasure& measure() const { return measure_; }

  std::size_t atom_index(std::int64_t j) const;
  double ell(std::int64_t j) const;
  const VertexCondition& condition(std::int64_t j) const;
  // t_j for j in [jmin - 1, jmax].
  double position(std::int64_t j) const;

 private:
  std::size_t offset(std::int64_t j) const;

  DisorderMeasure measure_;
  std::uint64_t seed_;
  std::int64_t jmin_;
  std::int64_t jmax_;
  std::vector<std::size_t> atoms_;
  std::vector<double> positions_;  // t_{jmin-1} .. t_{jmax}
};

Realization sample_realization(const DisorderMeasure& measure, std::uint64_t seed,
                               std::int64_t jmin, std::int64_t jmax);

// Kronig-Penney delta interactions: B = [[1, 0], [alpha, 1]].
DisorderMeasure preset_delta(const std::vector<std::pair<double, double>>& alphas, double ell);
// delta' interactions: B = [[1, -alpha], [0, 1]].
DisorderMeasure preset_delta_prime(const std::vector<std::pair<double, double>>& alphas, double ell);
// Magnetic gauge phases (2 + i alpha)/(2 - i alpha): trivial atoms.
DisorderMeasure preset_gauge(const std::vector<std::pair<double, double>>& alphas, double ell);

struct RadialTreeParams {
  double alpha = 0.0;
  int beta = 1;  // branching number, >= 1
};
// B = [[sqrt(beta), 0], [alpha / sqrt(beta), 1 / sqrt(beta)]].
DisorderMeasure preset_radial_tree(const std::vector<std::pair<RadialTreeParams, double>>& pairs,
                                   double ell);

double gauge_phase(double alpha);

double mean_length(const DisorderMeasure& measure);

}  // namespace pointlab
