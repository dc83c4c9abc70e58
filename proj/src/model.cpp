#include "pointlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "pointlab/errors.hpp"
#include "pointlab/rng.hpp"

namespace pointlab {

namespace {

constexpr double kWeightTol = 1e-12;
constexpr double kDistinctTol = 1e-12;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_condition(const VertexCondition& c) {
  std::visit(Overloaded{
                 [](const TrivialCondition& t) {
                   if (!std::isfinite(t.theta)) throw DomainError("non-finite phase");
                 },
                 [](const ConnectingCondition& cc) {
                   if (!std::isfinite(cc.theta)) throw DomainError("non-finite phase");
                   require_unit_det(cc.B, 1e-10);
                 },
                 [](const SeparatingCondition& s) {
                   if ((s.x == 0.0 && s.y == 0.0) || (s.w == 0.0 && s.z == 0.0)) {
                     throw DomainError("separating condition needs (x,y) != 0 and (w,z) != 0");
                   }
                 },
             },
             c.kind());
}

DisorderMeasure connecting_preset(const std::vector<std::pair<double, double>>& alphas, double ell,
                                  Mat2 (*matrix_of)(double), const std::string& name) {
  if (alphas.empty()) throw DomainError(name + ": at least one coupling required");
  std::vector<SupportAtom> atoms;
  atoms.reserve(alphas.size());
  for (const auto& [alpha, weight] : alphas) {
    atoms.push_back({ell, VertexCondition::connecting(0.0, matrix_of(alpha)), weight});
  }
  return DisorderMeasure(std::move(atoms), name);
}

}  // namespace

VertexCondition VertexCondition::trivial(double theta) {
  VertexCondition c(TrivialCondition{theta});
  validate_condition(c);
  return c;
}

VertexCondition VertexCondition::connecting(double theta, const Mat2& B) {
  VertexCondition c(ConnectingCondition{theta, B});
  validate_condition(c);
  return c;
}

VertexCondition VertexCondition::separating(double x, double y, double w, double z) {
  VertexCondition c(SeparatingCondition{x, y, w, z});
  validate_condition(c);
  return c;
}

double VertexCondition::phase() const {
  if (const auto* t = std::get_if<TrivialCondition>(&kind_)) return t->theta;
  if (const auto* c = std::get_if<ConnectingCondition>(&kind_)) return c->theta;
  return 0.0;
}

Mat2 VertexCondition::matrix() const {
  if (std::holds_alternative<TrivialCondition>(kind_)) return Mat2::identity();
  if (const auto* c = std::get_if<ConnectingCondition>(&kind_)) return c->B;
  throw DomainError("separating vertex condition has no transfer matrix");
}

const SeparatingCondition& VertexCondition::separation() const {
  if (const auto* s = std::get_if<SeparatingCondition>(&kind_)) return *s;
  throw DomainError("vertex condition is not separating");
}

bool VertexCondition::approx_equal(const VertexCondition& other, double tol) const {
  if (kind_.index() != other.kind_.index()) return false;
  if (is_separating()) {
    const auto& a = separation();
    const auto& b = other.separation();
    return std::abs(a.x - b.x) <= tol && std::abs(a.y - b.y) <= tol &&
           std::abs(a.w - b.w) <= tol && std::abs(a.z - b.z) <= tol;
  }
  return std::abs(phase() - other.phase()) <= tol &&
         pointlab::approx_equal(matrix(), other.matrix(), tol);
}

DisorderMeasure::DisorderMeasure(std::vector<SupportAtom> atoms, std::string name)
    : atoms_(std::move(atoms)), name_(std::move(name)) {
  if (atoms_.empty()) throw DomainError("disorder measure needs at least one atom");
  double total = 0.0;
  for (const SupportAtom& a : atoms_) {
    if (!std::isfinite(a.ell) || a.ell <= 0.0) throw DomainError("atom length must be positive");
    if (!(a.weight > 0.0) || a.weight > 1.0 + kWeightTol) {
      throw DomainError("atom weight must lie in (0, 1]");
    }
    validate_condition(a.condition);
    total += a.weight;
  }
  if (std::abs(total - 1.0) > kWeightTol) {
    throw DomainError("atom weights sum to " + std::to_string(total) + ", expected 1");
  }
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    for (std::size_t j = i + 1; j < atoms_.size(); ++j) {
      if (std::abs(atoms_[i].ell - atoms_[j].ell) <= kDistinctTol &&
          atoms_[i].condition.approx_equal(atoms_[j].condition, kDistinctTol)) {
        throw DomainError("duplicate support atoms " + std::to_string(i) + " and " +
                          std::to_string(j));
      }
    }
  }
  cumulative_.resize(atoms_.size());
  double run = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    run += atoms_[i].weight;
    cumulative_[i] = run;
  }
}

DisorderMeasure DisorderMeasure::normalized(std::vector<SupportAtom> atoms, std::string name) {
  double total = 0.0;
  for (const SupportAtom& a : atoms) {
    if (!(a.weight > 0.0)) throw DomainError("atom weight must be positive");
    total += a.weight;
  }
  for (SupportAtom& a : atoms) a.weight /= total;
  // Absorb rounding in the last weight so the strict check passes.
  if (!atoms.empty()) {
    double rest = 0.0;
    for (std::size_t i = 0; i + 1 < atoms.size(); ++i) rest += atoms[i].weight;
    atoms.back().weight = 1.0 - rest;
  }
  return DisorderMeasure(std::move(atoms), std::move(name));
}

double DisorderMeasure::min_length() const {
  return std::min_element(atoms_.begin(), atoms_.end(),
                          [](const auto& a, const auto& b) { return a.ell < b.ell; })
      ->ell;
}

double DisorderMeasure::max_length() const {
  return std::max_element(atoms_.begin(), atoms_.end(),
                          [](const auto& a, const auto& b) { return a.ell < b.ell; })
      ->ell;
}

bool DisorderMeasure::has_separating() const {
  return std::any_of(atoms_.begin(), atoms_.end(),
                     [](const SupportAtom& a) { return a.condition.is_separating(); });
}

std::size_t DisorderMeasure::pick(double u) const {
  const double target = u * cumulative_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) return atoms_.size() - 1;
  return static_cast<std::size_t>(it - cumulative_.begin());
}

std::size_t draw_atom(const DisorderMeasure& measure, std::uint64_t seed, std::int64_t j) {
  if (measure.size() == 1) return 0;
  return measure.pick(uniform_at(seed, j));
}

Realization::Realization(DisorderMeasure measure, std::uint64_t seed, std::int64_t jmin,
                         std::int64_t jmax)
    : measure_(std::move(measure)), seed_(seed), jmin_(jmin), jmax_(jmax) {
  if (jmax < jmin) throw DomainError("realization window is empty");
  const auto count = static_cast<std::size_t>(jmax - jmin + 1);
  atoms_.resize(count);
  for (std::int64_t j = jmin; j <= jmax; ++j) atoms_[offset(j)] = draw_atom(measure_, seed_, j);

  auto ell_at = [&](std::int64_t j) {
    if (j >= jmin_ && j <= jmax_) return measure_.atom(atoms_[offset(j)]).ell;
    return measure_.atom(draw_atom(measure_, seed_, j)).ell;
  };
  // Sum outward from t_0 = 0 so every window reproduces the same bits.
  const std::int64_t first = jmin - 1;
  double t_first = 0.0;
  if (first > 0) {
    for (std::int64_t k = 1; k <= first; ++k) t_first += ell_at(k);
  } else if (first < 0) {
    for (std::int64_t k = 0; k >= first + 1; --k) t_first -= ell_at(k);
  }
  positions_.resize(count + 1);
  positions_[0] = t_first;
  if (first >= 0) {
    for (std::int64_t j = jmin; j <= jmax; ++j) {
      positions_[static_cast<std::size_t>(j - first)] =
          positions_[static_cast<std::size_t>(j - 1 - first)] + ell_at(j);
    }
  } else {
    // Negative indices accumulate downward from 0; recompute each so the
    // summation order matches the outward convention.
    std::vector<double> neg;  // t_{-1}, t_{-2}, ... down to t_first
    double t = 0.0;
    for (std::int64_t k = 0; k >= first + 1; --k) {
      t -= ell_at(k);
      neg.push_back(t);
    }
    for (std::int64_t j = first; j <= jmax; ++j) {
      double value;
      if (j < 0) {
        value = neg[static_cast<std::size_t>(-j - 1)];
      } else if (j == 0) {
        value = 0.0;
      } else {
        value = positions_[static_cast<std::size_t>(j - 1 - first)] + ell_at(j);
      }
      positions_[static_cast<std::size_t>(j - first)] = value;
    }
  }
}

std::size_t Realization::offset(std::int64_t j) const {
  if (j < jmin_ || j > jmax_) throw DomainError("index outside realization window");
  return static_cast<std::size_t>(j - jmin_);
}

std::size_t Realization::atom_index(std::int64_t j) const { return atoms_[offset(j)]; }

double Realization::ell(std::int64_t j) const { return measure_.atom(atom_index(j)).ell; }

const VertexCondition& Realization::condition(std::int64_t j) const {
  return measure_.atom(atom_index(j)).condition;
}

double Realization::position(std::int64_t j) const {
  if (j < jmin_ - 1 || j > jmax_) throw DomainError("position index outside realization window");
  return positions_[static_cast<std::size_t>(j - (jmin_ - 1))];
}

Realization sample_realization(const DisorderMeasure& measure, std::uint64_t seed,
                               std::int64_t jmin, std::int64_t jmax) {
  return Realization(measure, seed, jmin, jmax);
}

DisorderMeasure preset_delta(const std::vector<std::pair<double, double>>& alphas, double ell) {
  return connecting_preset(alphas, ell, [](double a) { return Mat2{1.0, 0.0, a, 1.0}; }, "delta");
}

DisorderMeasure preset_delta_prime(const std::vector<std::pair<double, double>>& alphas,
                                   double ell) {
  return connecting_preset(alphas, ell, [](double a) { return Mat2{1.0, -a, 0.0, 1.0}; },
                           "delta_prime");
}

double gauge_phase(double alpha) {
  double theta = 2.0 * std::atan2(alpha / 2.0, 1.0);
  if (theta < 0.0) theta += 2.0 * std::numbers::pi;
  return theta;
}

DisorderMeasure preset_gauge(const std::vector<std::pair<double, double>>& alphas, double ell) {
  if (alphas.empty()) throw DomainError("gauge: at least one coupling required");
  std::vector<SupportAtom> atoms;
  for (const auto& [alpha, weight] : alphas) {
    atoms.push_back({ell, VertexCondition::trivial(gauge_phase(alpha)), weight});
  }
  return DisorderMeasure(std::move(atoms), "gauge");
}

DisorderMeasure preset_radial_tree(const std::vector<std::pair<RadialTreeParams, double>>& pairs,
                                   double ell) {
  if (pairs.empty()) throw DomainError("radial_tree: at least one (alpha, beta) required");
  std::vector<SupportAtom> atoms;
  for (const auto& [p, weight] : pairs) {
    if (p.beta < 1) throw DomainError("radial_tree: branching number must be >= 1");
    const double sb = std::sqrt(static_cast<double>(p.beta));
    atoms.push_back(
        {ell, VertexCondition::connecting(0.0, Mat2{sb, 0.0, p.alpha / sb, 1.0 / sb}), weight});
  }
  return DisorderMeasure(std::move(atoms), "radial_tree");
}

double mean_length(const DisorderMeasure& measure) {
  return std::accumulate(measure.atoms().begin(), measure.atoms().end(), 0.0,
                         [](double acc, const SupportAtom& a) { return acc + a.weight * a.ell; });
}

}  // namespace pointlab
