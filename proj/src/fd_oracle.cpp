#include "pointlab/fd_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <lapacke.h>

#include "pointlab/errors.hpp"

namespace pointlab {

namespace {

struct Discretization {
  std::vector<double> diag;     // K_ii / M_ii
  std::vector<double> off;      // K_i,i+1 / sqrt(M_ii M_i+1,i+1)
  std::vector<double> mass;     // lumped mass of each unknown
  std::vector<int> vertex_row;  // unknown index of each box vertex, -1 if removed
};

double delta_strength(const VertexCondition& c, std::size_t k) {
  if (c.is_separating()) {
    throw UnsupportedModelError("fd_oracle: separating vertex " + std::to_string(k));
  }
  const Mat2 B = c.matrix();
  if (std::abs(B.a11 - 1.0) > 1e-12 || std::abs(B.a12) > 1e-12 || std::abs(B.a22 - 1.0) > 1e-12) {
    throw UnsupportedModelError("fd_oracle: vertex " + std::to_string(k) + " is not a delta coupling");
  }
  return B.a21;
}

Discretization discretize(const FiniteBox& box, double mesh) {
  const auto& lengths = box.lengths();
  const double shortest = *std::min_element(lengths.begin(), lengths.end());
  if (!(mesh > 0.0) || mesh > shortest / 50.0) {
    throw DomainError("fd_oracle: mesh must be in (0, min cell length / 50]");
  }
  std::vector<double> alpha(box.cells() + 1, 0.0);
  for (std::size_t k = 1; k < box.cells(); ++k) alpha[k] = delta_strength(box.interior()[k - 1], k);

  // Full node set first: stiffness diagonal/off-diagonal and lumped mass.
  std::vector<double> kd{0.0}, ko, m{0.0};
  std::vector<std::size_t> vertex_node{0};
  for (std::size_t c = 0; c < box.cells(); ++c) {
    const auto steps = static_cast<std::size_t>(std::ceil(lengths[c] / mesh - 1e-9));
    const double h = lengths[c] / static_cast<double>(steps);
    for (std::size_t s = 0; s < steps; ++s) {
      kd.back() += 1.0 / h;
      m.back() += 0.5 * h;
      ko.push_back(-1.0 / h);
      kd.push_back(1.0 / h);
      m.push_back(0.5 * h);
    }
    vertex_node.push_back(kd.size() - 1);
    kd.back() += alpha[c + 1];
  }
  const Robin left = box.left();
  const Robin right = box.right();
  const bool drop_first = left.b == 0.0;
  const bool drop_last = right.b == 0.0;
  if (!drop_first) kd.front() += -left.a / left.b;
  if (!drop_last) kd.back() += right.a / right.b;

  const std::size_t first = drop_first ? 1 : 0;
  const std::size_t last = kd.size() - (drop_last ? 2 : 1);
  Discretization d;
  for (std::size_t i = first; i <= last; ++i) {
    d.diag.push_back(kd[i] / m[i]);
    d.mass.push_back(m[i]);
    if (i < last) d.off.push_back(ko[i] / std::sqrt(m[i] * m[i + 1]));
  }
  for (std::size_t node : vertex_node) {
    d.vertex_row.push_back(node < first || node > last ? -1 : static_cast<int>(node - first));
  }
  return d;
}

struct Solved {
  std::vector<double> values;
  std::vector<lapack_int> block;
  std::vector<lapack_int> split;
  lapack_int count = 0;
};

Solved solve(Discretization& d, double emin, double emax) {
  const auto n = static_cast<lapack_int>(d.diag.size());
  Solved s;
  s.values.resize(d.diag.size());
  s.block.resize(d.diag.size());
  s.split.resize(d.diag.size());
  lapack_int nsplit = 0;
  // dstebz takes the half-open (vl, vu].
  const double vl = std::nextafter(emin, -1e300);
  const lapack_int info = LAPACKE_dstebz('V', 'B', n, vl, emax, 0, 0, 0.0, d.diag.data(),
                                         d.off.data(), &s.count, &nsplit, s.values.data(),
                                         s.block.data(), s.split.data());
  if (info != 0) throw NumericalError("fd_oracle: dstebz failed, info=" + std::to_string(info));
  s.values.resize(static_cast<std::size_t>(s.count));
  return s;
}

}  // namespace

std::vector<double> fd_oracle(const FiniteBox& box, double mesh, double emin, double emax) {
  if (!(emin < emax)) throw DomainError("fd_oracle: need emin < emax");
  Discretization d = discretize(box, mesh);
  std::vector<double> values = solve(d, emin, emax).values;
  std::sort(values.begin(), values.end());
  return values;
}

std::vector<FdMode> fd_oracle_modes(const FiniteBox& box, double mesh, double emin, double emax) {
  if (!(emin < emax)) throw DomainError("fd_oracle: need emin < emax");
  Discretization d = discretize(box, mesh);
  Solved s = solve(d, emin, emax);
  const auto n = static_cast<lapack_int>(d.diag.size());
  std::vector<FdMode> out;
  if (s.count == 0) return out;
  std::vector<double> z(d.diag.size() * static_cast<std::size_t>(s.count));
  std::vector<lapack_int> fail(static_cast<std::size_t>(s.count));
  const lapack_int info =
      LAPACKE_dstein(LAPACK_COL_MAJOR, n, d.diag.data(), d.off.data(), s.count, s.values.data(),
                     s.block.data(), s.split.data(), z.data(), n, fail.data());
  if (info != 0) throw NumericalError("fd_oracle: dstein failed, info=" + std::to_string(info));
  for (lapack_int j = 0; j < s.count; ++j) {
    FdMode mode;
    mode.E = s.values[static_cast<std::size_t>(j)];
    const double* col = z.data() + static_cast<std::size_t>(j) * d.diag.size();
    for (int row : d.vertex_row) {
      mode.vertex_values.push_back(
          row < 0 ? 0.0 : col[row] / std::sqrt(d.mass[static_cast<std::size_t>(row)]));
    }
    out.push_back(std::move(mode));
  }
  std::sort(out.begin(), out.end(), [](const FdMode& a, const FdMode& b) { return a.E < b.E; });
  return out;
}

}  // namespace pointlab
