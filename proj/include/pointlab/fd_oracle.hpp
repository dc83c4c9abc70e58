#pragma once

// Independent eigenvalue oracle for boxes of delta interactions.
//
// Linear finite elements on a uniform mesh inside each cell with a lumped
// mass matrix: the second-order difference scheme for -u'' with the jump
// u'(t+) - u'(t-) = alpha u(t) entering the stiffness at the vertex node and
// Robin ends entering the boundary nodes.  The symmetrized tridiagonal
// problem is solved with LAPACK.

#include <vector>

#include "pointlab/spectra.hpp"

namespace pointlab {

struct FdMode {
  double E = 0.0;
  // u at the box vertices, normalized in the discrete L2 norm.
  std::vector<double> vertex_values;
};

// Eigenvalues in [emin, emax].  Throws UnsupportedModelError unless every
// interior vertex is trivial or [[1, 0], [alpha, 1]], DomainError when mesh
// exceeds min cell length / 50.
std::vector<double> fd_oracle(const FiniteBox& box, double mesh, double emin, double emax);

std::vector<FdMode> fd_oracle_modes(const FiniteBox& box, double mesh, double emin, double emax);

}  // namespace pointlab
