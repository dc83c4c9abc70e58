#pragma once

// Real 2x2 matrix algebra for the transfer-matrix cocycle.
//
// A one-step transfer matrix acts on the Cauchy data (u, u') of a solution of
// -u'' = E u.  Free evolution across a cell of length ell is the monodromy
//
//     [ c(E, ell)       s(E, ell) ]     c = cos(sqrt(E) ell)
//     [ -E s(E, ell)    c(E, ell) ]     s = sin(sqrt(E) ell) / sqrt(E)
//
// continued analytically to E <= 0, and a vertex multiplies by B in SL(2,R).

#include <array>
#include <cstddef>
#include <span>
#include <vector>

namespace pointlab {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
// det [a b]
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 v);

struct Mat2 {
  double a11 = 1.0;
  double a12 = 0.0;
  double a21 = 0.0;
  double a22 = 1.0;

  static constexpr Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr Mat2 zero() { return {0.0, 0.0, 0.0, 0.0}; }

  double det() const { return a11 * a22 - a12 * a21; }
  double trace() const { return a11 + a22; }
  double frobenius() const;
  // Largest singular value, closed form.
  double op_norm() const;
  double max_abs() const;
  // Inverse for unit-determinant matrices (the adjugate).
  Mat2 sl2_inverse() const { return {a22, -a12, -a21, a11}; }

  friend bool operator==(const Mat2&, const Mat2&) = default;
};

Mat2 operator*(const Mat2& a, const Mat2& b);
Mat2 operator+(const Mat2& a, const Mat2& b);
Mat2 operator-(const Mat2& a, const Mat2& b);
Mat2 operator-(const Mat2& a);
Mat2 operator*(double s, const Mat2& a);
Vec2 operator*(const Mat2& a, Vec2 v);

// Entrywise comparison.
bool approx_equal(const Mat2& a, const Mat2& b, double tol);

// Throws InvalidMatrixError when |det m - 1| > tol.
void require_unit_det(const Mat2& m, double tol = 1e-8);

// cos(sqrt(E) x) and sin(sqrt(E) x)/sqrt(E), analytic in E.  Below
// |E| x^2 < 1e-6 an 8-term Taylor series is used so both are smooth through 0.
double cos_like(double E, double x);
double sin_like(double E, double x);

Mat2 monodromy(double E, double ell);

// Monodromy with an extracted scale: matrix * exp(log_scale) is the true
// monodromy.  Keeps deep negative energies (cosh overflow) representable.
struct ScaledMat2 {
  Mat2 m;
  double log_scale = 0.0;
};
ScaledMat2 monodromy_scaled(double E, double ell);

// One-step transfer matrix B * monodromy(E, ell).
Mat2 transfer(double E, double ell, const Mat2& B);

// Overflow-safe running product M_{k-1} ... M_1 M_0.
class LogNormAccumulator {
 public:
  static constexpr double kRenormThreshold = 1e100;

  // Left-multiplies the running product by m.
  void push(const Mat2& m);
  // Product "later * this" (this applied first).
  LogNormAccumulator then(const LogNormAccumulator& later) const;

  double log_norm() const;
  const Mat2& current() const { return current_; }
  double log_scale() const { return log_scale_; }
  std::size_t steps() const { return steps_; }

 private:
  void renormalize();

  Mat2 current_ = Mat2::identity();
  double log_scale_ = 0.0;
  std::size_t steps_ = 0;
};

struct ProductNorm {
  double log_norm = 0.0;
  // Unit vector along M_{n-1} ... M_0 e1.
  Vec2 direction;
};

ProductNorm product_lognorm(std::span<const Mat2> matrices);

Mat2 rotation(double t);
Mat2 dilation(double b);
Mat2 shear(double q);

// B = sign * R(t) D(b) S(q), t in [0, pi), b > 0.
struct IwasawaFactors {
  int sign = 1;
  double t = 0.0;
  double b = 1.0;
  double q = 0.0;

  Mat2 recompose() const;
};

IwasawaFactors iwasawa(const Mat2& B);

// (ell, B) pair entering a transfer matrix.
struct CellAtom {
  double ell = 1.0;
  Mat2 B = Mat2::identity();
};

// [M^E(a1), M^E(a2)].
Mat2 commutator_G(const CellAtom& a1, const CellAtom& a2, double E);

// Closed-form test for G vanishing identically in E:
// (ell1 == ell2 and B1 = +-B2) or both B in {I, -I}.
bool commutes_identically(const CellAtom& a1, const CellAtom& a2);

// 200 energies -10 + 110 * frac(k * golden), k = 1..200.
const std::array<double, 200>& commutator_probe_grid();

// max over the probe grid of max entrywise |G(E)|.
double commutator_scan_max(const CellAtom& a1, const CellAtom& a2);

}  // namespace pointlab
