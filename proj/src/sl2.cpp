#include "pointlab/sl2.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "pointlab/errors.hpp"

namespace pointlab {

namespace {

constexpr double kSeriesThreshold = 1e-6;
constexpr int kSeriesTerms = 8;
constexpr double kLengthRelTol = 1e-12;
constexpr double kMatrixTol = 1e-10;

bool same_length(double a, double b) {
  return std::abs(a - b) <= kLengthRelTol * std::max(std::abs(a), std::abs(b));
}

bool is_plus_minus_identity(const Mat2& m) {
  return approx_equal(m, Mat2::identity(), kMatrixTol) ||
         approx_equal(m, -Mat2::identity(), kMatrixTol);
}

}  // namespace

double norm(Vec2 v) { return std::hypot(v.x, v.y); }

double Mat2::frobenius() const {
  return std::sqrt(a11 * a11 + a12 * a12 + a21 * a21 + a22 * a22);
}

double Mat2::op_norm() const {
  // sigma_max = (|(a11+a22, a12-a21)| + |(a11-a22, a12+a21)|) / 2
  return 0.5 * (std::hypot(a11 + a22, a12 - a21) + std::hypot(a11 - a22, a12 + a21));
}

double Mat2::max_abs() const {
  return std::max({std::abs(a11), std::abs(a12), std::abs(a21), std::abs(a22)});
}

Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.a11 * b.a11 + a.a12 * b.a21, a.a11 * b.a12 + a.a12 * b.a22,
          a.a21 * b.a11 + a.a22 * b.a21, a.a21 * b.a12 + a.a22 * b.a22};
}

Mat2 operator+(const Mat2& a, const Mat2& b) {
  return {a.a11 + b.a11, a.a12 + b.a12, a.a21 + b.a21, a.a22 + b.a22};
}

Mat2 operator-(const Mat2& a, const Mat2& b) {
  return {a.a11 - b.a11, a.a12 - b.a12, a.a21 - b.a21, a.a22 - b.a22};
}

Mat2 operator-(const Mat2& a) { return {-a.a11, -a.a12, -a.a21, -a.a22}; }

Mat2 operator*(double s, const Mat2& a) { return {s * a.a11, s * a.a12, s * a.a21, s * a.a22}; }

Vec2 operator*(const Mat2& a, Vec2 v) {
  return {a.a11 * v.x + a.a12 * v.y, a.a21 * v.x + a.a22 * v.y};
}

bool approx_equal(const Mat2& a, const Mat2& b, double tol) {
  return (a - b).max_abs() <= tol;
}

void require_unit_det(const Mat2& m, double tol) {
  const double d = m.det();
  if (!std::isfinite(d) || std::abs(d - 1.0) > tol) {
    throw InvalidMatrixError("matrix determinant " + std::to_string(d) + " is not 1");
  }
}

double cos_like(double E, double x) {
  const double z = E * x * x;
  if (std::abs(z) < kSeriesThreshold) {
    double term = 1.0;
    double sum = 1.0;
    for (int k = 1; k < kSeriesTerms; ++k) {
      term *= -z / ((2.0 * k - 1.0) * (2.0 * k));
      sum += term;
    }
    return sum;
  }
  if (E > 0.0) return std::cos(std::sqrt(E) * x);
  return std::cosh(std::sqrt(-E) * x);
}

double sin_like(double E, double x) {
  const double z = E * x * x;
  if (std::abs(z) < kSeriesThreshold) {
    double term = x;
    double sum = x;
    for (int k = 1; k < kSeriesTerms; ++k) {
      term *= -z / ((2.0 * k) * (2.0 * k + 1.0));
      sum += term;
    }
    return sum;
  }
  if (E > 0.0) {
    const double w = std::sqrt(E);
    return std::sin(w * x) / w;
  }
  const double k = std::sqrt(-E);
  return std::sinh(k * x) / k;
}

Mat2 monodromy(double E, double ell) {
  if (!std::isfinite(E) || !std::isfinite(ell)) {
    throw DomainError("monodromy: non-finite energy or length");
  }
  if (ell <= 0.0) throw DomainError("monodromy: cell length must be positive");
  const double c = cos_like(E, ell);
  const double s = sin_like(E, ell);
  return {c, s, -E * s, c};
}

ScaledMat2 monodromy_scaled(double E, double ell) {
  if (E < 0.0) {
    const double k = std::sqrt(-E);
    const double kl = k * ell;
    if (kl > 20.0) {
      if (!std::isfinite(ell) || ell <= 0.0) throw DomainError("monodromy: bad cell length");
      const double decay = std::exp(-2.0 * kl);
      const double c = 0.5 * (1.0 + decay);
      const double s = 0.5 * (1.0 - decay) / k;
      return {{c, s, -E * s, c}, kl};
    }
  }
  return {monodromy(E, ell), 0.0};
}

Mat2 transfer(double E, double ell, const Mat2& B) {
  require_unit_det(B);
  return B * monodromy(E, ell);
}

void LogNormAccumulator::push(const Mat2& m) {
  current_ = m * current_;
  ++steps_;
  renormalize();
}

void LogNormAccumulator::renormalize() {
  const double f2 = current_.a11 * current_.a11 + current_.a12 * current_.a12 +
                    current_.a21 * current_.a21 + current_.a22 * current_.a22;
  if (f2 > kRenormThreshold * kRenormThreshold ||
      (f2 > 0.0 && f2 < 1.0 / (kRenormThreshold * kRenormThreshold))) {
    const double f = std::sqrt(f2);
    current_ = (1.0 / f) * current_;
    log_scale_ += std::log(f);
  }
}

LogNormAccumulator LogNormAccumulator::then(const LogNormAccumulator& later) const {
  LogNormAccumulator out;
  out.current_ = later.current_ * current_;
  out.log_scale_ = log_scale_ + later.log_scale_;
  out.steps_ = steps_ + later.steps_;
  out.renormalize();
  return out;
}

double LogNormAccumulator::log_norm() const {
  return log_scale_ + std::log(current_.op_norm());
}

ProductNorm product_lognorm(std::span<const Mat2> matrices) {
  if (matrices.empty()) throw DomainError("product_lognorm: empty sequence");
  LogNormAccumulator acc;
  for (const Mat2& m : matrices) acc.push(m);
  const Vec2 image = acc.current() * Vec2{1.0, 0.0};
  const double len = norm(image);
  ProductNorm out;
  out.log_norm = acc.log_norm();
  out.direction = len > 0.0 ? (1.0 / len) * image : Vec2{1.0, 0.0};
  return out;
}

Mat2 rotation(double t) {
  const double c = std::cos(t);
  const double s = std::sin(t);
  return {c, -s, s, c};
}

Mat2 dilation(double b) { return {b, 0.0, 0.0, 1.0 / b}; }

Mat2 shear(double q) { return {1.0, 0.0, q, 1.0}; }

Mat2 IwasawaFactors::recompose() const {
  return static_cast<double>(sign) * (rotation(t) * dilation(b) * shear(q));
}

IwasawaFactors iwasawa(const Mat2& B) {
  require_unit_det(B);
  // Second column of R(t) D(b) S(q) is (-sin t, cos t) / b; with t in [0, pi)
  // the sign is fixed by requiring sin t >= 0 (and cos t > 0 when sin t = 0).
  IwasawaFactors f;
  const double v1 = -B.a12;
  const double v2 = B.a22;
  f.sign = (v1 > 0.0 || (v1 == 0.0 && v2 > 0.0)) ? 1 : -1;
  const double sn = f.sign * v1;
  const double cs = f.sign * v2;
  const double r = std::hypot(sn, cs);
  f.b = 1.0 / r;
  f.t = std::atan2(sn, cs);
  if (f.t <= 0.0) f.t = 0.0;  // atan2 may return -0
  // First column is b (cos t, sin t) + (q / b)(-sin t, cos t).
  const double p1 = f.sign * B.a11;
  const double p2 = f.sign * B.a21;
  f.q = f.b * ((cs / r) * p2 - (sn / r) * p1);
  return f;
}

Mat2 commutator_G(const CellAtom& a1, const CellAtom& a2, double E) {
  const Mat2 m1 = transfer(E, a1.ell, a1.B);
  const Mat2 m2 = transfer(E, a2.ell, a2.B);
  return m1 * m2 - m2 * m1;
}

bool commutes_identically(const CellAtom& a1, const CellAtom& a2) {
  require_unit_det(a1.B);
  require_unit_det(a2.B);
  if (a1.ell <= 0.0 || a2.ell <= 0.0) throw DomainError("cell length must be positive");
  if (same_length(a1.ell, a2.ell) &&
      (approx_equal(a1.B, a2.B, kMatrixTol) || approx_equal(a1.B, -a2.B, kMatrixTol))) {
    return true;
  }
  return is_plus_minus_identity(a1.B) && is_plus_minus_identity(a2.B);
}

const std::array<double, 200>& commutator_probe_grid() {
  static const std::array<double, 200> grid = [] {
    std::array<double, 200> g{};
    const double phi = std::numbers::phi;
    for (int k = 1; k <= 200; ++k) {
      const double x = k * phi;
      g[k - 1] = -10.0 + 110.0 * (x - std::floor(x));
    }
    return g;
  }();
  return grid;
}

double commutator_scan_max(const CellAtom& a1, const CellAtom& a2) {
  double worst = 0.0;
  for (double E : commutator_probe_grid()) {
    worst = std::max(worst, commutator_G(a1, a2, E).max_abs());
  }
  return worst;
}

}  // namespace pointlab
