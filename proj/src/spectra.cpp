#include "pointlab/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss.hpp>

#include "pointlab/errors.hpp"

namespace pointlab {

namespace {

using std::numbers::pi;

constexpr int kGaussNodes = 24;
constexpr int kMaxDepth = 80;

double wrap_pi(double a) {
  a = std::remainder(a, 2.0 * pi);
  if (a <= -pi) a += 2.0 * pi;
  return a;
}

double angle(Vec2 v) { return std::atan2(v.y, v.x); }

Vec2 unit(Vec2 v, double& log_acc) {
  const double n = norm(v);
  if (!(n > 0.0) || !std::isfinite(n)) throw NumericalError("degenerate solution vector");
  log_acc += std::log(n);
  return (1.0 / n) * v;
}

void check_robin(const Robin& r, const char* which) {
  if (r.a == 0.0 && r.b == 0.0) {
    throw DomainError(std::string(which) + " boundary condition: (0, 0) is not a condition");
  }
}

// Gauss-Legendre nodes and weights on [lo, hi], split into panels.
void append_gauss(double lo, double hi, int panels, std::vector<double>& xs,
                  std::vector<double>& ws) {
  using Rule = boost::math::quadrature::gauss<double, kGaussNodes>;
  const auto& abscissa = Rule::abscissa();
  const auto& weights = Rule::weights();
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + h * p;
    const double mid = a + 0.5 * h;
    const double half = 0.5 * h;
    for (std::size_t i = 0; i < abscissa.size(); ++i) {
      // Even rule: abscissa holds the positive half.
      xs.push_back(mid + half * abscissa[i]);
      ws.push_back(half * weights[i]);
      xs.push_back(mid - half * abscissa[i]);
      ws.push_back(half * weights[i]);
    }
  }
}

int panels_for(double length, double max_abs_energy) {
  const double phase = std::sqrt(max_abs_energy) * length;
  return std::max(1, static_cast<int>(std::ceil(phase / 4.0)));
}

// Cell propagation of the lifted Pruefer angle psi = atan2(u', u).
double lift_cell(double E, double ell, double psi_in, Vec2 v_in, Vec2 v_out) {
  const double raw = angle(v_out);
  if (E > 0.0) {
    // phi = atan2(u', w u) rotates uniformly by -w ell and stays within a
    // quarter turn of psi.
    const double w = std::sqrt(E);
    const double phi_in = psi_in + wrap_pi(std::atan2(v_in.y, w * v_in.x) - psi_in);
    const double phi_out = phi_in - w * ell;
    return phi_out + wrap_pi(raw - phi_out);
  }
  // Arcs between the invariant directions u' = +-sqrt(-E) u are shorter than pi.
  return psi_in + wrap_pi(raw - psi_in);
}

struct Propagated {
  Vec2 v;
  double psi = 0.0;
};

Propagated lift_vertex(const IwasawaFactors& f, double psi, Vec2 v) {
  const Vec2 v1 = shear(f.q) * v;
  const double psi1 = psi + wrap_pi(angle(v1) - psi);
  const Vec2 v2 = dilation(f.b) * v1;
  const double psi2 = psi1 + wrap_pi(angle(v2) - psi1);
  Vec2 v3 = rotation(f.t) * v2;
  double psi3 = psi2 + f.t;
  if (f.sign < 0) {
    v3 = -1.0 * v3;
    psi3 += pi;
  }
  return {v3, psi3};
}

struct SegmentSample {
  double psi = 0.0;        // lifted end angle
  double normalized = 0.0;  // secular value of the unit end vector
  double log_scale = 0.0;
};

SegmentSample sample_segment(const FiniteBox& box, const FiniteBox::Segment& seg, double E) {
  Vec2 v = seg.left.kernel();
  double psi = angle(v);
  double log_acc = 0.0;
  const auto& lengths = box.lengths();
  for (std::size_t c = seg.first_cell; c < seg.end_cell; ++c) {
    const ScaledMat2 m = monodromy_scaled(E, lengths[c]);
    Vec2 w = m.m * v;
    log_acc += m.log_scale;
    w = unit(w, log_acc);
    psi = lift_cell(E, lengths[c], psi, v, w);
    v = w;
    if (c + 1 < seg.end_cell) {
      const Propagated p = lift_vertex(box.vertex_factors(c + 1), psi, v);
      psi = p.psi;
      v = unit(p.v, log_acc);
    }
  }
  const double n = std::hypot(seg.right.a, seg.right.b);
  return {psi, (seg.right.a * v.x + seg.right.b * v.y) / n, log_acc};
}

double right_level(const Robin& r) { return std::atan2(-r.a, r.b); }

double level_coordinate(const FiniteBox::Segment& seg, const SegmentSample& s) {
  return (s.psi - right_level(seg.right)) / pi;
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

struct BoxSample {
  std::vector<SegmentSample> segments;
  int sign = 0;
};

BoxSample sample_box(const FiniteBox& box, double E) {
  BoxSample s;
  s.sign = 1;
  for (const auto& seg : box.segments()) {
    s.segments.push_back(sample_segment(box, seg, E));
    s.sign *= sign_of(s.segments.back().normalized);
  }
  return s;
}

// Eigenvalues in [a, b) (or [a, b] when closed) of one segment.
std::int64_t segment_count(const FiniteBox::Segment& seg, const SegmentSample& sa,
                           const SegmentSample& sb, bool closed) {
  const double ha = level_coordinate(seg, sa);
  const double hb = level_coordinate(seg, sb);
  if (hb > ha + 1e-9) {
    throw ConsistencyError("Pruefer angle increased with energy");
  }
  const auto fa = static_cast<std::int64_t>(std::floor(ha));
  if (closed) return fa - static_cast<std::int64_t>(std::ceil(hb)) + 1;
  return fa - static_cast<std::int64_t>(std::floor(hb));
}

std::int64_t box_count(const FiniteBox& box, const BoxSample& sa, const BoxSample& sb,
                       bool closed) {
  std::int64_t total = 0;
  for (std::size_t i = 0; i < box.segments().size(); ++i) {
    total += segment_count(box.segments()[i], sa.segments[i], sb.segments[i], closed);
  }
  return total;
}

// Energy below the segment spectrum, with its sample.
SegmentSample bottom_sample(const FiniteBox& box, const FiniteBox::Segment& seg, double& e_low) {
  double kappa = 8.0;
  for (std::size_t c = seg.first_cell; c + 1 < seg.end_cell; ++c) {
    kappa = std::max(kappa, 2.0 * box.vertex_matrix(c + 1).max_abs());
  }
  for (const Robin& r : {seg.left, seg.right}) {
    if (r.b != 0.0) kappa = std::max(kappa, 2.0 * std::abs(r.a / r.b));
  }
  SegmentSample prev = sample_segment(box, seg, -kappa * kappa);
  int stable = 0;
  while (kappa < 1e8) {
    kappa *= 2.0;
    const SegmentSample next = sample_segment(box, seg, -kappa * kappa);
    const bool same_floor =
        std::floor(level_coordinate(seg, next)) == std::floor(level_coordinate(seg, prev));
    stable = (same_floor && std::abs(next.psi - prev.psi) < 1e-3) ? stable + 1 : 0;
    prev = next;
    if (stable >= 2) break;
  }
  e_low = -kappa * kappa;
  return prev;
}

double bisect(const FiniteBox& box, double lo, double hi, int sign_lo, double tol) {
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    const int s = sample_box(box, mid).sign;
    if (s == 0) return mid;
    if (s == sign_lo) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

void isolate(const FiniteBox& box, double a, const BoxSample& sa, double b, const BoxSample& sb,
             bool closed, double tol, int depth, std::vector<double>& out) {
  const std::int64_t k = box_count(box, sa, sb, closed);
  if (k < 0) throw ConsistencyError("negative eigenvalue count on [" + std::to_string(a) + ", " +
                                    std::to_string(b) + ")");
  const bool narrow = b - a <= tol;
  if (k == 0) {
    if (sa.sign * sb.sign >= 0) return;
    if (narrow || depth >= kMaxDepth) {
      throw ConsistencyError("secular sign change without winding near E=" + std::to_string(a));
    }
  } else if (narrow) {
    out.insert(out.end(), static_cast<std::size_t>(k), 0.5 * (a + b));
    return;
  } else if (k == 1) {
    if (sa.sign == 0) {
      out.push_back(a);
      return;
    }
    if (closed && sb.sign == 0) {
      out.push_back(b);
      return;
    }
    if (sa.sign * sb.sign < 0) {
      out.push_back(bisect(box, a, b, sa.sign, tol));
      return;
    }
  }
  if (depth >= kMaxDepth) {
    throw ConsistencyError("cannot separate " + std::to_string(k) + " eigenvalues near E=" +
                           std::to_string(a));
  }
  const double mid = 0.5 * (a + b);
  const BoxSample sm = sample_box(box, mid);
  isolate(box, a, sa, mid, sm, false, tol, depth + 1, out);
  isolate(box, mid, sm, b, sb, closed, tol, depth + 1, out);
}

// Two-sided shooting on one segment.  fwd[k], bwd[k] hold unit Cauchy data
// at t_k+ (t_end- for the last vertex) with log scales.
struct Shooting {
  std::vector<Vec2> fwd;
  std::vector<Vec2> bwd;
  std::vector<double> flog;
  std::vector<double> blog;
};

Shooting shoot(const FiniteBox& box, const FiniteBox::Segment& seg, double E) {
  const std::size_t n = seg.end_cell - seg.first_cell;
  Shooting s;
  s.fwd.resize(n + 1);
  s.bwd.resize(n + 1);
  s.flog.assign(n + 1, 0.0);
  s.blog.assign(n + 1, 0.0);
  const auto& lengths = box.lengths();

  Vec2 v = seg.left.kernel();
  double acc = 0.0;
  s.fwd[0] = v;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = seg.first_cell + i;
    const ScaledMat2 m = monodromy_scaled(E, lengths[c]);
    acc += m.log_scale;
    v = m.m * v;
    if (i + 1 < n) v = box.vertex_matrix(c + 1) * v;
    v = unit(v, acc);
    s.fwd[i + 1] = v;
    s.flog[i + 1] = acc;
  }

  v = seg.right.kernel();
  acc = 0.0;
  s.bwd[n] = v;
  for (std::size_t i = n; i-- > 0;) {
    const std::size_t c = seg.first_cell + i;
    if (i + 1 < n) v = box.vertex_matrix(c + 1).sl2_inverse() * v;
    const ScaledMat2 m = monodromy_scaled(E, lengths[c]);
    acc += m.log_scale;
    // Adjugate of the scaled monodromy is the scaled inverse.
    v = m.m.sl2_inverse() * v;
    v = unit(v, acc);
    s.bwd[i] = v;
    s.blog[i] = acc;
  }
  return s;
}

// Cauchy data at distance d into a cell whose start carries u0.
Vec2 evolve(double E, double d, Vec2 u0) {
  const double c = cos_like(E, d);
  const double s = sin_like(E, d);
  return {c * u0.x + s * u0.y, -E * s * u0.x + c * u0.y};
}

// sum_k (-1)^k 2^(2k+1) E^k ell^(2k+3) / (2k+3)!, the small-energy form of
// (ell - sin_like(E, 2 ell) / 2) / (2E).
double sin_square_series(double E, double ell) {
  double term = 2.0 * ell * ell * ell / 6.0;
  double sum = term;
  for (int k = 1; k < 16; ++k) {
    term *= -4.0 * E * ell * ell / ((2.0 * k + 2.0) * (2.0 * k + 3.0));
    sum += term;
  }
  return sum;
}

// Exact L2 norm squared over a cell of the solution starting at u0.
double cell_norm2(double E, double ell, Vec2 u0) {
  const double s2 = sin_like(E, 2.0 * ell);
  const double s1 = sin_like(E, ell);
  const double icc = 0.5 * ell + 0.25 * s2;
  const double ics = 0.5 * s1 * s1;
  const double iss =
      std::abs(E) * ell * ell < 0.1 ? sin_square_series(E, ell) : (ell - 0.5 * s2) / (2.0 * E);
  return u0.x * u0.x * icc + 2.0 * u0.x * u0.y * ics + u0.y * u0.y * iss;
}

std::size_t cell_of(const std::vector<double>& positions, double x) {
  if (x < positions.front() || x > positions.back()) {
    throw DomainError("position " + std::to_string(x) + " outside the box");
  }
  const auto it = std::upper_bound(positions.begin(), positions.end(), x);
  std::size_t c = static_cast<std::size_t>(it - positions.begin());
  c = c == 0 ? 0 : c - 1;
  return std::min(c, positions.size() - 2);
}

std::size_t segment_of(const FiniteBox& box, std::size_t cell) {
  const auto& segs = box.segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    if (cell >= segs[s].first_cell && cell < segs[s].end_cell) return s;
  }
  return segs.size() - 1;
}

}  // namespace

Vec2 Robin::kernel() const {
  const double n = std::hypot(a, b);
  return {b / n, -a / n};
}

FiniteBox::FiniteBox(double left_position, std::vector<double> lengths,
                     std::vector<VertexCondition> interior, Robin left, Robin right)
    : lengths_(std::move(lengths)), interior_(std::move(interior)), left_(left), right_(right) {
  if (lengths_.empty()) throw DomainError("box: needs at least one cell");
  if (interior_.size() + 1 != lengths_.size()) {
    throw DomainError("box: interior conditions must number cells - 1");
  }
  check_robin(left_, "left");
  check_robin(right_, "right");
  positions_.resize(lengths_.size() + 1);
  positions_[0] = left_position;
  for (std::size_t c = 0; c < lengths_.size(); ++c) {
    if (!(lengths_[c] > 0.0) || !std::isfinite(lengths_[c])) {
      throw DomainError("box: cell lengths must be positive");
    }
    positions_[c + 1] = positions_[c] + lengths_[c];
  }
  matrices_.reserve(interior_.size());
  factors_.reserve(interior_.size());
  Segment current{0, 0, left_, right_};
  for (std::size_t k = 1; k < lengths_.size(); ++k) {
    const VertexCondition& cond = interior_[k - 1];
    if (cond.is_separating()) {
      const auto& s = cond.separation();
      matrices_.push_back(Mat2::identity());
      factors_.push_back(iwasawa(Mat2::identity()));
      current.end_cell = k;
      current.right = Robin{s.x, s.y};
      check_robin(current.right, "separating vertex (x, y)");
      segments_.push_back(current);
      current = Segment{k, 0, Robin{s.w, s.z}, right_};
      check_robin(current.left, "separating vertex (w, z)");
    } else {
      const Mat2 m = cond.matrix();
      require_unit_det(m);
      matrices_.push_back(m);
      factors_.push_back(iwasawa(m));
    }
  }
  current.end_cell = lengths_.size();
  segments_.push_back(current);
}

FiniteBox FiniteBox::from_realization(const Realization& realization, std::int64_t m,
                                      std::int64_t n, Robin left, Robin right) {
  if (n <= m) throw DomainError("box: n must exceed m");
  if (m + 1 < realization.jmin() || n > realization.jmax()) {
    throw DomainError("box: [m+1, n] outside the realization window");
  }
  std::vector<double> lengths;
  std::vector<VertexCondition> interior;
  for (std::int64_t j = m + 1; j <= n; ++j) {
    lengths.push_back(realization.ell(j));
    if (j < n) interior.push_back(realization.condition(j));
  }
  return FiniteBox(realization.position(m), std::move(lengths), std::move(interior), left, right);
}

FiniteBox FiniteBox::segment_box(std::size_t s) const {
  const Segment& seg = segments_.at(s);
  std::vector<double> lengths(lengths_.begin() + static_cast<std::ptrdiff_t>(seg.first_cell),
                              lengths_.begin() + static_cast<std::ptrdiff_t>(seg.end_cell));
  std::vector<VertexCondition> interior;
  for (std::size_t k = seg.first_cell + 1; k < seg.end_cell; ++k) {
    interior.push_back(interior_[k - 1]);
  }
  return FiniteBox(positions_[seg.first_cell], std::move(lengths), std::move(interior), seg.left,
                   seg.right);
}

double Eigenpair::value(double x) const {
  const std::size_t c = cell_of(positions, x);
  return evolve(E, x - positions[c], traces[c]).x;
}

double Eigenpair::derivative(double x) const {
  const std::size_t c = cell_of(positions, x);
  return evolve(E, x - positions[c], traces[c]).y;
}

double secular(const FiniteBox& box, double E) {
  double out = 1.0;
  for (const auto& seg : box.segments()) {
    const SegmentSample s = sample_segment(box, seg, E);
    out *= s.normalized * std::hypot(seg.right.a, seg.right.b) * std::exp(s.log_scale);
  }
  return out;
}

std::int64_t pruefer_count(const FiniteBox& box, double E) {
  std::int64_t total = 0;
  for (const auto& seg : box.segments()) {
    double e_low = 0.0;
    const SegmentSample bottom = bottom_sample(box, seg, e_low);
    if (E <= e_low) continue;
    total += segment_count(seg, bottom, sample_segment(box, seg, E), false);
  }
  return total;
}

std::vector<double> eigenvalues(const FiniteBox& box, double emin, double emax, double tol) {
  if (!(emin < emax)) throw DomainError("eigenvalues: need emin < emax");
  if (!(tol > 0.0)) throw DomainError("eigenvalues: tol must be positive");

  double longest = 0.0;
  for (const auto& seg : box.segments()) {
    longest = std::max(longest, box.positions()[seg.end_cell] - box.positions()[seg.first_cell]);
  }
  const double k0 = std::floor(longest * std::sqrt(std::max(emin, 0.0)) / pi);
  const double spacing = pi * pi * (2.0 * k0 + 1.0) / (longest * longest);
  const double steps = std::clamp(std::ceil((emax - emin) / (0.5 * spacing)), 8.0, 200000.0);
  const auto intervals = static_cast<std::size_t>(steps);

  std::vector<double> grid(intervals + 1);
  std::vector<BoxSample> samples(intervals + 1);
  for (std::size_t i = 0; i <= intervals; ++i) {
    grid[i] = i == intervals ? emax
                             : emin + (emax - emin) * static_cast<double>(i) /
                                          static_cast<double>(intervals);
    samples[i] = sample_box(box, grid[i]);
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < intervals; ++i) {
    isolate(box, grid[i], samples[i], grid[i + 1], samples[i + 1], i + 1 == intervals, tol, 0,
            out);
  }
  std::sort(out.begin(), out.end());
  return out;
}

Eigenpair eigenfunction(const FiniteBox& box, double E, int multiplicity_index) {
  if (multiplicity_index < 0) throw DomainError("eigenfunction: negative multiplicity index");
  const double delta = 1e-8 * std::max(1.0, std::abs(E));
  std::vector<std::size_t> hits;
  for (std::size_t s = 0; s < box.segments().size(); ++s) {
    const auto& seg = box.segments()[s];
    const auto lo = sample_segment(box, seg, E - delta);
    const auto hi = sample_segment(box, seg, E + delta);
    if (segment_count(seg, lo, hi, true) > 0) hits.push_back(s);
  }
  if (hits.empty()) {
    throw DomainError("eigenfunction: E=" + std::to_string(E) + " is not an eigenvalue");
  }
  if (static_cast<std::size_t>(multiplicity_index) >= hits.size()) {
    throw DomainError("eigenfunction: multiplicity index out of range");
  }
  const std::size_t s_index = hits[static_cast<std::size_t>(multiplicity_index)];
  const auto& seg = box.segments()[s_index];

  // Multi-hump states need E to full precision for the one-sided solutions
  // to agree across the dips between humps.
  {
    double lo = E - delta, hi = E + delta;
    const int s_lo = sign_of(sample_segment(box, seg, lo).normalized);
    const int s_hi = sign_of(sample_segment(box, seg, hi).normalized);
    if (s_lo * s_hi < 0) {
      for (;;) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const int s = sign_of(sample_segment(box, seg, mid).normalized);
        if (s == 0) {
          lo = hi = mid;
          break;
        }
        (s == s_lo ? lo : hi) = mid;
      }
      E = std::abs(sample_segment(box, seg, lo).normalized) <=
                  std::abs(sample_segment(box, seg, hi).normalized)
              ? lo
              : hi;
    }
  }

  const Shooting sh = shoot(box, seg, E);
  const std::size_t n = sh.fwd.size() - 1;

  // Glue where both one-sided solutions sit closest to their running maxima,
  // unless they visibly disagree there.
  std::vector<double> pre(n + 1), suf(n + 1);
  for (std::size_t k = 0; k <= n; ++k) pre[k] = std::max(k ? pre[k - 1] : sh.flog[0], sh.flog[k]);
  for (std::size_t k = n + 1; k-- > 0;) {
    suf[k] = std::max(k < n ? suf[k + 1] : sh.blog[n], sh.blog[k]);
  }
  std::size_t m = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= n; ++k) {
    const double cost = std::max(pre[k] - sh.flog[k], suf[k] - sh.blog[k]);
    if (cost < best) {
      best = cost;
      m = k;
    }
  }
  if (std::abs(cross(sh.fwd[m], sh.bwd[m])) > 1e-8) {
    for (std::size_t k = 0; k <= n; ++k) {
      if (std::abs(cross(sh.fwd[k], sh.bwd[k])) < std::abs(cross(sh.fwd[m], sh.bwd[m]))) m = k;
    }
  }
  const double c = dot(sh.fwd[m], sh.bwd[m]) >= 0.0 ? 1.0 : -1.0;

  Eigenpair pair;
  pair.E = E;
  pair.positions = box.positions();
  pair.traces.assign(box.cells() + 1, Vec2{});
  pair.multiplicity_index = multiplicity_index;
  pair.segment = s_index;
  pair.support_first = seg.first_cell;
  pair.support_last = seg.end_cell;
  for (std::size_t k = 0; k <= n; ++k) {
    const Vec2 v = k <= m ? std::exp(sh.flog[k] - sh.flog[m]) * sh.fwd[k]
                          : (c * std::exp(sh.blog[k] - sh.blog[m])) * sh.bwd[k];
    pair.traces[seg.first_cell + k] = v;
  }
  // The shared vertex with the next segment carries that segment's data.
  if (seg.end_cell < box.cells()) pair.traces[seg.end_cell] = Vec2{};

  double total = 0.0;
  for (std::size_t cell = seg.first_cell; cell < seg.end_cell; ++cell) {
    total += cell_norm2(E, box.lengths()[cell], pair.traces[cell]);
  }
  const double nrm = std::sqrt(std::max(total, 0.0));
  if (!(nrm > 1e-300) || !std::isfinite(nrm)) {
    throw NumericalError("eigenfunction: degenerate norm at E=" + std::to_string(E));
  }
  for (std::size_t k = seg.first_cell; k <= seg.end_cell; ++k) {
    pair.traces[k] = (1.0 / nrm) * pair.traces[k];
  }
  if (seg.end_cell < box.cells()) pair.traces[seg.end_cell] = Vec2{};
  double check = 0.0;
  for (std::size_t cell = seg.first_cell; cell < seg.end_cell; ++cell) {
    check += cell_norm2(E, box.lengths()[cell], pair.traces[cell]);
  }
  pair.norm = std::sqrt(check);
  return pair;
}

double inner_product(const FiniteBox& box, const Eigenpair& f, const Eigenpair& g) {
  const double emax = std::max(std::abs(f.E), std::abs(g.E));
  double total = 0.0;
  std::vector<double> xs, ws;
  for (std::size_t c = 0; c < box.cells(); ++c) {
    const Vec2 a = f.traces[c];
    const Vec2 b = g.traces[c];
    if ((a.x == 0.0 && a.y == 0.0) || (b.x == 0.0 && b.y == 0.0)) continue;
    const double ell = box.lengths()[c];
    xs.clear();
    ws.clear();
    append_gauss(0.0, ell, panels_for(ell, emax), xs, ws);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      total += ws[i] * evolve(f.E, xs[i], a).x * evolve(g.E, xs[i], b).x;
    }
  }
  return total;
}

DecayFit decay_fit(const Eigenpair& pair, double mean_length) {
  const std::size_t nv = pair.traces.size();
  if (nv < 41) throw DomainError("decay_fit: box needs at least 40 cells");
  std::vector<double> amp(nv);
  std::size_t zeta = 0;
  double top = -1.0;
  double amp_max = 0.0;
  for (std::size_t k = 0; k < nv; ++k) {
    const Vec2 v = pair.traces[k];
    amp[k] = std::abs(v.x) + std::abs(v.y);
    const double m = std::max(std::abs(v.x), std::abs(v.y));
    if (m > top) {
      top = m;
      zeta = k;
    }
    amp_max = std::max(amp_max, amp[k]);
  }
  DecayFit fit;
  fit.center = zeta;

  // Support on a strict sub-segment: identically zero elsewhere.
  if (pair.support_first > 0 || pair.support_last + 1 < nv) {
    fit.rate = std::numeric_limits<double>::infinity();
    fit.rate_per_vertex = fit.rate;
    fit.r_squared = 1.0;
    return fit;
  }

  const double cutoff = 1e-13 * amp_max;
  std::vector<double> xs, ys;
  const double left_count = static_cast<double>(zeta);
  const double right_count = static_cast<double>(nv - 1 - zeta);
  for (std::size_t k = 0; k < nv; ++k) {
    const double index = k < zeta ? static_cast<double>(zeta - k) : static_cast<double>(k - zeta);
    const double side = k < zeta ? left_count : right_count;
    if (k == zeta || index < 0.4 * side) continue;
    if (!(amp[k] > cutoff)) continue;
    xs.push_back(std::abs(pair.positions[k] - pair.positions[zeta]));
    ys.push_back(std::log(amp[k]));
  }
  fit.points = xs.size();
  if (xs.size() < 10) {
    throw FitError("decay_fit: only " + std::to_string(xs.size()) + " usable points");
  }
  const double npts = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= npts;
  my /= npts;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw FitError("decay_fit: degenerate distances");
  const double slope = sxy / sxx;
  fit.rate = std::max(0.0, -slope);
  fit.rate_per_vertex = fit.rate * mean_length;
  fit.r_squared = syy > 0.0 ? std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0) : 1.0;
  return fit;
}

GreenEval green(const FiniteBox& box, double E, double x, double y) {
  const double lo = std::min(x, y);
  const double hi = std::max(x, y);
  const std::size_t clo = cell_of(box.positions(), lo);
  const std::size_t chi = cell_of(box.positions(), hi);
  GreenEval out{E, x, y, 0.0};
  const std::size_t s = segment_of(box, clo);
  if (segment_of(box, chi) != s) return out;
  const auto& seg = box.segments()[s];
  const Shooting sh = shoot(box, seg, E);

  // W(psi_+, psi_-) is constant; evaluate where the unit data are least aligned.
  std::size_t k_best = 0;
  double w_best = 0.0;
  for (std::size_t k = 0; k < sh.fwd.size(); ++k) {
    const double w = cross(sh.bwd[k], sh.fwd[k]);
    if (std::abs(w) > std::abs(w_best)) {
      w_best = w;
      k_best = k;
    }
  }
  if (std::abs(w_best) < 1e-12) {
    throw NearEigenvalueError("green: Wronskian vanishes at E=" + std::to_string(E));
  }
  const std::size_t ilo = clo - seg.first_cell;
  const std::size_t ihi = chi - seg.first_cell;
  const double u_minus = evolve(E, lo - box.positions()[clo], sh.fwd[ilo]).x;
  const double u_plus = evolve(E, hi - box.positions()[chi], sh.bwd[ihi]).x;
  const double log_ratio =
      sh.flog[ilo] + sh.blog[ihi] - sh.flog[k_best] - sh.blog[k_best];
  out.value = u_minus * u_plus * std::exp(log_ratio) / w_best;
  return out;
}

std::vector<MomentSample> dynamical_moments(const FiniteBox& box, double e1, double e2, double p,
                                            double k_lo, double k_hi,
                                            const std::vector<double>& times) {
  if (!(p > 0.0)) throw DomainError("dynamical_moment: p must be positive");
  if (!(k_lo < k_hi)) throw DomainError("dynamical_moment: empty set K");
  if (times.empty()) throw DomainError("dynamical_moment: no times");
  const std::vector<double> energies = eigenvalues(box, e1, e2);
  if (energies.empty()) {
    throw EmptyProjectionError("dynamical_moment: no eigenvalues in [" + std::to_string(e1) +
                               ", " + std::to_string(e2) + "]");
  }
  std::vector<Eigenpair> pairs;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    int mult = 0;
    for (std::size_t j = i; j-- > 0 && energies[i] - energies[j] < 1e-8;) ++mult;
    pairs.push_back(eigenfunction(box, energies[i], mult));
  }
  double emax = 0.0;
  for (double e : energies) emax = std::max(emax, std::abs(e));

  // Quadrature nodes, with cells split at 0 and at the ends of K.
  std::vector<double> xs, ws;
  std::vector<std::size_t> node_cell;
  const auto& pos = box.positions();
  for (std::size_t c = 0; c < box.cells(); ++c) {
    std::vector<double> cuts{pos[c], pos[c + 1]};
    for (double z : {0.0, k_lo, k_hi}) {
      if (z > pos[c] && z < pos[c + 1]) cuts.push_back(z);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const std::size_t before = xs.size();
      append_gauss(cuts[i], cuts[i + 1], panels_for(cuts[i + 1] - cuts[i], emax), xs, ws);
      node_cell.insert(node_cell.end(), xs.size() - before, c);
    }
  }

  const double k_measure = std::min(k_hi, pos.back()) - std::max(k_lo, pos.front());
  if (!(k_measure > 0.0)) throw DomainError("dynamical_moment: K does not meet the box");
  const std::size_t nodes = xs.size();
  std::vector<double> values(pairs.size() * nodes);
  std::vector<double> coeff(pairs.size(), 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Eigenpair& f = pairs[k];
    for (std::size_t i = 0; i < nodes; ++i) {
      const std::size_t c = node_cell[i];
      const double v = evolve(f.E, xs[i] - pos[c], f.traces[c]).x;
      values[k * nodes + i] = v;
      if (xs[i] > k_lo && xs[i] < k_hi) coeff[k] += ws[i] * v;
    }
    coeff[k] /= std::sqrt(k_measure);
  }

  std::vector<MomentSample> out;
  std::vector<std::complex<double>> phase(pairs.size());
  for (double t : times) {
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      phase[k] = coeff[k] * std::polar(1.0, -pairs[k].E * t);
    }
    double moment = 0.0;
    for (std::size_t i = 0; i < nodes; ++i) {
      std::complex<double> psi = 0.0;
      for (std::size_t k = 0; k < pairs.size(); ++k) psi += phase[k] * values[k * nodes + i];
      moment += ws[i] * std::pow(std::abs(xs[i]), p) * std::norm(psi);
    }
    out.push_back({t, moment});
  }
  return out;
}

double dynamical_moment(const FiniteBox& box, double e1, double e2, double p, double k_lo,
                        double k_hi, const std::vector<double>& times) {
  double best = 0.0;
  for (const auto& s : dynamical_moments(box, e1, e2, p, k_lo, k_hi, times)) {
    best = std::max(best, s.moment);
  }
  return best;
}

std::vector<SegmentSpectrum> separated_spectrum(const FiniteBox& box, double emin, double emax,
                                                double tol) {
  if (!box.decoupled()) throw DomainError("separated_spectrum: no separating vertex in the box");
  std::vector<SegmentSpectrum> out;
  for (std::size_t s = 0; s < box.segments().size(); ++s) {
    const auto& seg = box.segments()[s];
    out.push_back({seg.first_cell, seg.end_cell, eigenvalues(box.segment_box(s), emin, emax, tol)});
  }
  return out;
}

std::vector<SegmentSpectrum> separated_spectrum(const Realization& realization, std::int64_t m,
                                                std::int64_t n, double emin, double emax,
                                                Robin left, Robin right, double tol) {
  return separated_spectrum(FiniteBox::from_realization(realization, m, n, left, right), emin,
                            emax, tol);
}

}  // namespace pointlab
