#include "pointlab/dichotomy.hpp"

#include <algorithm>
#include <cmath>

#include "pointlab/errors.hpp"

namespace pointlab {

namespace {

constexpr double kPhaseTol = 1e-10;

bool same_length(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

Mat2 b_class(const SupportAtom& a) { return a.condition.matrix(); }

bool trivial_class(const Mat2& B) { return phase_equivalent(B, Mat2::identity()); }

int pair_bullet(const SupportAtom& a, const SupportAtom& b) {
  const Mat2 Ba = b_class(a);
  const Mat2 Bb = b_class(b);
  if (!phase_equivalent(Ba, Bb)) return 2;
  if (!same_length(a.ell, b.ell) && (!trivial_class(Ba) || !trivial_class(Bb))) return 1;
  return 0;
}

DichotomyVerdict absolutely_continuous(const DisorderMeasure& measure) {
  DichotomyVerdict v;
  v.verdict = Verdict::AbsolutelyContinuous;
  const Mat2 B = b_class(measure.atom(0));
  if (trivial_class(B)) {
    v.reason = AcReason::FreeEquivalent;
  } else {
    v.reason = AcReason::PeriodicEquivalent;
    v.ell = measure.atom(0).ell;
    v.B = B;
  }
  return v;
}

DichotomyVerdict localized(int bullet, std::size_t i, std::size_t j) {
  DichotomyVerdict v;
  v.verdict = Verdict::Localized;
  v.bullet = bullet;
  v.witness = {i, j};
  return v;
}

std::optional<DichotomyVerdict> separating_witness(const DisorderMeasure& measure) {
  for (std::size_t i = 0; i < measure.size(); ++i) {
    if (measure.atom(i).condition.is_separating()) return localized(3, i, i);
  }
  return std::nullopt;
}

}  // namespace

bool phase_equivalent(const Mat2& B1, const Mat2& B2) {
  return approx_equal(B1, B2, kPhaseTol) || approx_equal(B1, -B2, kPhaseTol);
}

DichotomyVerdict classify_pairwise(const DisorderMeasure& measure) {
  if (auto v = separating_witness(measure)) return *v;
  for (int bullet : {2, 1}) {
    for (std::size_t i = 0; i < measure.size(); ++i) {
      for (std::size_t j = i + 1; j < measure.size(); ++j) {
        if (pair_bullet(measure.atom(i), measure.atom(j)) == bullet) {
          // Bullet 1 names the non-trivial atom first.
          if (bullet == 1 && trivial_class(b_class(measure.atom(i)))) return localized(1, j, i);
          return localized(bullet, i, j);
        }
      }
    }
  }
  return absolutely_continuous(measure);
}

DichotomyVerdict classify(const DisorderMeasure& measure) {
  DichotomyVerdict v;
  if (auto sep = separating_witness(measure)) {
    v = *sep;
  } else {
    std::optional<DichotomyVerdict> found;
    const std::size_t n = measure.size();
    for (std::size_t i = 0; i < n && !found; ++i) {
      for (std::size_t j = i + 1; j < n && !found; ++j) {
        if (!phase_equivalent(b_class(measure.atom(i)), b_class(measure.atom(j)))) {
          found = localized(2, i, j);
        }
      }
    }
    if (!found) {
      // At least two lengths and a non-trivial class: pair that atom with any
      // atom of a different length.
      for (std::size_t i = 0; i < n && !found; ++i) {
        if (trivial_class(b_class(measure.atom(i)))) continue;
        for (std::size_t j = 0; j < n && !found; ++j) {
          if (!same_length(measure.atom(i).ell, measure.atom(j).ell)) found = localized(1, i, j);
        }
      }
    }
    v = found ? *found : absolutely_continuous(measure);
  }
  const DichotomyVerdict scan = classify_pairwise(measure);
  if (scan.verdict != v.verdict || scan.bullet != v.bullet) {
    throw ConsistencyError("classify: predicate and pairwise forms disagree");
  }
  return v;
}

bool witness_triggers(const DisorderMeasure& measure, const DichotomyVerdict& v) {
  if (!v.localized()) return false;
  const SupportAtom& a = measure.atom(v.witness[0]);
  const SupportAtom& b = measure.atom(v.witness[1]);
  if (v.bullet == 3) return a.condition.is_separating();
  if (a.condition.is_separating() || b.condition.is_separating()) return false;
  return pair_bullet(a, b) == v.bullet;
}

CommutatorReport consistency_with_commutator(const DisorderMeasure& measure) {
  if (measure.has_separating()) {
    throw DomainError("consistency_with_commutator: measure has separating atoms");
  }
  CommutatorReport r;
  r.localized = classify(measure).localized();
  for (std::size_t i = 0; i < measure.size() && !r.noncommuting_pair; ++i) {
    for (std::size_t j = i + 1; j < measure.size() && !r.noncommuting_pair; ++j) {
      const CellAtom a{measure.atom(i).ell, b_class(measure.atom(i))};
      const CellAtom b{measure.atom(j).ell, b_class(measure.atom(j))};
      if (!commutes_identically(a, b)) {
        r.noncommuting_pair = true;
        r.pair = {i, j};
      }
    }
  }
  r.consistent = r.localized == r.noncommuting_pair;
  if (!r.consistent) {
    throw ConsistencyError("dichotomy verdict disagrees with the commutator criterion");
  }
  return r;
}

std::string to_string(Verdict v) {
  return v == Verdict::Localized ? "Localized" : "AbsolutelyContinuous";
}

std::string to_string(AcReason r) {
  switch (r) {
    case AcReason::FreeEquivalent:
      return "FreeEquivalent";
    case AcReason::PeriodicEquivalent:
      return "PeriodicEquivalent";
    case AcReason::None:
      break;
  }
  return "None";
}

nlohmann::json to_json(const DichotomyVerdict& v) {
  nlohmann::json j;
  j["verdict"] = to_string(v.verdict);
  if (v.localized()) {
    static const char* const reasons[] = {
        "", "distinct lengths with a non-trivial B class", "B classes differ beyond a sign",
        "separating vertex condition"};
    j["bullet"] = v.bullet;
    j["witness"] = {v.witness[0], v.witness[1]};
    j["reason"] = reasons[v.bullet];
  } else {
    j["bullet"] = nullptr;
    j["witness"] = nlohmann::json::array();
    j["reason"] = to_string(v.reason);
    if (v.reason == AcReason::PeriodicEquivalent) {
      j["ell"] = v.ell;
      j["B"] = {{v.B.a11, v.B.a12}, {v.B.a21, v.B.a22}};
    }
  }
  return j;
}

}  // namespace pointlab
