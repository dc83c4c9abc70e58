#pragma once

// Localization vs absolutely continuous spectrum decided from the support of
// the disorder measure alone.
//
// Localized when one of
//   1. two lengths differ and some B is not +-I,
//   2. two atoms have B1 != +-B2,
//   3. some atom is separating;
// otherwise the operator is a gauge of the free Laplacian (every B is +-I) or
// of a periodic one (common ell and common B up to sign).

#include <array>
#include <optional>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pointlab/model.hpp"

namespace pointlab {

enum class Verdict { Localized, AbsolutelyContinuous };
enum class AcReason { None, FreeEquivalent, PeriodicEquivalent };

struct DichotomyVerdict {
  Verdict verdict = Verdict::AbsolutelyContinuous;
  int bullet = 0;  // 1..3 when Localized
  // Atom indices; {i, i} for a lone separating atom.
  std::array<std::size_t, 2> witness{};
  AcReason reason = AcReason::None;
  // PeriodicEquivalent representative.
  double ell = 0.0;
  Mat2 B;

  bool localized() const { return verdict == Verdict::Localized; }
};

// B1 = B2 or B1 = -B2 entrywise within 1e-10.
bool phase_equivalent(const Mat2& B1, const Mat2& B2);

// Predicate form, cross-checked against classify_pairwise; throws
// ConsistencyError if the two disagree.
DichotomyVerdict classify(const DisorderMeasure& measure);

// Scans every atom pair for a triggering bullet.
DichotomyVerdict classify_pairwise(const DisorderMeasure& measure);

// True when the pair (i, j) alone triggers the witness bullet.
bool witness_triggers(const DisorderMeasure& measure, const DichotomyVerdict& v);

struct CommutatorReport {
  bool localized = false;         // classify, bullets 1-2
  bool noncommuting_pair = false;  // some pair with commutes_identically false
  std::array<std::size_t, 2> pair{};
  bool consistent = false;
};

// Connecting-only measures (DomainError otherwise).  Throws ConsistencyError
// when the verdict and the commutator criterion disagree.
CommutatorReport consistency_with_commutator(const DisorderMeasure& measure);

// {verdict, bullet, witness, reason}; periodic representatives add "ell", "B".
nlohmann::json to_json(const DichotomyVerdict& v);

std::string to_string(Verdict v);
std::string to_string(AcReason r);

}  // namespace pointlab
