#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "pointlab/dichotomy.hpp"
#include "pointlab/errors.hpp"
#include "pointlab/model.hpp"

using namespace pointlab;

namespace {

Mat2 S(double q) { return shear(q); }

SupportAtom conn(double ell, const Mat2& B, double w = 1.0) {
  return {ell, VertexCondition::connecting(B), w};
}

Mat2 random_sl2(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.5, 1.5);
  std::uniform_real_distribution<double> t(0.0, 3.14159);
  IwasawaFactors f;
  f.sign = u(rng) < 0 ? -1 : 1;
  f.t = t(rng);
  f.b = std::exp(u(rng));
  f.q = u(rng);
  return f.recompose();
}

// Connecting-only measure with atoms drawn from small pools so that equal
// lengths and sign-related B classes occur often.
DisorderMeasure random_connecting(std::mt19937_64& rng) {
  static const double lengths[] = {1.0, 1.5, 2.0};
  std::uniform_int_distribution<int> count(1, 4), li(0, 2), bi(0, 5);
  const Mat2 g = random_sl2(rng);
  std::vector<SupportAtom> atoms;
  const int n = count(rng);
  for (int tries = 0; static_cast<int>(atoms.size()) < n && tries < 50; ++tries) {
    Mat2 B;
    switch (bi(rng)) {
      case 0: B = Mat2::identity(); break;
      case 1: B = -Mat2::identity(); break;
      case 2: B = S(1.0); break;
      case 3: B = -S(1.0); break;
      case 4: B = g; break;
      default: B = random_sl2(rng); break;
    }
    SupportAtom a = conn(lengths[li(rng)], B);
    const bool dup = std::any_of(atoms.begin(), atoms.end(), [&](const SupportAtom& b) {
      return b.ell == a.ell && b.condition.matrix() == a.condition.matrix();
    });
    if (!dup) atoms.push_back(a);
  }
  return DisorderMeasure::normalized(atoms);
}

}  // namespace

TEST_SUITE("dichotomy") {
  TEST_CASE("phase equivalence") {
    const Mat2 B = S(0.7) * rotation(0.3);
    CHECK(phase_equivalent(B, B));
    CHECK(phase_equivalent(B, -B));
    CHECK_FALSE(phase_equivalent(S(1.0), S(2.0)));
    CHECK_FALSE(phase_equivalent(B, B + 1e-9 * Mat2::identity()));
    CHECK(phase_equivalent(B, B + 1e-12 * Mat2::identity()));
  }

  TEST_CASE("reference verdicts") {
    const auto gauge = classify(preset_gauge({{-1.0, 0.2}, {0.5, 0.3}, {3.0, 0.5}}, 1.0));
    CHECK(gauge.verdict == Verdict::AbsolutelyContinuous);
    CHECK(gauge.reason == AcReason::FreeEquivalent);

    const auto bern = classify(preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0));
    CHECK(bern.localized());
    CHECK(bern.bullet == 2);
    CHECK(bern.witness == std::array<std::size_t, 2>{0, 1});

    const auto periodic = classify(DisorderMeasure({conn(1.0, S(1.0))}));
    CHECK(periodic.reason == AcReason::PeriodicEquivalent);
    CHECK(periodic.ell == 1.0);
    CHECK(periodic.B == S(1.0));

    const auto dp = classify(preset_delta_prime({{0.5, 0.5}, {2.0, 0.5}}, 1.0));
    CHECK(dp.localized());

    const auto tree = classify(preset_radial_tree({{{0.0, 2}, 0.5}, {{0.0, 3}, 0.5}}, 1.0));
    CHECK(tree.localized());
  }

  TEST_CASE("bullets") {
    // Distinct lengths, common non-trivial class.
    const auto b1 = classify(DisorderMeasure({conn(1.0, S(1.0), 0.5), conn(2.0, -S(1.0), 0.5)}));
    CHECK(b1.bullet == 1);
    // Distinct lengths with only +-I: free.
    const auto free = classify(DisorderMeasure(
        {conn(1.0, Mat2::identity(), 0.5), conn(2.0, -Mat2::identity(), 0.5)}));
    CHECK(free.reason == AcReason::FreeEquivalent);
    // Trivial atom of one length plus a non-trivial atom of another.
    const auto mixed = classify(DisorderMeasure(
        {{1.0, VertexCondition::trivial(0.4), 0.5}, conn(2.0, S(0.5), 0.5)}));
    CHECK(mixed.bullet == 2);
    const auto sep = classify(DisorderMeasure(
        {conn(1.0, Mat2::identity(), 0.5), {1.0, VertexCondition::separating(1, 0, 1, 0), 0.5}}));
    CHECK(sep.bullet == 3);
    CHECK(sep.witness == std::array<std::size_t, 2>{1, 1});
    CHECK(classify(DisorderMeasure({{1.0, VertexCondition::separating(0, 1, 1, 2), 1.0}})).bullet ==
          3);
    // (l, B) and (l, -B) commute identically.
    const auto pm = classify(DisorderMeasure({conn(1.3, S(2.0), 0.5), conn(1.3, -S(2.0), 0.5)}));
    CHECK(pm.reason == AcReason::PeriodicEquivalent);
  }

  TEST_CASE("invariance under permutation, reweighting and sign flips") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 300; ++trial) {
      const DisorderMeasure m = random_connecting(rng);
      const auto base = classify(m);
      auto atoms = m.atoms();
      std::shuffle(atoms.begin(), atoms.end(), rng);
      std::uniform_real_distribution<double> w(0.1, 1.0);
      for (auto& a : atoms) {
        a.weight = w(rng);
        const Mat2 flipped = -a.condition.matrix();
        const bool clash = std::any_of(atoms.begin(), atoms.end(), [&](const SupportAtom& b) {
          return b.ell == a.ell && b.condition.matrix() == flipped;
        });
        if (!clash && w(rng) < 0.5) a.condition = VertexCondition::connecting(flipped);
      }
      const auto v = classify(DisorderMeasure::normalized(atoms));
      CHECK(v.verdict == base.verdict);
      CHECK(v.bullet == base.bullet);
      CHECK(v.reason == base.reason);
    }
  }

  TEST_CASE("witnesses re-trigger in isolation") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 300; ++trial) {
      const DisorderMeasure m = random_connecting(rng);
      const auto v = classify(m);
      if (!v.localized()) continue;
      CHECK(witness_triggers(m, v));
      std::vector<SupportAtom> pair{m.atom(v.witness[0])};
      if (v.witness[1] != v.witness[0]) pair.push_back(m.atom(v.witness[1]));
      const auto alone = classify(DisorderMeasure::normalized(pair));
      CHECK(alone.localized());
      CHECK(alone.bullet == v.bullet);
    }
    const auto ac = classify(preset_gauge({{1.0, 1.0}}, 1.0));
    CHECK_FALSE(witness_triggers(preset_gauge({{1.0, 1.0}}, 1.0), ac));
  }

  TEST_CASE("biconditional with the commutator criterion") {
    std::mt19937_64 rng(7);
    int localized = 0;
    for (int trial = 0; trial < 1000; ++trial) {
      const DisorderMeasure m = random_connecting(rng);
      const auto r = consistency_with_commutator(m);
      CHECK(r.consistent);
      localized += r.localized;
    }
    CHECK(localized > 100);
    CHECK(localized < 900);
    const auto bern = consistency_with_commutator(preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0));
    CHECK(bern.localized);
    CHECK(bern.noncommuting_pair);
    CHECK_THROWS_AS(consistency_with_commutator(
                        DisorderMeasure({{1.0, VertexCondition::separating(1, 0, 1, 0), 1.0}})),
                    DomainError);
  }

  TEST_CASE("pairwise and predicate forms agree") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 500; ++trial) {
      const DisorderMeasure m = random_connecting(rng);
      const auto a = classify(m);
      const auto b = classify_pairwise(m);
      CHECK(a.verdict == b.verdict);
      CHECK(a.bullet == b.bullet);
    }
  }

  TEST_CASE("JSON fields") {
    const auto loc = to_json(classify(preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0)));
    CHECK(loc["verdict"] == "Localized");
    CHECK(loc["bullet"] == 2);
    CHECK(loc["witness"] == nlohmann::json({0, 1}));
    CHECK(loc["reason"].is_string());

    const auto per = to_json(classify(DisorderMeasure({conn(1.0, S(1.0))})));
    CHECK(per["verdict"] == "AbsolutelyContinuous");
    CHECK(per["bullet"].is_null());
    CHECK(per["reason"] == "PeriodicEquivalent");
    CHECK(per["ell"] == 1.0);
    CHECK(per["B"][1][0] == 1.0);

    const auto free = to_json(classify(preset_gauge({{2.0, 1.0}}, 1.0)));
    CHECK(free["reason"] == "FreeEquivalent");
    CHECK_FALSE(free.contains("B"));
  }
}
