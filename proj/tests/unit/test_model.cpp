#include <doctest.h>

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>

#include "pointlab/errors.hpp"
#include "pointlab/model.hpp"
#include "pointlab/model_io.hpp"
#include "pointlab/rng.hpp"

using namespace pointlab;

TEST_SUITE("model") {
  TEST_CASE("measure validation") {
    const auto id = VertexCondition::trivial();
    CHECK_THROWS_AS(DisorderMeasure({}), DomainError);
    CHECK_THROWS_AS(DisorderMeasure({{1.0, id, 0.5}}), DomainError);
    CHECK_THROWS_AS(DisorderMeasure({{-1.0, id, 1.0}}), DomainError);
    CHECK_THROWS_AS(DisorderMeasure({{1.0, id, 0.5}, {1.0, id, 0.5}}), DomainError);
    CHECK_THROWS_AS(DisorderMeasure({{1.0, VertexCondition::connecting({2.0, 0.0, 0.0, 2.0}), 1.0}}),
                    InvalidMatrixError);
    CHECK_NOTHROW(DisorderMeasure({{1.0, id, 0.5}, {2.0, id, 0.5}}));
    const auto n = DisorderMeasure::normalized({{1.0, id, 3.0}, {2.0, id, 1.0}});
    CHECK(n.atom(0).weight == doctest::Approx(0.75));
    CHECK(n.min_length() == 1.0);
    CHECK(n.max_length() == 2.0);
  }

  TEST_CASE("presets") {
    const auto d = preset_delta({{0.0, 0.5}, {1.0, 0.5}}, 1.0);
    CHECK(d.atom(1).condition.matrix() == Mat2{1.0, 0.0, 1.0, 1.0});
    const auto dp = preset_delta_prime({{2.0, 1.0}}, 1.0);
    CHECK(dp.atom(0).condition.matrix() == Mat2{1.0, -2.0, 0.0, 1.0});
    for (double alpha : {-3.0, 0.5, 4.0}) {
      const std::complex<double> z{2.0, alpha};
      const std::complex<double> phase = z / std::conj(z);
      const double theta = gauge_phase(alpha);
      CHECK(std::cos(theta) == doctest::Approx(phase.real()).epsilon(1e-14));
      CHECK(std::sin(theta) == doctest::Approx(phase.imag()).epsilon(1e-14));
    }
    const auto g = preset_gauge({{1.0, 0.5}, {2.0, 0.5}}, 1.0);
    CHECK(g.atom(0).condition.is_trivial());
    CHECK(g.atom(0).condition.matrix() == Mat2::identity());
    const auto tree = preset_radial_tree({{{1.0, 4}, 1.0}}, 1.0);
    const Mat2 B = tree.atom(0).condition.matrix();
    CHECK(B.a11 == doctest::Approx(2.0));
    CHECK(B.a21 == doctest::Approx(0.5));
    CHECK(B.a22 == doctest::Approx(0.5));
    CHECK_THROWS_AS(preset_radial_tree({{{1.0, 0}, 1.0}}, 1.0), DomainError);
    CHECK(mean_length(DisorderMeasure({{1.0, VertexCondition::trivial(), 0.25},
                                       {3.0, VertexCondition::trivial(0.5), 0.75}})) ==
          doctest::Approx(2.5));
  }

  TEST_CASE("draws are counter based") {
    const auto d = preset_delta({{0.0, 0.3}, {1.0, 0.7}}, 1.0);
    const Realization a(d, 42, 1, 100);
    const Realization b(d, 42, -50, 300);
    for (std::int64_t j = 1; j <= 100; ++j) {
      CHECK(a.atom_index(j) == b.atom_index(j));
      CHECK(a.position(j) == b.position(j));
    }
    CHECK(a.position(0) == 0.0);
    CHECK(b.position(0) == 0.0);
    CHECK(b.position(-1) == -1.0);
    const Realization c(d, 43, 1, 100);
    int differ = 0;
    for (std::int64_t j = 1; j <= 100; ++j) differ += a.atom_index(j) != c.atom_index(j);
    CHECK(differ > 10);
    CHECK_THROWS_AS(a.position(101), DomainError);
    CHECK(derive_seed(1, 2) != derive_seed(1, 3));
    CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  }

  TEST_CASE("draw frequencies within 3 sigma") {
    const auto d = DisorderMeasure::normalized({{1.0, VertexCondition::trivial(), 0.2},
                                                {2.0, VertexCondition::trivial(), 0.5},
                                                {3.0, VertexCondition::trivial(), 0.3}});
    const int n = 200000;
    std::vector<int> hits(3, 0);
    for (int j = 1; j <= n; ++j) ++hits[draw_atom(d, 9, j)];
    for (std::size_t i = 0; i < 3; ++i) {
      const double p = d.atom(i).weight;
      const double sigma = std::sqrt(n * p * (1.0 - p));
      CHECK(std::abs(hits[i] - n * p) < 3.0 * sigma);
    }
  }

  TEST_CASE("JSON round trip") {
    const DisorderMeasure m(
        {{1.0, VertexCondition::connecting(0.3, {1.0, 0.0, 1.5, 1.0}), 0.5},
         {2.0, VertexCondition::trivial(1.0), 0.25},
         {0.5, VertexCondition::separating(1.0, 0.5, 0.0, 1.0), 0.25}},
        "mixed");
    const auto back = measure_from_json(to_json(m));
    REQUIRE(back.size() == m.size());
    CHECK(back.name() == "mixed");
    for (std::size_t i = 0; i < m.size(); ++i) {
      CHECK(back.atom(i).ell == m.atom(i).ell);
      CHECK(back.atom(i).weight == m.atom(i).weight);
      CHECK(back.atom(i).condition == m.atom(i).condition);
    }
    const auto path = std::filesystem::temp_directory_path() / "pointlab_model_rt.json";
    save_measure(m, path);
    CHECK(load_measure(path).atom(2).condition == m.atom(2).condition);
    std::filesystem::remove(path);
  }

  TEST_CASE("JSON errors name the field") {
    auto j = to_json(preset_delta({{1.0, 1.0}}, 1.0));
    j["atoms"][0]["ell"] = "long";
    try {
      measure_from_json(j);
      FAIL("expected DomainError");
    } catch (const DomainError& e) {
      CHECK(std::string(e.what()).find("model.atoms[0].ell") != std::string::npos);
    }
    j = to_json(preset_delta({{1.0, 1.0}}, 1.0));
    j["atoms"][0]["kind"] = "mystery";
    CHECK_THROWS_AS(measure_from_json(j), DomainError);
  }
}
