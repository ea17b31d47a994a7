#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "qcmod/cayley_capacity.hpp"
#include "qcmod/errors.hpp"

using namespace qcmod;

TEST_CASE("ball sizes and ordering") {
  const auto z = build_ball(GroupSpec::lattice(1), 3, VertexSet::origin(), VertexSet::none());
  CHECK(z.vertex_count() == 7);
  CHECK(z.elements[0] == std::vector<int>{0});
  CHECK(z.generator_count() == 1);
  int defined = 0;
  for (int v = 0; v < 7; ++v)
    if (z.sigma[0][static_cast<std::size_t>(v)] >= 0) {
      ++defined;
      CHECK(z.elements[static_cast<std::size_t>(z.sigma[0][static_cast<std::size_t>(v)])][0] ==
            z.elements[static_cast<std::size_t>(v)][0] + 1);
    }
  CHECK(defined == 6);

  CHECK(build_ball(GroupSpec::lattice(2), 1, VertexSet::origin(), VertexSet::none()).vertex_count() == 5);
  CHECK(build_ball(GroupSpec::free(2), 2, VertexSet::origin(), VertexSet::none()).vertex_count() == 17);
  for (int k = 1; k <= 3; ++k)
    for (int R = 0; R <= 4; ++R) {
      const auto b = build_ball(GroupSpec::free(k), R, VertexSet::none(), VertexSet::none());
      CHECK(b.vertex_count() == oracle::free_ball_count(k, R));
      CHECK(expected_ball_size(GroupSpec::free(k), R) == oracle::free_ball_count(k, R));
    }
  for (int d = 1; d <= 3; ++d)
    for (int R = 0; R <= 5; ++R)
      CHECK(build_ball(GroupSpec::lattice(d), R, VertexSet::none(), VertexSet::none()).vertex_count() ==
            expected_ball_size(GroupSpec::lattice(d), R));
  CHECK(oracle::lattice_harmonic(3, 4).vertices == expected_ball_size(GroupSpec::lattice(3), 4));

  const auto f = build_ball(GroupSpec::free(2), 2, VertexSet::none(), VertexSet::none());
  for (int v = 1; v < f.vertex_count(); ++v) CHECK(f.word_length[static_cast<std::size_t>(v - 1)] <= f.word_length[static_cast<std::size_t>(v)]);
}

TEST_CASE("generator maps are injective") {
  for (const auto& g : {GroupSpec::lattice(2), GroupSpec::free(2), GroupSpec::lattice(3)}) {
    const auto b = build_ball(g, 3, VertexSet::none(), VertexSet::none());
    for (const auto& s : b.sigma) {
      std::vector<int> seen(static_cast<std::size_t>(b.vertex_count()), 0);
      for (int t : s)
        if (t >= 0) CHECK(++seen[static_cast<std::size_t>(t)] == 1);
    }
  }
}

TEST_CASE("custom groups") {
  // cyclic group of order 6 with one generator
  std::vector<int> shift{1, 2, 3, 4, 5, 0};
  const auto b = build_ball(GroupSpec::custom_tables({shift}), 2, VertexSet::origin(), VertexSet::none());
  CHECK(b.vertex_count() == 5);
  CHECK_THROWS_AS(GroupSpec::custom_tables({{0, 0, 1}}).validate(), ValidationError);
}

TEST_CASE("plate validation") {
  CHECK_THROWS_AS(build_ball(GroupSpec::lattice(1), 3, VertexSet::origin(), VertexSet::of_elements({{0}})),
                  ValidationError);
  CHECK_THROWS_AS(build_ball(GroupSpec::lattice(1), 3, VertexSet::of_elements({{4}}), VertexSet::none()),
                  ValidationError);
  const auto s = build_ball(GroupSpec::lattice(2), 2, VertexSet::origin(), VertexSet::sphere());
  CHECK(s.x2.size() == 8);
}

TEST_CASE("p = 1 on Z matches the min-cut oracle") {
  for (int R : {2, 5, 9}) {
    const auto b = build_ball(GroupSpec::lattice(1), R, VertexSet::origin(), VertexSet::none());
    const auto r = graph_capacity(b, NormSpec::schatten(1));
    CHECK(r.value == doctest::Approx(oracle::line_tv_capacity(R, {0}, {})).epsilon(1e-6));
  }
  // plates on both sides with adjacent vertices: one unit drop across the shared edge at least
  const auto b = build_ball(GroupSpec::lattice(1), 6, VertexSet::of_elements({{0}, {1}}),
                            VertexSet::of_elements({{2}, {-3}}));
  const auto r = graph_capacity(b, NormSpec::schatten(1));
  CHECK(r.value == doctest::Approx(oracle::line_tv_capacity(6, {0, 1}, {2, -3})).epsilon(1e-6));
  CHECK(r.value >= 1.0 - 1e-9);
}

TEST_CASE("p = 2 matches the harmonic oracle") {
  struct Case {
    int d, R;
  };
  for (auto [d, R] : {Case{1, 12}, Case{2, 8}, Case{3, 5}}) {
    CAPTURE(d);
    const auto h = oracle::lattice_harmonic(d, R);
    // the minimizer of the total energy splits it evenly across directions
    for (double e : h.per_direction) CHECK(e == doctest::Approx(h.energy / d).epsilon(1e-10));
    const auto b = build_ball(GroupSpec::lattice(d), R, VertexSet::origin(), VertexSet::none());
    const auto r = graph_capacity(b, NormSpec::schatten(2));
    CHECK(r.value == doctest::Approx(std::sqrt(h.energy / d)).epsilon(1e-6));
    REQUIRE(r.lower_bound.has_value());
    CHECK(*r.lower_bound <= r.value + 1e-12);
  }
  CHECK(graph_capacity(build_ball(GroupSpec::lattice(1), 20, VertexSet::origin(), VertexSet::none()),
                       NormSpec::schatten(2))
            .value == doctest::Approx(std::sqrt(2.0 / 21)).epsilon(1e-9));
}

TEST_CASE("p = 2 with zero pins matches the oracle") {
  const auto b = build_ball(GroupSpec::lattice(2), 5, VertexSet::origin(),
                            VertexSet::of_elements({{2, 0}, {0, -3}, {1, 1}}));
  const auto h = oracle::lattice_harmonic(2, 5, {{2, 0}, {0, -3}, {1, 1}});
  const auto r = graph_capacity(b, NormSpec::schatten(2));
  // the pins break the symmetry, so only the energy bound is exact
  CHECK(r.value >= std::sqrt(h.energy / 2) - 1e-9);
  GraphSolveOptions sub;
  sub.exact_quadratic = false;
  const auto r2 = graph_capacity(b, NormSpec::schatten(2), sub);
  CHECK(r2.value == doctest::Approx(r.value).epsilon(1e-4));
}

TEST_CASE("lorentz (2,1) on Z is below the linear-ramp value") {
  const int R = 8;
  const auto b = build_ball(GroupSpec::lattice(1), R, VertexSet::origin(), VertexSet::none());
  const auto r = graph_capacity(b, NormSpec::lorentz(2));
  double ramp = 0;
  for (int j = 1; j <= 2 * (R + 1); ++j) ramp += std::pow(j, -0.5) / (R + 1);
  CHECK(r.value <= ramp + 1e-9);
  std::vector<double> u(static_cast<std::size_t>(b.vertex_count()));
  for (int v = 0; v < b.vertex_count(); ++v) u[static_cast<std::size_t>(v)] = 1.0 - std::abs(b.elements[static_cast<std::size_t>(v)][0]) / double(R + 1);
  CHECK(graph_objective(b, u, NormSpec::lorentz(2)) == doctest::Approx(ramp).epsilon(1e-12));
}

TEST_CASE("empty inner plate") {
  const auto b = build_ball(GroupSpec::lattice(1), 4, VertexSet::none(), VertexSet::sphere());
  const auto r = graph_capacity(b, NormSpec::schatten(1));
  CHECK(r.value == 0.0);
  CHECK(r.empty_inner_plate);
  const auto t = verify_transfer(b, NormSpec::schatten(1));
  CHECK(t.cap_value == 0.0);
  CHECK(t.k_value == 0.0);
}

TEST_CASE("truncated regular representation") {
  const auto b = build_ball(GroupSpec::lattice(1), 1, VertexSet::none(), VertexSet::none());
  const auto lam = truncated_regular_rep(b);
  REQUIRE(lam.size() == 1);
  CHECK_FALSE(lam.selfadjoint(0));
  const int m1 = b.index_of({-1}), z = b.index_of({0}), p1 = b.index_of({1});
  CHECK(lam[0](z, m1) == 1.0);
  CHECK(lam[0](p1, z) == 1.0);
  CHECK(lam[0].cwiseAbs().sum() == 2.0);

  const auto f = build_ball(GroupSpec::free(2), 1, VertexSet::none(), VertexSet::none());
  const auto lf = truncated_regular_rep(f);
  REQUIRE(lf.size() == 2);
  for (int j = 0; j < 2; ++j) {
    CHECK(lf[j].rows() == 5);
    for (int c = 0; c < 5; ++c) CHECK(lf[j].col(c).cwiseAbs().sum() <= 1.0);
    // the identity maps to the generator, the generator's inverse to the identity
    CHECK(lf[j].cwiseAbs().sum() == 2.0);
  }
}

TEST_CASE("monotonicity in the inner plate and in R") {
  const NormSpec s = NormSpec::schatten(2);
  const auto small = graph_capacity(build_ball(GroupSpec::lattice(2), 6, VertexSet::origin(), VertexSet::none()), s);
  const auto large = graph_capacity(
      build_ball(GroupSpec::lattice(2), 6, VertexSet::of_elements({{0, 0}, {1, 0}}), VertexSet::none()), s);
  CHECK(small.value <= large.value + 1e-9);
  double prev = 1e9;
  for (int R : {2, 4, 6, 8}) {
    const double v = graph_capacity(build_ball(GroupSpec::lattice(2), R, VertexSet::origin(), VertexSet::none()), s).value;
    CHECK(v <= prev + 1e-9);
    prev = v;
  }
}

TEST_CASE("transfer on Z, R = 6") {
  const auto b = build_ball(GroupSpec::lattice(1), 6, VertexSet::origin(),
                            VertexSet::of_elements({{-6}, {-5}, {-4}, {4}, {5}, {6}}));
  for (const auto& spec : {NormSpec::schatten(1), NormSpec::schatten(2)}) {
    const auto t = verify_transfer(b, spec);
    CHECK(t.inequality_holds);
    CHECK(t.k_value <= t.cap_value + 1e-9);
    CHECK(t.k_at_multiplication == doctest::Approx(t.cap_value).epsilon(1e-12));
  }
}

TEST_CASE("seeds do not change the capacity") {
  const auto b = build_ball(GroupSpec::lattice(1), 7, VertexSet::origin(), VertexSet::of_elements({{5}}));
  GraphSolveOptions a, c;
  a.base.seed = 1;
  c.base.seed = 99;
  const auto ra = graph_capacity(b, NormSpec::lorentz(2), a), rc = graph_capacity(b, NormSpec::lorentz(2), c);
  CHECK(std::abs(ra.value - rc.value) <= 10 * a.base.tol * (1 + ra.value));
}

TEST_CASE("parabolicity scan") {
  const auto z = parabolicity_scan(GroupSpec::lattice(1), 2.0, VertexSet::origin(), {8, 16, 32, 64});
  CHECK(z.classification == "vanishing");
  CHECK(z.monotone);
  CHECK(z.fit.loglog_exponent == doctest::Approx(-0.5).epsilon(0.1));
  for (std::size_t i = 0; i < z.radii.size(); ++i)
    CHECK(z.values[i] == doctest::Approx(std::sqrt(2.0 / (z.radii[i] + 1))).epsilon(1e-8));

  const auto z3 = parabolicity_scan(GroupSpec::lattice(3), 2.0, VertexSet::origin(), {4, 6, 8});
  CHECK(z3.monotone);
  CHECK(z3.values.back() > 0.1);

  CHECK_THROWS_AS(parabolicity_scan(GroupSpec::lattice(1), 2.0, VertexSet::origin(), {4, 8}), ValidationError);
}
