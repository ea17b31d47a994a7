#include "doctest.h"

#include "qcmod/errors.hpp"
#include "qcmod/experiments.hpp"

using namespace qcmod;

namespace {

SolveOptions quick() {
  SolveOptions o;
  o.restarts = 1;
  o.max_iters = 800;
  return o;
}

MultiplicityModel unit_square() {
  MultiplicityModel m;
  m.name = "unit";
  m.n = 2;
  m.cells = {1, 1};
  m.multiplicity = {1};
  return m;
}

}  // namespace

TEST_CASE("time-frequency model") {
  CHECK_THROWS_AS((TimeFreqModel{16, 8, 8}).validate(), ValidationError);
  CHECK_THROWS_AS((TimeFreqModel{16, 4, 16}).validate(), ValidationError);
  const auto sp = tf_condenser({32, 3, 9});
  CHECK(sp.condenser.rank_p() == 3);
  CHECK(sp.condenser.rank_q() == 32 - 9);
  CHECK((sp.condenser.P() * sp.condenser.Q()).norm() < 1e-12);
  CHECK(sp.tau.all_selfadjoint());

  const auto sched = default_gamma1_schedule({64, 128});
  CHECK(sched[0].M == 9);
  CHECK(sched[0].K == 17);
  CHECK(sched[1].M == 13);
  CHECK(sched[1].K == 33);
}

TEST_CASE("empty inner plate gives zero") {
  const auto sp = tf_condenser({32, 0, 9});
  const auto r = solve_condenser(sp.tau, sp.condenser, NormSpec::schatten(1), quick());
  CHECK(r.value_upper <= quick().tol * 1e-2);
}

TEST_CASE("single scale value is positive and below a feasible point") {
  const auto sp = tf_condenser({32, 3, 9});
  const auto r = solve_condenser(sp.tau, sp.condenser, NormSpec::schatten(1), quick());
  CHECK(r.value_upper > 0);
  const Mat half = embed(sp.condenser, 0.5 * Mat::Identity(sp.condenser.middle_dim(), sp.condenser.middle_dim()));
  const NormSpec s1 = NormSpec::schatten(1);
  CHECK(r.value_upper <= objective(sp.tau, half, std::span(&s1, 1)) + 1e-12);

  const auto r2 = solve_condenser(sp.tau.scaled(2), sp.condenser, s1, quick());
  CHECK(r2.value_upper == doctest::Approx(2 * r.value_upper).epsilon(1e-5));
}

TEST_CASE("multiplicity models") {
  auto m = unit_square();
  CHECK(m.integral() == 1.0);
  m.cells = {2, 1};
  m.multiplicity = {1, 3};
  CHECK(m.integral() == doctest::Approx(2.0));
  m.multiplicity = {1, -1};
  CHECK_THROWS_AS(m.validate(), ValidationError);

  MultiplicityModel c;
  c.kind = MultiplicityModel::Kind::cantor;
  c.n = 2;
  CHECK(c.integral() == 1.0);

  MultiplicityModel s = unit_square();
  s.cells = {2, 1};
  s.multiplicity = {1, 2};
  const auto w = swapped(s);
  CHECK(w.cells == std::vector<int>{1, 2});
  CHECK(w.multiplicity == std::vector<int>{1, 2});
}

TEST_CASE("realized problems") {
  const auto sp = realize(unit_square(), 4);
  CHECK(sp.tau.size() == 2);
  CHECK(sp.tau.dim() == 16);
  CHECK(sp.condenser.rank_p() >= 1);
  CHECK(sp.condenser.rank_p() + sp.condenser.rank_q() < 16);

  auto dbl = unit_square();
  dbl.multiplicity = {2};
  const auto sd = realize(dbl, 4);
  CHECK(sd.tau.dim() == 32);
  CHECK(sd.condenser.rank_p() == 2 * sp.condenser.rank_p());

  // direct sum contains the original problem
  const std::vector<NormSpec> spec{NormSpec::lorentz(2)};
  const double single = solve_condenser(sp.tau, sp.condenser, spec, quick()).value_upper;
  const double doubled = solve_condenser(sd.tau, sd.condenser, spec, quick()).value_upper;
  CHECK(doubled >= single - 1e-4 * single);
}

TEST_CASE("ratio experiment shape") {
  auto a = unit_square();
  auto b = unit_square();
  b.name = "double";
  b.multiplicity = {2};
  const auto r = ratio_experiment({{a, {}, 0}, {b, {}, 0}}, {3, 4, 5}, quick());
  REQUIRE(r.rows.size() == 2);
  CHECK(r.label == "SOFT");
  CHECK(r.rows[1].integral == 2.0);
  for (const auto& row : r.rows) CHECK(row.sweep.values.size() == 3);
  CHECK_THROWS_AS(ratio_experiment({{a, {}, 0}}, {3, 4, 5}, quick()), ValidationError);
}

TEST_CASE("hybrid scan checks exponents") {
  CHECK_THROWS_AS(hybrid_exponent_scan(unit_square(), {{2, 3}}, {3, 4, 5}, quick()), ValidationError);
  CHECK_THROWS_AS(hybrid_exponent_scan(unit_square(), {{1, 1e300}}, {3, 4, 5}, quick()), ValidationError);
  const auto h = hybrid_exponent_scan(unit_square(), {{2, 2}}, {3, 4, 5}, quick());
  REQUIRE(h.rows.size() == 1);
  // the unit square is symmetric under the swap
  CHECK(h.rows[0].symmetric_gap <= 1e-6 * (1 + h.rows[0].estimate));
}
