#include "doctest.h"

#include <random>

#include "oracles.hpp"
#include "qcmod/errors.hpp"
#include "qcmod/operator_core.hpp"

using namespace qcmod;

namespace {

Mat tridiag3() {
  Mat T = Mat::Zero(3, 3);
  T(0, 1) = T(1, 0) = T(1, 2) = T(2, 1) = 1;
  return T;
}

Mat diag(std::initializer_list<double> v) {
  Vec d(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) d(i++) = x;
  return d.cast<cplx>().asDiagonal();
}

Mat coordinate_projection(int d, std::vector<int> idx) {
  Mat P = Mat::Zero(d, d);
  for (int i : idx) P(i, i) = 1;
  return P;
}

}  // namespace

TEST_CASE("condenser construction") {
  const auto c = Condenser::make(3, std::vector<int>{0}, std::vector<int>{2});
  CHECK(c.middle_dim() == 1);
  CHECK(std::abs(std::abs(c.middle_basis()(1, 0)) - 1.0) < 1e-15);
  CHECK(c.real());

  Mat Q = Mat::Zero(3, 3);
  Q(0, 0) = Q(1, 1) = Q(0, 1) = Q(1, 0) = 0.5;
  CHECK_THROWS_AS(Condenser::make(3, std::vector<int>{0}, Q), CondenserError);

  const auto empty = Condenser::make(4, std::vector<int>{}, std::vector<int>{});
  CHECK(empty.middle_dim() == 4);
  CHECK(empty.rank_p() == 0);

  Mat notproj = Mat::Zero(3, 3);
  notproj(0, 0) = 0.5;
  CHECK_THROWS_AS(Condenser::make(3, notproj, std::vector<int>{2}), ValidationError);
  CHECK_THROWS_AS(Condenser::make(3, std::vector<int>{3}, std::vector<int>{}), ValidationError);
}

TEST_CASE("matrix projections are accepted and re-orthogonalized") {
  std::mt19937_64 rng(3);
  const Mat U = random_unitary(5, rng);
  const auto c = Condenser::make(5, Mat(U * coordinate_projection(5, {0, 1}) * U.adjoint()),
                                 Mat(U * coordinate_projection(5, {4}) * U.adjoint()));
  CHECK(c.rank_p() == 2);
  CHECK(c.rank_q() == 1);
  const Mat B = c.block_basis();
  CHECK((B.adjoint() * B - Mat::Identity(5, 5)).norm() < 1e-12);
  CHECK((c.P() * c.Q()).norm() < 1e-12);
}

TEST_CASE("embed and project") {
  auto c = std::make_shared<const Condenser>(Condenser::make(3, std::vector<int>{0}, std::vector<int>{2}));
  const Mat A = embed(*c, Mat::Identity(1, 1));
  CHECK((A * c->P() - c->P()).norm() < 1e-15);
  CHECK((A * c->Q()).norm() < 1e-15);
  CHECK((A * A - A).norm() < 1e-15);

  auto v = project_to_feasible(c, Mat::Identity(3, 3));
  CHECK((embed(v) - diag({1, 1, 0})).norm() < 1e-15);
  v = project_to_feasible(c, diag({7, 0.5, -2}));
  CHECK((embed(v) - diag({1, 0.5, 0})).norm() < 1e-15);
}

TEST_CASE("commutators") {
  const OperatorTuple tau({diag({1, 2})});
  Mat A = Mat::Zero(2, 2);
  A(0, 1) = 1;
  const auto cs = commutators(tau, A);
  // [A, T] = AT - TA has entry 2 - 1 = 1 at (0,1); the column stacks [T, A].
  CHECK(std::abs(cs[0](0, 1) - 1.0) < 1e-15);
  const Mat col = commutator_column(tau, A);
  CHECK(std::abs(col(0, 1) + 1.0) < 1e-15);
  CHECK(col.cwiseAbs().sum() == doctest::Approx(1.0));

  const OperatorTuple two({diag({1, 2}), diag({3, 1})});
  CHECK(commutator_column(two, A).rows() == 4);
  CHECK(commutator_column(two, diag({5, 6})).norm() == 0.0);
}

TEST_CASE("objective on the tridiagonal example matches the SVD oracle") {
  const OperatorTuple tau({tridiag3()}, {true});
  const NormSpec s2 = NormSpec::schatten(2);
  for (double t : {0.0, 0.2, 0.5, 0.9}) {
    const Mat A = diag({1, t, 0});
    const double s = std::sqrt((1 - t) * (1 - t) + t * t);
    CHECK(objective(tau, A, std::span(&s2, 1)) == doctest::Approx(std::sqrt(2.0) * s).epsilon(1e-13));
    const auto sv = oracle::singular_values_gram(commutator(A, tridiag3()));
    CHECK(sv[0] == doctest::Approx(s).epsilon(1e-12));
    CHECK(sv[1] == doctest::Approx(s).epsilon(1e-12));
    CHECK(sv[2] == doctest::Approx(0.0));
  }
  CHECK(objective(OperatorTuple({diag({1, 2, 3})}), diag({4, 5, 6}), std::span(&s2, 1)) == 0.0);
  const OperatorTuple pair({tridiag3(), tridiag3()});
  const std::vector<NormSpec> hybrid{s2, s2};
  const Mat A = diag({1, 0.3, 0});
  CHECK(objective(pair, A, hybrid) == objective(pair, A, std::span(&s2, 1)));
}

TEST_CASE("tuple validation") {
  Mat T = tridiag3();
  T(0, 2) = 1e-3;
  CHECK_THROWS_AS(OperatorTuple({T}, {true}), ValidationError);
  CHECK_THROWS_AS(OperatorTuple({Mat::Zero(2, 2), Mat::Zero(3, 3)}), ValidationError);
  CHECK_NOTHROW(OperatorTuple({T}, {false}));
}

TEST_CASE("property: block characterization of the feasible set") {
  std::mt19937_64 rng(41);
  for (int t = 0; t < 1000; ++t) {
    const int d = 3 + t % 5;
    const Mat U = random_unitary(d, rng, t % 2 == 0);
    const Mat P = U * coordinate_projection(d, {0}) * U.adjoint();
    const Mat Q = U * coordinate_projection(d, {d - 1}) * U.adjoint();
    const auto c = Condenser::make(d, P, Q);
    const Mat A = embed(c, random_contraction(c.middle_dim(), rng));
    const auto r = feasibility(c, A);
    CHECK(r.max() <= 1e-12);

    // conversely: feasible selfadjoint A has vanishing off-middle blocks
    const Mat Bb = c.block_basis().adjoint() * A * c.block_basis();
    const int m = c.middle_dim();
    CHECK((Bb.block(0, 1, 1, m)).norm() <= 1e-10);
    CHECK((Bb.block(1 + m, 0, 1, d - 1)).norm() <= 1e-10);
  }
}

TEST_CASE("property: projection is idempotent and non-expansive; objective convex and covariant") {
  std::mt19937_64 rng(43);
  const NormSpec specs[] = {NormSpec::schatten(1), NormSpec::lorentz(2), NormSpec::macaev()};
  for (int t = 0; t < 1000; ++t) {
    const int d = 3 + t % 4;
    auto c = std::make_shared<const Condenser>(Condenser::make(d, std::vector<int>{0}, std::vector<int>{d - 1}));
    const Mat X = random_hermitian(d, rng), Y = random_hermitian(d, rng);
    const Mat PX = embed(project_to_feasible(c, X)), PY = embed(project_to_feasible(c, Y));
    CHECK((embed(project_to_feasible(c, PX)) - PX).norm() <= 1e-12 * (1 + PX.norm()));
    const Mat mx = compress_to_middle(*c, X), my = compress_to_middle(*c, Y);
    CHECK((project_middle(mx) - project_middle(my)).norm() <= (mx - my).norm() + 1e-12);

    const OperatorTuple tau({random_hermitian(d, rng), random_hermitian(d, rng)});
    const NormSpec& s = specs[t % 3];
    const std::span<const NormSpec> sp(&s, 1);
    const double fa = objective(tau, PX, sp), fb = objective(tau, PY, sp);
    CHECK(objective(tau, 0.5 * (PX + PY), sp) <= 0.5 * (fa + fb) + 1e-10 * (1 + fa + fb));

    const Mat U = random_unitary(d, rng);
    CHECK(std::abs(objective(tau.conjugated(U), U * PX * U.adjoint(), sp) - fa) <= 1e-10 * (1 + fa));
  }
}
