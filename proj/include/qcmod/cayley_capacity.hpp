#pragma once

// Nonlinear condenser capacities on word-metric balls of Cayley graphs,
//   cap_J(X1, X2) = inf max_j |u(g_j .) - u(.)|_J
// over 0 <= u <= 1 with u = 1 on X1, u = 0 on X2 and u = 0 outside the ball,
// plus the truncated left regular representation and the capacity/modulus
// comparison.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qcmod/condenser_solver.hpp"
#include "qcmod/operator_core.hpp"
#include "qcmod/ri_norms.hpp"

namespace qcmod {

enum class GroupKind { integer_lattice, free_group, custom };

struct GroupSpec {
  GroupKind kind = GroupKind::integer_lattice;
  int rank = 1;  // d for Z^d, k for F_k
  /// custom: tables[j][v] = image of vertex v under generator j (bijections of {0..V-1}).
  std::vector<std::vector<int>> tables;

  static GroupSpec lattice(int d);
  static GroupSpec free(int k);
  static GroupSpec custom_tables(std::vector<std::vector<int>> tables);

  int generator_count() const;
  void validate() const;
};

/// Which vertices of a ball make up a plate.
struct VertexSet {
  enum class Kind { empty, origin, sphere, indices, elements } kind = Kind::empty;
  std::vector<int> indices;
  /// Z^d: coordinate tuples; F_k: words encoded as letter lists (+i = a_i, -i = a_i^-1); custom: {vertex id}.
  std::vector<std::vector<int>> elements;

  static VertexSet none() { return {}; }
  static VertexSet origin() { return {Kind::origin, {}, {}}; }
  static VertexSet sphere() { return {Kind::sphere, {}, {}}; }
  static VertexSet of_indices(std::vector<int> idx) { return {Kind::indices, std::move(idx), {}}; }
  static VertexSet of_elements(std::vector<std::vector<int>> e) { return {Kind::elements, {}, std::move(e)}; }
};

/// Edges of one generator: from[e] -> to[e] = g_j from[e], with -1 marking a
/// vertex outside the ball. Contains every edge with at least one end inside.
struct GeneratorEdges {
  std::vector<int> from;
  std::vector<int> to;
};

struct CayleyBall {
  GroupSpec group;
  int radius = 0;
  /// Canonical element per vertex (Z^d coordinates, F_k reduced letter word, custom {id}).
  std::vector<std::vector<int>> elements;
  std::vector<int> word_length;
  /// sigma[j][h] = index of g_j h, or -1 outside the ball.
  std::vector<std::vector<int>> sigma;
  std::vector<GeneratorEdges> edges;
  std::vector<int> x1, x2;

  int vertex_count() const { return static_cast<int>(elements.size()); }
  int generator_count() const { return static_cast<int>(sigma.size()); }
  /// Printable label: "(1,-2)" for Z^d, "aB" for F_k (capital = inverse), "#7" for custom.
  std::string label(int v) const;
  int index_of(const std::vector<int>& element) const;
};

/// Vertices ordered by word length, then lexicographically.
CayleyBall build_ball(const GroupSpec& group, int R, const VertexSet& x1, const VertexSet& x2);

/// |ball(F_k, R)| = 1 + 2k((2k-1)^R - 1)/(2k-2), |ball(Z, R)| = 2R+1, etc.
long long expected_ball_size(const GroupSpec& group, int R);

struct GraphSolveOptions {
  SolveOptions base;
  /// Use the weighted-energy dual ascent for schatten p = 2.
  bool exact_quadratic = true;
  double cg_tol = 1e-13;
};

struct GraphCapacityReport {
  double value = 0.0;
  std::optional<double> lower_bound;
  std::vector<double> u;
  std::vector<double> per_generator;  // |D_j u|_J at the returned u
  std::vector<double> history;
  bool converged = false;
  bool empty_inner_plate = false;
  int iters = 0;
  std::string method;
  double wall_time = 0.0;
};

/// max_j |D_j u|_J with u extended by zero outside the ball.
double graph_objective(const CayleyBall& ball, std::span<const double> u, const NormSpec& spec,
                       std::vector<double>* per_generator = nullptr);

GraphCapacityReport graph_capacity(const CayleyBall& ball, const NormSpec& spec, const GraphSolveOptions& opts = {});

/// Partial permutation matrices (lambda_j)_{h', h} = 1 iff h' = g_j h, both in the ball.
OperatorTuple truncated_regular_rep(const CayleyBall& ball);

struct TransferReport {
  double cap_value = 0.0;
  double k_value = 0.0;
  double gap = 0.0;  // |cap - k| / cap, 0 when cap = 0
  /// k <= cap + 1e-9 * max(1, cap)
  bool inequality_holds = true;
  /// Matrix objective at the multiplication operator M_u of the capacity potential.
  double k_at_multiplication = 0.0;
  GraphCapacityReport cap;
  SolveReport k;
};

TransferReport verify_transfer(const CayleyBall& ball, const NormSpec& spec, const GraphSolveOptions& opts = {});

struct ParabolicityReport {
  std::vector<int> radii;
  std::vector<long long> vertex_counts;
  std::vector<double> values;
  std::vector<bool> converged;
  ExtrapolationResult fit;
  bool monotone = true;
  /// "positive", "vanishing" or "undetermined"
  std::string classification;
  std::vector<std::string> warnings;
};

ParabolicityReport parabolicity_scan(const GroupSpec& group, double p, const VertexSet& x1, const std::vector<int>& radii,
                                     const GraphSolveOptions& opts = {});

}  // namespace qcmod
