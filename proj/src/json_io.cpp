#include "qcmod/json_io.hpp"

#include <cmath>

#include "qcmod/errors.hpp"

namespace qcmod::io {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string at_index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

}  // namespace

const json* field(const json& j, const std::string& key, const std::string& path, Issues& is, bool required) {
  if (!j.is_object()) {
    if (required) is.add(path.empty() ? "<root>" : path, "expected an object");
    return nullptr;
  }
  const auto it = j.find(key);
  if (it == j.end()) {
    if (required) is.add(join(path, key), "missing required field");
    return nullptr;
  }
  return &*it;
}

double number_at(const json& j, const std::string& key, const std::string& path, Issues& is, double fallback,
                 bool required) {
  const json* f = field(j, key, path, is, required);
  if (!f) return fallback;
  if (!f->is_number()) {
    is.add(join(path, key), "expected a number");
    return fallback;
  }
  return f->get<double>();
}

int integer_at(const json& j, const std::string& key, const std::string& path, Issues& is, int fallback,
               bool required) {
  const json* f = field(j, key, path, is, required);
  if (!f) return fallback;
  if (!f->is_number_integer()) {
    is.add(join(path, key), "expected an integer");
    return fallback;
  }
  return f->get<int>();
}

NormSpec norm_from_json(const json& j, const std::string& path, Issues& is) {
  NormSpec s;
  const json* k = field(j, "kind", path, is);
  if (!k) return s;
  if (!k->is_string()) {
    is.add(join(path, "kind"), "expected a string");
    return s;
  }
  try {
    s.kind = norm_kind_from_string(k->get<std::string>());
  } catch (const ValidationError& e) {
    is.add(join(path, "kind"), e.what());
    return s;
  }
  const bool needs_p = s.kind == NormKind::schatten || s.kind == NormKind::lorentz_p1;
  if (needs_p) s.p = number_at(j, "p", path, is, 1.0, true);
  if (s.kind == NormKind::weights) {
    const json* w = field(j, "weights", path, is);
    if (w) {
      if (!w->is_array()) {
        is.add(join(path, "weights"), "expected an array of numbers");
      } else {
        for (std::size_t i = 0; i < w->size(); ++i) {
          if (!(*w)[i].is_number())
            is.add(at_index(join(path, "weights"), i), "expected a number");
          else
            s.weights.push_back((*w)[i].get<double>());
        }
      }
    }
  }
  if (j.contains("length_hint")) {
    const int lh = integer_at(j, "length_hint", path, is, 0);
    if (lh < 0)
      is.add(join(path, "length_hint"), "must be >= 0");
    else
      s.length_hint = static_cast<std::size_t>(lh);
  }
  try {
    s.validate();
  } catch (const ValidationError& e) {
    is.add(path, e.what());
  }
  return s;
}

std::vector<NormSpec> norms_from_json(const json& j, const std::string& path, Issues& is) {
  std::vector<NormSpec> out;
  if (j.is_array()) {
    if (j.empty()) is.add(path, "expected at least one norm spec");
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(norm_from_json(j[i], at_index(path, i), is));
  } else {
    out.push_back(norm_from_json(j, path, is));
  }
  return out;
}

json to_json(const NormSpec& s) {
  json j{{"kind", to_string(s.kind)}};
  if (s.kind == NormKind::schatten || s.kind == NormKind::lorentz_p1) j["p"] = s.p;
  if (s.kind == NormKind::weights) j["weights"] = s.weights;
  if (s.length_hint > 0) j["length_hint"] = s.length_hint;
  return j;
}

namespace {

bool read_grid(const json& a, const std::string& path, Issues& is, RMat& out) {
  if (!a.is_array()) {
    is.add(path, "expected an array of rows");
    return false;
  }
  const std::size_t rows = a.size();
  std::size_t cols = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (!a[r].is_array()) {
      is.add(at_index(path, r), "expected a row array");
      return false;
    }
    if (r == 0) cols = a[r].size();
    if (a[r].size() != cols) {
      is.add(at_index(path, r), "ragged row");
      return false;
    }
  }
  out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  bool ok = true;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const json& v = a[r][c];
      if (!v.is_number() || !std::isfinite(v.get<double>())) {
        is.add(at_index(at_index(path, r), c), "expected a finite number");
        ok = false;
        continue;
      }
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v.get<double>();
    }
  }
  return ok;
}

}  // namespace

Mat matrix_from_json(const json& j, const std::string& path, Issues& is) {
  RMat re, im;
  if (j.is_array()) {
    if (!read_grid(j, path, is, re)) return Mat();
    return re.cast<cplx>();
  }
  const json* r = field(j, "re", path, is);
  if (!r || !read_grid(*r, join(path, "re"), is, re)) return Mat();
  im = RMat::Zero(re.rows(), re.cols());
  if (const json* i = field(j, "im", path, is, false)) {
    if (!read_grid(*i, join(path, "im"), is, im)) return Mat();
    if (im.rows() != re.rows() || im.cols() != re.cols()) {
      is.add(join(path, "im"), "shape differs from re");
      return Mat();
    }
  }
  if (const json* d = field(j, "dim", path, is, false)) {
    Eigen::Index rows = -1, cols = -1;
    if (d->is_number_integer()) {
      rows = cols = d->get<Eigen::Index>();
    } else if (d->is_array() && d->size() == 2 && (*d)[0].is_number_integer() && (*d)[1].is_number_integer()) {
      rows = (*d)[0].get<Eigen::Index>();
      cols = (*d)[1].get<Eigen::Index>();
    } else {
      is.add(join(path, "dim"), "expected an integer or [rows, cols]");
    }
    if (rows >= 0 && (rows != re.rows() || cols != re.cols())) is.add(join(path, "dim"), "does not match the data");
  }
  Mat M(re.rows(), re.cols());
  M.real() = re;
  M.imag() = im;
  return M;
}

json matrix_to_json(const Mat& M) {
  json j;
  if (M.rows() == M.cols())
    j["dim"] = M.rows();
  else
    j["dim"] = {M.rows(), M.cols()};
  json re = json::array(), im = json::array();
  bool has_im = false;
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json rr = json::array(), ir = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) {
      rr.push_back(M(r, c).real());
      ir.push_back(M(r, c).imag());
      has_im = has_im || M(r, c).imag() != 0.0;
    }
    re.push_back(rr);
    im.push_back(ir);
  }
  j["re"] = re;
  if (has_im) j["im"] = im;
  return j;
}

ProjectionSource projection_from_json(const json& j, const std::string& path, Issues& is) {
  if (j.is_object() && j.contains("basis_indices")) {
    const json& b = j["basis_indices"];
    std::vector<int> idx;
    if (!b.is_array()) {
      is.add(join(path, "basis_indices"), "expected an array of integers");
      return idx;
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (!b[i].is_number_integer())
        is.add(at_index(join(path, "basis_indices"), i), "expected an integer");
      else
        idx.push_back(b[i].get<int>());
    }
    return idx;
  }
  return matrix_from_json(j, path, is);
}

OperatorTuple tuple_from_json(const json& j, const std::string& path, Issues& is) {
  const json* c = field(j, "components", path, is);
  if (!c) return {};
  if (!c->is_array() || c->empty()) {
    is.add(join(path, "components"), "expected a nonempty array of matrices");
    return {};
  }
  const std::size_t before = is.items.size();
  std::vector<Mat> comps;
  for (std::size_t i = 0; i < c->size(); ++i) comps.push_back(matrix_from_json((*c)[i], at_index(join(path, "components"), i), is));
  std::vector<bool> sa;
  if (const json* s = field(j, "selfadjoint", path, is, false)) {
    if (!s->is_array() || s->size() != c->size()) {
      is.add(join(path, "selfadjoint"), "expected one boolean per component");
    } else {
      for (std::size_t i = 0; i < s->size(); ++i) {
        if (!(*s)[i].is_boolean())
          is.add(at_index(join(path, "selfadjoint"), i), "expected a boolean");
        else
          sa.push_back((*s)[i].get<bool>());
      }
    }
  }
  if (is.items.size() != before) return {};
  try {
    return OperatorTuple(std::move(comps), sa.size() == c->size() ? sa : std::vector<bool>{});
  } catch (const ValidationError& e) {
    is.add(path, e.what());
    return {};
  }
}

GroupSpec group_from_json(const json& j, const std::string& path, Issues& is) {
  GroupSpec g;
  const json* k = field(j, "kind", path, is);
  if (!k) return g;
  const std::string kind = k->is_string() ? k->get<std::string>() : "";
  try {
    if (kind == "Z^d" || kind == "Z" || kind == "lattice") {
      const int d = kind == "Z" ? integer_at(j, "d", path, is, 1) : integer_at(j, "d", path, is, 1, true);
      if (d < 1) {
        is.add(join(path, "d"), "must be >= 1");
        return g;
      }
      return GroupSpec::lattice(d);
    }
    if (kind == "free") {
      const int kk = integer_at(j, "k", path, is, 1, true);
      if (kk < 1) {
        is.add(join(path, "k"), "must be >= 1");
        return g;
      }
      return GroupSpec::free(kk);
    }
    if (kind == "custom") {
      const json* t = field(j, "tables", path, is);
      if (!t) return g;
      std::vector<std::vector<int>> tables;
      try {
        tables = t->get<std::vector<std::vector<int>>>();
      } catch (const json::exception&) {
        is.add(join(path, "tables"), "expected an array of integer arrays");
        return g;
      }
      return GroupSpec::custom_tables(std::move(tables));
    }
  } catch (const ValidationError& e) {
    is.add(path, e.what());
    return g;
  }
  is.add(join(path, "kind"), "unknown group kind (allowed: Z^d, free, custom)");
  return g;
}

json to_json(const GroupSpec& g) {
  switch (g.kind) {
    case GroupKind::integer_lattice: return {{"kind", "Z^d"}, {"d", g.rank}};
    case GroupKind::free_group: return {{"kind", "free"}, {"k", g.rank}};
    case GroupKind::custom: return {{"kind", "custom"}, {"tables", g.tables}};
  }
  return {};
}

VertexSet vertex_set_from_json(const json& j, const std::string& path, Issues& is) {
  if (j.is_null()) return VertexSet::none();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "origin") return VertexSet::origin();
    if (s == "sphere") return VertexSet::sphere();
    if (s == "none" || s == "empty") return VertexSet::none();
    is.add(path, "unknown vertex set '" + s + "' (allowed: origin, sphere, none, {indices}, {elements})");
    return {};
  }
  try {
    if (j.is_object() && j.contains("indices")) return VertexSet::of_indices(j["indices"].get<std::vector<int>>());
    if (j.is_object() && j.contains("elements"))
      return VertexSet::of_elements(j["elements"].get<std::vector<std::vector<int>>>());
    if (j.is_array()) return VertexSet::of_elements(j.get<std::vector<std::vector<int>>>());
  } catch (const json::exception&) {
    is.add(path, "malformed vertex list");
    return {};
  }
  is.add(path, "expected a vertex set descriptor");
  return {};
}

SolveOptions options_from_json(const json& j, const std::string& path, Issues& is, SolveOptions o) {
  if (j.is_null()) return o;
  if (!j.is_object()) {
    is.add(path, "expected an object");
    return o;
  }
  static const std::vector<std::string> known{"max_iters", "tol", "step_rule", "seed", "restarts", "step_scale",
                                              "target", "polish_max_params", "polish_max_iters"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end()) is.add(join(path, it.key()), "unknown option");
  o.max_iters = integer_at(j, "max_iters", path, is, o.max_iters);
  o.tol = number_at(j, "tol", path, is, o.tol);
  if (const json* s = field(j, "step_rule", path, is, false)) {
    try {
      o.step_rule = step_rule_from_string(s->is_string() ? s->get<std::string>() : "");
    } catch (const ValidationError& e) {
      is.add(join(path, "step_rule"), e.what());
    }
  }
  if (const json* s = field(j, "seed", path, is, false)) {
    if (s->is_number_unsigned() || (s->is_number_integer() && s->get<long long>() >= 0))
      o.seed = s->get<std::uint64_t>();
    else
      is.add(join(path, "seed"), "expected a nonnegative integer");
  }
  o.restarts = integer_at(j, "restarts", path, is, o.restarts);
  o.step_scale = number_at(j, "step_scale", path, is, o.step_scale);
  if (j.contains("target")) o.target = number_at(j, "target", path, is, 0.0);
  o.polish_max_params = integer_at(j, "polish_max_params", path, is, o.polish_max_params);
  o.polish_max_iters = integer_at(j, "polish_max_iters", path, is, o.polish_max_iters);
  try {
    o.validate();
  } catch (const ValidationError& e) {
    is.add(path, e.what());
  }
  return o;
}

json to_json(const SolveOptions& o) {
  json j{{"max_iters", o.max_iters},
         {"tol", o.tol},
         {"step_rule", to_string(o.step_rule)},
         {"seed", o.seed},
         {"restarts", o.restarts},
         {"step_scale", o.step_scale},
         {"polish_max_params", o.polish_max_params},
         {"polish_max_iters", o.polish_max_iters}};
  if (o.target) j["target"] = *o.target;
  return j;
}

MultiplicityModel model_from_json(const json& j, const std::string& path, Issues& is) {
  MultiplicityModel m;
  if (!j.is_object()) {
    is.add(path, "expected an object");
    return m;
  }
  m.name = j.value("name", std::string());
  const std::string kind = j.value("kind", std::string("step"));
  m.n = integer_at(j, "n", path, is, 1);
  try {
    if (kind == "step") {
      m.kind = MultiplicityModel::Kind::step;
      if (const json* c = field(j, "cells", path, is)) m.cells = c->get<std::vector<int>>();
      if (const json* c = field(j, "multiplicity", path, is)) m.multiplicity = c->get<std::vector<int>>();
    } else if (kind == "cantor") {
      m.kind = MultiplicityModel::Kind::cantor;
      m.ratio = number_at(j, "ratio", path, is, m.ratio);
      m.pieces = integer_at(j, "pieces", path, is, m.pieces);
    } else {
      is.add(join(path, "kind"), "unknown model kind (allowed: step, cantor)");
      return m;
    }
  } catch (const json::exception&) {
    is.add(path, "malformed integer array");
    return m;
  }
  if (m.name.empty()) m.name = kind;
  try {
    m.validate();
  } catch (const ValidationError& e) {
    is.add(path, e.what());
  }
  return m;
}

json to_json(const FeasibilityResiduals& r) {
  return {{"ap_minus_p", r.ap_minus_p}, {"aq", r.aq}, {"below_zero", r.below_zero}, {"above_one", r.above_one}};
}

json to_json(const ExtrapolationResult& e) {
  return {{"available", e.available},
          {"limit", e.limit},
          {"exponent", e.exponent},
          {"amplitude", e.amplitude},
          {"residual", e.residual},
          {"loglog_exponent", e.loglog_exponent},
          {"loglog_r2", e.loglog_r2},
          {"note", e.note}};
}

json to_json(const SolveReport& r, bool with_minimizer) {
  json j{{"value_upper", r.value_upper},
         {"converged", r.converged},
         {"iters", r.iters},
         {"method", r.method},
         {"best_restart", r.best_restart},
         {"restart_values", r.restart_values},
         {"feasibility_residuals", to_json(r.residuals)}};
  j["value_lower"] = r.value_lower ? json(*r.value_lower) : json(nullptr);
  if (with_minimizer) j["minimizer"] = matrix_to_json(r.minimizer);
  return j;
}

json to_json(const GraphCapacityReport& r, const CayleyBall& ball) {
  json u = json::array();
  for (int v = 0; v < ball.vertex_count(); ++v) u.push_back({{"vertex", ball.label(v)}, {"u", r.u[static_cast<std::size_t>(v)]}});
  json j{{"value", r.value},
         {"converged", r.converged},
         {"empty_inner_plate", r.empty_inner_plate},
         {"iters", r.iters},
         {"method", r.method},
         {"per_generator", r.per_generator},
         {"n_vertices", ball.vertex_count()},
         {"potential", u}};
  j["lower_bound"] = r.lower_bound ? json(*r.lower_bound) : json(nullptr);
  return j;
}

json to_json(const TransferReport& r) {
  return {{"cap_value", r.cap_value},
          {"k_value", r.k_value},
          {"gap", r.gap},
          {"inequality_holds", r.inequality_holds},
          {"k_at_multiplication", r.k_at_multiplication},
          {"cap_converged", r.cap.converged},
          {"k_converged", r.k.converged},
          {"k_report", to_json(r.k, false)}};
}

json to_json(const ThetaReport& r) {
  json flags = r.flags;
  return {{"theta", matrix_to_json(r.Theta)},
          {"P1", matrix_to_json(r.P1)},
          {"Q1", matrix_to_json(r.Q1)},
          {"P1_rank", r.p1_rank},
          {"Q1_rank", r.q1_rank},
          {"compression_eigs",
           {{"I-P-Q1", vec_to_json(r.first_eigs)},
            {"I-P1-Q", vec_to_json(r.second_eigs)},
            {"I-P1-Q1", vec_to_json(r.third_eigs)}}},
          {"first_max", r.first_max},
          {"second_min", r.second_min},
          {"third_radius", r.third_radius},
          {"eps1", r.eps1},
          {"delta", r.delta},
          {"theta_opnorm", r.theta_opnorm},
          {"relations",
           {{"XP1-P1", r.xp1_residual}, {"XQ1", r.xq1_residual}, {"P1P-P", r.p_in_p1}, {"Q1Q-Q", r.q_in_q1},
            {"P1Q1", r.p1q1}}},
          {"conditions_pass", r.conditions_pass},
          {"reversed_conditions_pass", r.reversed_conditions_pass},
          {"boundary_ambiguous", r.boundary_ambiguous},
          {"flags", flags}};
}

json to_json(const UniquenessReport& r) {
  json pairs = json::array();
  for (const auto& p : r.pairs)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"commutator_distance", p.commutator_distance},
                     {"operator_distance", p.operator_distance}});
  json conv = json::array();
  for (bool c : r.converged) conv.push_back(c);
  return {{"values", r.values},
          {"converged", conv},
          {"pairs", pairs},
          {"max_commutator_distance", r.max_commutator_distance},
          {"max_operator_distance", r.max_operator_distance},
          {"scale", r.scale},
          {"excluded", r.excluded}};
}

json to_json(const ParabolicityReport& r) {
  json conv = json::array();
  for (bool c : r.converged) conv.push_back(c);
  return {{"radii", r.radii},
          {"n_vertices", r.vertex_counts},
          {"values", r.values},
          {"converged", conv},
          {"monotone", r.monotone},
          {"classification", r.classification},
          {"fit", to_json(r.fit)},
          {"warnings", r.warnings}};
}

json to_json(const SweepReport& s) {
  json conv = json::array();
  for (bool c : s.converged) conv.push_back(c);
  json reports = json::array();
  for (const auto& r : s.reports) reports.push_back(to_json(r, false));
  return {{"scales", s.scales},
          {"values", s.values},
          {"converged", conv},
          {"extrapolation", to_json(s.extrapolation)},
          {"reports", reports}};
}

}  // namespace qcmod::io
