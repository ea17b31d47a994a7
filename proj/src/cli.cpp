#include "qcmod/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "qcmod/json_io.hpp"
#include "qcmod/kernels.hpp"

namespace qcmod::cli {

using json = nlohmann::json;
using io::Issues;

namespace {

const std::vector<std::pair<Command, std::string>> kCommands{
    {Command::norm, "norm"},         {Command::condenser, "condenser"}, {Command::graphcap, "graphcap"},
    {Command::transfer, "transfer"}, {Command::plaplace, "plaplace"},   {Command::experiment, "experiment"}};

}  // namespace

std::string to_string(Command c) {
  for (const auto& [k, s] : kCommands)
    if (k == c) return s;
  return "?";
}

std::optional<Command> command_from_string(const std::string& s) {
  for (const auto& [k, name] : kCommands)
    if (name == s) return k;
  return std::nullopt;
}

std::string allowed_commands() {
  std::string s;
  for (const auto& [k, name] : kCommands) s += (s.empty() ? "" : ", ") + name;
  return s;
}

ConfigError::ConfigError(std::vector<std::string> errors)
    : ValidationError([&] {
        std::string s = "invalid config:";
        for (const auto& e : errors) s += "\n  " + e;
        return s;
      }()),
      errors_(std::move(errors)) {}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit_series(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  auto cell = [](const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  auto line = [&](const std::vector<std::string>& r) {
    for (std::size_t i = 0; i < r.size(); ++i) f << (i ? "," : "") << cell(r[i]);
    f << '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
}

namespace {

// ---- typed payloads -------------------------------------------------------

struct NormJob {
  std::vector<double> s;
  std::optional<Mat> matrix;
  MatrixHint hint = MatrixHint::general;
  NormSpec spec;
};

NormJob parse_norm(const json& p, Issues& is) {
  NormJob j;
  const bool has_s = p.is_object() && p.contains("s"), has_m = p.is_object() && p.contains("matrix");
  if (has_s == has_m) is.add("payload", "exactly one of 's' or 'matrix' is required");
  if (has_s) {
    const json& s = p["s"];
    if (!s.is_array()) {
      is.add("payload.s", "expected an array of numbers");
    } else {
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (!s[i].is_number())
          is.add("payload.s[" + std::to_string(i) + "]", "expected a number");
        else
          j.s.push_back(s[i].get<double>());
      }
    }
  }
  if (has_m) j.matrix = io::matrix_from_json(p["matrix"], "payload.matrix", is);
  if (p.is_object() && p.contains("hint")) {
    const std::string h = p["hint"].is_string() ? p["hint"].get<std::string>() : "";
    if (h == "general")
      j.hint = MatrixHint::general;
    else if (h == "selfadjoint")
      j.hint = MatrixHint::selfadjoint;
    else if (h == "skew_hermitian")
      j.hint = MatrixHint::skew_hermitian;
    else
      is.add("payload.hint", "allowed: general, selfadjoint, skew_hermitian");
  }
  if (const json* n = io::field(p, "norm", "payload", is)) j.spec = io::norm_from_json(*n, "payload.norm", is);
  return j;
}

struct CondenserJob {
  OperatorTuple tau;
  std::optional<Condenser> condenser;
  std::vector<ProjectionSource> P_family;
  ProjectionSource Q;
  std::vector<NormSpec> specs;
  SolveOptions opts;
  double p = 2.0;
  int uniqueness_trials = 0;
  ElTolerances el;
};

SolveOptions apply_overrides(SolveOptions o, const RunConfig& cfg, bool seed_from_cfg) {
  if (seed_from_cfg) o.seed = cfg.seed;
  if (cfg.tol) o.tol = *cfg.tol;
  if (cfg.max_iters) o.max_iters = *cfg.max_iters;
  return o;
}

CondenserJob parse_condenser(const json& p, Issues& is, bool smooth) {
  CondenserJob j;
  if (const json* t = io::field(p, "tuple", "payload", is)) j.tau = io::tuple_from_json(*t, "payload.tuple", is);
  const json* Pj = io::field(p, "P", "payload", is, !(p.is_object() && p.contains("P_family")));
  const json* Qj = io::field(p, "Q", "payload", is);
  ProjectionSource P;
  if (Pj) P = io::projection_from_json(*Pj, "payload.P", is);
  if (Qj) j.Q = io::projection_from_json(*Qj, "payload.Q", is);
  if (p.is_object() && p.contains("P_family")) {
    const json& f = p["P_family"];
    if (!f.is_array()) {
      is.add("payload.P_family", "expected an array of projections");
    } else {
      for (std::size_t i = 0; i < f.size(); ++i)
        j.P_family.push_back(io::projection_from_json(f[i], "payload.P_family[" + std::to_string(i) + "]", is));
    }
  }
  if (!smooth) {
    if (const json* n = io::field(p, "norm", "payload", is)) {
      j.specs = io::norms_from_json(*n, "payload.norm", is);
      if (is.ok() && j.specs.size() != 1 && static_cast<int>(j.specs.size()) != j.tau.size())
        is.add("payload.norm", "expected 1 spec or one per tuple component");
    }
  } else {
    j.p = io::number_at(p, "p", "payload", is, 2.0, true);
    if (!(j.p >= 2.0) || !std::isfinite(j.p)) is.add("payload.p", "must satisfy 2 <= p < inf");
    if (p.is_object() && p.contains("smooth") && !(p["smooth"].is_boolean() && p["smooth"].get<bool>()))
      is.add("payload.smooth", "must be true when present");
    j.uniqueness_trials = io::integer_at(p, "uniqueness_trials", "payload", is, 0);
    if (j.uniqueness_trials == 1 || j.uniqueness_trials < 0) is.add("payload.uniqueness_trials", "must be 0 or >= 2");
    if (p.is_object() && p.contains("el")) {
      j.el.eps1 = io::number_at(p["el"], "eps1", "payload.el", is, j.el.eps1);
      j.el.delta_rel = io::number_at(p["el"], "delta_rel", "payload.el", is, j.el.delta_rel);
    }
    if (is.ok() && !j.tau.all_selfadjoint()) is.add("payload.tuple.selfadjoint", "all components must be selfadjoint");
  }
  j.opts = io::options_from_json(p.is_object() && p.contains("options") ? p["options"] : json(), "payload.options", is);
  if (is.ok() && Pj) {
    try {
      j.condenser = Condenser::make(j.tau.dim(), P, j.Q);
    } catch (const ValidationError& e) {
      is.add("payload.P/Q", e.what());
    }
  }
  if (is.ok()) {
    for (std::size_t i = 0; i < j.P_family.size(); ++i) {
      try {
        Condenser::make(j.tau.dim(), j.P_family[i], j.Q);
      } catch (const ValidationError& e) {
        is.add("payload.P_family[" + std::to_string(i) + "]", e.what());
      }
    }
  }
  return j;
}

struct GraphJob {
  GroupSpec group;
  int R = 0;
  VertexSet x1, x2;
  NormSpec spec;
  GraphSolveOptions opts;
  std::vector<int> radii;
  std::optional<CayleyBall> ball;
};

GraphJob parse_graph(const json& p, Issues& is, bool transfer) {
  GraphJob j;
  if (const json* g = io::field(p, "group", "payload", is)) j.group = io::group_from_json(*g, "payload.group", is);
  const bool scan = p.is_object() && p.contains("radii");
  if (scan && !transfer) {
    try {
      j.radii = p["radii"].get<std::vector<int>>();
    } catch (const json::exception&) {
      is.add("payload.radii", "expected an array of integers");
    }
    if (j.radii.size() < 3) is.add("payload.radii", "need at least 3 radii");
    for (std::size_t i = 1; i < j.radii.size(); ++i)
      if (j.radii[i] <= j.radii[i - 1]) is.add("payload.radii", "must be increasing");
  } else {
    j.R = io::integer_at(p, "R", "payload", is, 0, true);
    if (j.R < 0) is.add("payload.R", "must be >= 0");
  }
  j.x1 = io::vertex_set_from_json(p.is_object() && p.contains("x1") ? p["x1"] : json("origin"), "payload.x1", is);
  j.x2 = io::vertex_set_from_json(p.is_object() && p.contains("x2") ? p["x2"] : json(), "payload.x2", is);
  if (const json* n = io::field(p, "norm", "payload", is)) j.spec = io::norm_from_json(*n, "payload.norm", is);
  if (scan && is.ok() && j.spec.kind != NormKind::schatten) is.add("payload.norm", "a radius scan needs a schatten norm");
  j.opts.base =
      io::options_from_json(p.is_object() && p.contains("options") ? p["options"] : json(), "payload.options", is);
  if (p.is_object() && p.contains("exact_quadratic")) {
    if (!p["exact_quadratic"].is_boolean())
      is.add("payload.exact_quadratic", "expected a boolean");
    else
      j.opts.exact_quadratic = p["exact_quadratic"].get<bool>();
  }
  if (is.ok() && !scan) {
    try {
      j.ball = build_ball(j.group, j.R, j.x1, j.x2);
    } catch (const ValidationError& e) {
      is.add("payload", e.what());
    }
  }
  return j;
}

struct ExperimentJob {
  std::string kind;
  std::vector<TimeFreqModel> schedule;
  std::vector<RatioModel> models;
  std::vector<std::vector<double>> exponent_sets;
  std::vector<int> resolutions;
  CutRule cut;
  Extrapolation method = Extrapolation::power_fit;
  SolveOptions opts;
};

ExperimentJob parse_experiment(const json& p, Issues& is) {
  ExperimentJob j;
  const json* e = io::field(p, "experiment", "payload", is);
  if (e) {
    j.kind = e->is_string() ? e->get<std::string>() : "";
    if (j.kind != "gamma1" && j.kind != "ratio" && j.kind != "hybrid")
      is.add("payload.experiment", "allowed: gamma1, ratio, hybrid");
  }
  SolveOptions base;
  base.restarts = 1;
  base.max_iters = 2000;
  j.opts = io::options_from_json(p.is_object() && p.contains("options") ? p["options"] : json(), "payload.options", is,
                                 base);
  const json sched = p.is_object() && p.contains("schedule") ? p["schedule"] : json::object();
  if (sched.contains("extrapolation")) {
    try {
      j.method = extrapolation_from_string(sched["extrapolation"].is_string() ? sched["extrapolation"].get<std::string>() : "");
    } catch (const ValidationError& ex) {
      is.add("payload.schedule.extrapolation", ex.what());
    }
  }
  try {
    if (j.kind == "gamma1") {
      const std::vector<int> N = sched.value("N", std::vector<int>{64, 128, 256});
      j.schedule = default_gamma1_schedule(N);
      if (sched.contains("M") || sched.contains("K")) {
        const std::vector<int> M = sched.value("M", std::vector<int>{});
        const std::vector<int> K = sched.value("K", std::vector<int>{});
        for (std::size_t i = 0; i < j.schedule.size(); ++i) {
          if (!M.empty()) j.schedule[i].M = i < M.size() ? M[i] : -1;
          if (!K.empty()) j.schedule[i].K = i < K.size() ? K[i] : -1;
          j.schedule[i].validate();
        }
      }
    } else if (!j.kind.empty()) {
      j.resolutions = sched.value("resolutions", std::vector<int>{4, 6, 8});
      j.cut.m_exponent = sched.value("m_exponent", j.cut.m_exponent);
      j.cut.k_fraction = sched.value("k_fraction", j.cut.k_fraction);
      const json* ms = io::field(p, "models", "payload", is);
      if (ms && ms->is_array()) {
        for (std::size_t i = 0; i < ms->size(); ++i) {
          const std::string path = "payload.models[" + std::to_string(i) + "]";
          RatioModel rm;
          rm.model = io::model_from_json((*ms)[i], path, is);
          if ((*ms)[i].contains("specs")) rm.specs = io::norms_from_json((*ms)[i]["specs"], path + ".specs", is);
          rm.power = (*ms)[i].value("power", 0.0);
          j.models.push_back(std::move(rm));
        }
      } else if (ms) {
        is.add("payload.models", "expected an array");
      }
      if (j.kind == "ratio" && j.models.size() < 2) is.add("payload.models", "ratio experiment needs at least 2 models");
      if (j.kind == "hybrid") {
        if (j.models.size() != 1) is.add("payload.models", "hybrid scan takes exactly one model");
        if (const json* es = io::field(p, "exponent_sets", "payload", is))
          j.exponent_sets = es->get<std::vector<std::vector<double>>>();
        for (std::size_t i = 0; i < j.exponent_sets.size() && !j.models.empty(); ++i) {
          double s = 0.0;
          bool ok = static_cast<int>(j.exponent_sets[i].size()) == j.models[0].model.n;
          for (double q : j.exponent_sets[i]) {
            ok = ok && q > 1.0;
            s += 1.0 / q;
          }
          if (!ok || std::abs(s - 1.0) > 1e-12)
            is.add("payload.exponent_sets[" + std::to_string(i) + "]", "need n exponents > 1 with sum 1/p_j = 1");
        }
      }
    }
  } catch (const json::exception& ex) {
    is.add("payload", std::string("malformed field: ") + ex.what());
  } catch (const ValidationError& ex) {
    is.add("payload.schedule", ex.what());
  }
  return j;
}

void validate_payload(Command c, const json& p, Issues& is) {
  if (!p.is_object()) {
    is.add("payload", "expected an object");
    return;
  }
  switch (c) {
    case Command::norm: parse_norm(p, is); break;
    case Command::condenser: parse_condenser(p, is, false); break;
    case Command::plaplace: parse_condenser(p, is, true); break;
    case Command::graphcap: parse_graph(p, is, false); break;
    case Command::transfer: parse_graph(p, is, true); break;
    case Command::experiment: parse_experiment(p, is); break;
  }
}

// ---- output helpers ----------------------------------------------------------

struct Output {
  const RunConfig& cfg;
  json report;
  bool all_converged = true;

  std::string path(const std::string& name) const { return (std::filesystem::path(cfg.out_dir) / name).string(); }

  void history(const std::string& name, const std::vector<double>& values, const std::vector<double>& steps) {
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < values.size(); ++i)
      rows.push_back({std::to_string(i), format_double(values[i]), i < steps.size() ? format_double(steps[i]) : ""});
    emit_series(path(name), {"iter", "objective", "step"}, rows);
  }

  void sweep(const std::string& name, const SweepReport& s) {
    std::vector<std::vector<std::string>> rows;
    const auto& e = s.extrapolation;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      const std::string fit = e.available ? format_double(e.limit + e.amplitude * std::pow(s.scales[i], e.exponent)) : "";
      rows.push_back({format_double(s.scales[i]), format_double(s.values[i]), s.converged[i] ? "true" : "false", fit});
    }
    emit_series(path(name), {"scale", "value", "converged", "extrapolated"}, rows);
  }
};

json manifest_block(const RunConfig& cfg, const SolveOptions& o) {
  return {{"command", to_string(cfg.command)}, {"seed", o.seed}, {"tol", o.tol}, {"max_iters", o.max_iters},
          {"version", kVersion}};
}

void run_norm(const RunConfig& cfg, Output& out, std::ostream& os) {
  Issues is;
  const NormJob j = parse_norm(cfg.payload, is);
  const double v = j.matrix ? matrix_norm(*j.matrix, j.spec, j.hint) : vector_norm(j.s, j.spec);
  out.report["value"] = v;
  out.report["norm"] = io::to_json(j.spec);
  os << format_double(v) << "\n";
}

void run_condenser(const RunConfig& cfg, Output& out, std::ostream& os, SolveOptions& used) {
  Issues is;
  CondenserJob j = parse_condenser(cfg.payload, is, false);
  used = j.opts = apply_overrides(j.opts, cfg, true);
  if (!j.P_family.empty()) {
    const ScanReport scan = sup_over_projections(j.tau, j.P_family, j.Q, j.specs, j.opts);
    json entries = json::array();
    for (std::size_t i = 0; i < scan.entries.size(); ++i) {
      entries.push_back(io::to_json(scan.entries[i], false));
      out.all_converged = out.all_converged && scan.entries[i].converged;
    }
    out.report["sup"] = scan.sup;
    out.report["monotone"] = scan.monotone;
    out.report["entries"] = entries;
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < scan.entries.size(); ++i)
      rows.push_back({std::to_string(i), format_double(scan.entries[i].value_upper),
                      scan.entries[i].converged ? "true" : "false"});
    emit_series(out.path("series.csv"), {"index", "value", "converged"}, rows);
    out.report["series_csv"] = "series.csv";
    os << "sup " << format_double(scan.sup) << "\n";
  }
  if (j.condenser) {
    const SolveReport r = solve_condenser(j.tau, *j.condenser, j.specs, j.opts);
    json body = io::to_json(r, true);
    for (auto it = body.begin(); it != body.end(); ++it) out.report[it.key()] = it.value();
    out.report["history_csv"] = "history.csv";
    out.history("history.csv", r.history, r.steps);
    out.all_converged = out.all_converged && r.converged;
    os << "value_upper " << format_double(r.value_upper) << (r.converged ? "" : " (not converged)") << "\n";
  }
}

void run_plaplace(const RunConfig& cfg, Output& out, std::ostream& os, SolveOptions& used) {
  Issues is;
  CondenserJob j = parse_condenser(cfg.payload, is, true);
  used = j.opts = apply_overrides(j.opts, cfg, true);
  const SmoothProblem prob{j.tau, *j.condenser, j.p};
  const SolveReport r = minimize_smooth(prob, j.opts);
  out.report["value"] = r.value_upper;
  json body = io::to_json(r, true);
  for (auto it = body.begin(); it != body.end(); ++it) out.report[it.key()] = it.value();
  out.report["p"] = j.p;
  out.report["history_csv"] = "history.csv";
  out.history("history.csv", r.history, r.steps);
  out.report["theta_report"] = io::to_json(euler_lagrange_report(prob, r.minimizer, j.el));
  out.all_converged = r.converged;
  if (j.uniqueness_trials >= 2) {
    const UniquenessReport u = uniqueness_probe(prob, j.opts, j.uniqueness_trials);
    out.report["uniqueness"] = io::to_json(u);
    out.all_converged = out.all_converged && u.excluded.empty();
  }
  os << "value " << format_double(r.value_upper) << (r.converged ? "" : " (not converged)") << "\n";
}

void run_graph(const RunConfig& cfg, Output& out, std::ostream& os, SolveOptions& used) {
  Issues is;
  GraphJob j = parse_graph(cfg.payload, is, cfg.command == Command::transfer);
  used = j.opts.base = apply_overrides(j.opts.base, cfg, true);
  out.report["group"] = io::to_json(j.group);
  out.report["norm"] = io::to_json(j.spec);
  if (cfg.command == Command::transfer) {
    const TransferReport t = verify_transfer(*j.ball, j.spec, j.opts);
    json body = io::to_json(t);
    for (auto it = body.begin(); it != body.end(); ++it) out.report[it.key()] = it.value();
    out.report["R"] = j.R;
    out.all_converged = t.cap.converged && t.k.converged;
    out.history("history.csv", t.k.history, t.k.steps);
    out.report["history_csv"] = "history.csv";
    os << "cap " << format_double(t.cap_value) << " k " << format_double(t.k_value) << " gap "
       << format_double(t.gap) << "\n";
    return;
  }
  if (!j.radii.empty()) {
    const ParabolicityReport pr = parabolicity_scan(j.group, j.spec.p, j.x1, j.radii, j.opts);
    json body = io::to_json(pr);
    for (auto it = body.begin(); it != body.end(); ++it) out.report[it.key()] = it.value();
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < pr.radii.size(); ++i) {
      rows.push_back({std::to_string(pr.radii[i]), std::to_string(pr.vertex_counts[i]), format_double(pr.values[i]),
                      pr.converged[i] ? "true" : "false"});
      out.all_converged = out.all_converged && pr.converged[i];
    }
    emit_series(out.path("series.csv"), {"R", "n_vertices", "value", "converged"}, rows);
    out.report["series_csv"] = "series.csv";
    os << "classification " << pr.classification << "\n";
    return;
  }
  const GraphCapacityReport r = graph_capacity(*j.ball, j.spec, j.opts);
  json body = io::to_json(r, *j.ball);
  for (auto it = body.begin(); it != body.end(); ++it) out.report[it.key()] = it.value();
  out.report["R"] = j.R;
  out.report["history_csv"] = "history.csv";
  out.history("history.csv", r.history, {});
  out.all_converged = r.converged;
  os << "value " << format_double(r.value) << (r.converged ? "" : " (not converged)") << "\n";
}

void run_experiment(const RunConfig& cfg, Output& out, std::ostream& os, SolveOptions& used) {
  Issues is;
  ExperimentJob j = parse_experiment(cfg.payload, is);
  used = j.opts = apply_overrides(j.opts, cfg, true);
  out.report["experiment"] = j.kind;
  out.report["label"] = "SOFT";
  if (j.kind == "gamma1") {
    const Gamma1Report g = gamma1_experiment(j.schedule, j.opts, j.method);
    out.report["sweep"] = io::to_json(g.sweep);
    out.report["estimate"] = g.estimate;
    out.report["reference"] = g.reference;
    out.report["ratio"] = g.ratio;
    out.report["monotone"] = g.monotone;
    out.report["notes"] = g.notes;
    json sched = json::array();
    for (const auto& m : j.schedule) sched.push_back({{"N", m.N}, {"M", m.M}, {"K", m.K}});
    out.report["schedule"] = sched;
    out.sweep("series.csv", g.sweep);
    out.report["series_csv"] = "series.csv";
    for (bool c : g.sweep.converged) out.all_converged = out.all_converged && c;
    os << "estimate " << format_double(g.estimate) << " ratio " << format_double(g.ratio) << "\n";
  } else if (j.kind == "ratio") {
    const RatioReport r = ratio_experiment(j.models, j.resolutions, j.opts, j.cut, j.method);
    json rows = json::array();
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
      const std::string name = "series_" + std::to_string(i) + ".csv";
      out.sweep(name, r.rows[i].sweep);
      rows.push_back({{"name", r.rows[i].name}, {"integral", r.rows[i].integral}, {"estimate", r.rows[i].estimate},
                      {"ratio", r.rows[i].ratio}, {"flagged", r.rows[i].flagged}, {"series_csv", name},
                      {"sweep", io::to_json(r.rows[i].sweep)}});
      out.all_converged = out.all_converged && !r.rows[i].flagged;
    }
    out.report["rows"] = rows;
    out.report["mean"] = r.mean;
    out.report["cv"] = r.cv;
    os << "cv " << format_double(r.cv) << "\n";
  } else {
    const HybridReport h = hybrid_exponent_scan(j.models[0].model, j.exponent_sets, j.resolutions, j.opts, j.cut, j.method);
    json rows = json::array();
    for (std::size_t i = 0; i < h.rows.size(); ++i) {
      const std::string name = "series_" + std::to_string(i) + ".csv";
      out.sweep(name, h.rows[i].sweep);
      rows.push_back({{"exponents", h.rows[i].exponents}, {"estimate", h.rows[i].estimate},
                      {"swapped_estimate", h.rows[i].swapped_estimate}, {"symmetric_gap", h.rows[i].symmetric_gap},
                      {"series_csv", name}, {"sweep", io::to_json(h.rows[i].sweep)}});
      for (bool c : h.rows[i].sweep.converged) out.all_converged = out.all_converged && c;
    }
    out.report["rows"] = rows;
    os << "rows " << h.rows.size() << "\n";
  }
}

}  // namespace

RunConfig parse_config(const json& doc, std::optional<Command> command) {
  std::vector<std::string> errors;
  RunConfig cfg;
  json payload = doc;
  if (doc.is_object() && doc.contains("command")) {
    const json& c = doc["command"];
    const auto parsed = c.is_string() ? command_from_string(c.get<std::string>()) : std::nullopt;
    if (!parsed) {
      errors.push_back("command: unknown command (allowed: " + allowed_commands() + ")");
    } else if (command && *command != *parsed) {
      errors.push_back("command: config says '" + to_string(*parsed) + "' but '" + to_string(*command) + "' was requested");
    } else {
      command = parsed;
    }
    if (!doc.contains("payload"))
      errors.push_back("payload: missing required field");
    else
      payload = doc["payload"];
    if (doc.contains("out_dir")) {
      if (doc["out_dir"].is_string())
        cfg.out_dir = doc["out_dir"].get<std::string>();
      else
        errors.push_back("out_dir: expected a string");
    }
    if (doc.contains("seed")) {
      if (doc["seed"].is_number_integer() && doc["seed"].get<long long>() >= 0)
        cfg.seed = doc["seed"].get<std::uint64_t>();
      else
        errors.push_back("seed: expected a nonnegative integer");
    }
    if (doc.contains("tol")) {
      if (doc["tol"].is_number() && doc["tol"].get<double>() > 0)
        cfg.tol = doc["tol"].get<double>();
      else
        errors.push_back("tol: expected a positive number");
    }
  } else if (!command) {
    errors.push_back("command: missing (allowed: " + allowed_commands() + ")");
  }
  if (command) {
    cfg.command = *command;
    Issues is;
    validate_payload(*command, payload, is);
    errors.insert(errors.end(), is.items.begin(), is.items.end());
    // a seed inside the payload options is the default run seed
    if (!doc.contains("seed") && payload.is_object() && payload.contains("options") &&
        payload["options"].is_object() && payload["options"].contains("seed") &&
        payload["options"]["seed"].is_number_unsigned())
      cfg.seed = payload["options"]["seed"].get<std::uint64_t>();
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  cfg.payload = std::move(payload);
  return cfg;
}

RunConfig parse_config_text(const std::string& text, std::optional<Command> command) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("<root>: malformed JSON: ") + e.what()});
  }
  return parse_config(doc, command);
}

int dispatch(const RunConfig& cfg, std::ostream& os) {
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir);
  Output out{cfg, json::object()};
  SolveOptions used = apply_overrides(SolveOptions{}, cfg, true);
  int code = 0;
  try {
    switch (cfg.command) {
      case Command::norm: run_norm(cfg, out, os); break;
      case Command::condenser: run_condenser(cfg, out, os, used); break;
      case Command::plaplace: run_plaplace(cfg, out, os, used); break;
      case Command::graphcap:
      case Command::transfer: run_graph(cfg, out, os, used); break;
      case Command::experiment: run_experiment(cfg, out, os, used); break;
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    out.report["error"] = e.what();
    code = 4;
  }
  out.report["command"] = to_string(cfg.command);
  out.report["converged_all"] = out.all_converged;
  out.report["manifest"] = manifest_block(cfg, used);
  {
    std::ofstream f(out.path(cfg.report_name), std::ios::binary);
    f << out.report.dump(2) << '\n';
  }
  json manifest = manifest_block(cfg, used);
  manifest["wall_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  manifest["threads"] = kernels::configure_threads_from_env();
  manifest["report"] = cfg.report_name;
  {
    std::ofstream f(out.path("manifest.json"), std::ios::binary);
    f << manifest.dump(2) << '\n';
  }
  if (code == 0 && cfg.strict && !out.all_converged) {
    std::cerr << "strict: a solve did not converge\n";
    code = 3;
  }
  return code;
}

int run(int argc, char** argv) {
  CLI::App app{"qcmod: condenser quasicentral modulus, Cayley graph capacities and the p-Laplace problem"};
  app.set_version_flag("--version", kVersion);
  std::string command, config_path, inline_json, out = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<int> max_iters;
  bool strict = false;
  std::string group, norm, x1, x2, radii;
  std::optional<int> R;
  std::vector<std::string> names;
  for (const auto& [k, s] : kCommands) names.push_back(s);
  app.add_option("command", command, "Subcommand")->required()->check(CLI::IsMember(names));
  auto* cfg_opt = app.add_option("--config", config_path, "Config file (JSON)")->check(CLI::ExistingFile);
  app.add_option("--inline", inline_json, "Inline JSON config")->excludes(cfg_opt);
  app.add_option("--out", out, "Output directory, or a path ending in .json for the report");
  app.add_option("--seed", seed, "Root seed");
  app.add_option("--tol", tol, "Relative tolerance override")->check(CLI::PositiveNumber);
  app.add_option("--max-iters", max_iters, "Iteration budget override")->check(CLI::PositiveNumber);
  app.add_flag("--strict", strict, "Exit 3 when any solve fails to converge");
  app.add_option("--group", group, "graphcap/transfer: group JSON");
  app.add_option("--R", R, "graphcap/transfer: ball radius");
  app.add_option("--x1", x1, "graphcap/transfer: inner plate (origin, sphere, none or JSON)");
  app.add_option("--x2", x2, "graphcap/transfer: outer plate");
  app.add_option("--norm", norm, "norm spec JSON");
  app.add_option("--radii", radii, "graphcap: JSON array of radii for a parabolicity scan");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    kernels::configure_threads_from_env();
    const Command cmd = *command_from_string(command);
    json doc = json::object();
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      std::stringstream ss;
      ss << f.rdbuf();
      try {
        doc = json::parse(ss.str());
      } catch (const json::parse_error& e) {
        throw ConfigError({std::string("<root>: malformed JSON: ") + e.what()});
      }
    } else if (!inline_json.empty()) {
      try {
        doc = json::parse(inline_json);
      } catch (const json::parse_error& e) {
        throw ConfigError({std::string("<root>: malformed JSON: ") + e.what()});
      }
    }
    // command-line fields fill or override the payload
    auto as_json = [](const std::string& s) {
      try {
        return json::parse(s);
      } catch (const json::parse_error&) {
        return json(s);
      }
    };
    json& payload = doc.contains("command") ? doc["payload"] : doc;
    if (!payload.is_object() && !payload.is_null()) throw ConfigError({"payload: expected an object"});
    if (!group.empty()) payload["group"] = as_json(group);
    if (R) payload["R"] = *R;
    if (!x1.empty()) payload["x1"] = as_json(x1);
    if (!x2.empty()) payload["x2"] = as_json(x2);
    if (!norm.empty()) payload["norm"] = as_json(norm);
    if (!radii.empty()) payload["radii"] = as_json(radii);

    RunConfig cfg = parse_config(doc, cmd);
    if (seed) cfg.seed = *seed;
    if (tol) cfg.tol = *tol;
    if (max_iters) cfg.max_iters = *max_iters;
    cfg.strict = strict;
    if (app.count("--out") || !doc.contains("out_dir")) {
      const std::filesystem::path p(out);
      if (p.extension() == ".json") {
        cfg.out_dir = p.has_parent_path() ? p.parent_path().string() : ".";
        cfg.report_name = p.filename().string();
      } else {
        cfg.out_dir = out;
      }
    }
    return dispatch(cfg, std::cout);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  }
}

}  // namespace qcmod::cli
