#pragma once

// JSON schemas shared by the CLI: readers collect every problem they find
// (with its JSON path) instead of stopping at the first one.

#include <string>
#include <vector>

#include "json.hpp"
#include "qcmod/cayley_capacity.hpp"
#include "qcmod/condenser_solver.hpp"
#include "qcmod/experiments.hpp"
#include "qcmod/plaplace.hpp"

namespace qcmod::io {

using json = nlohmann::json;

struct Issues {
  std::vector<std::string> items;
  void add(const std::string& path, const std::string& msg) { items.push_back(path + ": " + msg); }
  bool ok() const { return items.empty(); }
};

/// Child lookup; records "missing" when required and absent.
const json* field(const json& j, const std::string& key, const std::string& path, Issues& is, bool required = true);

double number_at(const json& j, const std::string& key, const std::string& path, Issues& is, double fallback,
                 bool required = false);
int integer_at(const json& j, const std::string& key, const std::string& path, Issues& is, int fallback,
               bool required = false);

NormSpec norm_from_json(const json& j, const std::string& path, Issues& is);
/// A single spec or an array of specs.
std::vector<NormSpec> norms_from_json(const json& j, const std::string& path, Issues& is);
json to_json(const NormSpec& s);

/// {"dim": d | [rows, cols], "re": [[...]], "im": [[...]]} or a bare nested array (real).
Mat matrix_from_json(const json& j, const std::string& path, Issues& is);
json matrix_to_json(const Mat& M);

/// A matrix, or {"basis_indices": [...]}.
ProjectionSource projection_from_json(const json& j, const std::string& path, Issues& is);

/// {"components": [matrix...], "selfadjoint": [bool...]}
OperatorTuple tuple_from_json(const json& j, const std::string& path, Issues& is);

/// {"kind":"Z^d","d":int} | {"kind":"free","k":int} | {"kind":"custom","tables":[[...]]}
GroupSpec group_from_json(const json& j, const std::string& path, Issues& is);
json to_json(const GroupSpec& g);

/// "origin" | "sphere" | "none" | {"indices": [...]} | {"elements": [[...]]}
VertexSet vertex_set_from_json(const json& j, const std::string& path, Issues& is);

SolveOptions options_from_json(const json& j, const std::string& path, Issues& is, SolveOptions base = {});
json to_json(const SolveOptions& o);

MultiplicityModel model_from_json(const json& j, const std::string& path, Issues& is);

json to_json(const FeasibilityResiduals& r);
json to_json(const ExtrapolationResult& e);
/// Report body without timing fields, so equal inputs give equal bytes.
json to_json(const SolveReport& r, bool with_minimizer = true);
json to_json(const GraphCapacityReport& r, const CayleyBall& ball);
json to_json(const TransferReport& r);
json to_json(const ThetaReport& r);
json to_json(const UniquenessReport& r);
json to_json(const ParabolicityReport& r);
json to_json(const SweepReport& s);

}  // namespace qcmod::io
