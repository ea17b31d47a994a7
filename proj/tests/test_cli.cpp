#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "qcmod/cli.hpp"
#include "qcmod/json_io.hpp"

using namespace qcmod;
using namespace qcmod::cli;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("qcmod_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

const char* kTridiag = R"({
  "tuple": {"components": [[[0,1,0],[1,0,1],[0,1,0]]], "selfadjoint": [true]},
  "P": {"basis_indices": [0]},
  "Q": {"basis_indices": [2]},
  "norm": {"kind": "schatten", "p": 2}
})";

int run_args(std::vector<std::string> args) {
  args.insert(args.begin(), "qcmod");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("parse examples") {
  const auto cfg = parse_config_text(R"({"command":"norm","payload":{"s":[3,4],"norm":{"kind":"schatten","p":2}}})");
  CHECK(cfg.command == Command::norm);

  try {
    parse_config_text(R"({"command":"norm","payload":{"s":[3,4]}})");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    REQUIRE(e.errors().size() == 1);
    CHECK(e.errors()[0].find("payload.norm") != std::string::npos);
  }

  try {
    parse_config_text(R"({"command":"frobnicate","payload":{}})");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.errors()[0].find("experiment") != std::string::npos);
  }

  try {
    parse_config_text(R"({"group":{"kind":"Z^d","d":0},"R":-1,"norm":{"kind":"schatten","p":0.5}})",
                      Command::graphcap);
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(e.errors().size() >= 3);
  }
  CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
}

TEST_CASE("norm spec JSON round trip is exact") {
  io::Issues is;
  for (const auto& s : {NormSpec::schatten(2.0 / 3 + 1), NormSpec::lorentz(1.1), NormSpec::macaev(),
                        NormSpec::from_weights({0.1 + 0.2, 1e-300})}) {
    const json j = json::parse(io::to_json(s).dump());
    CHECK(io::norm_from_json(j, "n", is) == s);
  }
  CHECK(is.ok());
}

TEST_CASE("series files") {
  const auto dir = scratch("series");
  fs::create_directories(dir);
  emit_series((dir / "a.csv").string(), {"iter", "objective", "step"}, {});
  CHECK(slurp(dir / "a.csv") == "iter,objective,step\n");
  emit_series((dir / "b.csv").string(), {"R", "value"},
              {{"1", format_double(0.1)}, {"2", format_double(1.0 / 3)}, {"3", "x,y"}});
  const std::string b = slurp(dir / "b.csv");
  CHECK(std::count(b.begin(), b.end(), '\n') == 4);
  CHECK(b.find("0.10000000000000001") != std::string::npos);
  CHECK(b.find("\"x,y\"") != std::string::npos);
  CHECK(std::stod(format_double(1.0 / 3)) == 1.0 / 3);
}

TEST_CASE("condenser dispatch writes reports deterministically") {
  const auto d1 = scratch("cond1"), d2 = scratch("cond2");
  for (const auto& d : {d1, d2}) {
    auto cfg = parse_config(json::parse(kTridiag), Command::condenser);
    cfg.out_dir = d.string();
    cfg.seed = 3;
    std::ostringstream os;
    CHECK(dispatch(cfg, os) == 0);
  }
  const json r = json::parse(slurp(d1 / "report.json"));
  CHECK(r["value_upper"].get<double>() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(r["manifest"]["seed"] == 3);
  CHECK(r["manifest"].contains("tol"));
  CHECK(r["manifest"].contains("version"));
  CHECK(r["history_csv"] == "history.csv");
  CHECK(slurp(d1 / "report.json") == slurp(d2 / "report.json"));
  CHECK(slurp(d1 / "history.csv").rfind("iter,objective,step\n", 0) == 0);
  CHECK(json::parse(slurp(d1 / "manifest.json")).contains("wall_time"));
}

TEST_CASE("command line runs") {
  const auto d = scratch("run");
  CHECK(run_args({"norm", "--inline", R"({"command":"norm","payload":{"s":[3,4],"norm":{"kind":"schatten","p":2}}})",
                  "--out", d.string()}) == 0);
  CHECK(json::parse(slurp(d / "report.json"))["value"] == 5.0);

  CHECK(run_args({"graphcap", "--group", R"({"kind":"Z^d","d":1})", "--R", "5", "--x1", "origin", "--norm",
                  R"({"kind":"schatten","p":1})", "--out", (d / "g.json").string()}) == 0);
  CHECK(json::parse(slurp(d / "g.json"))["value"].get<double>() == doctest::Approx(2.0).epsilon(1e-6));

  CHECK(run_args({"graphcap", "--group", R"({"kind":"Z^d","d":1})", "--R", "5"}) == 2);
  CHECK(run_args({"bogus"}) == 2);

  // one subgradient step without the polish cannot converge
  json unpolished = json::parse(kTridiag);
  unpolished["options"] = {{"polish_max_iters", 0}};
  const std::string inl = unpolished.dump();
  CHECK(run_args({"condenser", "--inline", inl, "--max-iters", "1", "--strict", "--out", (d / "s").string()}) == 3);
  CHECK(run_args({"condenser", "--inline", inl, "--max-iters", "1", "--out", (d / "s").string()}) == 0);
}

TEST_CASE("plaplace and transfer payloads") {
  const auto d = scratch("pl");
  json p = json::parse(kTridiag);
  p.erase("norm");
  p["p"] = 2;
  p["smooth"] = true;
  p["uniqueness_trials"] = 2;
  auto cfg = parse_config(p, Command::plaplace);
  cfg.out_dir = d.string();
  std::ostringstream os;
  CHECK(dispatch(cfg, os) == 0);
  const json r = json::parse(slurp(d / "report.json"));
  CHECK(r["value"].get<double>() == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(r["theta_report"]["conditions_pass"] == true);

  auto t = parse_config(json::parse(R"({"group":{"kind":"Z^d","d":1},"R":4,"x1":"origin","x2":"sphere",
                                        "norm":{"kind":"schatten","p":2}})"),
                        Command::transfer);
  t.out_dir = (d / "t").string();
  CHECK(dispatch(t, os) == 0);
  const json tr = json::parse(slurp(d / "t" / "report.json"));
  CHECK(tr["inequality_holds"] == true);
}
