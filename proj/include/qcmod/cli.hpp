#pragma once

// qcmod command line: config parsing, dispatch and report/CSV writing.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "qcmod/errors.hpp"

namespace qcmod::cli {

inline constexpr const char* kVersion = "0.1.0";

enum class Command { norm, condenser, graphcap, transfer, plaplace, experiment };

std::string to_string(Command c);
std::optional<Command> command_from_string(const std::string& s);
std::string allowed_commands();

struct RunConfig {
  Command command = Command::norm;
  nlohmann::json payload;
  std::string out_dir = ".";
  std::string report_name = "report.json";
  std::uint64_t seed = 0;
  std::optional<double> tol;
  std::optional<int> max_iters;
  bool strict = false;
};

/// Every problem found in a config, each prefixed with its JSON path.
class ConfigError : public ValidationError {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

/// Accepts {"command": ..., "payload": {...}, "out_dir"?, "seed"?} or, when
/// `command` is given, a bare payload. The payload is validated against the
/// command's schema; throws ConfigError listing all problems.
RunConfig parse_config(const nlohmann::json& doc, std::optional<Command> command = std::nullopt);
RunConfig parse_config_text(const std::string& text, std::optional<Command> command = std::nullopt);

/// Runs the command and writes report.json, manifest.json and any series into
/// cfg.out_dir. Returns the process exit code (0, 3 under --strict on
/// non-convergence, 4 on numeric failure).
int dispatch(const RunConfig& cfg, std::ostream& out);

/// %.17g
std::string format_double(double v);

/// RFC 4180 CSV with LF line endings.
void emit_series(const std::string& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows);

/// Full command-line entry point.
int run(int argc, char** argv);

}  // namespace qcmod::cli
