#ifndef FHJM_COMMANDS_HPP_
#define FHJM_COMMANDS_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhjm/config.hpp"

namespace fhjm {

// Subcommands of the fhjm tool. Each writes its CSV/JSON outputs plus
// manifest.json into the output directory and returns a short summary.
// Thread count only affects speed; outputs are byte-identical for any value.

struct RunContext {
  std::filesystem::path out_dir;
  unsigned threads = 1;
};

struct CommandResult {
  std::vector<std::string> files;
  nlohmann::json summary;
};

/// --out if given, else $FHJM_OUTPUT_DIR, else "fhjm_out".
std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag);

/// Lower-case hex SHA-256 of `data`.
std::string sha256_hex(const std::string& data);

const char* version();

FbmSampler make_sampler(const ExperimentConfig& cfg);

CommandResult cmd_simulate(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_drift(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_check(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_consistency(const ExperimentConfig& cfg, const RunContext& ctx);
CommandResult cmd_portfolio(const ExperimentConfig& cfg, const RunContext& ctx);

/// Dispatches on the subcommand name and writes the manifest.
CommandResult run_command(const std::string& name, const ExperimentConfig& cfg, const RunContext& ctx);

}  // namespace fhjm

#endif  // FHJM_COMMANDS_HPP_
