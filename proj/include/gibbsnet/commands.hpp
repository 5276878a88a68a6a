#pragma once

#include <optional>
#include <string>
#include <vector>

// Command implementations behind the CLI. Each command resolves its inputs,
// runs, and always writes a RunManifest into the output directory before
// returning, success or failure.
//
// Exit codes: 0 success, 2 config/usage, 3 training divergence, 4 artifact
// corruption, 1 anything else.

namespace gibbsnet {

struct CommandContext {
  std::string out_dir;  // empty: $GIBBSNET_OUT, falling back to "."
  std::vector<std::string> overrides;
  std::optional<long> seed_flag;
};

std::string resolve_out_dir(const std::string& flag_value);

int cmd_train(const std::string& config_path, const CommandContext& ctx,
              const std::string& resume_path = "");

int cmd_sample(const std::string& checkpoint_path, int steps, int count, int probe_every,
               int image_rows, int image_cols, const CommandContext& ctx);

int cmd_inpaint(const std::string& checkpoint_path, const std::string& observations_csv,
                const std::string& mask_text, int steps, const CommandContext& ctx);

struct OracleArgs {
  std::string spec_path;  // JSON model; empty builds a random consistent one
  long nx = 12;
  long nz = 6;
  double perturb = 0.0;
};

int cmd_oracle(const OracleArgs& args, const CommandContext& ctx);

int cmd_eval(const std::string& checkpoint_path, const std::string& config_path,
             const CommandContext& ctx);

int exit_code_for(const std::exception& e);

}  // namespace gibbsnet
