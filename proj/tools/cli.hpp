#pragma once

#include "svmrk/pipeline.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace svmrk::cli {

using nlohmann::json;

/// Every recognised key with its default value.
json default_config();

/// Defaults, merged with the file (when given), then `key.path=value` overrides.
/// Unknown keys are rejected.
json resolve_config(const std::optional<std::filesystem::path>& file, const std::vector<std::string>& overrides);

/// `a.b.c=value`; the value is parsed as JSON, falling back to a plain string.
void apply_override(json& cfg, const std::string& assignment);

TrainOptions train_options(const json& cfg);
DiscretizeOptions discretize_options(const json& cfg);
SolveOptions solve_options(const json& cfg);
Materials materials(const json& cfg);
BvpSpec bvp(const json& cfg, const Domain& domain);
DemoOptions demo_options(const json& cfg);

struct Input {
  ImageGrid image;                     ///< segmented
  ImageGrid nodes;                     ///< discretized (image box-downscaled by input.node_downscale)
  std::optional<SyntheticTruth> truth;  ///< synthetic sources only
};

/// input.source: file | validation | demo.
Input load_input(const json& cfg);

/// Parses and runs one subcommand. Returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace svmrk::cli
