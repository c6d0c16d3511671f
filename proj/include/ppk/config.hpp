#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ppk/covariance.hpp"
#include "ppk/geometry.hpp"
#include "ppk/procsim.hpp"

namespace ppk {

enum class Subcommand { Simulate, Estimate, Krige, OptimalMesh, Validate };

std::string_view name(Subcommand subcommand) noexcept;
Subcommand parse_subcommand(std::string_view text);

/// Where krige takes lambda and g from.
enum class ModelChoice {
  /// Estimated from the pattern.
  PlugIn,
  /// Closed form of the configured process (true intensity and g).
  Process,
  /// g = 1 with the estimated intensity.
  Poisson,
};

struct RunConfig {
  Subcommand subcommand = Subcommand::Krige;
  std::optional<Window> window;
  std::optional<ProcessSpec> process;
  std::optional<std::filesystem::path> input;
  std::optional<double> cell_side;
  bool cell_side_auto = false;
  Approx approx = Approx::MidpointPCF;
  int sub_m = 8;
  ModelChoice model = ModelChoice::PlugIn;
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::size_t replicates = 1;
  std::filesystem::path out_dir = "out";
  int threads = 0;
  bool clamp_negative = false;
  bool dump_matrices = false;
  SimOptions sim;
  /// Acceptance criteria to run (validate); empty means all.
  std::vector<int> criteria;
  /// Effective settings as key = value lines, for the manifest.
  std::vector<std::pair<std::string, std::string>> echo;
};

/// Command-line values; each one set overrides the file.
struct FlagOverrides {
  std::optional<std::string> subcommand;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> cell_side;
  std::optional<std::string> approx;
  std::optional<int> threads;
  bool clamp_negative = false;
  bool dump_matrices = false;
  std::optional<std::filesystem::path> out_dir;
};

/// Parse "key = value" text grouped in [sections]. `source` names the text
/// in error messages; relative paths resolve against `base_dir`.
RunConfig parse_config_text(const std::string& text, const std::string& source,
                            const std::filesystem::path& base_dir, const FlagOverrides& flags = {});

/// Reads the file when given; a missing file is a Config error.
RunConfig parse_config(const std::optional<std::filesystem::path>& file, const FlagOverrides& flags = {});

}  // namespace ppk
