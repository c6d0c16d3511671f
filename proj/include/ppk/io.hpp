#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "ppk/geometry.hpp"

namespace ppk {

/// Points from a CSV with header `x,y`; every point must lie in the observed window.
PointPattern read_pattern_csv(const std::filesystem::path& path, const Window& window);

/// Shortest representation that reads back to the same double.
std::string format_double(double v);

/// Writes a CSV file from a header and rows of already formatted fields.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ppk
