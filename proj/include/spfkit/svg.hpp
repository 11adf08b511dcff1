#pragma once

#include <string>
#include <vector>

#include "spfkit/evaluate.hpp"

namespace spfkit {

/// Predicted-vs-observed scatter with the 45-degree mean-equivalence
/// reference line (red). The output contains no timestamps, so re-running a
/// command reproduces it byte for byte.
std::string scatter_svg(const ValidationReport& report);

void write_scatter_svg(const std::string& path, const ValidationReport& report);

}  // namespace spfkit
