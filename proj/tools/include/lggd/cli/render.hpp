#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>

namespace lggd::cli {

/// SVG 1.1 document with one filled circle per node. Colors interpolate
/// linearly from red (field minimum) to yellow (field maximum); a constant
/// field renders all red. Positions are expected in [-1, 1]^2.
std::string format_distance_map_svg(std::span<const std::array<double, 2>> positions, std::span<const double> field,
                                    double radius = 0.01);

/// Throws SizeMismatch when the spans differ in length.
void render_distance_map(std::span<const std::array<double, 2>> positions, std::span<const double> field,
                         const std::filesystem::path& out_path, double radius = 0.01);

}  // namespace lggd::cli
