#include "lggd/cli/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "lggd/error.hpp"
#include "lggd/io.hpp"

namespace lggd::cli {

std::string format_distance_map_svg(std::span<const std::array<double, 2>> positions, std::span<const double> field,
                                    double radius) {
  if (positions.size() != field.size()) {
    throw Error(ErrorCode::SizeMismatch, std::to_string(positions.size()) + " positions for " +
                                             std::to_string(field.size()) + " field values");
  }
  double lo = 0.0;
  double hi = 0.0;
  if (!field.empty()) {
    const auto [mn, mx] = std::minmax_element(field.begin(), field.end());
    lo = *mn;
    hi = *mx;
  }
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"800\" height=\"800\" "
        "viewBox=\"-1.05 -1.05 2.1 2.1\">\n"
     << "<rect x=\"-1.05\" y=\"-1.05\" width=\"2.1\" height=\"2.1\" fill=\"white\"/>\n";
  char color[8];
  for (std::size_t i = 0; i < field.size(); ++i) {
    const double t = hi > lo ? (field[i] - lo) / (hi - lo) : 0.0;
    const auto green = static_cast<int>(std::lround(255.0 * std::clamp(t, 0.0, 1.0)));
    std::snprintf(color, sizeof color, "#ff%02x00", green);
    // SVG y grows downward; flip so the picture matches the usual axes.
    os << "<circle cx=\"" << io::format_double(positions[i][0]) << "\" cy=\"" << io::format_double(-positions[i][1])
       << "\" r=\"" << io::format_double(radius) << "\" fill=\"" << color << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void render_distance_map(std::span<const std::array<double, 2>> positions, std::span<const double> field,
                         const std::filesystem::path& out_path, double radius) {
  io::write_file_atomic(out_path, format_distance_map_svg(positions, field, radius));
}

}  // namespace lggd::cli
