#include "lggd/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lggd/error.hpp"
#include "lggd/random.hpp"

namespace lggd {

std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) noexcept {
  std::uint64_t z = seed ^ io::fnv1a(tag.data(), tag.size());
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace io {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::FileMissing, "cannot open " + tmp.string() + " for writing");
    out << content;
    if (!out) throw Error(ErrorCode::FileMissing, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::FileMissing, path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view s, std::size_t line_no) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number '" +
                                           std::string(s) + "'");
  }
  return v;
}

long long parse_integer(std::string_view s, std::size_t line_no) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  long long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad integer '" +
                                           std::string(s) + "'");
  }
  return v;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    fn(line, line_no);
    start = end + 1;
  }
}

}  // namespace

std::string format_graph(const Graph& g) {
  std::ostringstream out;
  out << "# nodes=" << g.num_nodes() << '\n';
  for (const auto& e : g.edges()) out << e.i << '\t' << e.j << '\t' << format_double(e.w) << '\n';
  return out.str();
}

Graph parse_graph(const std::string& text) {
  std::size_t n = 0;
  bool have_header = false;
  std::vector<WeightedEdge> edges;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    if (!have_header) {
      constexpr std::string_view prefix = "# nodes=";
      if (line.substr(0, prefix.size()) != prefix) {
        throw Error(ErrorCode::ParseError, "graph file must start with '# nodes=<n>'");
      }
      const auto v = parse_integer(line.substr(prefix.size()), line_no);
      if (v < 0) throw Error(ErrorCode::ParseError, "negative node count");
      n = static_cast<std::size_t>(v);
      have_header = true;
      return;
    }
    if (line.front() == '#') return;
    auto cols = split(line, '\t');
    if (cols.size() != 3) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected i<TAB>j<TAB>w");
    }
    const auto i = parse_integer(cols[0], line_no);
    const auto j = parse_integer(cols[1], line_no);
    if (i < 0 || j < 0) {
      throw Error(ErrorCode::IndexOutOfRange, "line " + std::to_string(line_no) + ": negative node index");
    }
    edges.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), parse_double(cols[2], line_no)});
  });
  if (!have_header) throw Error(ErrorCode::ParseError, "empty graph file");
  return build_graph(n, edges);
}

void write_graph(const fs::path& path, const Graph& g) { write_file_atomic(path, format_graph(g)); }

Graph read_graph(const fs::path& path) { return parse_graph(read_file(path)); }

std::string format_matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out += ',';
      out += format_double(m(r, c));
    }
    out += '\n';
  }
  return out;
}

Eigen::MatrixXd parse_matrix_csv(const std::string& text) {
  std::vector<std::vector<double>> rows;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    std::vector<double> row;
    for (auto cell : split(line, ',')) row.push_back(parse_double(cell, line_no));
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": ragged row");
    }
    rows.push_back(std::move(row));
  });
  const Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)];
  }
  return m;
}

std::string format_labels(const std::vector<int>& labels) {
  std::string out;
  for (int y : labels) {
    out += std::to_string(y);
    out += '\n';
  }
  return out;
}

std::vector<int> parse_labels(const std::string& text) {
  std::vector<int> labels;
  for_each_line(text, [&](std::string_view line, std::size_t line_no) {
    if (line.empty()) return;
    labels.push_back(static_cast<int>(parse_integer(line, line_no)));
  });
  return labels;
}

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed) {
  auto h = seed;
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t k = 0; k < size; ++k) {
    h ^= bytes[k];
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace io
}  // namespace lggd
