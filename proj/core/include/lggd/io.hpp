#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lggd/graph.hpp"

namespace lggd::io {

/// Writes through a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

/// Edge list text format:
///   # nodes=<n>
///   i<TAB>j<TAB>w      (0-indexed, each undirected edge once)
std::string format_graph(const Graph& g);
Graph parse_graph(const std::string& text);
void write_graph(const std::filesystem::path& path, const Graph& g);
Graph read_graph(const std::filesystem::path& path);

/// Headerless CSV, one row per node.
std::string format_matrix_csv(const Eigen::MatrixXd& m);
Eigen::MatrixXd parse_matrix_csv(const std::string& text);

/// One integer label per line.
std::string format_labels(const std::vector<int>& labels);
std::vector<int> parse_labels(const std::string& text);

/// Shortest text that parses back to the same double.
std::string format_double(double v);

/// FNV-1a, used for content fingerprints in sidecar files.
std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t seed = 1469598103934665603ULL);

}  // namespace lggd::io
