#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace lggd {

/// Disjoint node sets. new_labels holds optional tranches (nl1, nl2, ...)
/// that arrive after the backbone is trained.
struct SplitSpec {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::vector<std::vector<std::size_t>> new_labels;

  /// Throws IndexOutOfRange or OverlapWithBoundary when sets intersect.
  void validate(std::size_t n_nodes) const;
};

/// {"train": [...], "val": [...], "test": [...], "new_labels": [[...], ...]}
std::string split_to_json(const SplitSpec& split);
SplitSpec split_from_json(const std::string& text);

}  // namespace lggd
