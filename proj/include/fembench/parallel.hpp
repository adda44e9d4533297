#pragma once

#include <functional>
#include <vector>

namespace fembench {

/// Items grouped so that no two items of one color touch a common resource.
/// Loops over one color can then scatter without races.
struct Coloring {
  std::vector<std::vector<int>> colors;

  int n_colors() const { return static_cast<int>(colors.size()); }
};

/// Greedy first-fit coloring. `resources(item, out)` fills the resource ids
/// an item writes to (ids in [0, n_resources)).
Coloring greedy_coloring(int n_items, int n_resources, const std::function<void(int, std::vector<int>&)>& resources);

/// Sets the OpenMP thread count used by parallel kernels; returns the previous value.
int set_threads(int n);
int current_threads();

}  // namespace fembench
