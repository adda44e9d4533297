#include "fembench/parallel.hpp"

#include <bit>
#include <cstdint>
#include <stdexcept>

#include <omp.h>

namespace fembench {

Coloring greedy_coloring(int n_items, int n_resources, const std::function<void(int, std::vector<int>&)>& resources) {
  // bit c of used[r] is set once some item of color c touches resource r
  std::vector<std::uint64_t> used(n_resources, 0);
  std::vector<int> touched;
  Coloring result;
  for (int item = 0; item < n_items; ++item) {
    touched.clear();
    resources(item, touched);
    std::uint64_t taken = 0;
    for (int r : touched) taken |= used[r];
    if (taken == ~std::uint64_t{0}) throw std::runtime_error("greedy_coloring: more than 64 colors needed");
    const int color = std::countr_one(taken);
    for (int r : touched) used[r] |= std::uint64_t{1} << color;
    if (color >= result.n_colors()) result.colors.resize(color + 1);
    result.colors[color].push_back(item);
  }
  return result;
}

int set_threads(int n) {
  const int previous = omp_get_max_threads();
  omp_set_num_threads(n < 1 ? 1 : n);
  return previous;
}

int current_threads() { return omp_get_max_threads(); }

}  // namespace fembench
