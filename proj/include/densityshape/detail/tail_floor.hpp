#pragma once

#include <cstddef>
#include <limits>
#include <vector>

namespace densityshape::detail {

template<class Mass, class Height>
std::size_t apply_tail_floor(std::vector<double>& modes,
                             std::vector<double>& antimodes,
                             double left_end,
                             double right_end,
                             double floor,
                             Mass&& mass,
                             Height&& height)
{
  std::size_t excluded = 0;
  while (modes.size() > 1) {
    std::size_t weakest = 0;
    double weakest_mass = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < modes.size(); ++j) {
      const double a = j == 0 ? left_end : antimodes[j - 1];
      const double b = j + 1 == modes.size() ? right_end : antimodes[j];
      const double m = mass(a, b);
      if (m < weakest_mass) {
        weakest_mass = m;
        weakest = j;
      }
    }
    if (!(weakest_mass < floor))
      break;

    std::size_t drop_antimode;
    if (weakest == 0)
      drop_antimode = 0;
    else if (weakest + 1 == modes.size())
      drop_antimode = weakest - 1;
    else
      drop_antimode = height(antimodes[weakest - 1]) >= height(antimodes[weakest])
                        ? weakest - 1
                        : weakest;
    modes.erase(modes.begin() + static_cast<std::ptrdiff_t>(weakest));
    antimodes.erase(antimodes.begin() + static_cast<std::ptrdiff_t>(drop_antimode));
    ++excluded;
  }
  return excluded;
}

} // namespace densityshape::detail
