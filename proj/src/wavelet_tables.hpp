#pragma once

#include <string_view>
#include <vector>

namespace wdsel::detail {

struct FilterEntry {
  std::string_view name;
  int vanishing_moments;
  std::vector<double> dec_lo;
};

const std::vector<FilterEntry>& filter_table();

}  // namespace wdsel::detail
