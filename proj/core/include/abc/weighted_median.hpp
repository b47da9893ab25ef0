#pragma once

#include <cstdint>
#include <span>

namespace abc {

// 50% weighted percentile.
//
// Values are sorted ascending (carrying their weights) and the value at the
// smallest sorted index l with
//     sum_{j<l} w_(j) / W <= 1/2   and   sum_{j>l} w_(j) / W <= 1/2
// is returned, W being the total weight. When several indices qualify (an
// exact even split) the smallest one wins.
//
// Throws std::invalid_argument on empty input, mismatched lengths or
// negative / non-finite weights, and DegenerateWeights when W == 0.
double weighted_median(std::span<const double> values, std::span<const double> weights);

// Same selection rule over data whose ascending order is already known:
// sorted_values[i] is the i-th smallest value and order[i] is the index of
// its weight in `weights`. `total` must be the sum of `weights`.
//
// This is the hot path used against a prior bank, where the per-dose sort
// order is computed once at bank construction.
double weighted_median_presorted(std::span<const double> sorted_values,
                                 std::span<const std::uint32_t> order,
                                 std::span<const double> weights, double total);

}  // namespace abc
