#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "abc/random.hpp"

namespace abc {

// Four ways of drawing (X1, X2, X3) uniform under 0 < X1 < X2 < X3 < 1.
enum class OrderedSampling {
  Conditional,  // X2 ~ Beta(2,2), X1 | X2 ~ U(0, X2), X3 | X2 ~ U(X2, 1)
  SortIID,      // sort three iid U(0,1)
  Reject,       // keep iid U(0,1) triples that happen to be ordered
  Sequential,   // X2 ~ U(0,1) then the same conditionals; a different law
};

using Triple = std::array<double, 3>;

std::vector<Triple> sample_constrained_uniform(int n, OrderedSampling method, RandomStream& rng);

std::string_view to_string(OrderedSampling method);

}  // namespace abc
