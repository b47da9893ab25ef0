#include "abc/constrained_uniform.hpp"

#include <algorithm>
#include <stdexcept>

namespace abc {

namespace {

Triple draw_conditional(RandomStream& rng, bool beta_middle) {
  double x2;
  if (beta_middle) {
    // Beta(2, 2) as a ratio of Gamma(2) variates.
    do {
      const double g1 = rng.gamma(2.0);
      const double g2 = rng.gamma(2.0);
      x2 = g1 / (g1 + g2);
    } while (!(x2 > 0.0 && x2 < 1.0));
  } else {
    x2 = rng.uniform_open(0.0, 1.0);
  }
  return {rng.uniform_open(0.0, x2), x2, rng.uniform_open(x2, 1.0)};
}

bool strictly_ordered(const Triple& t) { return 0.0 < t[0] && t[0] < t[1] && t[1] < t[2] && t[2] < 1.0; }

}  // namespace

std::vector<Triple> sample_constrained_uniform(int n, OrderedSampling method, RandomStream& rng) {
  if (n < 1) throw std::invalid_argument("sample_constrained_uniform: n must be >= 1");
  std::vector<Triple> out;
  out.reserve(static_cast<std::size_t>(n));
  while (static_cast<int>(out.size()) < n) {
    Triple t;
    switch (method) {
      case OrderedSampling::Conditional:
        t = draw_conditional(rng, true);
        break;
      case OrderedSampling::Sequential:
        t = draw_conditional(rng, false);
        break;
      case OrderedSampling::SortIID:
        t = {rng.uniform(), rng.uniform(), rng.uniform()};
        std::sort(t.begin(), t.end());
        break;
      case OrderedSampling::Reject:
        t = {rng.uniform(), rng.uniform(), rng.uniform()};
        break;
    }
    // Ties and zeros have probability zero but are possible in floating
    // point; they are discarded along with Reject's unordered triples.
    if (strictly_ordered(t)) out.push_back(t);
  }
  return out;
}

std::string_view to_string(OrderedSampling method) {
  switch (method) {
    case OrderedSampling::Conditional: return "conditional";
    case OrderedSampling::SortIID: return "sort-iid";
    case OrderedSampling::Reject: return "reject";
    case OrderedSampling::Sequential: return "sequential";
  }
  return "unknown";
}

}  // namespace abc
