#pragma once

#include <vector>

namespace nodal {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  [[nodiscard]] std::size_t size() const noexcept { return nodes.size(); }
};

/// n-point Gauss-Legendre rule, nodes ascending. Rules are cached per n.
const GaussRule& gauss_legendre(int n);

}  // namespace nodal
