#include "nodal/quadrature.hpp"

#include <algorithm>
#include <map>
#include <mutex>

#include <boost/math/special_functions/legendre.hpp>

#include "nodal/error.hpp"

namespace nodal {

const GaussRule& gauss_legendre(int n) {
  if (n < 1 || n > 512) throw DomainError("Gauss-Legendre order out of range");
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  GaussRule rule;
  for (double x : boost::math::legendre_p_zeros<double>(n)) {
    const double dp = boost::math::legendre_p_prime(n, x);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes.push_back(x);
    rule.weights.push_back(w);
    if (x != 0.0) {
      rule.nodes.push_back(-x);
      rule.weights.push_back(w);
    }
  }
  std::vector<std::size_t> order(rule.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rule.nodes[a] < rule.nodes[b]; });
  GaussRule sorted;
  for (auto i : order) {
    sorted.nodes.push_back(rule.nodes[i]);
    sorted.weights.push_back(rule.weights[i]);
  }
  return cache.emplace(n, std::move(sorted)).first->second;
}

}  // namespace nodal
