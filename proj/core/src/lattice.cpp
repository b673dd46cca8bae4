#include "nodal/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <deque>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_map>

#include "nodal/error.hpp"

namespace nodal {

namespace {

constexpr std::size_t kMaxVectors = 50'000'000;
constexpr std::size_t kMaxHalfDualOrder = 4'000'000;

std::int64_t norm2(const IntVector& v) {
  std::int64_t s = 0;
  for (auto x : v) s += x * x;
  return s;
}

std::int64_t dot(const IntVector& a, const IntVector& b) {
  std::int64_t s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool first_nonzero_positive(const IntVector& v) {
  for (auto x : v) {
    if (x != 0) return x > 0;
  }
  return false;
}

IntVector negated(IntVector v) {
  for (auto& x : v) x = -x;
  return v;
}

std::int64_t mod(std::int64_t a, std::int64_t m) {
  const std::int64_t r = a % m;
  return r < 0 ? r + m : r;
}

void enumerate_rec(int dim, int pos, std::int64_t remaining, IntVector& current,
                   std::vector<IntVector>& out) {
  if (pos == dim - 1) {
    const std::int64_t r = isqrt(remaining);
    if (r * r != remaining) return;
    current[pos] = -r;
    out.push_back(current);
    if (r != 0) {
      current[pos] = r;
      out.push_back(current);
    }
    if (out.size() > kMaxVectors) throw CapacityError("frequency set exceeds enumeration capacity");
    return;
  }
  const std::int64_t bound = isqrt(remaining);
  for (std::int64_t x = -bound; x <= bound; ++x) {
    current[pos] = x;
    enumerate_rec(dim, pos + 1, remaining - x * x, current, out);
  }
}

// All 2^d d! signed permutations applied to v.
template <class Fn>
void for_each_signed_permutation(const IntVector& v, Fn&& fn) {
  const int d = static_cast<int>(v.size());
  std::vector<int> perm(d);
  std::iota(perm.begin(), perm.end(), 0);
  IntVector image(d);
  do {
    for (unsigned mask = 0; mask < (1u << d); ++mask) {
      for (int i = 0; i < d; ++i) {
        const std::int64_t x = v[perm[i]];
        image[i] = (mask >> i) & 1u ? -x : x;
      }
      fn(image);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
}

}  // namespace

std::int64_t isqrt(std::int64_t n) {
  if (n < 0) throw DomainError("isqrt of a negative number");
  auto r = static_cast<std::int64_t>(std::sqrt(static_cast<long double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

std::vector<double> HalfDualSet::point(std::size_t i) const {
  std::vector<double> p(numerators.at(i).size());
  for (std::size_t k = 0; k < p.size(); ++k)
    p[k] = static_cast<double>(numerators[i][k]) / static_cast<double>(denominator);
  return p;
}

std::vector<std::string> HalfDualSet::point_strings(std::size_t i) const {
  std::vector<std::string> out;
  for (auto a : numerators.at(i)) out.push_back(to_string(Rational(a, denominator)));
  return out;
}

FrequencySet make_frequency_set(int dim, std::vector<IntVector> vectors) {
  if (dim < 1) throw DomainError("dimension must be positive");
  for (const auto& v : vectors) {
    if (static_cast<int>(v.size()) != dim) throw DomainError("frequency vector has wrong dimension");
    if (norm2(v) == 0) throw DomainError("frequency set must not contain 0");
  }
  std::sort(vectors.begin(), vectors.end());
  vectors.erase(std::unique(vectors.begin(), vectors.end()), vectors.end());

  FrequencySet set;
  set.dim = dim;
  std::set<std::int64_t> norms;
  for (const auto& v : vectors) {
    norms.insert(norm2(v));
    if (!std::binary_search(vectors.begin(), vectors.end(), negated(v)))
      throw DomainError("frequency set is not closed under negation");
    if (first_nonzero_positive(v)) set.representatives.push_back(v);
  }
  set.energy = norms.size() == 1 ? *norms.begin() : 0;
  set.max_energy = norms.empty() ? 0 : *norms.rbegin();
  set.vectors = std::move(vectors);
  return set;
}

FrequencySet enumerate_frequencies(int dim, std::int64_t energy) {
  if (dim < 2) throw DomainError("dimension must be at least 2");
  if (energy < 1) throw DomainError("energy must be at least 1");
  if (energy > std::numeric_limits<std::int64_t>::max() / 4)
    throw CapacityError("energy exceeds the integer coordinate range");

  std::vector<IntVector> out;
  IntVector current(dim, 0);
  enumerate_rec(dim, 0, energy, current, out);

  FrequencySet set = make_frequency_set(dim, std::move(out));
  set.energy = energy;
  set.max_energy = energy;
  return set;
}

std::int64_t multiplicity_formula_2d(std::int64_t energy) {
  if (energy < 1) throw DomainError("energy must be at least 1");
  std::int64_t n = energy;
  while (n % 2 == 0) n /= 2;
  std::int64_t product = 1;
  for (std::int64_t p = 3; p * p <= n; p += 2) {
    if (n % p != 0) continue;
    int exponent = 0;
    while (n % p == 0) {
      n /= p;
      ++exponent;
    }
    if (p % 4 == 1) product *= exponent + 1;
    else if (exponent % 2 != 0) return 0;
  }
  if (n > 1) {
    if (n % 4 == 1) product *= 2;
    else return 0;
  }
  return 4 * product;
}

bool check_nondegeneracy(const FrequencySet& freqs) {
  if (freqs.empty()) throw DomainError("non-degeneracy needs a nonempty frequency set");
  if (freqs.dim < 2) return false;
  return std::any_of(freqs.vectors.begin(), freqs.vectors.end(), [](const IntVector& v) {
    return v[0] != 0 && v[1] != 0 && v[0] != v[1] && v[0] != -v[1];
  });
}

bool is_symmetric(const FrequencySet& freqs) {
  for (const auto& v : freqs.vectors) {
    bool closed = true;
    for_each_signed_permutation(v, [&](const IntVector& w) {
      if (closed && !std::binary_search(freqs.vectors.begin(), freqs.vectors.end(), w))
        closed = false;
    });
    if (!closed) return false;
  }
  return true;
}

std::vector<IntVector> lattice_basis(const FrequencySet& freqs) {
  if (freqs.empty()) throw DomainError("lattice of an empty frequency set");
  const int d = freqs.dim;
  std::vector<IntVector> rows = freqs.representatives;
  std::size_t pivot_row = 0;
  for (int col = 0; col < d && pivot_row < rows.size(); ++col) {
    // Euclid on column `col` among rows[pivot_row..].
    while (true) {
      std::size_t best = rows.size();
      for (std::size_t r = pivot_row; r < rows.size(); ++r) {
        if (rows[r][col] != 0 &&
            (best == rows.size() || std::llabs(rows[r][col]) < std::llabs(rows[best][col])))
          best = r;
      }
      if (best == rows.size()) break;
      std::swap(rows[pivot_row], rows[best]);
      bool reduced_all = true;
      for (std::size_t r = pivot_row + 1; r < rows.size(); ++r) {
        if (rows[r][col] == 0) continue;
        const std::int64_t q = rows[r][col] / rows[pivot_row][col];
        for (int k = 0; k < d; ++k) rows[r][k] -= q * rows[pivot_row][k];
        if (rows[r][col] != 0) reduced_all = false;
      }
      if (reduced_all) {
        if (rows[pivot_row][col] < 0) rows[pivot_row] = negated(rows[pivot_row]);
        ++pivot_row;
        break;
      }
    }
  }
  rows.resize(pivot_row);
  if (static_cast<int>(rows.size()) != d)
    throw DomainError("frequencies do not span R^d");
  return rows;
}

HalfDualSet half_dual_set(const FrequencySet& freqs) {
  if (freqs.empty()) throw DomainError("half-dual set of an empty frequency set");
  const int d = freqs.dim;
  const auto basis = lattice_basis(freqs);

  // basis is upper triangular with positive diagonal; invert exactly.
  std::int64_t det = 1;
  for (int i = 0; i < d; ++i) det *= basis[i][i];
  std::vector<std::vector<Rational>> inverse(d, std::vector<Rational>(d));
  for (int col = 0; col < d; ++col) {
    for (int i = d - 1; i >= 0; --i) {
      Rational s = (i == col) ? Rational(1) : Rational(0);
      for (int k = i + 1; k < d; ++k) s -= Rational(basis[i][k]) * inverse[k][col];
      inverse[i][col] = s / Rational(basis[i][i]);
    }
  }

  // L* = B^{-1} Z^d, so (1/2) L* is generated by the columns of B^{-1}/2.
  // Over the common denominator Q = 2 det those columns have numerators det * B^{-1}.
  const std::int64_t Q = 2 * det;
  std::vector<IntVector> generators(d, IntVector(d));
  for (int col = 0; col < d; ++col) {
    for (int i = 0; i < d; ++i) {
      const Rational scaled = inverse[i][col] * det;
      if (boost::multiprecision::denominator(scaled) != 1)
        throw InvariantViolation("adjugate of the lattice basis is not integral");
      generators[col][i] = mod(static_cast<std::int64_t>(boost::multiprecision::numerator(scaled)), Q);
    }
  }

  std::set<IntVector> group{IntVector(d, 0)};
  std::deque<IntVector> frontier{IntVector(d, 0)};
  while (!frontier.empty()) {
    const IntVector current = frontier.front();
    frontier.pop_front();
    for (const auto& g : generators) {
      IntVector next(d);
      for (int i = 0; i < d; ++i) next[i] = mod(current[i] + g[i], Q);
      if (group.insert(next).second) {
        if (group.size() > kMaxHalfDualOrder) throw CapacityError("half-dual group too large");
        frontier.push_back(std::move(next));
      }
    }
  }

  HalfDualSet result;
  result.dim = d;
  result.denominator = Q;
  for (const auto& a : group) {
    bool all_integer = true;
    bool all_half = true;
    for (const auto& lambda : freqs.representatives) {
      const std::int64_t s = mod(dot(lambda, a), Q);
      all_integer = all_integer && s == 0;
      all_half = all_half && s == Q / 2;
      if (!all_integer && !all_half) break;
    }
    if (all_integer || all_half) {
      result.numerators.push_back(a);
      result.signs.push_back(all_integer ? 1 : -1);
    }
  }
  return result;
}

std::map<IntVector, std::int64_t> pair_sum_table(const FrequencySet& freqs) {
  std::map<IntVector, std::int64_t> table;
  const int d = freqs.dim;
  IntVector sum(d);
  for (const auto& a : freqs.vectors) {
    for (const auto& b : freqs.vectors) {
      for (int i = 0; i < d; ++i) sum[i] = a[i] + b[i];
      ++table[sum];
    }
  }
  return table;
}

BigInt four_tuple_count(const FrequencySet& freqs) {
  if (freqs.empty()) throw EmptyEnsembleError("four-tuple count of an empty frequency set");
  // Sum vectors have coordinates in [-2r, 2r]; pack them into one integer key.
  const int d = freqs.dim;
  const std::int64_t r = isqrt(freqs.max_energy);
  const std::int64_t base = 4 * r + 1;
  bool packable = true;
  {
    long double span = 1;
    for (int i = 0; i < d; ++i) span *= static_cast<long double>(base);
    packable = span < static_cast<long double>(std::numeric_limits<std::int64_t>::max());
  }
  BigInt total = 0;
  if (packable) {
    std::unordered_map<std::int64_t, std::int64_t> counts;
    counts.reserve(freqs.multiplicity() * freqs.multiplicity());
    for (const auto& a : freqs.vectors) {
      for (const auto& b : freqs.vectors) {
        std::int64_t key = 0;
        for (int i = 0; i < d; ++i) key = key * base + (a[i] + b[i] + 2 * r);
        ++counts[key];
      }
    }
    for (const auto& [key, count] : counts) total += BigInt(count) * count;
  } else {
    for (const auto& [nu, count] : pair_sum_table(freqs)) total += BigInt(count) * count;
  }
  return total;
}

std::int64_t chord_count(const FrequencySet& freqs, const IntVector& nu) {
  if (static_cast<int>(nu.size()) != freqs.dim) throw DomainError("nu has wrong dimension");
  const std::int64_t nu2 = norm2(nu);
  if (nu2 == 0) throw DomainError("chord count needs a nonzero nu");
  return std::count_if(freqs.vectors.begin(), freqs.vectors.end(),
                       [&](const IntVector& lambda) { return 2 * dot(lambda, nu) == nu2; });
}

std::int64_t divisor_count(std::int64_t k) {
  if (k < 1) throw DomainError("divisor count needs k >= 1");
  std::int64_t count = 0;
  for (std::int64_t i = 1; i * i <= k; ++i) {
    if (k % i == 0) count += (i * i == k) ? 1 : 2;
  }
  return count;
}

std::int64_t form_representations(std::int64_t D, std::int64_t k) {
  if (D < 1 || k < 1) throw DomainError("form representations need D >= 1 and k >= 1");
  std::int64_t count = 0;
  for (std::int64_t y = 0; D * y * y <= k; ++y) {
    const std::int64_t rest = k - D * y * y;
    const std::int64_t x = isqrt(rest);
    if (x * x != rest) continue;
    const std::int64_t xs = x == 0 ? 1 : 2;
    const std::int64_t ys = y == 0 ? 1 : 2;
    count += xs * ys;
  }
  return count;
}

std::string to_string(const Rational& q) {
  const auto num = boost::multiprecision::numerator(q);
  const auto den = boost::multiprecision::denominator(q);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

nlohmann::json to_json(const FrequencySet& freqs) {
  return {{"dim", freqs.dim},
          {"energy", freqs.energy},
          {"multiplicity", freqs.multiplicity()},
          {"max_energy", freqs.max_energy},
          {"vectors", freqs.vectors}};
}

nlohmann::json to_json(const HalfDualSet& half_dual) {
  nlohmann::json points = nlohmann::json::array();
  for (std::size_t i = 0; i < half_dual.size(); ++i)
    points.push_back({{"point", half_dual.point_strings(i)}, {"sign", half_dual.signs[i]}});
  return points;
}

nlohmann::json to_json(const FrequencySet& freqs, const HalfDualSet& half_dual) {
  auto out = to_json(freqs);
  out["half_dual"] = to_json(half_dual);
  return out;
}

}  // namespace nodal
