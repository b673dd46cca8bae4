#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <nlohmann/json.hpp>

namespace nodal {

using IntVector = std::vector<std::int64_t>;
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

/// A W_d-symmetric set of integer frequencies, usually the sphere set
/// {lambda in Z^d : |lambda|^2 = E}.
///
/// `vectors` is sorted lexicographically. `representatives` holds one vector
/// of each {lambda, -lambda} pair (first nonzero coordinate positive), also in
/// lexicographic order; the ensemble indexes its coefficients by it.
struct FrequencySet {
  int dim = 0;
  std::int64_t energy = 0;  ///< common |lambda|^2, 0 for a set of mixed norms
  std::int64_t max_energy = 0;
  std::vector<IntVector> vectors;
  std::vector<IntVector> representatives;

  [[nodiscard]] std::size_t multiplicity() const noexcept { return vectors.size(); }
  [[nodiscard]] bool empty() const noexcept { return vectors.empty(); }
};

/// The finite set B mod Z^d of points w where <lambda, w> is integral for all
/// lambda (sign +1) or half-odd for all lambda (sign -1).
///
/// Points are stored exactly as integer numerators over a common denominator,
/// reduced into [0, denominator).
struct HalfDualSet {
  int dim = 0;
  std::int64_t denominator = 1;
  std::vector<IntVector> numerators;
  std::vector<int> signs;

  [[nodiscard]] std::size_t size() const noexcept { return numerators.size(); }
  [[nodiscard]] std::vector<double> point(std::size_t i) const;
  /// Coordinates of point i as reduced "p/q" strings.
  [[nodiscard]] std::vector<std::string> point_strings(std::size_t i) const;
};

/// Canonicalise an arbitrary finite set of integer vectors (sort, dedupe,
/// pick representatives). Throws DomainError if the set contains 0 or is not
/// closed under negation.
FrequencySet make_frequency_set(int dim, std::vector<IntVector> vectors);

/// All lambda in Z^d with |lambda|^2 = E. An empty result is not an error.
FrequencySet enumerate_frequencies(int dim, std::int64_t energy);

/// Number of representations of E as a sum of two squares, from the prime
/// factorisation of E (trial division).
std::int64_t multiplicity_formula_2d(std::int64_t energy);

/// True iff some lambda has lambda_1 != +-lambda_2 with lambda_1, lambda_2 != 0.
bool check_nondegeneracy(const FrequencySet& freqs);

/// True iff the set is invariant under all signed coordinate permutations.
bool is_symmetric(const FrequencySet& freqs);

/// Basis of the integer span L of the frequencies, as the rows of an upper
/// triangular d x d matrix (integer echelon form).
std::vector<IntVector> lattice_basis(const FrequencySet& freqs);

HalfDualSet half_dual_set(const FrequencySet& freqs);

/// Pair-sum table nu -> #{(l1, l2) in Lambda^2 : l1 + l2 = nu}.
std::map<IntVector, std::int64_t> pair_sum_table(const FrequencySet& freqs);

/// #{(l1, l2, l3, l4) : l1 + l2 = l3 + l4}, as the sum of squared pair-sum counts.
BigInt four_tuple_count(const FrequencySet& freqs);

/// #{lambda in Lambda : |nu - lambda|^2 = |lambda|^2}. nu must be nonzero.
std::int64_t chord_count(const FrequencySet& freqs, const IntVector& nu);

/// tau(k), the number of divisors of k >= 1.
std::int64_t divisor_count(std::int64_t k);

/// r_D(k) = #{(x, y) in Z^2 : x^2 + D y^2 = k}.
std::int64_t form_representations(std::int64_t D, std::int64_t k);

/// Exact integer square root, floor(sqrt(n)) for n >= 0.
std::int64_t isqrt(std::int64_t n);

std::string to_string(const Rational& q);

nlohmann::json to_json(const FrequencySet& freqs);
nlohmann::json to_json(const FrequencySet& freqs, const HalfDualSet& half_dual);
nlohmann::json to_json(const HalfDualSet& half_dual);

}  // namespace nodal
