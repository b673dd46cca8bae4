#include <doctest.h>

#include <algorithm>
#include <set>

#include "nodal/error.hpp"
#include "nodal/lattice.hpp"

using namespace nodal;

namespace {

/// Brute-force quadruple count over all (l1, l2, l3) with l4 determined.
std::int64_t brute_four_tuples(const FrequencySet& fs) {
  std::set<IntVector> members(fs.vectors.begin(), fs.vectors.end());
  std::int64_t count = 0;
  for (const auto& a : fs.vectors)
    for (const auto& b : fs.vectors)
      for (const auto& c : fs.vectors) {
        IntVector d(a.size());
        for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] + b[k] - c[k];
        count += members.count(d);
      }
  return count;
}

}  // namespace

TEST_CASE("enumerate_frequencies small cases") {
  const auto f5 = enumerate_frequencies(2, 5);
  CHECK(f5.multiplicity() == 8);
  const std::vector<IntVector> expected = {{-2, -1}, {-2, 1}, {-1, -2}, {-1, 2}, {1, -2}, {1, 2}, {2, -1}, {2, 1}};
  CHECK(f5.vectors == expected);
  CHECK(f5.representatives.size() == 4);
  for (const auto& r : f5.representatives) CHECK(r[0] > 0);

  CHECK(enumerate_frequencies(2, 3).empty());
  CHECK(enumerate_frequencies(2, 25).multiplicity() == 12);
  CHECK(enumerate_frequencies(2, 325).multiplicity() == 24);
  CHECK(enumerate_frequencies(3, 2).multiplicity() == 12);
  CHECK(enumerate_frequencies(3, 7).empty());
}

TEST_CASE("multiplicity formula matches a histogram of x^2 + y^2") {
  const std::int64_t limit = 2000;
  std::vector<std::int64_t> hist(limit + 1, 0);
  for (std::int64_t x = -45; x <= 45; ++x)
    for (std::int64_t y = -45; y <= 45; ++y)
      if (x * x + y * y <= limit) ++hist[x * x + y * y];
  for (std::int64_t e = 1; e <= limit; ++e) {
    CAPTURE(e);
    REQUIRE(multiplicity_formula_2d(e) == hist[e]);
  }
  CHECK(multiplicity_formula_2d(5) == 8);
  CHECK(multiplicity_formula_2d(2) == 4);
  CHECK(multiplicity_formula_2d(9) == 4);
  CHECK(multiplicity_formula_2d(1105) == 32);
}

TEST_CASE("non-degeneracy") {
  CHECK_FALSE(check_nondegeneracy(enumerate_frequencies(2, 1)));
  CHECK_FALSE(check_nondegeneracy(enumerate_frequencies(2, 2)));
  CHECK(check_nondegeneracy(enumerate_frequencies(2, 5)));
  for (std::int64_t e = 1; e <= 300; ++e) {
    const auto fs = enumerate_frequencies(2, e);
    if (fs.multiplicity() > 9) CHECK(check_nondegeneracy(fs));
  }
  CHECK(is_symmetric(enumerate_frequencies(3, 6)));
}

TEST_CASE("half-dual set") {
  for (std::int64_t e : {1, 5}) {
    const auto hd = half_dual_set(enumerate_frequencies(2, e));
    REQUIRE(hd.size() == 2);
    CHECK(hd.point_strings(0) == std::vector<std::string>{"0", "0"});
    CHECK(hd.signs[0] == 1);
    CHECK(hd.point_strings(1) == std::vector<std::string>{"1/2", "1/2"});
    CHECK(hd.signs[1] == -1);
  }
  // Closed under negation and W_d, always contains 0.
  for (std::int64_t e : {2, 25, 65, 325}) {
    const auto hd = half_dual_set(enumerate_frequencies(2, e));
    std::set<IntVector> pts(hd.numerators.begin(), hd.numerators.end());
    CHECK(pts.count(IntVector{0, 0}) == 1);
    const auto q = hd.denominator;
    for (const auto& p : hd.numerators) {
      const IntVector neg = {(q - p[0]) % q, (q - p[1]) % q};
      const IntVector swap = {p[1], p[0]};
      CHECK(pts.count(neg) == 1);
      CHECK(pts.count(swap) == 1);
    }
  }
}

TEST_CASE("four-tuple count") {
  CHECK(four_tuple_count(enumerate_frequencies(2, 1)) == 36);
  for (std::int64_t e = 1; e <= 120; ++e) {
    const auto fs = enumerate_frequencies(2, e);
    if (fs.empty()) continue;
    const auto n = static_cast<std::int64_t>(fs.multiplicity());
    CAPTURE(e);
    CHECK(four_tuple_count(fs) == brute_four_tuples(fs));
    CHECK(four_tuple_count(fs) == 3 * n * n - 3 * n);
  }
  const auto f3 = enumerate_frequencies(3, 2);
  CHECK(four_tuple_count(f3) == brute_four_tuples(f3));
  const auto n3 = static_cast<std::int64_t>(f3.multiplicity());
  CHECK(four_tuple_count(f3) <= n3 * n3 * n3);
}

TEST_CASE("pair-sum table sums to N^2") {
  for (auto [d, e] : {std::pair{2, 25}, {2, 325}, {3, 6}}) {
    const auto fs = enumerate_frequencies(d, e);
    std::int64_t total = 0;
    for (const auto& [nu, r] : pair_sum_table(fs)) total += r;
    const auto n = static_cast<std::int64_t>(fs.multiplicity());
    CHECK(total == n * n);
  }
}

TEST_CASE("chord count") {
  CHECK(chord_count(enumerate_frequencies(3, 2), {1, 1, 0}) == 4);
  CHECK(chord_count(enumerate_frequencies(2, 5), {2, 4}) == 1);
  CHECK(chord_count(enumerate_frequencies(2, 5), {9, 0}) == 0);
  CHECK_THROWS_AS((void)chord_count(enumerate_frequencies(2, 5), {0, 0}), DomainError);
}

TEST_CASE("divisor and form counts") {
  CHECK(divisor_count(12) == 6);
  CHECK(divisor_count(1) == 1);
  CHECK(form_representations(1, 25) == 12);
  for (std::int64_t D = 1; D <= 100; D += 7)
    for (std::int64_t k = 1; k <= 10000; k += 37) CHECK(form_representations(D, k) <= 6 * divisor_count(k));
}

TEST_CASE("make_frequency_set validates") {
  CHECK_THROWS_AS(make_frequency_set(2, {{1, 0}}), DomainError);
  CHECK_THROWS_AS(make_frequency_set(2, {{0, 0}}), DomainError);
  const auto fs = make_frequency_set(2, {{1, 0}, {-1, 0}, {0, 2}, {0, -2}});
  CHECK(fs.energy == 0);
  CHECK(fs.max_energy == 4);
}

TEST_CASE("json shape") {
  const auto fs = enumerate_frequencies(2, 5);
  const auto j = to_json(fs, half_dual_set(fs));
  CHECK(j["multiplicity"] == 8);
  CHECK(j["vectors"].size() == 8);
  CHECK(j["half_dual"][1]["point"][0] == "1/2");
  CHECK(j["half_dual"][1]["sign"] == -1);
}

TEST_CASE("exact rationals print reduced") {
  CHECK(to_string(Rational(36, 256)) == "9/64");
  CHECK(to_string(Rational(4, 2)) == "2");
  CHECK(isqrt(99) == 9);
  CHECK(isqrt(100) == 10);
}
