#pragma once

// Independent oracles for the test suite. Everything here is computed with
// plain GMP/IEEE arithmetic and simple textbook algorithms, deliberately
// sharing no code with the library under test.

#include <gmpxx.h>

#include <array>
#include <optional>
#include <vector>

namespace oracle {

// Certified rational enclosure of e^{-m} from the alternating Taylor series
// sum (-m)^n / n!: once n exceeds m the terms decrease, so the truncation
// error is bounded by the first omitted term. Guarantees
// lo <= e^{-m} <= hi and hi - lo <= 2^{1-min_tail_bits}.
struct RationalInterval {
    mpq_class lo;
    mpq_class hi;
};
RationalInterval exp_neg_enclosure(long m, long min_tail_bits);

// base^exponent by literal repeated multiplication (no squaring tricks).
mpq_class pow_by_repeated_multiplication(const mpq_class& base, unsigned long exponent);

// Exact rational value iteration on the three-state adversarial family with
// dyadic rewards r(1,i) = (beta/(1-beta))(1 - 2^{-M_i}), written directly
// from the transition diagram:
//   v1' = max(beta*v3, max_i r(1,i) + beta*v2),  v2' = beta*v2,
//   v3' = 1 + beta*v3.
// Returns iterates j = 0..jmax and the greedy action at state 1 for each
// j = 1..jmax (ties to the lowest action index).
struct FamilyTrajectory {
    std::vector<std::array<mpq_class, 3>> v;
    std::vector<int> greedy1;
};
FamilyTrajectory dyadic_family_vi(int k, const std::vector<long>& m_values,
                                  const mpq_class& beta, long jmax);

// First j >= 1 whose greedy action at state 1 is 0, scanning to max_iter.
std::optional<long> dyadic_family_switch(int k, const std::vector<long>& m_values,
                                         const mpq_class& beta, long max_iter);

// The same measurement in plain IEEE double arithmetic with
// r(1,i) = (beta/(1-beta))(1 - exp(-M_i)).
std::optional<long> double_family_switch(int k, const std::vector<long>& m_values, double beta,
                                         long max_iter);

// Solves A x = b over exact rationals by Cramer's rule with
// Laplace-expansion determinants; practical for n <= 6.
std::vector<mpq_class> cramer_solve(const std::vector<std::vector<mpq_class>>& a,
                                    const std::vector<mpq_class>& b);

} // namespace oracle
