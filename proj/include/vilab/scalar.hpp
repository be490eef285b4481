#pragma once

#include "vilab/bigfloat.hpp"

#include <gmpxx.h>

#include <string>
#include <string_view>
#include <variant>

namespace vilab {

enum class BackendKind { Rational, BigFloat, Double };

/**
 * Arithmetic backend descriptor. A whole model (discounts, probabilities,
 * rewards, value functions) lives under a single backend; mixing backends
 * in one expression is an error, never an implicit conversion.
 */
struct Backend {
    BackendKind kind = BackendKind::Rational;
    mpfr_prec_t precision_bits = 0; // meaningful only for BigFloat

    static Backend rational() { return {BackendKind::Rational, 0}; }
    static Backend bigfloat(mpfr_prec_t precision_bits) {
        return {BackendKind::BigFloat, precision_bits};
    }
    static Backend hardware_double() { return {BackendKind::Double, 0}; }

    bool operator==(const Backend&) const = default;

    std::string describe() const; // "rational", "bigfloat(128)", "double"
};

/**
 * A number under one of the three backends:
 *
 *  - Rational: exact arbitrary-precision p/q, kept canonical
 *    (lowest terms, positive denominator);
 *  - BigFloat: binary float of explicit precision, round-to-nearest-even;
 *  - Double: hardware IEEE-754 binary64.
 *
 * Operations require both operands on the same backend (same precision for
 * BigFloat) and throw std::invalid_argument otherwise. Division by zero
 * throws std::domain_error on every backend.
 */
class Scalar {
public:
    /// Rational zero.
    Scalar() : value_(mpq_class(0)) {}

    static Scalar rational(long num, long den);
    static Scalar rational(const mpq_class& q);
    static Scalar bigfloat(BigFloat b);
    static Scalar of_double(double d);
    /// The integer `value` represented under `backend`.
    static Scalar integer(long value, const Backend& backend);
    static Scalar zero(const Backend& backend) { return integer(0, backend); }
    static Scalar one(const Backend& backend) { return integer(1, backend); }

    Backend backend() const;

    /// Rounds an exact rational into `target`. Identity when `target` is the
    /// rational backend; any other source backend is rejected.
    Scalar converted_to(const Backend& target) const;

    bool is_zero() const;
    int sign() const;
    /// Three-way comparison: -1, 0, +1. Backends must match.
    int cmp(const Scalar& rhs) const;

    double to_double() const;
    const mpq_class& as_rational() const;
    const BigFloat& as_bigfloat() const;

    /// Canonical string form:
    ///   rational  "p/q"               e.g. "9/10", "-3/4", "0/1"
    ///   bigfloat  hex float + "@bits" e.g. "0x1.8p-1@64"
    ///   double    shortest round-trip decimal, e.g. "0.1"
    std::string str() const;

    friend Scalar operator+(const Scalar& a, const Scalar& b);
    friend Scalar operator-(const Scalar& a, const Scalar& b);
    friend Scalar operator*(const Scalar& a, const Scalar& b);
    friend Scalar operator/(const Scalar& a, const Scalar& b);
    friend Scalar operator-(const Scalar& a);

private:
    explicit Scalar(std::variant<mpq_class, BigFloat, double> v) : value_(std::move(v)) {}
    std::variant<mpq_class, BigFloat, double> value_;
};

inline bool operator==(const Scalar& a, const Scalar& b) { return a.cmp(b) == 0; }
inline bool operator!=(const Scalar& a, const Scalar& b) { return a.cmp(b) != 0; }
inline bool operator<(const Scalar& a, const Scalar& b) { return a.cmp(b) < 0; }
inline bool operator<=(const Scalar& a, const Scalar& b) { return a.cmp(b) <= 0; }
inline bool operator>(const Scalar& a, const Scalar& b) { return a.cmp(b) > 0; }
inline bool operator>=(const Scalar& a, const Scalar& b) { return a.cmp(b) >= 0; }

Scalar abs(const Scalar& x);

/// base^exponent by repeated squaring; requires 0 < base < 1.
Scalar pow(const Scalar& base, unsigned long exponent);

/// e^{-m} for integer m >= 1 under `backend`. Exact rationals cannot
/// represent it, so the rational backend is rejected with a hint to use the
/// dyadic reward variant instead.
Scalar exp_neg(long m, const Backend& backend);

/// Parses the str() grammar for `backend`; the string's own backend markers
/// (a '/', an '@') must agree with it. Throws std::runtime_error carrying the
/// offending offset.
Scalar parse_scalar(std::string_view text, const Backend& backend);

} // namespace vilab
