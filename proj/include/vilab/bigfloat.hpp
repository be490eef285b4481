#pragma once

#include <mpfr.h>
#include <gmpxx.h>

#include <string>
#include <string_view>

namespace vilab {

/**
 * Arbitrary-precision binary floating-point value backed by MPFR.
 *
 * Every value carries its own precision, fixed at construction. All
 * operations round to nearest, ties to even, and require operands of
 * equal precision (enforced by the Scalar layer, asserted here).
 */
class BigFloat {
public:
    explicit BigFloat(mpfr_prec_t precision_bits);
    BigFloat(const BigFloat& other);
    BigFloat(BigFloat&& other) noexcept;
    BigFloat& operator=(const BigFloat& other);
    BigFloat& operator=(BigFloat&& other) noexcept;
    ~BigFloat();

    static BigFloat from_long(long value, mpfr_prec_t precision_bits);
    /// Rounds an exact rational to the requested precision.
    static BigFloat from_rational(const mpq_class& value, mpfr_prec_t precision_bits);
    /// e^{-m}, correctly rounded at the requested precision.
    static BigFloat exp_neg(long m, mpfr_prec_t precision_bits);

    mpfr_prec_t precision() const { return mpfr_get_prec(v_); }

    BigFloat add(const BigFloat& rhs) const;
    BigFloat sub(const BigFloat& rhs) const;
    BigFloat mul(const BigFloat& rhs) const;
    BigFloat div(const BigFloat& rhs) const;   // rhs must be nonzero
    BigFloat neg() const;
    BigFloat abs() const;
    BigFloat pow_ui(unsigned long exponent) const;

    int cmp(const BigFloat& rhs) const { return mpfr_cmp(v_, rhs.v_); }
    int sign() const { return mpfr_sgn(v_); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }

    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    /// Exact conversion; every finite binary float is a rational.
    mpq_class to_rational() const;

    /// Hex significand/exponent form with precision suffix: "0x1.8p-1@64".
    std::string str() const;
    /// Parses the str() form. Throws std::runtime_error with the offending
    /// offset on malformed input.
    static BigFloat parse(std::string_view text);

    mpfr_srcptr raw() const { return v_; }
    mpfr_ptr raw() { return v_; }

private:
    mpfr_t v_;
};

} // namespace vilab
