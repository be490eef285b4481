#include "vilab/bigfloat.hpp"

#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace vilab {

namespace {

void check_precision(mpfr_prec_t precision_bits) {
    if (precision_bits < MPFR_PREC_MIN || precision_bits > MPFR_PREC_MAX) {
        throw std::invalid_argument("bigfloat precision out of range: " +
                                    std::to_string(precision_bits));
    }
}

void check_same_precision(const BigFloat& a, const BigFloat& b) {
    if (a.precision() != b.precision()) {
        throw std::invalid_argument(
            "bigfloat precision mismatch: " + std::to_string(a.precision()) +
            " vs " + std::to_string(b.precision()));
    }
}

} // namespace

BigFloat::BigFloat(mpfr_prec_t precision_bits) {
    check_precision(precision_bits);
    mpfr_init2(v_, precision_bits);
    mpfr_set_zero(v_, 1);
}

BigFloat::BigFloat(const BigFloat& other) {
    mpfr_init2(v_, other.precision());
    mpfr_set(v_, other.v_, MPFR_RNDN);
}

BigFloat::BigFloat(BigFloat&& other) noexcept {
    // Leave the source valid: swap in a fresh minimal-precision zero.
    mpfr_init2(v_, MPFR_PREC_MIN);
    mpfr_set_zero(v_, 1);
    mpfr_swap(v_, other.v_);
}

BigFloat& BigFloat::operator=(const BigFloat& other) {
    if (this != &other) {
        mpfr_set_prec(v_, other.precision()); // also erases the old value
        mpfr_set(v_, other.v_, MPFR_RNDN);
    }
    return *this;
}

BigFloat& BigFloat::operator=(BigFloat&& other) noexcept {
    if (this != &other) {
        mpfr_swap(v_, other.v_);
    }
    return *this;
}

BigFloat::~BigFloat() {
    mpfr_clear(v_);
}

BigFloat BigFloat::from_long(long value, mpfr_prec_t precision_bits) {
    BigFloat r(precision_bits);
    mpfr_set_si(r.v_, value, MPFR_RNDN);
    return r;
}

BigFloat BigFloat::from_rational(const mpq_class& value, mpfr_prec_t precision_bits) {
    BigFloat r(precision_bits);
    mpfr_set_q(r.v_, value.get_mpq_t(), MPFR_RNDN);
    return r;
}

BigFloat BigFloat::exp_neg(long m, mpfr_prec_t precision_bits) {
    BigFloat r(precision_bits);
    mpfr_set_si(r.v_, -m, MPFR_RNDN);
    mpfr_exp(r.v_, r.v_, MPFR_RNDN);
    return r;
}

BigFloat BigFloat::add(const BigFloat& rhs) const {
    check_same_precision(*this, rhs);
    BigFloat r(precision());
    mpfr_add(r.v_, v_, rhs.v_, MPFR_RNDN);
    return r;
}

BigFloat BigFloat::sub(const BigFloat& rhs) const {
    check_same_precision(*this, rhs);
    BigFloat r(precision());
    mpfr_sub(r.v_, v_, rhs.v_, MPFR_RNDN);
    return r;
}

BigFloat BigFloat::mul(const BigFloat& rhs) const {
    check_same_precision(*this, rhs);
    BigFloat r(precision());
    mpfr_mul(r.v_, v_, rhs.v_, MPFR_RNDN);
    return r;
}

BigFloat BigFloat::div(const BigFloat& rhs) const {
    check_same_precision(*this, rhs);
    if (rhs.is_zero()) {
        throw std::domain_error("bigfloat division by zero");
    }
    BigFloat r(precision());
    mpfr_div(r.v_, v_, rhs.v_, MPFR_RNDN);
    return r;
}

BigFloat BigFloat::neg() const {
    BigFloat r(precision());
    mpfr_neg(r.v_, v_, MPFR_RNDN);
    return r;
}

BigFloat BigFloat::abs() const {
    BigFloat r(precision());
    mpfr_abs(r.v_, v_, MPFR_RNDN);
    return r;
}

BigFloat BigFloat::pow_ui(unsigned long exponent) const {
    BigFloat r(precision());
    mpfr_pow_ui(r.v_, v_, exponent, MPFR_RNDN);
    return r;
}

mpq_class BigFloat::to_rational() const {
    if (is_zero()) {
        return mpq_class(0);
    }
    mpz_class mantissa;
    mpfr_exp_t exp2 = mpfr_get_z_2exp(mantissa.get_mpz_t(), v_);
    mpq_class q(mantissa);
    if (exp2 >= 0) {
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 2, static_cast<unsigned long>(exp2));
        q *= mpq_class(scale);
    } else {
        mpz_class scale;
        mpz_ui_pow_ui(scale.get_mpz_t(), 2, static_cast<unsigned long>(-exp2));
        q /= mpq_class(scale);
    }
    q.canonicalize();
    return q;
}

std::string BigFloat::str() const {
    char* s = nullptr;
    if (mpfr_asprintf(&s, "%Ra@%ld", v_, static_cast<long>(precision())) < 0) {
        throw std::runtime_error("bigfloat formatting failed");
    }
    std::string out(s);
    mpfr_free_str(s);
    return out;
}

BigFloat BigFloat::parse(std::string_view text) {
    auto fail = [&](std::size_t pos, const std::string& what) -> BigFloat {
        throw std::runtime_error("bigfloat parse error at offset " + std::to_string(pos) +
                                 ": " + what + " in '" + std::string(text) + "'");
    };

    std::size_t at = text.rfind('@');
    if (at == std::string_view::npos) {
        return fail(text.size(), "missing '@precision' suffix");
    }
    std::string_view body = text.substr(0, at);
    std::string_view prec_part = text.substr(at + 1);
    if (prec_part.empty()) {
        return fail(at + 1, "empty precision");
    }
    long prec = 0;
    for (std::size_t i = 0; i < prec_part.size(); ++i) {
        char c = prec_part[i];
        if (c < '0' || c > '9') {
            return fail(at + 1 + i, "expected decimal digit in precision");
        }
        prec = prec * 10 + (c - '0');
        if (prec > MPFR_PREC_MAX) {
            return fail(at + 1, "precision out of range");
        }
    }
    if (prec < MPFR_PREC_MIN) {
        return fail(at + 1, "precision out of range");
    }

    std::size_t hex_at = body.starts_with("-") ? 1 : 0;
    if (body.size() < hex_at + 2 || body[hex_at] != '0' ||
        (body[hex_at + 1] != 'x' && body[hex_at + 1] != 'X')) {
        return fail(hex_at, "expected hexadecimal prefix '0x'");
    }

    BigFloat r(prec);
    std::string body_str(body);
    char* end = nullptr;
    mpfr_strtofr(r.v_, body_str.c_str(), &end, 0, MPFR_RNDN);
    if (end == body_str.c_str()) {
        return fail(0, "no digits");
    }
    if (*end != '\0') {
        return fail(static_cast<std::size_t>(end - body_str.c_str()), "trailing characters");
    }
    if (!mpfr_number_p(r.v_)) {
        return fail(0, "value is not finite");
    }
    return r;
}

} // namespace vilab
