#include "vilab/scalar.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <stdexcept>

namespace vilab {

namespace {

[[noreturn]] void throw_mismatch(const Backend& a, const Backend& b) {
    throw std::invalid_argument("backend mismatch: " + a.describe() + " vs " + b.describe());
}

void require_same_backend(const Scalar& a, const Scalar& b) {
    Backend ba = a.backend();
    Backend bb = b.backend();
    if (!(ba == bb)) {
        throw_mismatch(ba, bb);
    }
}

[[noreturn]] void throw_parse(std::string_view text, std::size_t pos, const std::string& what) {
    throw std::runtime_error("scalar parse error at offset " + std::to_string(pos) + ": " +
                             what + " in '" + std::string(text) + "'");
}

// Strict decimal integer with optional leading '-'; digits only.
mpz_class parse_decimal_integer(std::string_view text, std::string_view part,
                                std::size_t part_offset, bool allow_sign) {
    std::size_t i = 0;
    if (i < part.size() && part[i] == '-') {
        if (!allow_sign) {
            throw_parse(text, part_offset, "unexpected sign");
        }
        ++i;
    }
    if (i >= part.size()) {
        throw_parse(text, part_offset + i, "expected decimal digit");
    }
    for (; i < part.size(); ++i) {
        if (part[i] < '0' || part[i] > '9') {
            throw_parse(text, part_offset + i, "expected decimal digit");
        }
    }
    return mpz_class(std::string(part), 10);
}

} // namespace

std::string Backend::describe() const {
    switch (kind) {
    case BackendKind::Rational: return "rational";
    case BackendKind::BigFloat: return "bigfloat(" + std::to_string(precision_bits) + ")";
    case BackendKind::Double: return "double";
    }
    return "unknown";
}

Scalar Scalar::rational(long num, long den) {
    if (den == 0) {
        throw std::domain_error("rational with zero denominator");
    }
    mpq_class q(num, den);
    q.canonicalize();
    return Scalar(std::variant<mpq_class, BigFloat, double>(std::move(q)));
}

Scalar Scalar::rational(const mpq_class& q) {
    if (sgn(q.get_den()) == 0) {
        throw std::domain_error("rational with zero denominator");
    }
    mpq_class canon(q);
    canon.canonicalize();
    return Scalar(std::variant<mpq_class, BigFloat, double>(std::move(canon)));
}

Scalar Scalar::bigfloat(BigFloat b) {
    return Scalar(std::variant<mpq_class, BigFloat, double>(std::move(b)));
}

Scalar Scalar::of_double(double d) {
    if (!std::isfinite(d)) {
        throw std::invalid_argument("double scalar must be finite");
    }
    return Scalar(std::variant<mpq_class, BigFloat, double>(d));
}

Scalar Scalar::integer(long value, const Backend& backend) {
    switch (backend.kind) {
    case BackendKind::Rational:
        return rational(value, 1);
    case BackendKind::BigFloat:
        return bigfloat(BigFloat::from_long(value, backend.precision_bits));
    case BackendKind::Double:
        return of_double(static_cast<double>(value));
    }
    throw std::invalid_argument("unknown backend");
}

Backend Scalar::backend() const {
    if (std::holds_alternative<mpq_class>(value_)) {
        return Backend::rational();
    }
    if (std::holds_alternative<BigFloat>(value_)) {
        return Backend::bigfloat(std::get<BigFloat>(value_).precision());
    }
    return Backend::hardware_double();
}

Scalar Scalar::converted_to(const Backend& target) const {
    if (backend() == target) {
        return *this;
    }
    if (!std::holds_alternative<mpq_class>(value_)) {
        throw std::invalid_argument("only exact rationals convert between backends (have " +
                                    backend().describe() + ", want " + target.describe() + ")");
    }
    const mpq_class& q = std::get<mpq_class>(value_);
    switch (target.kind) {
    case BackendKind::Rational:
        return *this;
    case BackendKind::BigFloat:
        return bigfloat(BigFloat::from_rational(q, target.precision_bits));
    case BackendKind::Double: {
        mpfr_t t;
        mpfr_init2(t, 53);
        mpfr_set_q(t, q.get_mpq_t(), MPFR_RNDN);
        double d = mpfr_get_d(t, MPFR_RNDN);
        mpfr_clear(t);
        return of_double(d);
    }
    }
    throw std::invalid_argument("unknown backend");
}

bool Scalar::is_zero() const {
    return sign() == 0;
}

int Scalar::sign() const {
    if (const auto* q = std::get_if<mpq_class>(&value_)) {
        return sgn(*q);
    }
    if (const auto* b = std::get_if<BigFloat>(&value_)) {
        return b->sign();
    }
    double d = std::get<double>(value_);
    return (d > 0.0) - (d < 0.0);
}

int Scalar::cmp(const Scalar& rhs) const {
    require_same_backend(*this, rhs);
    if (const auto* q = std::get_if<mpq_class>(&value_)) {
        return ::cmp(*q, std::get<mpq_class>(rhs.value_));
    }
    if (const auto* b = std::get_if<BigFloat>(&value_)) {
        return b->cmp(std::get<BigFloat>(rhs.value_));
    }
    double a = std::get<double>(value_);
    double b = std::get<double>(rhs.value_);
    return (a > b) - (a < b);
}

double Scalar::to_double() const {
    if (const auto* q = std::get_if<mpq_class>(&value_)) {
        return q->get_d();
    }
    if (const auto* b = std::get_if<BigFloat>(&value_)) {
        return b->to_double();
    }
    return std::get<double>(value_);
}

const mpq_class& Scalar::as_rational() const {
    if (const auto* q = std::get_if<mpq_class>(&value_)) {
        return *q;
    }
    throw std::invalid_argument("scalar is not rational (is " + backend().describe() + ")");
}

const BigFloat& Scalar::as_bigfloat() const {
    if (const auto* b = std::get_if<BigFloat>(&value_)) {
        return *b;
    }
    throw std::invalid_argument("scalar is not bigfloat (is " + backend().describe() + ")");
}

std::string Scalar::str() const {
    if (const auto* q = std::get_if<mpq_class>(&value_)) {
        return q->get_num().get_str() + "/" + q->get_den().get_str();
    }
    if (const auto* b = std::get_if<BigFloat>(&value_)) {
        return b->str();
    }
    double d = std::get<double>(value_);
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, d);
    if (ec != std::errc{}) {
        throw std::runtime_error("double formatting failed");
    }
    return std::string(buf, end);
}

Scalar operator+(const Scalar& a, const Scalar& b) {
    require_same_backend(a, b);
    if (const auto* qa = std::get_if<mpq_class>(&a.value_)) {
        mpq_class r = *qa + std::get<mpq_class>(b.value_);
        r.canonicalize();
        return Scalar::rational(r);
    }
    if (const auto* ba = std::get_if<BigFloat>(&a.value_)) {
        return Scalar::bigfloat(ba->add(std::get<BigFloat>(b.value_)));
    }
    return Scalar::of_double(std::get<double>(a.value_) + std::get<double>(b.value_));
}

Scalar operator-(const Scalar& a, const Scalar& b) {
    require_same_backend(a, b);
    if (const auto* qa = std::get_if<mpq_class>(&a.value_)) {
        mpq_class r = *qa - std::get<mpq_class>(b.value_);
        r.canonicalize();
        return Scalar::rational(r);
    }
    if (const auto* ba = std::get_if<BigFloat>(&a.value_)) {
        return Scalar::bigfloat(ba->sub(std::get<BigFloat>(b.value_)));
    }
    return Scalar::of_double(std::get<double>(a.value_) - std::get<double>(b.value_));
}

Scalar operator*(const Scalar& a, const Scalar& b) {
    require_same_backend(a, b);
    if (const auto* qa = std::get_if<mpq_class>(&a.value_)) {
        mpq_class r = *qa * std::get<mpq_class>(b.value_);
        r.canonicalize();
        return Scalar::rational(r);
    }
    if (const auto* ba = std::get_if<BigFloat>(&a.value_)) {
        return Scalar::bigfloat(ba->mul(std::get<BigFloat>(b.value_)));
    }
    return Scalar::of_double(std::get<double>(a.value_) * std::get<double>(b.value_));
}

Scalar operator/(const Scalar& a, const Scalar& b) {
    require_same_backend(a, b);
    if (b.is_zero()) {
        throw std::domain_error("division by zero");
    }
    if (const auto* qa = std::get_if<mpq_class>(&a.value_)) {
        mpq_class r = *qa / std::get<mpq_class>(b.value_);
        r.canonicalize();
        return Scalar::rational(r);
    }
    if (const auto* ba = std::get_if<BigFloat>(&a.value_)) {
        return Scalar::bigfloat(ba->div(std::get<BigFloat>(b.value_)));
    }
    return Scalar::of_double(std::get<double>(a.value_) / std::get<double>(b.value_));
}

Scalar operator-(const Scalar& a) {
    if (const auto* qa = std::get_if<mpq_class>(&a.value_)) {
        return Scalar::rational(mpq_class(-*qa));
    }
    if (const auto* ba = std::get_if<BigFloat>(&a.value_)) {
        return Scalar::bigfloat(ba->neg());
    }
    return Scalar::of_double(-std::get<double>(a.value_));
}

Scalar abs(const Scalar& x) {
    return x.sign() < 0 ? -x : x;
}

Scalar pow(const Scalar& base, unsigned long exponent) {
    Backend b = base.backend();
    Scalar zero = Scalar::zero(b);
    Scalar one = Scalar::one(b);
    if (!(base > zero && base < one)) {
        throw std::invalid_argument("pow requires 0 < base < 1, got " + base.str());
    }
    switch (b.kind) {
    case BackendKind::Rational: {
        const mpq_class& q = base.as_rational();
        mpq_class r;
        mpz_pow_ui(r.get_num_mpz_t(), q.get_num_mpz_t(), exponent);
        mpz_pow_ui(r.get_den_mpz_t(), q.get_den_mpz_t(), exponent);
        r.canonicalize(); // already coprime, but keep the invariant airtight
        return Scalar::rational(r);
    }
    case BackendKind::BigFloat:
        return Scalar::bigfloat(base.as_bigfloat().pow_ui(exponent));
    case BackendKind::Double:
        return Scalar::of_double(std::pow(base.to_double(), static_cast<double>(exponent)));
    }
    throw std::invalid_argument("unknown backend");
}

Scalar exp_neg(long m, const Backend& backend) {
    if (m < 1) {
        throw std::invalid_argument("exp_neg requires m >= 1, got " + std::to_string(m));
    }
    switch (backend.kind) {
    case BackendKind::Rational:
        throw std::domain_error("exp_neg(" + std::to_string(m) +
                                "): irrational value unrepresentable under the rational "
                                "backend; use the dyadic reward variant instead");
    case BackendKind::BigFloat:
        return Scalar::bigfloat(BigFloat::exp_neg(m, backend.precision_bits));
    case BackendKind::Double:
        return Scalar::of_double(std::exp(static_cast<double>(-m)));
    }
    throw std::invalid_argument("unknown backend");
}

Scalar parse_scalar(std::string_view text, const Backend& backend) {
    if (text.empty()) {
        throw_parse(text, 0, "empty scalar");
    }
    switch (backend.kind) {
    case BackendKind::Rational: {
        std::size_t slash = text.find('/');
        if (slash == std::string_view::npos) {
            throw_parse(text, text.size(), "expected 'p/q'");
        }
        mpz_class num = parse_decimal_integer(text, text.substr(0, slash), 0, true);
        std::string_view den_part = text.substr(slash + 1);
        mpz_class den = parse_decimal_integer(text, den_part, slash + 1, false);
        if (sgn(den) == 0) {
            throw_parse(text, slash + 1, "zero denominator");
        }
        mpq_class q(num, den);
        q.canonicalize();
        return Scalar::rational(q);
    }
    case BackendKind::BigFloat: {
        BigFloat b = BigFloat::parse(text);
        if (b.precision() != backend.precision_bits) {
            throw_parse(text, text.rfind('@') + 1,
                        "precision " + std::to_string(b.precision()) +
                            " does not match backend bigfloat(" +
                            std::to_string(backend.precision_bits) + ")");
        }
        return Scalar::bigfloat(std::move(b));
    }
    case BackendKind::Double: {
        std::string s(text);
        errno = 0;
        char* end = nullptr;
        double d = std::strtod(s.c_str(), &end);
        if (end == s.c_str()) {
            throw_parse(text, 0, "expected decimal number");
        }
        if (*end != '\0') {
            throw_parse(text, static_cast<std::size_t>(end - s.c_str()), "trailing characters");
        }
        if (errno == ERANGE || !std::isfinite(d)) {
            throw_parse(text, 0, "value out of double range");
        }
        return Scalar::of_double(d);
    }
    }
    throw std::invalid_argument("unknown backend");
}

} // namespace vilab
