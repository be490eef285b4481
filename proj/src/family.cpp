#include "vilab/family.hpp"

#include <bit>
#include <stdexcept>

namespace vilab {

namespace {

constexpr mpfr_prec_t kMaxIntervalPrec = mpfr_prec_t(1) << 22;

// Sign of s*ln(beta) + M for rational beta in (0,1), s >= 0, M >= 1, decided
// by outward-rounded interval evaluation at doubling precision. The quantity
// is never exactly zero: s*ln(beta) = -M with integer s >= 1 would make
// ln(beta) rational.
int sign_of_s_log_beta_plus_m(const mpq_class& beta, long s, long m) {
    if (s == 0) {
        return (m > 0) - (m < 0);
    }
    for (mpfr_prec_t prec = 128; prec <= kMaxIntervalPrec; prec *= 2) {
        mpfr_t lo, hi;
        mpfr_init2(lo, prec);
        mpfr_init2(hi, prec);
        mpfr_set_q(lo, beta.get_mpq_t(), MPFR_RNDD);
        mpfr_log(lo, lo, MPFR_RNDD);
        mpfr_mul_si(lo, lo, s, MPFR_RNDD);
        mpfr_add_si(lo, lo, m, MPFR_RNDD);
        mpfr_set_q(hi, beta.get_mpq_t(), MPFR_RNDU);
        mpfr_log(hi, hi, MPFR_RNDU);
        mpfr_mul_si(hi, hi, s, MPFR_RNDU);
        mpfr_add_si(hi, hi, m, MPFR_RNDU);
        int lo_sign = mpfr_sgn(lo);
        int hi_sign = mpfr_sgn(hi);
        mpfr_clear(lo);
        mpfr_clear(hi);
        if (lo_sign > 0) {
            return 1;
        }
        if (hi_sign < 0) {
            return -1;
        }
    }
    throw std::logic_error("interval refinement failed to separate s*ln(beta)+M from zero");
}

// True when beta^s <= eps_k for the given variant (the greedy comparison
// underlying the switch), decided exactly.
bool beta_power_at_most_eps(const FamilyParams& params, long s) {
    const mpq_class& beta = params.beta.as_rational();
    long mk = params.M.back();
    if (params.variant == RewardVariant::Dyadic) {
        // beta^s <= 2^{-M}  <=>  num^s * 2^M <= den^s, all exact integers.
        mpz_class lhs, rhs;
        mpz_pow_ui(lhs.get_mpz_t(), beta.get_num_mpz_t(), static_cast<unsigned long>(s));
        mpz_mul_2exp(lhs.get_mpz_t(), lhs.get_mpz_t(), static_cast<unsigned long>(mk));
        mpz_pow_ui(rhs.get_mpz_t(), beta.get_den_mpz_t(), static_cast<unsigned long>(s));
        return lhs <= rhs;
    }
    // beta^s <= e^{-M}  <=>  s*ln(beta) + M <= 0.
    return sign_of_s_log_beta_plus_m(beta, s, mk) < 0;
}

// ceil(M / (-ln beta)) via outward-rounded interval division; refined until
// both interval ends agree on the ceiling.
long ceil_threshold_exp(const mpq_class& beta, long m) {
    for (mpfr_prec_t prec = 128; prec <= kMaxIntervalPrec; prec *= 2) {
        mpfr_t log_lo, log_hi, t_lo, t_hi;
        mpfr_init2(log_lo, prec);
        mpfr_init2(log_hi, prec);
        mpfr_init2(t_lo, prec);
        mpfr_init2(t_hi, prec);
        mpfr_set_q(log_lo, beta.get_mpq_t(), MPFR_RNDD);
        mpfr_log(log_lo, log_lo, MPFR_RNDD);
        mpfr_set_q(log_hi, beta.get_mpq_t(), MPFR_RNDU);
        mpfr_log(log_hi, log_hi, MPFR_RNDU);
        mpfr_neg(log_lo, log_lo, MPFR_RNDN); // exact; now an upper bound of -ln(beta)
        mpfr_neg(log_hi, log_hi, MPFR_RNDN); // exact; now a lower bound of -ln(beta)
        mpfr_set_si(t_lo, m, MPFR_RNDD);
        mpfr_div(t_lo, t_lo, log_lo, MPFR_RNDD);
        mpfr_set_si(t_hi, m, MPFR_RNDU);
        mpfr_div(t_hi, t_hi, log_hi, MPFR_RNDU);
        mpz_class c_lo, c_hi;
        mpfr_get_z(c_lo.get_mpz_t(), t_lo, MPFR_RNDU); // ceil
        mpfr_get_z(c_hi.get_mpz_t(), t_hi, MPFR_RNDU);
        bool agreed = (c_lo == c_hi) && c_lo.fits_slong_p();
        long result = agreed ? c_lo.get_si() : 0;
        mpfr_clear(log_lo);
        mpfr_clear(log_hi);
        mpfr_clear(t_lo);
        mpfr_clear(t_hi);
        if (agreed) {
            return result;
        }
    }
    throw std::logic_error("interval refinement failed for ceil(M/(-ln beta))");
}

// ceil(M * log2(e)) = ceil(M / ln 2), by the same interval scheme.
long ceil_m_log2_e(long m) {
    for (mpfr_prec_t prec = 128; prec <= kMaxIntervalPrec; prec *= 2) {
        mpfr_t ln2_lo, ln2_hi, t_lo, t_hi;
        mpfr_init2(ln2_lo, prec);
        mpfr_init2(ln2_hi, prec);
        mpfr_init2(t_lo, prec);
        mpfr_init2(t_hi, prec);
        mpfr_const_log2(ln2_lo, MPFR_RNDD);
        mpfr_const_log2(ln2_hi, MPFR_RNDU);
        mpfr_set_si(t_lo, m, MPFR_RNDD);
        mpfr_div(t_lo, t_lo, ln2_hi, MPFR_RNDD);
        mpfr_set_si(t_hi, m, MPFR_RNDU);
        mpfr_div(t_hi, t_hi, ln2_lo, MPFR_RNDU);
        mpz_class c_lo, c_hi;
        mpfr_get_z(c_lo.get_mpz_t(), t_lo, MPFR_RNDU);
        mpfr_get_z(c_hi.get_mpz_t(), t_hi, MPFR_RNDU);
        bool agreed = (c_lo == c_hi) && c_lo.fits_slong_p();
        long result = agreed ? c_lo.get_si() : 0;
        mpfr_clear(ln2_lo);
        mpfr_clear(ln2_hi);
        mpfr_clear(t_lo);
        mpfr_clear(t_hi);
        if (agreed) {
            return result;
        }
    }
    throw std::logic_error("interval refinement failed for ceil(M*log2(e))");
}

// ceil(e^x) for integer x >= 1 (e^x is never an integer).
long ceil_exp_of(long x) {
    for (mpfr_prec_t prec = 128; prec <= kMaxIntervalPrec; prec *= 2) {
        mpfr_t lo, hi;
        mpfr_init2(lo, prec);
        mpfr_init2(hi, prec);
        mpfr_set_si(lo, x, MPFR_RNDN); // exact
        mpfr_exp(hi, lo, MPFR_RNDU);
        mpfr_exp(lo, lo, MPFR_RNDD);
        mpz_class c_lo, c_hi;
        mpfr_get_z(c_lo.get_mpz_t(), lo, MPFR_RNDU);
        mpfr_get_z(c_hi.get_mpz_t(), hi, MPFR_RNDU);
        bool agreed = (c_lo == c_hi) && c_lo.fits_slong_p();
        long result = agreed ? c_lo.get_si() : 0;
        mpfr_clear(lo);
        mpfr_clear(hi);
        if (agreed) {
            return result;
        }
    }
    throw std::logic_error("interval refinement failed for ceil(e^x)");
}

long ceil_log2_long(long value) {
    // value >= 1; smallest c with 2^c >= value.
    return std::bit_width(static_cast<unsigned long>(value - 1));
}

Scalar epsilon_for(const FamilyParams& params, long m, const Backend& backend) {
    if (params.variant == RewardVariant::Dyadic) {
        return pow(Scalar::rational(1, 2).converted_to(backend),
                   static_cast<unsigned long>(m));
    }
    return exp_neg(m, backend);
}

} // namespace

std::string reward_variant_name(RewardVariant variant) {
    return variant == RewardVariant::Exp ? "exp" : "dyadic";
}

void check_params(const FamilyParams& params) {
    if (params.k < 1) {
        throw std::invalid_argument("family parameter k must be >= 1, got " +
                                    std::to_string(params.k));
    }
    if (static_cast<int>(params.M.size()) != params.k) {
        throw std::invalid_argument("family parameter M must have length k=" +
                                    std::to_string(params.k) + ", got " +
                                    std::to_string(params.M.size()));
    }
    long prev = 0;
    for (long m : params.M) {
        if (m < 1) {
            throw std::invalid_argument("family parameters M must all be >= 1");
        }
        if (m <= prev) {
            throw std::invalid_argument("family parameters M must be strictly increasing");
        }
        prev = m;
    }
    if (!(params.beta.backend() == Backend::rational())) {
        throw std::invalid_argument("family parameter beta must be an exact rational");
    }
    Scalar zero = Scalar::rational(0, 1);
    Scalar one = Scalar::rational(1, 1);
    if (!(params.beta > zero && params.beta < one)) {
        throw std::invalid_argument("family parameter beta must satisfy 0 < beta < 1, got " +
                                    params.beta.str());
    }
    if (params.variant == RewardVariant::Dyadic) {
        if (params.backend.kind != BackendKind::Rational) {
            throw std::invalid_argument(
                "the dyadic reward variant runs on the exact rational backend, got " +
                params.backend.describe());
        }
    } else {
        if (params.backend.kind == BackendKind::Rational) {
            throw std::invalid_argument(
                "exp rewards are irrational and need a bigfloat or double backend; "
                "use the dyadic reward variant for exact rational runs");
        }
        if (params.backend.kind == BackendKind::BigFloat && params.backend.precision_bits < 2) {
            throw std::invalid_argument("bigfloat precision must be >= 2");
        }
    }
}

Mdp build_family(const FamilyParams& params) {
    check_params(params);
    const Backend& be = params.backend;
    Mdp mdp;
    mdp.n = 3;
    mdp.backend = be;
    mdp.discount = params.beta.converted_to(be);

    mdp.action_sets.resize(3);
    for (ActionId a = 0; a <= params.k; ++a) {
        mdp.action_sets[0].push_back(a);
    }
    mdp.action_sets[1] = {0};
    mdp.action_sets[2] = {0};

    Scalar one = Scalar::one(be);
    Scalar zero = Scalar::zero(be);
    mdp.transitions[{1, 0}] = {{3, one}};
    for (int i = 1; i <= params.k; ++i) {
        mdp.transitions[{1, i}] = {{2, one}};
    }
    mdp.transitions[{2, 0}] = {{2, one}};
    mdp.transitions[{3, 0}] = {{3, one}};

    // r(1, i) = (beta/(1-beta)) * (1 - eps_i) for i >= 1.
    Scalar beta_hat = mdp.discount;
    Scalar gain = beta_hat / (one - beta_hat);
    mdp.rewards[{1, 0}] = zero;
    for (int i = 1; i <= params.k; ++i) {
        Scalar eps = epsilon_for(params, params.M[static_cast<std::size_t>(i - 1)], be);
        mdp.rewards[{1, i}] = gain * (one - eps);
    }
    mdp.rewards[{2, 0}] = zero;
    mdp.rewards[{3, 0}] = one;
    return mdp;
}

ValueFunction closed_form_values(const FamilyParams& params, long j) {
    check_params(params);
    if (j < 0) {
        throw std::invalid_argument("iterate index must be >= 0, got " + std::to_string(j));
    }
    const Backend& be = params.backend;
    if (j == 0) {
        return ValueFunction::zeros(3, be);
    }
    Scalar one = Scalar::one(be);
    Scalar beta_hat = params.beta.converted_to(be);
    Scalar denom = one - beta_hat;
    Scalar eps_k = epsilon_for(params, params.M.back(), be);

    Scalar keep = beta_hat * (one - pow(beta_hat, static_cast<unsigned long>(j - 1))) / denom;
    Scalar leave = (beta_hat / denom) * (one - eps_k);
    ValueFunction v = ValueFunction::zeros(3, be);
    v.values[0] = keep > leave ? keep : leave;
    v.values[1] = Scalar::zero(be);
    v.values[2] = (one - pow(beta_hat, static_cast<unsigned long>(j))) / denom;
    return v;
}

long predicted_switch_iteration(const FamilyParams& params) {
    check_params(params);
    long mk = params.M.back();
    if (params.variant == RewardVariant::Dyadic) {
        // Exact binary search for the smallest s >= 0 with beta^s <= 2^{-M_k}.
        long lo = 0;
        long hi = 1;
        while (!beta_power_at_most_eps(params, hi)) {
            if (hi > (1L << 26)) {
                throw std::logic_error("dyadic switch search exceeded 2^26 iterations");
            }
            lo = hi;
            hi *= 2;
        }
        while (lo < hi) {
            long mid = lo + (hi - lo) / 2;
            if (beta_power_at_most_eps(params, mid)) {
                hi = mid;
            } else {
                lo = mid + 1;
            }
        }
        return lo + 1; // s = j - 1
    }

    // Exp variant: candidate j* = 1 + ceil(M_k / (-ln beta)) from outward
    // interval arithmetic, then confirm the defining comparison and nudge by
    // one if the confirmation disagrees.
    long candidate = 1 + ceil_threshold_exp(params.beta.as_rational(), mk);
    for (int attempt = 0; attempt < 2; ++attempt) {
        long s = candidate - 1;
        bool holds_at_s = s >= 0 && beta_power_at_most_eps(params, s);
        bool first = holds_at_s && (s == 0 || !beta_power_at_most_eps(params, s - 1));
        if (first) {
            return candidate;
        }
        candidate += holds_at_s ? -1 : 1;
    }
    throw std::logic_error("switch-iteration confirmation failed twice");
}

bool exceeds_switch_lower_bound(const FamilyParams& params, long j) {
    check_params(params);
    if (j < 1) {
        return false;
    }
    long mk = params.M.back();
    if (params.variant == RewardVariant::Dyadic) {
        // j > M ln2/(-ln beta)  <=>  beta^j < 2^{-M}, exactly.
        const mpq_class& beta = params.beta.as_rational();
        mpz_class lhs, rhs;
        mpz_pow_ui(lhs.get_mpz_t(), beta.get_num_mpz_t(), static_cast<unsigned long>(j));
        mpz_mul_2exp(lhs.get_mpz_t(), lhs.get_mpz_t(), static_cast<unsigned long>(mk));
        mpz_pow_ui(rhs.get_mpz_t(), beta.get_den_mpz_t(), static_cast<unsigned long>(j));
        return lhs < rhs;
    }
    // j > M/(-ln beta)  <=>  j ln(beta) + M < 0.
    return sign_of_s_log_beta_plus_m(params.beta.as_rational(), j, mk) < 0;
}

mpfr_prec_t required_precision_bits(const FamilyParams& params) {
    check_params(params);
    if (params.variant != RewardVariant::Exp) {
        throw std::invalid_argument(
            "precision sizing applies to the exp reward variant only; "
            "the dyadic variant is exact and needs none");
    }
    long j_star = predicted_switch_iteration(params);
    long bits = ceil_m_log2_e(params.M.back()) + ceil_log2_long(j_star) + 64;
    return static_cast<mpfr_prec_t>(bits);
}

std::vector<FamilyParams> exponential_family(int k_max, const Scalar& beta) {
    if (k_max < 1) {
        throw std::invalid_argument("k_max must be >= 1, got " + std::to_string(k_max));
    }
    std::vector<long> m_values;
    for (int i = 1; i <= k_max; ++i) {
        m_values.push_back(ceil_exp_of(i + 3));
    }
    std::vector<FamilyParams> out;
    for (int k = 1; k <= k_max; ++k) {
        FamilyParams params;
        params.k = k;
        params.M.assign(m_values.begin(), m_values.begin() + k);
        params.beta = beta;
        params.variant = RewardVariant::Exp;
        params.backend = Backend::bigfloat(64); // placeholder for sizing
        params.backend = Backend::bigfloat(required_precision_bits(params));
        out.push_back(std::move(params));
    }
    return out;
}

Policy family_optimal_policy() {
    return Policy{{0, 0, 0}};
}

Policy family_policy_choosing(ActionId a) {
    return Policy{{a, 0, 0}};
}

ordered_json family_params_to_json(const FamilyParams& params) {
    ordered_json j;
    j["k"] = params.k;
    j["M"] = params.M;
    j["beta"] = params.beta.str();
    j["variant"] = reward_variant_name(params.variant);
    if (params.backend.kind == BackendKind::BigFloat) {
        j["precision_bits"] = static_cast<long>(params.backend.precision_bits);
    }
    bool default_backend =
        (params.variant == RewardVariant::Dyadic && params.backend.kind == BackendKind::Rational) ||
        (params.variant == RewardVariant::Exp && params.backend.kind == BackendKind::BigFloat);
    if (!default_backend) {
        j["backend"] = params.backend.kind == BackendKind::Rational
                           ? "rational"
                           : (params.backend.kind == BackendKind::BigFloat ? "bigfloat" : "double");
    }
    return j;
}

FamilyParams family_params_from_json(const ordered_json& j) {
    const std::string ctx = "family-params";
    if (!j.is_object()) {
        throw std::runtime_error(ctx + ": expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (key != "k" && key != "M" && key != "beta" && key != "variant" &&
            key != "precision_bits" && key != "backend") {
            throw std::runtime_error(ctx + ": unknown field '" + key + "'");
        }
    }
    auto need = [&](const char* key) -> const ordered_json& {
        auto it = j.find(key);
        if (it == j.end()) {
            throw std::runtime_error(ctx + ": missing field '" + std::string(key) + "'");
        }
        return *it;
    };

    FamilyParams params;
    if (!need("k").is_number_integer()) {
        throw std::runtime_error(ctx + ".k: expected an integer");
    }
    params.k = need("k").get<int>();
    if (!need("M").is_array()) {
        throw std::runtime_error(ctx + ".M: expected an array of integers");
    }
    for (const auto& item : need("M")) {
        if (!item.is_number_integer()) {
            throw std::runtime_error(ctx + ".M: expected an array of integers");
        }
        params.M.push_back(item.get<long>());
    }
    if (!need("beta").is_string()) {
        throw std::runtime_error(ctx + ".beta: expected a scalar string");
    }
    params.beta = parse_scalar(need("beta").get<std::string>(), Backend::rational());
    std::string variant = need("variant").is_string() ? need("variant").get<std::string>() : "";
    if (variant == "exp") {
        params.variant = RewardVariant::Exp;
    } else if (variant == "dyadic") {
        params.variant = RewardVariant::Dyadic;
    } else {
        throw std::runtime_error(ctx + ".variant: expected \"exp\" or \"dyadic\"");
    }

    std::string backend_name = params.variant == RewardVariant::Exp ? "bigfloat" : "rational";
    if (j.contains("backend")) {
        if (!j["backend"].is_string()) {
            throw std::runtime_error(ctx + ".backend: expected a string");
        }
        backend_name = j["backend"].get<std::string>();
    }
    if (backend_name == "rational") {
        params.backend = Backend::rational();
    } else if (backend_name == "double") {
        params.backend = Backend::hardware_double();
    } else if (backend_name != "bigfloat") {
        throw std::runtime_error(ctx + ".backend: unknown backend '" + backend_name + "'");
    }

    if (j.contains("precision_bits")) {
        if (backend_name != "bigfloat") {
            throw std::runtime_error(ctx +
                                     ".precision_bits: only valid for the bigfloat backend");
        }
        if (!j["precision_bits"].is_number_integer()) {
            throw std::runtime_error(ctx + ".precision_bits: expected an integer");
        }
        long p = j["precision_bits"].get<long>();
        if (p < MPFR_PREC_MIN || p > (1L << 24)) {
            throw std::runtime_error(ctx + ".precision_bits: out of range");
        }
        params.backend = Backend::bigfloat(static_cast<mpfr_prec_t>(p));
    } else if (backend_name == "bigfloat") {
        params.backend = Backend::bigfloat(64); // placeholder
        if (params.variant == RewardVariant::Exp) {
            // Size the precision from the parameters themselves.
            params.backend = Backend::bigfloat(required_precision_bits(params));
        }
        // A dyadic/bigfloat combination falls through to check_params below.
    }

    check_params(params);
    return params;
}

} // namespace vilab
