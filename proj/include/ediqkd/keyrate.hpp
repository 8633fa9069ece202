#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "adversary.hpp"
#include "numerics.hpp"

namespace ediqkd {

// Base of the logarithms in the finite-size correction terms. Entropies are
// always in bits; `decimal` is the reading under which the reference EDIQKD
// comparison numbers are reproduced.
enum class LogBase { binary, decimal };

struct FiniteKeyParams {
    double n = 1e6;
    double gamma = 1e-2;
    double eps_s = 1e-5;
    double eps_ec = 1e-2;
    double eps_ec_prime = 1e-2;
    double eps_pa = 1e-2;
    double eps_pe = 1e-2; // CHSH estimation confidence, DIQKD baseline only
    LogBase log_base = LogBase::binary;

    void validate() const {
        if (!(n > 0)) throw domain_error("FiniteKeyParams: n must be positive");
        if (!(gamma > 0 && gamma < 1)) throw domain_error("FiniteKeyParams: gamma outside (0,1)");
        for (double e : {eps_s, eps_ec, eps_ec_prime, eps_pa, eps_pe})
            if (!(e > 0 && e <= 1)) throw domain_error("FiniteKeyParams: epsilon outside (0,1]");
    }

    double log(double x) const { return log_base == LogBase::binary ? std::log2(x) : std::log10(x); }
    FiniteKeyParams with_n(double nn) const {
        FiniteKeyParams p = *this;
        p.n = nn;
        return p;
    }
};

struct RateTerms {
    double key_bias = 0;     // 1 - H(A): entropy missing from a non-uniform raw key bit
    double i_ab_deficit = 0; // (1-gamma) h(Q) + gamma h(test statistic)
    double i_ae = 0;         // Eve's information per key bit
    double leak_sqrt = 0;    // sqrt(n) error-correction term / n
    double leak_const = 0;   // constant error-correction terms / n
    double smoothing = 0;    // sqrt(n) smoothing term / n
    double pa = 0;           // privacy-amplification term / n
};

struct RateResult {
    double raw = 0;  // unclamped bound
    double r = 0;    // max(raw, 0)
    double l = 0;    // r n
    RateTerms terms;

    double sum_of_terms() const {
        return 1.0 - terms.key_bias - terms.i_ab_deficit - terms.i_ae - terms.leak_sqrt - terms.leak_const - terms.smoothing - terms.pa;
    }
};

struct LeakEC {
    double n_part = 0;     // n [(1-gamma) h(Q) + gamma h(F)]
    double sqrt_part = 0;  // sqrt(n) 4 log(2 sqrt2 + 1) sqrt(log(8/eps'^2))
    double const_part = 0; // log(8/eps'^2 + 2/(2-eps')) + log(1/eps_EC)
    double total() const { return n_part + sqrt_part + const_part; }
};

inline double finite_prefactor(const FiniteKeyParams& p) { return 4.0 * p.log(2.0 * std::sqrt(2.0) + 1.0); }

inline LeakEC leak_ec(const FiniteKeyParams& p, double q, double f_test, double gamma) {
    p.validate();
    LeakEC l;
    l.n_part = p.n * ((1.0 - gamma) * binary_entropy(q) + gamma * binary_entropy(f_test));
    const double ep = p.eps_ec_prime;
    l.sqrt_part = std::sqrt(p.n) * finite_prefactor(p) * std::sqrt(p.log(8.0 / (ep * ep)));
    l.const_part = p.log(8.0 / (ep * ep) + 2.0 / (2.0 - ep)) + p.log(1.0 / p.eps_ec);
    return l;
}

inline LeakEC leak_ec(const FiniteKeyParams& p, double q, double f_test) { return leak_ec(p, q, f_test, p.gamma); }

namespace detail {

inline RateResult assemble(const FiniteKeyParams& p, const LeakEC& leak, double i_ae, double key_entropy = 1.0) {
    RateResult res;
    res.terms.key_bias = 1.0 - key_entropy;
    res.terms.i_ab_deficit = leak.n_part / p.n;
    res.terms.i_ae = i_ae;
    res.terms.leak_sqrt = leak.sqrt_part / p.n;
    res.terms.leak_const = leak.const_part / p.n;
    res.terms.smoothing = std::sqrt(p.n) * finite_prefactor(p) * std::sqrt(p.log(2.0 / (p.eps_s * p.eps_s))) / p.n;
    res.terms.pa = 2.0 * p.log(1.0 / (2.0 * p.eps_pa)) / p.n;
    res.raw = res.sum_of_terms();
    res.r = std::max(res.raw, 0.0);
    res.l = res.r * p.n;
    return res;
}

} // namespace detail

// Process fidelity the attack leaves on the certification data.
enum class FexptSource { channel, mixture_pt };

inline double f_expt_model(double q, FexptSource src = FexptSource::channel) {
    check_qber(q);
    if (src == FexptSource::channel) return 1.0 - 1.5 * q;
    const AttackModel atk = AttackModel::from_qber(q);
    const Channel bob = [&](const cmat& rho) { return marginal(atk.output(rho), {0}); };
    const MeasurementFrame f = MeasurementFrame::protocol();
    return process_fidelity(process_matrix_1q(exact_stats(bob, f), f), identity_process(2));
}

inline double asymptotic_rate_ediqkd(double q, HolevoModel model = normative_holevo) {
    check_qber(q);
    return 1.0 - binary_entropy(q) - eve_information(q, model);
}

inline double chsh_value(double q) { return 2.0 * std::sqrt(2.0) * (1.0 - 2.0 * q); }

// Holevo bound on Eve's information given CHSH value S (1 when S <= 2).
inline double diqkd_holevo(double s) {
    if (s <= 2.0) return 1.0;
    const double x = std::min(std::sqrt(s * s / 4.0 - 1.0), 1.0);
    return binary_entropy(0.5 * (1.0 + x));
}

inline double asymptotic_rate_diqkd_raw(double q) {
    if (!(q >= 0.0 && q < 0.5)) throw domain_error("asymptotic_rate_diqkd: QBER outside [0, 1/2)");
    return 1.0 - binary_entropy(q) - diqkd_holevo(chsh_value(q));
}

inline double asymptotic_rate_diqkd(double q) {
    return chsh_value(q) > 2.0 ? asymptotic_rate_diqkd_raw(q) : 0.0;
}

inline RateResult finite_rate_ediqkd(double q, double f_expt, const FiniteKeyParams& p,
                                     HolevoModel model = normative_holevo) {
    p.validate();
    check_qber(q);
    return detail::assemble(p, leak_ec(p, q, f_expt), eve_information(q, model));
}

inline RateResult finite_rate_ediqkd(double q, const FiniteKeyParams& p) {
    return finite_rate_ediqkd(q, f_expt_model(q), p);
}

// CHSH winning probability (1 + S/(2 sqrt2))/2.
inline double chsh_winning(double s) { return 0.5 * (1.0 + s / (2.0 * std::sqrt(2.0))); }

// Lower confidence bound on S from m test rounds (Hoeffding, range 8).
inline double chsh_lower_bound(double s, double m, double eps_pe) {
    return s - 8.0 * std::sqrt(std::log(1.0 / eps_pe) / (2.0 * m));
}

inline RateResult finite_rate_diqkd(double q, const FiniteKeyParams& p) {
    p.validate();
    if (!(q >= 0.0 && q < 0.5)) throw domain_error("finite_rate_diqkd: QBER outside [0, 1/2)");
    const double s = chsh_value(q);
    const double m = p.gamma * p.n / (1.0 - p.gamma);
    const double s_lo = chsh_lower_bound(s, m, p.eps_pe);
    return detail::assemble(p, leak_ec(p, q, chsh_winning(s)), diqkd_holevo(s_lo));
}

// Parameters for the EDIQKD/DIQKD reference comparison (E_f table).
struct ComparisonPreset {
    FiniteKeyParams ediqkd;
    FiniteKeyParams diqkd;

    static ComparisonPreset published(double gamma = 1e-2) {
        ComparisonPreset c;
        c.ediqkd.gamma = c.diqkd.gamma = gamma;
        c.ediqkd.log_base = LogBase::decimal;
        c.diqkd.log_base = LogBase::binary;
        return c;
    }

    static ComparisonPreset as_printed(double gamma = 1e-2) {
        ComparisonPreset c;
        c.ediqkd.gamma = c.diqkd.gamma = gamma;
        return c;
    }
};

using RateOfN = std::function<double(double)>;

struct MinRounds {
    double n = 0;
    double log10_n = 0;
};

// Smallest n with rate >= target: scan exponents on a 0.01 grid, then bisect
// inside the first bracketing cell.
inline MinRounds min_key_rounds(const RateOfN& rate, double r_target = 1e-3, double max_log10 = 20.0) {
    double prev = 0.0;
    if (rate(1.0) >= r_target) return {1.0, 0.0};
    for (int k = 1; k <= static_cast<int>(std::lround(max_log10 * 100)); ++k) {
        const double e = k / 100.0;
        if (rate(std::pow(10.0, e)) >= r_target) {
            const double root = numerics::bisect([&](double x) { return rate(std::pow(10.0, x)) - r_target; }, prev, e, 1e-9);
            return {std::pow(10.0, root), root};
        }
        prev = e;
    }
    throw no_solution("min_key_rounds: target rate not reached by n = 10^" + std::to_string(max_log10));
}

inline RateOfN ediqkd_rate_of_n(double q, const FiniteKeyParams& base, std::optional<double> f_expt = std::nullopt) {
    const double f = f_expt ? *f_expt : f_expt_model(q);
    return [=](double n) { return finite_rate_ediqkd(q, f, base.with_n(n)).raw; };
}

inline RateOfN diqkd_rate_of_n(double q, const FiniteKeyParams& base) {
    return [=](double n) { return finite_rate_diqkd(q, base.with_n(n)).raw; };
}

struct EfficiencyFactor {
    MinRounds ediqkd;
    MinRounds diqkd;
    double ef = 0;
    double log10_ef = 0;
};

inline EfficiencyFactor efficiency_factor(double q, const ComparisonPreset& preset = ComparisonPreset::published(),
                                          double r_target = 1e-3) {
    EfficiencyFactor e;
    e.ediqkd = min_key_rounds(ediqkd_rate_of_n(q, preset.ediqkd), r_target);
    e.diqkd = min_key_rounds(diqkd_rate_of_n(q, preset.diqkd), r_target);
    e.log10_ef = e.diqkd.log10_n - e.ediqkd.log10_n;
    e.ef = std::pow(10.0, e.log10_ef);
    return e;
}

// Zero crossing of a rate curve on [lo, hi] by bisection on the raw bound.
inline double critical_qber(const std::function<double(double)>& raw_rate, double lo, double hi, double tol = 1e-7) {
    return numerics::bisect(raw_rate, lo, hi, tol);
}

struct HolevoSelection {
    struct Row {
        HolevoModel model;
        double q_crit;
    };
    std::vector<Row> rows;
    HolevoModel selected = normative_holevo;
    double target = 0.069;
    double tolerance = 0.003;
};

// Zero crossing of 1 - h(Q) - I(A:E) for every Holevo variant, and the one
// that lands within tolerance of the target threshold.
inline HolevoSelection holevo_model_selection(double target = 0.069, double tolerance = 0.003) {
    HolevoSelection sel;
    sel.target = target;
    sel.tolerance = tolerance;
    double best = 1.0;
    for (HolevoModel m : {HolevoModel::mixture, HolevoModel::closed_form, HolevoModel::entropy_bound}) {
        const double qc = critical_qber([m](double q) { return asymptotic_rate_ediqkd(q, m); }, 1e-4, 1.0 / 6.0);
        sel.rows.push_back({m, qc});
        if (std::abs(qc - target) < best) {
            best = std::abs(qc - target);
            sel.selected = m;
        }
    }
    return sel;
}

} // namespace ediqkd
