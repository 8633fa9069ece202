#include <gtest/gtest.h>

#include <ediqkd/keyrate.hpp>

using namespace ediqkd;

namespace {

double h2(double x) { return x <= 0 || x >= 1 ? 0.0 : -x * std::log2(x) - (1 - x) * std::log2(1 - x); }

// Finite EDIQKD bound written out term by term, independent of the library's
// assembly: 1 - leak/n - H(lambda) - smoothing - privacy amplification.
double finite_oracle(double q, double f, double n, double gamma, double eps_s, double eps_ec, double eps_ecp, double eps_pa,
                     bool decimal) {
    auto lg = [&](double x) { return decimal ? std::log10(x) : std::log2(x); };
    const double p = 1.5 * q;
    const double eve = -(1 - p) * std::log2(1 - p) - (p > 0 ? p * std::log2(p / 3) : 0.0);
    const double pref = 4 * lg(2 * std::sqrt(2.0) + 1);
    const double leak = n * ((1 - gamma) * h2(q) + gamma * h2(f)) + std::sqrt(n) * pref * std::sqrt(lg(8 / (eps_ecp * eps_ecp))) +
                        lg(8 / (eps_ecp * eps_ecp) + 2 / (2 - eps_ecp)) + lg(1 / eps_ec);
    return 1 - leak / n - eve - pref * std::sqrt(lg(2 / (eps_s * eps_s))) / std::sqrt(n) - 2 * lg(1 / (2 * eps_pa)) / n;
}

} // namespace

TEST(FiniteKeyParams, Validation) {
    FiniteKeyParams p;
    EXPECT_NO_THROW(p.validate());
    p.gamma = 1.0;
    EXPECT_THROW(p.validate(), domain_error);
    p = {};
    p.eps_s = 0;
    EXPECT_THROW(p.validate(), domain_error);
    p = {};
    p.n = -1;
    EXPECT_THROW(p.validate(), domain_error);
}

TEST(LeakEC, ScalingWithN) {
    FiniteKeyParams p;
    const LeakEC a = leak_ec(p.with_n(1e6), 0.03, 0.95), b = leak_ec(p.with_n(4e6), 0.03, 0.95);
    EXPECT_NEAR(b.n_part / a.n_part, 4.0, 1e-12);
    EXPECT_NEAR(b.sqrt_part / a.sqrt_part, 2.0, 1e-12);
    EXPECT_NEAR(b.const_part, a.const_part, 1e-12);
    EXPECT_NEAR(a.total(), a.n_part + a.sqrt_part + a.const_part, 1e-9);
}

TEST(FiniteRate, MatchesIndependentRecoding) {
    for (LogBase base : {LogBase::binary, LogBase::decimal})
        for (double q : {0.005, 0.025, 0.05, 0.065})
            for (double n : {1e4, 1e6, 1e9}) {
                FiniteKeyParams p;
                p.n = n;
                p.log_base = base;
                const double f = f_expt_model(q);
                const RateResult r = finite_rate_ediqkd(q, f, p);
                EXPECT_NEAR(r.raw, finite_oracle(q, f, n, p.gamma, p.eps_s, p.eps_ec, p.eps_ec_prime, p.eps_pa, base == LogBase::decimal),
                            1e-12);
                EXPECT_NEAR(r.raw, r.sum_of_terms(), 1e-15);
                EXPECT_EQ(r.r, std::max(0.0, r.raw));
                EXPECT_NEAR(r.l, r.r * n, 1e-6);
            }
}

TEST(FiniteRate, ApproachesAsymptoticRate) {
    FiniteKeyParams p;
    p.n = 1e30;
    p.gamma = 1e-12;
    for (double q : {0.01, 0.04, 0.06}) EXPECT_NEAR(finite_rate_ediqkd(q, p).raw, asymptotic_rate_ediqkd(q), 1e-10);
}

TEST(FiniteRate, MonotoneInNAndQ) {
    FiniteKeyParams p;
    double prev = -1e9;
    for (int k = 30; k <= 120; ++k) {
        const double r = finite_rate_ediqkd(0.025, p.with_n(std::pow(10.0, k / 10.0))).raw;
        EXPECT_GT(r, prev);
        prev = r;
    }
    p.n = 1e8;
    prev = 2;
    for (int k = 0; k <= 30; ++k) {
        const double r = finite_rate_ediqkd(k * 0.002, p).raw;
        EXPECT_LT(r, prev);
        prev = r;
    }
}

TEST(Asymptotic, DiqkdHolevoLimits) {
    EXPECT_NEAR(diqkd_holevo(2 * std::sqrt(2.0)), 0.0, 1e-12);
    EXPECT_EQ(diqkd_holevo(2.0), 1.0);
    EXPECT_EQ(diqkd_holevo(1.0), 1.0);
    EXPECT_NEAR(asymptotic_rate_diqkd(0.0), 1.0, 1e-12);
    EXPECT_EQ(asymptotic_rate_diqkd(0.2), 0.0);
}

TEST(Asymptotic, CriticalQbers) {
    const double qd = critical_qber(asymptotic_rate_diqkd_raw, 1e-4, 0.14);
    EXPECT_NEAR(qd, 0.071, 0.002);
    const double qe = critical_qber([](double q) { return asymptotic_rate_ediqkd(q); }, 1e-4, 1.0 / 6.0);
    EXPECT_NEAR(qe, 0.069, 0.003);
}

TEST(Asymptotic, HolevoSelectionPicksEntropyBound) {
    const HolevoSelection sel = holevo_model_selection();
    ASSERT_EQ(sel.rows.size(), 3u);
    EXPECT_EQ(sel.selected, HolevoModel::entropy_bound);
    EXPECT_EQ(sel.selected, normative_holevo);
    for (const auto& r : sel.rows)
        if (r.model != sel.selected) EXPECT_GT(std::abs(r.q_crit - 0.069), sel.tolerance);
}

TEST(ChshBaseline, HoeffdingBound) {
    EXPECT_NEAR(chsh_winning(2 * std::sqrt(2.0)), 1.0, 1e-15);
    EXPECT_NEAR(chsh_winning(2.0), 0.5 + 0.5 / std::sqrt(2.0), 1e-15);
    EXPECT_NEAR(chsh_lower_bound(2.5, 1e4, 1e-2), 2.5 - 8 * std::sqrt(std::log(100.0) / 2e4), 1e-15);
    EXPECT_LT(finite_rate_diqkd(0.025, FiniteKeyParams{}.with_n(1e4)).raw, finite_rate_diqkd(0.025, FiniteKeyParams{}.with_n(1e8)).raw);
}

TEST(MinKeyRounds, AnalyticOracle) {
    // r(n) = 1 - c / sqrt(n) reaches target t at n = (c / (1 - t))^2.
    const double c = 300.0, t = 1e-3;
    const MinRounds m = min_key_rounds([c](double n) { return 1 - c / std::sqrt(n); }, t);
    EXPECT_NEAR(m.log10_n, 2 * std::log10(c / (1 - t)), 1e-8);
    EXPECT_NEAR(m.n, std::pow(10.0, m.log10_n), 1e-6 * m.n);
    EXPECT_THROW(min_key_rounds([](double) { return -1.0; }, t, 5), no_solution);
}

TEST(Comparison, EdiqkdNeedsFewerRoundsAtFig3Qbers) {
    const ComparisonPreset printed = ComparisonPreset::as_printed();
    const ComparisonPreset pub = ComparisonPreset::published();
    for (double q : {0.005, 0.025, 0.05}) {
        for (const ComparisonPreset& pr : {printed, pub}) {
            const MinRounds e = min_key_rounds(ediqkd_rate_of_n(q, pr.ediqkd), 1e-12);
            const MinRounds d = min_key_rounds(diqkd_rate_of_n(q, pr.diqkd), 1e-12);
            EXPECT_LT(e.n, d.n) << q;
        }
    }
}

TEST(Comparison, EfficiencyFactorRows) {
    const std::array<double, 5> qs{0.055, 0.06, 0.065, 0.066, 0.067};
    const std::array<double, 5> log_ef{2.46, 2.38, 2.04, 1.95, 1.31};
    for (std::size_t k = 0; k < qs.size(); ++k) {
        const EfficiencyFactor e = efficiency_factor(qs[k]);
        EXPECT_NEAR(e.log10_ef, e.diqkd.log10_n - e.ediqkd.log10_n, 1e-12);
        EXPECT_NEAR(e.log10_ef, log_ef[k], 0.3) << qs[k];
    }
}

TEST(FexptModel, ChannelAndMixtureAgree) {
    for (double q : {0.0, 0.02, 0.069, 1.0 / 6.0}) {
        EXPECT_NEAR(f_expt_model(q), 1 - 1.5 * q, 1e-15);
        EXPECT_NEAR(f_expt_model(q, FexptSource::mixture_pt), f_expt_model(q), 1e-12);
    }
}
