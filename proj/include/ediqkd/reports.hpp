#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "config.hpp"
#include "csv.hpp"
#include "fgc_cache.hpp"

namespace ediqkd {

inline std::vector<double> linspace(double lo, double hi, int points) {
    std::vector<double> v;
    for (int k = 0; k < points; ++k) v.push_back(points == 1 ? lo : lo + (hi - lo) * k / (points - 1));
    return v;
}

inline std::string key_params_label(const FiniteKeyParams& k) {
    return "gamma=" + fmt(k.gamma) + ";eps_s=" + fmt(k.eps_s) + ";eps_ec=" + fmt(k.eps_ec) +
           ";eps_ec_prime=" + fmt(k.eps_ec_prime) + ";eps_pa=" + fmt(k.eps_pa) + ";eps_pe=" + fmt(k.eps_pe) +
           ";log=" + (k.log_base == LogBase::binary ? "binary" : "decimal");
}

inline ComparisonPreset preset_by_name(const std::string& name, double gamma) {
    if (name == "published") return ComparisonPreset::published(gamma);
    if (name == "as_printed") return ComparisonPreset::as_printed(gamma);
    throw config_error("unknown comparison preset '" + name + "'");
}

// bound: the argmax transition matrix, one row per hidden state.
inline CsvTable bound_table(const CachedBound& b, const std::string& frame_label) {
    std::vector<std::string> cols{"xi"};
    for (int k = 0; k < 8; ++k) cols.push_back("omega_" + std::to_string(k));
    CsvTable t(cols);
    t.meta("frame", frame_label).meta("f_gc", b.f_gc).meta("from_cache", b.from_cache ? "true" : "false");
    std::string v;
    for (int k = 0; k < 8; ++k) v += (k ? " " : "") + std::to_string(b.vertex[k]);
    t.meta("vertex", v);
    for (int r = 0; r < 8; ++r) {
        std::vector<std::string> row{std::to_string(r)};
        for (int k = 0; k < 8; ++k) row.push_back(fmt(b.omega(r, k)));
        t.row(row);
    }
    return t;
}

inline CsvTable rate_table(const SweepConfig& c) {
    CsvTable t({"Q", "r_ediqkd", "r_diqkd"});
    t.meta("holevo", std::string(to_string(c.holevo))).meta("q_min", c.q_min).meta("q_max", c.q_max).meta("points", c.points);
    for (double q : linspace(c.q_min, c.q_max, c.points)) {
        const double re = q <= 1.0 / 6.0 ? std::max(0.0, asymptotic_rate_ediqkd(q, c.holevo)) : 0.0;
        t.row({fmt(q), fmt(re), fmt(asymptotic_rate_diqkd(q))});
    }
    return t;
}

inline CsvTable finite_table(const FiniteConfig& c) {
    CsvTable t({"n", "r_ediqkd", "r_diqkd"});
    t.meta("Q", c.q).meta("key", key_params_label(c.key));
    const double f = f_expt_model(c.q);
    for (double e : linspace(c.log10_n_min, c.log10_n_max, c.points)) {
        const FiniteKeyParams k = c.key.with_n(std::pow(10.0, e));
        t.row({fmt(k.n), fmt(finite_rate_ediqkd(c.q, f, k).r), fmt(finite_rate_diqkd(c.q, k).r)});
    }
    return t;
}

inline CsvTable efactor_table(const EfactorConfig& c) {
    const ComparisonPreset preset = preset_by_name(c.preset, c.gamma);
    CsvTable t({"Q", "n_ediqkd", "n_diqkd", "E_f", "log10_n_ediqkd", "log10_n_diqkd", "log10_E_f"});
    t.meta("preset", c.preset).meta("ediqkd_key", key_params_label(preset.ediqkd))
        .meta("diqkd_key", key_params_label(preset.diqkd)).meta("r_target", c.r_target);
    for (double q : c.q) {
        const EfficiencyFactor e = efficiency_factor(q, preset, c.r_target);
        t.row({fmt(q), fmt(e.ediqkd.n), fmt(e.diqkd.n), fmt(e.ef), fmt(e.ediqkd.log10_n, 6), fmt(e.diqkd.log10_n, 6),
               fmt(e.log10_ef, 6)});
    }
    return t;
}

inline CsvTable secrecy_table(const SweepConfig& c) {
    CsvTable t({"Q", "D", "I_AE_numeric", "I_AE_closedform"});
    t.meta("q_min", c.q_min).meta("q_max", c.q_max).meta("points", c.points);
    for (double q : linspace(c.q_min, c.q_max, c.points))
        t.row({fmt(q), fmt(secrecy_distance(q)), fmt(eve_information(q, HolevoModel::mixture)),
               fmt(eve_information(q, HolevoModel::closed_form))});
    return t;
}

inline void photonic_meta(CsvTable& t, const PhotonicParams& p, const PhotonicConventions& conv) {
    t.meta("p_dc", p.p_dc).meta("f_source", p.f_source).meta("conventions", conv.label());
}

inline std::vector<std::string> photonic_row(double eta, const OptimizedRate& o, const PhotonicConventions& conv) {
    const PhotonicObservables obs = photonic_observables(o.argmax, conv);
    return {fmt(eta), fmt(o.r), fmt(o.argmax.alpha * 180.0 / std::numbers::pi), fmt(o.argmax.mu), fmt(o.argmax.p_post),
            fmt(o.argmax.p_noise), fmt(obs.qber), fmt(obs.f_expt)};
}

inline const std::vector<std::string> photonic_columns{"eta", "r_opt", "alpha_deg", "mu", "p_post", "p_noise", "qber", "f_expt"};

inline CsvTable photonic_table(const PhotonicConfig& c) {
    CsvTable t(photonic_columns);
    photonic_meta(t, c.params, c.conventions);
    t.meta("key", key_params_label(c.key)).meta("n", c.key.n).meta("r_threshold", c.r_threshold);
    const RequiredEfficiency req = required_efficiency(c.params, c.key, c.optimize, c.r_threshold, c.conventions);
    t.meta("eta_min", req.eta_min);
    for (double eta : linspace(c.eta_min, c.eta_max, c.points)) {
        PhotonicParams p = c.params;
        p.eta = eta;
        t.row(photonic_row(eta, optimize_rate(p, c.key, c.optimize, c.conventions), c.conventions));
    }
    return t;
}

inline CsvTable efactor_eta_table(const EfactorEtaConfig& c, const ComparisonPreset& preset = ComparisonPreset::published()) {
    CsvTable t({"eta", "n_ediqkd", "n_diqkd", "E_f", "log10_n_ediqkd", "log10_n_diqkd", "log10_E_f", "qber", "f_expt"});
    t.meta("f_source", c.f_source).meta("mu", 0.01).meta("alpha_deg", 45).meta("conventions", c.conventions.label())
        .meta("ediqkd_key", key_params_label(preset.ediqkd)).meta("diqkd_key", key_params_label(preset.diqkd));
    for (double eta : c.eta) {
        const EfactorEta e = efactor_vs_efficiency(eta, c.f_source, preset, c.conventions);
        t.row({fmt(eta), fmt(e.ediqkd.n), fmt(e.diqkd.n), fmt(std::pow(10.0, e.log10_ef)), fmt(e.ediqkd.log10_n, 6),
               fmt(e.diqkd.log10_n, 6), fmt(e.log10_ef, 6), fmt(e.qber), fmt(e.f_expt)});
    }
    return t;
}

// Photonic settings behind the efficiency threshold figures: N = 1.44e9 total
// rounds, gamma = 1e-2, alpha and mu optimized with mu >= 1e-4.
inline FiniteKeyParams photonic_key() {
    FiniteKeyParams k = ComparisonPreset::published().ediqkd;
    k.n = 1.44e9 * (1.0 - k.gamma);
    return k;
}

namespace repro {

inline const std::vector<std::string> ids{"fig3", "fig4", "fig5", "fig6", "fig7", "table2", "table3"};

inline CsvTable fig3() {
    const ComparisonPreset preset = ComparisonPreset::published();
    CsvTable t({"Q", "n", "r_ediqkd", "r_diqkd"});
    t.meta("ediqkd_key", key_params_label(preset.ediqkd)).meta("diqkd_key", key_params_label(preset.diqkd))
        .meta("log10_n_grid", "1:0.05:10");
    for (double q : {0.005, 0.025, 0.05}) {
        const double f = f_expt_model(q);
        for (int k = 20; k <= 200; ++k) {
            const double n = std::pow(10.0, k * 0.05);
            t.row({fmt(q), fmt(n), fmt(finite_rate_ediqkd(q, f, preset.ediqkd.with_n(n)).r),
                   fmt(finite_rate_diqkd(q, preset.diqkd.with_n(n)).r)});
        }
    }
    return t;
}

struct Fig4Curve {
    std::string name;
    double f_source;
    bool preprocessing;
};

inline const std::vector<Fig4Curve> fig4_curves{{"practical", 0.9952, false}, {"pure", 1.0, false}, {"preprocessing", 0.9952, true}};

inline CsvTable fig4(unsigned threads = 1) {
    std::vector<std::string> cols{"curve"};
    cols.insert(cols.end(), photonic_columns.begin(), photonic_columns.end());
    CsvTable t(cols);
    const FiniteKeyParams key = photonic_key();
    const PhotonicConventions conv{};
    t.meta("key", key_params_label(key)).meta("n", key.n).meta("conventions", conv.label()).meta("p_dc", 1e-6)
        .meta("r_threshold", 1e-5).meta("eta_grid", "0.85:0.005:1");
    for (const Fig4Curve& c : fig4_curves) {
        PhotonicParams p;
        p.f_source = c.f_source;
        OptimizeSet opt;
        opt.threads = threads;
        opt.p_post = opt.p_noise = c.preprocessing;
        try {
            t.meta("eta_min_" + c.name, required_efficiency(p, key, opt, 1e-5, conv).eta_min);
        } catch (const no_solution&) {
            t.meta("eta_min_" + c.name, "none");
        }
        for (int k = 0; k <= 30; ++k) {
            p.eta = 0.85 + 0.005 * k;
            std::vector<std::string> row{c.name};
            const auto rest = photonic_row(p.eta, optimize_rate(p, key, opt, conv), conv);
            row.insert(row.end(), rest.begin(), rest.end());
            t.row(row);
        }
    }
    return t;
}

inline CsvTable fig5() {
    const ComparisonPreset preset = ComparisonPreset::published();
    const PhotonicConventions conv{};
    CsvTable t({"eta", "n", "r_ediqkd", "r_diqkd"});
    t.meta("f_source", 0.998).meta("mu", 0.01).meta("alpha_deg", 45).meta("conventions", conv.label())
        .meta("ediqkd_key", key_params_label(preset.ediqkd)).meta("diqkd_key", key_params_label(preset.diqkd))
        .meta("eta_grid", "0.88:0.005:1").meta("log10_n_grid", "2:0.1:8");
    for (int e = 0; e <= 24; ++e) {
        PhotonicParams p;
        p.eta = 0.88 + 0.005 * e;
        p.f_source = 0.998;
        p.mu = 0.01;
        const double q = photonic_observables(p, conv).qber;
        for (int k = 20; k <= 80; ++k) {
            const double n = std::pow(10.0, k * 0.1);
            const double rd = q < 0.5 ? finite_rate_diqkd(q, preset.diqkd.with_n(n)).r : 0.0;
            t.row({fmt(p.eta), fmt(n), fmt(rate_with_imperfections(p, preset.ediqkd.with_n(n), conv).r), fmt(rd)});
        }
    }
    return t;
}

inline CsvTable fig6() {
    CsvTable t({"Q", "r_ediqkd", "r_diqkd"});
    const double qe = critical_qber([](double q) { return asymptotic_rate_ediqkd(q); }, 1e-4, 1.0 / 6.0);
    const double qd = critical_qber(asymptotic_rate_diqkd_raw, 1e-4, 0.14);
    t.meta("holevo", std::string(to_string(normative_holevo))).meta("q_crit_ediqkd", qe).meta("q_crit_diqkd", qd)
        .meta("q_grid", "0:0.0005:0.1");
    for (int k = 0; k <= 200; ++k) {
        const double q = 0.0005 * k;
        t.row({fmt(q), fmt(std::max(0.0, asymptotic_rate_ediqkd(q))), fmt(asymptotic_rate_diqkd(q))});
    }
    return t;
}

inline CsvTable fig7() {
    CsvTable t({"Q", "D"});
    t.meta("d_at_0.069", secrecy_distance(0.069)).meta("q_grid", "0:0.002:0.16");
    for (int k = 0; k <= 80; ++k) {
        const double q = 0.002 * k;
        t.row({fmt(q), fmt(secrecy_distance(q))});
    }
    return t;
}

inline CsvTable table2() { return efactor_table(EfactorConfig{}); }
inline CsvTable table3() { return efactor_eta_table(EfactorEtaConfig{}); }

inline CsvTable run(const std::string& id, unsigned threads = 1) {
    if (id == "fig3") return fig3();
    if (id == "fig4") return fig4(threads);
    if (id == "fig5") return fig5();
    if (id == "fig6") return fig6();
    if (id == "fig7") return fig7();
    if (id == "table2") return table2();
    if (id == "table3") return table3();
    throw config_error("unknown repro id '" + id + "'");
}

} // namespace repro

} // namespace ediqkd
