#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <thread>
#include <vector>

#include "keyrate.hpp"
#include "numerics.hpp"

namespace ediqkd {

struct PhotonicParams {
    double eta = 1.0;      // per-side detection efficiency
    double p_dc = 1e-6;    // dark-count probability per detector per round
    double mu = 0.01;      // mean pair number
    double f_source = 1.0; // fidelity of the emitted pair
    double alpha = std::numbers::pi / 4; // state angle, radians
    double p_post = 0.0;   // probability of dropping a key round in which Bob recorded -1
    double p_noise = 0.0;  // key-bit flip probability

    void validate() const {
        auto in01 = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in01(eta)) throw domain_error("PhotonicParams: eta outside [0,1]");
        if (!in01(p_dc)) throw domain_error("PhotonicParams: p_dc outside [0,1]");
        if (!(mu >= 0.0)) throw domain_error("PhotonicParams: mu must be nonnegative");
        if (!in01(f_source)) throw domain_error("PhotonicParams: F_source outside [0,1]");
        if (!(alpha >= 0.0 && alpha <= std::numbers::pi / 4 + 1e-12)) throw domain_error("PhotonicParams: alpha outside [0, 45 deg]");
        if (!in01(p_post)) throw domain_error("PhotonicParams: p_post outside [0,1]");
        if (!in01(p_noise)) throw domain_error("PhotonicParams: p_noise outside [0,1]");
    }
};

enum class NoClick { minus, random, discard };

inline std::string to_string(NoClick n) {
    switch (n) {
    case NoClick::minus: return "minus";
    case NoClick::random: return "random";
    case NoClick::discard: return "discard";
    }
    return "?";
}

struct PhotonicConventions {
    NoClick no_click = NoClick::minus;
    bool herald_alice = true; // keep only rounds in which Alice's detector fired

    std::string label() const { return "noclick=" + to_string(no_click) + (herald_alice ? ",heralded" : ",unheralded"); }
};

struct EfficiencyBudget {
    double eta_sc = 1.0;
    double eta_det = 1.0;
    double dhwp = 1.0, hwp = 1.0, qwp = 1.0;
    double dm = 1.0;
    int dm_count = 7;
    double lens = 1.0;
    int lens_count = 2;
    double as = 1.0, ppktp = 1.0, pbs = 1.0, dpbs = 1.0;

    double eta_so() const {
        return dhwp * hwp * qwp * std::pow(dm, dm_count) * std::pow(lens, lens_count) * as * ppktp * pbs * dpbs;
    }
    double eta() const { return eta_sc * eta_det * eta_so(); }
};

namespace detail {

// Detector response: true outcome (+, -) -> recorded (+, -, none).
inline std::array<std::array<double, 3>, 2> detector_response(double eta, double pdc) {
    const double keep = eta * ((1 - pdc) + pdc / 2), swap = eta * pdc / 2;
    const double dark_any = (1 - eta) * (1 - (1 - pdc) * (1 - pdc));
    const double none = (1 - eta) * (1 - pdc) * (1 - pdc);
    return {{{keep + dark_any / 2, swap + dark_any / 2, none}, {swap + dark_any / 2, keep + dark_any / 2, none}}};
}

inline cmat pair_state(double alpha, double fs) {
    const cvec psi = ket({0.0, std::cos(alpha), std::sin(alpha), 0.0});
    const cmat p = psi * psi.adjoint();
    return fs * p + (1 - fs) * (identity(4) - p) / 3.0;
}

// Sign relating Alice's outcome to the state she steers on Bob along her axis.
inline int correction_sign(const MeasurementFrame& f, int i, double alpha) {
    const cmat ideal = pair_state(alpha, 1.0);
    const cmat joint = ideal * tensor(eigenprojector(f.alice[i - 1], 1), f.alice[i - 1].mat());
    return joint.trace().real() >= 0 ? 1 : -1;
}

// Recorded joint distribution P(a', b) for settings (i, j) after the whole pipeline.
// `kept`, when given, receives the fraction of rounds that survive heralding
// and discarding. Post-selection is key-round processing and is not applied here.
inline std::array<std::array<double, 2>, 2> recorded_joint(const PhotonicParams& p, const PhotonicConventions& c,
                                                           const MeasurementFrame& f, int i, int j,
                                                           double* kept = nullptr) {
    const cmat rho = pair_state(p.alpha, p.f_source);
    const double pi2 = p.mu > 0 ? (p.mu / 2) / (1 + p.mu / 2) : 0.0;
    double ideal[2][2];
    double pa[2] = {0, 0};
    for (int a : {1, -1})
        for (int b : {1, -1}) {
            const cmat pr = tensor(eigenprojector(f.alice[i - 1], a), f.bob_projector(j, b));
            ideal[outcome_index(a)][outcome_index(b)] = (rho * pr).trace().real();
            pa[outcome_index(a)] += ideal[outcome_index(a)][outcome_index(b)];
        }
    // A second pair randomizes Bob's outcome.
    double p1[2][2];
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y) p1[x][y] = (1 - pi2) * ideal[x][y] + pi2 * pa[x] / 2;

    const auto ra = detector_response(p.eta, p.p_dc);
    const auto rb = ra;
    double rec[3][3] = {};
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int u = 0; u < 3; ++u)
                for (int v = 0; v < 3; ++v) rec[u][v] += p1[x][y] * ra[x][u] * rb[y][v];

    std::array<std::array<double, 2>, 2> out{};
    for (int u = 0; u < 3; ++u)
        for (int v = 0; v < 3; ++v) {
            const double w = rec[u][v];
            if (u == 2 && c.herald_alice) continue;
            const int au = u == 2 ? 1 : u; // Alice no-click recorded as -1
            if (v == 2) {
                switch (c.no_click) {
                case NoClick::minus: out[au][1] += w; break;
                case NoClick::random: out[au][0] += w / 2; out[au][1] += w / 2; break;
                case NoClick::discard: break;
                }
            } else {
                out[au][v] += w;
            }
        }
    const double tot = out[0][0] + out[0][1] + out[1][0] + out[1][1];
    if (!(tot > 0)) throw domain_error("effective_stats: no recorded events");
    if (kept) *kept = tot;
    for (auto& r : out)
        for (double& x : r) x /= tot;
    // Alice's classical correction relabels her outcome.
    if (correction_sign(f, i, p.alpha) < 0) std::swap(out[0], out[1]);
    return out;
}

} // namespace detail

inline ConditionalStats effective_stats(const PhotonicParams& params, const MeasurementFrame& frame,
                                        const PhotonicConventions& conv = {}) {
    params.validate();
    ConditionalStats s;
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            const auto joint = detail::recorded_joint(params, conv, frame, i, j);
            for (int a : {1, -1}) {
                const auto& r = joint[outcome_index(a)];
                const double pa = r[0] + r[1];
                s.set_plus(i, a, j, pa > 0 ? r[0] / pa : 0.5);
            }
        }
    return s;
}

struct PhotonicObservables {
    ConditionalStats stats;
    double qber = 0;          // key-basis error after preprocessing
    double f_expt = 0;
    double key_retention = 1; // fraction of key rounds left after post-selection
    double key_entropy = 1;   // H(A) of Alice's surviving key bits
};

inline PhotonicObservables photonic_observables(const PhotonicParams& params, const PhotonicConventions& conv = {},
                                                const MeasurementFrame& frame = MeasurementFrame::protocol()) {
    PhotonicObservables o;
    o.stats = effective_stats(params, frame, conv);
    // Random post-selection drops key rounds whose bit is 1 on Bob's side, which
    // includes every no-click; the test rounds feeding tomography are untouched.
    auto key = detail::recorded_joint(params, conv, frame, 3, 3);
    key[0][1] *= 1 - params.p_post;
    key[1][1] *= 1 - params.p_post;
    o.key_retention = key[0][0] + key[0][1] + key[1][0] + key[1][1];
    const double q0 = o.key_retention > 0 ? (key[0][1] + key[1][0]) / o.key_retention : 0.5;
    o.qber = q0 + params.p_noise * (1 - 2 * q0);
    // Noise is added on Alice's bits, so it also evens out her marginal.
    if (o.key_retention > 0) {
        const double a1 = (key[1][0] + key[1][1]) / o.key_retention;
        o.key_entropy = binary_entropy(std::clamp(a1 + params.p_noise * (1 - 2 * a1), 0.0, 1.0));
    } else {
        o.key_entropy = 0.0;
    }
    o.f_expt = process_fidelity(process_matrix_1q(o.stats, frame), identity_process(2));
    return o;
}

// Finite EDIQKD rate on the pipeline output. Eve's cloner strength is read
// from the certified fidelity, p = 1 - F_expt.
inline RateResult rate_with_imperfections(const PhotonicParams& params, const FiniteKeyParams& key,
                                          const PhotonicConventions& conv = {}) {
    key.validate();
    const PhotonicObservables o = photonic_observables(params, conv);
    const double p = std::clamp(1.0 - o.f_expt, 0.0, 0.75);
    const double q = std::clamp(o.qber, 0.0, 1.0);
    const double f = std::clamp(o.f_expt, 0.0, 1.0);
    if (!(o.key_retention > 0)) {
        RateResult none;
        none.raw = -1.0;
        return none;
    }
    // Post-selection shortens the key: the bound is evaluated on the surviving
    // rounds and expressed per original key round.
    const FiniteKeyParams kept = key.with_n(key.n * o.key_retention);
    RateResult r = detail::assemble(kept, leak_ec(kept, q, f), lambda_entropy(p), o.key_entropy);
    r.raw *= o.key_retention;
    r.r = std::max(r.raw, 0.0);
    r.l = r.r * key.n;
    return r;
}

struct OptimizeSet {
    bool alpha = true;
    bool mu = true;
    bool p_post = false;
    bool p_noise = false;
    double mu_min = 1e-4;
    double mu_max = 0.1;
    unsigned threads = 1;
};

struct OptimizedRate {
    double r = 0;
    PhotonicParams argmax;
};

// Max raw rate over the selected parameters: Nelder-Mead from five fixed starts
// on a coarse grid, parameters clamped into their boxes.
inline OptimizedRate optimize_rate(const PhotonicParams& base, const FiniteKeyParams& key, const OptimizeSet& opt,
                                   const PhotonicConventions& conv = {}) {
    struct Dim {
        double PhotonicParams::*field;
        double lo, hi;
        std::array<double, 5> starts;
    };
    std::vector<Dim> dims;
    const double deg = std::numbers::pi / 180;
    if (opt.alpha) dims.push_back({&PhotonicParams::alpha, 0.0, 45 * deg, {45 * deg, 40 * deg, 44 * deg, 35 * deg, 42 * deg}});
    if (opt.mu) dims.push_back({&PhotonicParams::mu, opt.mu_min, opt.mu_max, {1e-3, 1e-2, opt.mu_min, 3e-3, 3e-2}});
    if (opt.p_post) dims.push_back({&PhotonicParams::p_post, 0.0, 1.0, {0.0, 0.5, 0.2, 0.8, 1.0}});
    if (opt.p_noise) dims.push_back({&PhotonicParams::p_noise, 0.0, 0.5, {0.0, 0.05, 0.1, 0.02, 0.2}});

    auto make = [&](const std::vector<double>& x) {
        PhotonicParams p = base;
        for (std::size_t k = 0; k < dims.size(); ++k) p.*(dims[k].field) = std::clamp(x[k], dims[k].lo, dims[k].hi);
        return p;
    };
    auto objective = [&](const std::vector<double>& x) { return -rate_with_imperfections(make(x), key, conv).raw; };

    if (dims.empty()) return {rate_with_imperfections(base, key, conv).raw, base};

    std::array<OptimizedRate, 5> runs;
    auto run = [&](int s) {
        std::vector<double> x0, step;
        for (const Dim& d : dims) {
            x0.push_back(d.starts[s]);
            step.push_back(0.1 * (d.hi - d.lo));
        }
        const auto res = numerics::nelder_mead(objective, x0, step, 1e-7, 300);
        const PhotonicParams p = make(res.x);
        runs[s] = {rate_with_imperfections(p, key, conv).raw, p};
    };
    const unsigned nt = std::clamp(opt.threads, 1u, 5u);
    if (nt == 1) {
        for (int s = 0; s < 5; ++s) run(s);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nt; ++t)
            pool.emplace_back([&, t] {
                for (int s = static_cast<int>(t); s < 5; s += static_cast<int>(nt)) run(s);
            });
        for (auto& th : pool) th.join();
    }
    OptimizedRate best = runs[0];
    for (int s = 1; s < 5; ++s)
        if (runs[s].r > best.r) best = runs[s];
    return best;
}

struct RequiredEfficiency {
    double eta_min = 0;
    OptimizedRate at_threshold;
};

// Smallest eta whose optimized rate reaches r_threshold, by bisection on eta.
inline RequiredEfficiency required_efficiency(const PhotonicParams& fixed, const FiniteKeyParams& key,
                                              const OptimizeSet& opt = {}, double r_threshold = 1e-5,
                                              const PhotonicConventions& conv = {}, double eta_floor = 0.05) {
    auto g = [&](double eta) {
        PhotonicParams p = fixed;
        p.eta = eta;
        return optimize_rate(p, key, opt, conv).r - r_threshold;
    };
    if (g(1.0) < 0) throw no_solution("required_efficiency: no eta <= 1 reaches the threshold");
    RequiredEfficiency r;
    r.eta_min = g(eta_floor) >= 0 ? eta_floor : numerics::bisect(g, eta_floor, 1.0, 1e-5);
    PhotonicParams p = fixed;
    p.eta = std::min(1.0, r.eta_min + 1e-5);
    r.at_threshold = optimize_rate(p, key, opt, conv);
    return r;
}

struct EfactorEta {
    double eta = 0;
    double qber = 0;
    double f_expt = 0;
    MinRounds ediqkd;
    MinRounds diqkd;
    double log10_ef = 0;
};

// Efficiency factor at fixed settings (mu = 0.01, alpha = 45 deg) for a given eta.
inline EfactorEta efactor_vs_efficiency(double eta, double f_source = 0.998,
                                        const ComparisonPreset& preset = ComparisonPreset::published(),
                                        const PhotonicConventions& conv = {}, double r_target = 1e-3) {
    PhotonicParams p;
    p.eta = eta;
    p.f_source = f_source;
    p.mu = 0.01;
    p.alpha = std::numbers::pi / 4;
    const PhotonicObservables o = photonic_observables(p, conv);
    EfactorEta e;
    e.eta = eta;
    e.qber = o.qber;
    e.f_expt = o.f_expt;
    e.ediqkd = min_key_rounds([&](double n) { return rate_with_imperfections(p, preset.ediqkd.with_n(n), conv).raw; }, r_target);
    e.diqkd = min_key_rounds(diqkd_rate_of_n(o.qber, preset.diqkd), r_target);
    e.log10_ef = e.diqkd.log10_n - e.ediqkd.log10_n;
    return e;
}

} // namespace ediqkd
