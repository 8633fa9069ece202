#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <thread>
#include <vector>

#include "tomography.hpp"

namespace ediqkd {

// The eight hidden assignments (v1, v2, v3); index xi has v1 in the high bit,
// bit set meaning -1, so xi = 0 is (+1, +1, +1).
struct HiddenStateSpace {
    static constexpr int size = 8;
    static int value(int xi, int k) { return ((xi >> (3 - k)) & 1) ? -1 : 1; }
    static bool consistent(int xi, int i, int a) { return value(xi, i) == a; }
};

using TransitionMatrix = Eigen::Matrix<double, 8, 8, Eigen::RowMajor>;
using PrepMatrix = Eigen::Matrix<double, 6, 8, Eigen::RowMajor>;

inline int prep_row(int i, int a) { return (i - 1) * 2 + outcome_index(a); }

struct GcpModel {
    TransitionMatrix omega;
    PrepMatrix prep;

    static PrepMatrix uniform_prep() {
        PrepMatrix p = PrepMatrix::Zero();
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1})
                for (int xi = 0; xi < 8; ++xi)
                    if (HiddenStateSpace::consistent(xi, i, a)) p(prep_row(i, a), xi) = 0.25;
        return p;
    }

    // Deterministic transitions: row xi jumps to assignment m[xi].
    static GcpModel vertex(const std::array<int, 8>& m) {
        GcpModel g{TransitionMatrix::Zero(), uniform_prep()};
        for (int xi = 0; xi < 8; ++xi) g.omega(xi, m[xi]) = 1.0;
        return g;
    }

    void validate(double tol = 1e-9) const {
        if ((omega.array() < -tol).any()) throw domain_error("GcpModel: negative transition probability");
        for (int xi = 0; xi < 8; ++xi)
            if (std::abs(omega.row(xi).sum() - 1.0) > tol) throw domain_error("GcpModel: transition row does not sum to 1");
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1}) {
                const auto row = prep.row(prep_row(i, a));
                if (std::abs(row.sum() - 1.0) > tol) throw domain_error("GcpModel: preparation row does not sum to 1");
                for (int xi = 0; xi < 8; ++xi) {
                    if (row(xi) < -tol) throw domain_error("GcpModel: negative preparation probability");
                    if (!HiddenStateSpace::consistent(xi, i, a) && std::abs(row(xi)) > tol)
                        throw domain_error("GcpModel: preparation supported on an inconsistent assignment");
                }
            }
    }
};

inline ConditionalStats gcp_stats(const GcpModel& model) {
    model.validate();
    ConditionalStats s;
    for (int i = 1; i <= 3; ++i)
        for (int a : {1, -1}) {
            const auto pr = model.prep.row(prep_row(i, a));
            for (int j = 1; j <= 3; ++j) {
                double plus = 0.0;
                for (int xi = 0; xi < 8; ++xi)
                    for (int mu = 0; mu < 8; ++mu)
                        if (HiddenStateSpace::value(mu, j) == 1) plus += pr(xi) * model.omega(xi, mu);
                s.set_plus(i, a, j, plus);
            }
        }
    return s;
}

inline ProcessMatrix build_chi_gc(const GcpModel& model, const MeasurementFrame& frame) {
    return process_matrix_1q(gcp_stats(model), frame);
}

namespace detail {

// tr(chi chi_I) is affine in the 36 conditional probabilities when each row is
// normalized (the trace of chi is then fixed at 1): F = c0 + sum_c w_c P_c.
struct FidelityWeights {
    double c0 = 0.0;
    std::array<double, 36> w{};
};

inline double raw_fidelity(const std::array<double, 36>& p, const MeasurementFrame& frame) {
    std::array<cmat, 3> v;
    cmat ihat = cmat::Zero(2, 2);
    for (int i = 1; i <= 3; ++i) {
        cmat rho[2];
        for (int a : {1, -1}) {
            cmat r = identity(2);
            for (int j = 1; j <= 3; ++j) {
                const double pp = p[ConditionalStats::index(i, a, j, 1)];
                const double pm = p[ConditionalStats::index(i, a, j, -1)];
                r += (pp - pm) * frame.bob[j - 1].mat();
            }
            rho[outcome_index(a)] = 0.5 * r;
        }
        v[i - 1] = rho[0] - rho[1];
        ihat += (rho[0] + rho[1]) / 3.0;
    }
    using namespace std::complex_literals;
    cmat chi(4, 4);
    chi.block(0, 0, 2, 2) = ihat + v[2];
    chi.block(0, 2, 2, 2) = v[0] + 1i * v[1];
    chi.block(2, 0, 2, 2) = v[0] - 1i * v[1];
    chi.block(2, 2, 2, 2) = ihat - v[2];
    chi /= 4.0;
    return (chi * identity_process(2).mat()).trace().real();
}

inline FidelityWeights fidelity_weights(const MeasurementFrame& frame) {
    FidelityWeights fw;
    std::array<double, 36> p{};
    fw.c0 = raw_fidelity(p, frame);
    for (std::size_t c = 0; c < 36; ++c) {
        p[c] = 1.0;
        fw.w[c] = raw_fidelity(p, frame) - fw.c0;
        p[c] = 0.0;
    }
    return fw;
}

// Per-row contribution table: F(vertex m) = c0 + sum_xi f[xi][m[xi]] under `prep`.
inline std::array<std::array<double, 8>, 8> vertex_table(const FidelityWeights& fw, const PrepMatrix& prep) {
    std::array<std::array<double, 8>, 8> f{};
    for (int xi = 0; xi < 8; ++xi)
        for (int mu = 0; mu < 8; ++mu) {
            double s = 0.0;
            for (int i = 1; i <= 3; ++i)
                for (int a : {1, -1})
                    for (int j = 1; j <= 3; ++j)
                        s += prep(prep_row(i, a), xi) * fw.w[ConditionalStats::index(i, a, j, HiddenStateSpace::value(mu, j))];
            f[xi][mu] = s;
        }
    return f;
}

// Euclidean projection onto the probability simplex.
inline void project_simplex(std::span<double> v) {
    std::vector<double> u(v.begin(), v.end());
    std::sort(u.begin(), u.end(), std::greater<>());
    double css = 0.0, theta = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        css += u[k];
        const double t = (css - 1.0) / static_cast<double>(k + 1);
        if (u[k] - t > 0) theta = t;
    }
    for (double& x : v) x = std::max(x - theta, 0.0);
}

} // namespace detail

inline double gcp_fidelity(const GcpModel& model, const MeasurementFrame& frame) {
    return process_fidelity(build_chi_gc(model, frame), identity_process(2));
}

inline bool gcp_feasible(const GcpModel& model, const MeasurementFrame& frame, double psd_slack = 1e-9) {
    return min_eigenvalue(build_chi_gc(model, frame).mat()) >= -psd_slack;
}

enum class BoundMethod { enumerate, refine, both };

struct BoundOptions {
    BoundMethod method = BoundMethod::both;
    unsigned threads = 1;
    bool prune = true;                                // branch and bound on per-row maxima
    std::array<int, 8> row_order{0, 1, 2, 3, 4, 5, 6, 7}; // order in which rows are branched
    bool relax_prep = false;                          // let refine move the preparation distribution
    int refine_iterations = 500;
};

struct BoundResult {
    double f_gc = 0.0;
    GcpModel argmax;
    std::array<int, 8> vertex{};    // best enumerated vertex
    double vertex_value = 0.0;
    std::uint64_t leaves_visited = 0;
    double min_eig = 0.0;
    bool refined_improved = false;
    std::string constraint_set;
};

namespace detail {

struct SubtreeBest {
    double value = -std::numeric_limits<double>::infinity();
    std::array<int, 8> m{};
    bool found = false;
    std::uint64_t leaves = 0;
};

// Depth-first scan of every vertex whose first branched row takes value `first`.
// Visits in lexicographic order of (m[order[0]], m[order[1]], ...) and only
// replaces the incumbent on strict improvement, so ties resolve to the first.
inline SubtreeBest scan_subtree(int first, const std::array<std::array<double, 8>, 8>& f, double c0,
                                const BoundOptions& opt, const MeasurementFrame& frame) {
    constexpr double tie = 1e-12;
    const auto& ord = opt.row_order;
    std::array<double, 9> suffix{};
    for (int d = 7; d >= 0; --d) suffix[d] = suffix[d + 1] + *std::max_element(f[ord[d]].begin(), f[ord[d]].end());

    SubtreeBest best;
    std::array<int, 8> m{};
    m[ord[0]] = first;

    auto recurse = [&](auto&& self, int depth, double acc) -> void {
        if (depth == 8) {
            ++best.leaves;
            const double val = c0 + acc;
            if (val > best.value + tie) {
                const GcpModel g = GcpModel::vertex(m);
                if (gcp_feasible(g, frame)) {
                    best.value = val;
                    best.m = m;
                    best.found = true;
                }
            }
            return;
        }
        const int row = ord[depth];
        for (int mu = 0; mu < 8; ++mu) {
            const double next = acc + f[row][mu];
            if (opt.prune && best.found && c0 + next + suffix[depth + 1] <= best.value + tie) continue;
            m[row] = mu;
            self(self, depth + 1, next);
        }
    };
    recurse(recurse, 1, f[ord[0]][first]);
    return best;
}

} // namespace detail

inline BoundResult enumerate_vertices(const MeasurementFrame& frame, const BoundOptions& opt) {
    {
        std::array<int, 8> chk = opt.row_order;
        std::sort(chk.begin(), chk.end());
        for (int k = 0; k < 8; ++k)
            if (chk[k] != k) throw domain_error("enumerate: row_order must be a permutation of 0..7");
    }
    const detail::FidelityWeights fw = detail::fidelity_weights(frame);
    const auto f = detail::vertex_table(fw, GcpModel::uniform_prep());

    std::array<detail::SubtreeBest, 8> parts;
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int k; (k = next.fetch_add(1)) < 8;) parts[k] = detail::scan_subtree(k, f, fw.c0, opt, frame);
    };
    const unsigned nt = std::clamp(opt.threads, 1u, 8u);
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < nt; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();

    BoundResult r;
    bool any = false;
    for (const auto& p : parts) {
        r.leaves_visited += p.leaves;
        if (p.found && (!any || p.value > r.vertex_value + 1e-12)) {
            r.vertex_value = p.value;
            r.vertex = p.m;
            any = true;
        }
    }
    if (!any) throw no_solution("enumerate: no feasible vertex");
    r.argmax = GcpModel::vertex(r.vertex);
    r.f_gc = gcp_fidelity(r.argmax, frame);
    r.min_eig = min_eigenvalue(build_chi_gc(r.argmax, frame).mat());
    r.constraint_set = "row-stochastic Omega, uniform preparation, chi >= -1e-9";
    return r;
}

// Projected-gradient ascent on the product of simplices, keeping chi_GC in the
// PSD cone by bisecting back along the step when it leaves.
inline BoundResult refine_model(const GcpModel& seed, const MeasurementFrame& frame, const BoundOptions& opt) {
    const detail::FidelityWeights fw = detail::fidelity_weights(frame);
    GcpModel x = seed;
    double fx = gcp_fidelity(x, frame);

    auto gradient = [&](const GcpModel& g, TransitionMatrix& go, PrepMatrix& gp) {
        go.setZero();
        gp.setZero();
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1}) {
                const int row = prep_row(i, a);
                for (int xi = 0; xi < 8; ++xi)
                    for (int mu = 0; mu < 8; ++mu) {
                        double s = 0.0;
                        for (int j = 1; j <= 3; ++j)
                            s += fw.w[ConditionalStats::index(i, a, j, HiddenStateSpace::value(mu, j))];
                        go(xi, mu) += g.prep(row, xi) * s;
                        gp(row, xi) += g.omega(xi, mu) * s;
                    }
            }
    };

    auto project = [&](GcpModel& g) {
        for (int xi = 0; xi < 8; ++xi) detail::project_simplex(std::span<double>(g.omega.row(xi).data(), 8));
        if (!opt.relax_prep) return;
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1}) {
                const int row = prep_row(i, a);
                std::vector<int> idx;
                std::vector<double> vals;
                for (int xi = 0; xi < 8; ++xi)
                    if (HiddenStateSpace::consistent(xi, i, a)) {
                        idx.push_back(xi);
                        vals.push_back(g.prep(row, xi));
                    }
                detail::project_simplex(vals);
                g.prep.row(row).setZero();
                for (std::size_t k = 0; k < idx.size(); ++k) g.prep(row, idx[k]) = vals[k];
            }
    };

    auto blend = [](const GcpModel& a, const GcpModel& b, double s) {
        return GcpModel{(1 - s) * a.omega + s * b.omega, (1 - s) * a.prep + s * b.prep};
    };

    double step = 0.5;
    TransitionMatrix go;
    PrepMatrix gp;
    for (int it = 0; it < opt.refine_iterations && step > 1e-10; ++it) {
        gradient(x, go, gp);
        GcpModel y{x.omega + step * go, opt.relax_prep ? PrepMatrix(x.prep + step * gp) : x.prep};
        project(y);
        if (!gcp_feasible(y, frame)) {
            double lo = 0.0, hi = 1.0;
            for (int b = 0; b < 40; ++b) {
                const double mid = 0.5 * (lo + hi);
                (gcp_feasible(blend(x, y, mid), frame) ? lo : hi) = mid;
            }
            y = blend(x, y, lo);
        }
        const double fy = gcp_fidelity(y, frame);
        if (fy > fx + 1e-13) {
            x = y;
            fx = fy;
        } else {
            step *= 0.5;
        }
    }

    BoundResult r;
    r.argmax = x;
    r.f_gc = fx;
    r.min_eig = min_eigenvalue(build_chi_gc(x, frame).mat());
    r.constraint_set = opt.relax_prep ? "row-stochastic Omega, free consistent preparation, chi >= -1e-9"
                                      : "row-stochastic Omega, uniform preparation, chi >= -1e-9";
    return r;
}

inline BoundResult maximize_fgc(const MeasurementFrame& frame, const BoundOptions& opt = {}) {
    if (opt.method == BoundMethod::refine) {
        // Seed from the best vertex under branch and bound, then refine.
        BoundOptions seed_opt = opt;
        seed_opt.prune = true;
        const BoundResult v = enumerate_vertices(frame, seed_opt);
        BoundResult r = refine_model(v.argmax, frame, opt);
        r.vertex = v.vertex;
        r.vertex_value = v.vertex_value;
        r.leaves_visited = v.leaves_visited;
        r.refined_improved = r.f_gc > v.f_gc + 1e-12;
        if (!r.refined_improved) {
            r.f_gc = v.f_gc;
            r.argmax = v.argmax;
            r.min_eig = v.min_eig;
        }
        return r;
    }
    BoundResult v = enumerate_vertices(frame, opt);
    if (opt.method == BoundMethod::enumerate) return v;
    BoundResult r = refine_model(v.argmax, frame, opt);
    if (r.f_gc > v.f_gc + 1e-12) {
        v.refined_improved = true;
        v.f_gc = r.f_gc;
        v.argmax = r.argmax;
        v.min_eig = r.min_eig;
        v.constraint_set = r.constraint_set;
    }
    return v;
}

// Certification passes only strictly above the classical bound.
inline bool certify(double f_expt, double f_gc) {
    for (double v : {f_expt, f_gc})
        if (!(v >= 0.0 && v <= 1.0 + 1e-6)) throw domain_error("certify: fidelity outside [0, 1]");
    return f_expt > f_gc;
}

} // namespace ediqkd
