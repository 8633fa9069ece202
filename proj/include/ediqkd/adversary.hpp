#pragma once

#include <array>
#include <cmath>
#include <string_view>
#include <vector>

#include "tomography.hpp"

namespace ediqkd {

// Cloner spectrum lambda_jk, jk in {00, 01, 10, 11}, applied in basis W.
struct CloneSpec {
    std::array<double, 4> lambda{1.0, 0.0, 0.0, 0.0};
    cmat basis = identity(2);

    static CloneSpec symmetric(double p, cmat w = identity(2)) {
        if (!(p >= 0.0 && p <= 0.75)) throw domain_error("CloneSpec: p outside [0, 3/4]");
        return {{1.0 - p, p / 3.0, p / 3.0, p / 3.0}, std::move(w)};
    }

    void validate() const {
        double s = 0.0;
        for (double l : lambda) {
            if (l < 0.0) throw domain_error("CloneSpec: negative lambda");
            s += l;
        }
        if (std::abs(s - 1.0) > 1e-12) throw domain_error("CloneSpec: lambda does not sum to 1");
        if ((basis * basis.adjoint() - identity(2)).cwiseAbs().maxCoeff() > 1e-12)
            throw domain_error("CloneSpec: basis is not unitary");
    }
};

// U_jk |s> = e^{i pi s k} |s xor j>, i.e. X^j Z^k.
inline cmat clone_unitary(int j, int k) {
    cmat u = identity(2);
    if (k) u = pauli(Axis::Z).mat();
    if (j) u = (pauli(Axis::X).mat() * u).eval();
    return u;
}

// Isometry qubit -> B (x) E (x) E' (8 x 2).
inline cmat cloner_isometry(const CloneSpec& spec) {
    spec.validate();
    const cmat& w = spec.basis;
    const cvec phi = ket({1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)});
    cmat v = cmat::Zero(8, 2);
    for (int s = 0; s < 2; ++s) {
        cvec in = cvec::Zero(2);
        in(s) = 1.0;
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) {
                const cmat u = w * clone_unitary(j, k) * w.adjoint();
                const cvec ee = tensor(identity(2), u) * phi;
                v.col(s) += std::sqrt(spec.lambda[2 * j + k]) * tensor(cvec(u * in), ee);
            }
    }
    return v;
}

// Pure three-qubit output B (x) E (x) E' for a pure input.
inline DensityOp uqcm_state(const DensityOp& rho_in, const CloneSpec& spec) {
    if (rho_in.dim() != 2) throw domain_error("uqcm_state: one-qubit input expected");
    if (std::abs(rho_in.purity() - 1.0) > 1e-10) throw domain_error("uqcm_state: input must be pure");
    const EigenPairs ep = eigh(rho_in.mat());
    const cvec psi = ep.vectors.col(1);
    const cvec out = cloner_isometry(spec) * psi;
    return DensityOp::pure(out);
}

// Convex extension of the cloner to mixed inputs.
inline cmat uqcm_apply(const cmat& rho, const CloneSpec& spec) {
    const cmat v = cloner_isometry(spec);
    return v * rho * v.adjoint();
}

inline constexpr std::array<int, 3> bee_dims{2, 2, 2};

inline cmat marginal(const cmat& rho_bee, std::initializer_list<int> keep) {
    const std::vector<int> k(keep);
    return partial_trace(rho_bee, bee_dims, k);
}

inline std::vector<DensityOp> protocol_inputs() {
    const MeasurementFrame f = MeasurementFrame::protocol();
    std::vector<DensityOp> v;
    for (int i = 1; i <= 3; ++i)
        for (int a : {1, -1}) v.push_back(f.input_state(i, a));
    return v;
}

// Max trace distance between E' marginals over the six protocol inputs.
inline double ancilla_independence(const CloneSpec& spec) {
    std::vector<cmat> m;
    for (const DensityOp& in : protocol_inputs()) m.push_back(marginal(uqcm_state(in, spec).mat(), {2}));
    double worst = 0.0;
    for (std::size_t x = 0; x < m.size(); ++x)
        for (std::size_t y = x + 1; y < m.size(); ++y) worst = std::max(worst, trace_distance(m[x], m[y]));
    return worst;
}

// Completion of the cloner isometry to a unitary on B (x) E (x) E', acting on
// |s>|0>|0> as the isometry. Remaining columns by Gram-Schmidt on the standard basis.
inline cmat cloner_unitary(const CloneSpec& spec) {
    const cmat v = cloner_isometry(spec);
    cmat u = cmat::Zero(8, 8);
    u.col(0) = v.col(0);
    u.col(4) = v.col(1);
    std::vector<cvec> basis{v.col(0), v.col(1)};
    int next = 0;
    for (int c = 0; c < 8; ++c) {
        if (c == 0 || c == 4) continue;
        for (;; ++next) {
            cvec e = cvec::Zero(8);
            e(next) = 1.0;
            for (const cvec& b : basis) e -= b.dot(e) * b;
            if (e.norm() > 1e-6) {
                e.normalize();
                basis.push_back(e);
                u.col(c) = e;
                ++next;
                break;
            }
        }
    }
    return u;
}

// Two-qubit process on (B, E) obtained by tracing E' from the completed cloner,
// reconstructed from 16 product inputs.
inline std::vector<DensityOp> two_qubit_inputs() {
    const std::array<cvec, 4> kets{ket({1.0, 0.0}), ket({0.0, 1.0}), ket({1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0)}),
                                   ket({1.0 / std::sqrt(2.0), cplx(0.0, 1.0 / std::sqrt(2.0))})};
    std::vector<DensityOp> v;
    for (const cvec& a : kets)
        for (const cvec& b : kets) v.push_back(DensityOp::pure(tensor(a, b)));
    return v;
}

inline cmat uqcm_two_qubit_map(const cmat& rho_be, const CloneSpec& spec) {
    const cmat u = cloner_unitary(spec);
    cmat anc = cmat::Zero(2, 2);
    anc(0, 0) = 1.0;
    return marginal(u * tensor(rho_be, anc) * u.adjoint(), {0, 1});
}

inline ProcessMatrix uqcm_process_2q(const CloneSpec& spec) {
    const std::vector<DensityOp> in = two_qubit_inputs();
    std::vector<DensityOp> out;
    for (const DensityOp& r : in) out.push_back(DensityOp::reconstructed(uqcm_two_qubit_map(r.mat(), spec)));
    return process_matrix_2q(in, out);
}

inline void check_qber(double q) {
    if (!(q >= 0.0 && q <= 1.0 / 6.0 + 1e-15)) throw domain_error("QBER outside [0, 1/6]");
}

// Eve applies the symmetric cloner of strength p with probability p_attack.
struct AttackModel {
    CloneSpec clone = CloneSpec::symmetric(0.25);
    double p_attack = 0.0;

    double cloner_p() const { return 1.0 - clone.lambda[0]; }
    double qber() const { return 2.0 * cloner_p() * p_attack / 3.0; }

    static AttackModel from_qber(double q, double p = 0.25) {
        check_qber(q);
        const double pa = 3.0 * q / (2.0 * p);
        if (pa > 1.0 + 1e-12) throw domain_error("AttackModel: QBER not reachable with this cloner");
        return {CloneSpec::symmetric(p), std::min(pa, 1.0)};
    }

    // B (x) E (x) E' after the attack; Eve starts in |00>.
    cmat output(const cmat& rho_in) const {
        cmat e00 = cmat::Zero(4, 4);
        e00(0, 0) = 1.0;
        return p_attack * uqcm_apply(rho_in, clone) + (1.0 - p_attack) * tensor(rho_in, e00);
    }
};

// rho -> (1 - Q) rho + Q rho_perp, the channel Bob sees under the attack.
struct FlipChannel {
    double q;

    explicit FlipChannel(double qber) : q(qber) { check_qber(qber); }

    cmat operator()(const cmat& rho) const {
        const cmat perp = rho.trace() * identity(2) - rho;
        return (1.0 - q) * rho + q * perp;
    }
    Channel channel() const { return [*this](const cmat& r) { return (*this)(r); }; }
    double shrink() const { return 1.0 - 2.0 * q; }

    ProcessMatrix process() const {
        const double s = shrink();
        return ProcessMatrix(s * identity_process(2).mat() + (1.0 - s) * identity(4) / 4.0, 2);
    }
};

inline FlipChannel bob_channel(double q) { return FlipChannel(q); }

enum class HolevoModel {
    mixture,       // numeric Holevo quantity of the p = 1/4, p' = 6Q mixture ensemble
    closed_form,   // S(lambda) - h(lambda10 + lambda00) with p = 3Q/2
    entropy_bound, // S(rho_EE') = H(lambda) with p = 3Q/2, conditional entropies dropped
};

inline std::string_view to_string(HolevoModel m) {
    switch (m) {
    case HolevoModel::mixture: return "mixture";
    case HolevoModel::closed_form: return "closed_form";
    case HolevoModel::entropy_bound: return "entropy_bound";
    }
    return "?";
}

// The variant whose zero crossing lands at the 6.9 % EDIQKD threshold; used by key rates.
inline constexpr HolevoModel normative_holevo = HolevoModel::entropy_bound;

inline double lambda_entropy(double p) {
    const CloneSpec c = CloneSpec::symmetric(p);
    return shannon_entropy(c.lambda);
}

inline double eve_information(double q, HolevoModel model = HolevoModel::mixture, const cmat& basis = identity(2)) {
    check_qber(q);
    switch (model) {
    case HolevoModel::closed_form: {
        const CloneSpec c = CloneSpec::symmetric(1.5 * q);
        return std::max(0.0, shannon_entropy(c.lambda) - binary_entropy(c.lambda[2] + c.lambda[0]));
    }
    case HolevoModel::entropy_bound: return lambda_entropy(1.5 * q);
    case HolevoModel::mixture: break;
    }
    AttackModel atk = AttackModel::from_qber(q);
    atk.clone.basis = basis;
    const MeasurementFrame f = MeasurementFrame::protocol();
    cmat avg = cmat::Zero(4, 4);
    double cond = 0.0;
    for (int a : {1, -1}) {
        const cmat ee = marginal(atk.output(f.input_state(3, a).mat()), {1, 2});
        avg += 0.5 * ee;
        cond += 0.5 * von_neumann_entropy(ee);
    }
    return std::max(0.0, von_neumann_entropy(avg) - cond);
}

// Trace distance between the attacked A' -> B (x) E process and the ideal
// separable one (identity to Bob, Eve left in |0>), both reconstructed by
// linear-inversion tomography over the six protocol inputs. Reconstruction is
// linear, so the difference of the two processes is reconstructed directly
// from the difference of their outputs.
inline double secrecy_distance(double q) {
    const AttackModel atk = AttackModel::from_qber(q);
    cmat e0 = cmat::Zero(2, 2);
    e0(0, 0) = 1.0;
    std::vector<cmat> in, diff;
    for (const DensityOp& r : protocol_inputs()) {
        in.push_back(r.mat());
        diff.push_back(marginal(atk.output(r.mat()), {0, 1}) - tensor(r.mat(), e0));
    }
    const cmat delta = linear_inversion(in, diff);
    return trace_distance(delta, cmat::Zero(delta.rows(), delta.cols()));
}

// Same comparison for the two-qubit (B, E) -> (B, E) process of the completed
// cloner against the two-qubit identity.
inline double secrecy_distance_two_qubit(double q) {
    const AttackModel atk = AttackModel::from_qber(q);
    const std::vector<DensityOp> in = two_qubit_inputs();
    std::vector<DensityOp> out;
    for (const DensityOp& r : in) {
        const cmat o = atk.p_attack * uqcm_two_qubit_map(r.mat(), atk.clone) + (1.0 - atk.p_attack) * r.mat();
        out.push_back(DensityOp::reconstructed(o));
    }
    return trace_distance(process_matrix_2q(in, out).mat(), identity_process(4).mat());
}

} // namespace ediqkd
