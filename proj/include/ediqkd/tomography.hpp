#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "quantum_core.hpp"

namespace ediqkd {

// Settings are 1-based (1 = X, 2 = Y, 3 = Z); outcomes are +1 / -1.
inline int outcome_index(int a) {
    if (a != 1 && a != -1) throw domain_error("outcome must be +1 or -1");
    return a > 0 ? 0 : 1;
}

inline void check_setting(int i) {
    if (i < 1 || i > 3) throw domain_error("setting must be 1, 2 or 3");
}

struct MeasurementFrame {
    std::array<Observable, 3> alice;
    std::array<Observable, 3> bob;

    // Alice X, Y, Z; Bob U X U^dag, U Y U^dag, U Z U^dag.
    static MeasurementFrame protocol() {
        return {{pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)},
                {rotated_observable(pauli(Axis::X)), rotated_observable(pauli(Axis::Y)),
                 rotated_observable(pauli(Axis::Z))}};
    }

    // Control frame in which Bob measures the same Paulis as Alice.
    static MeasurementFrame aligned() {
        return {{pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)},
                {pauli(Axis::X), pauli(Axis::Y), pauli(Axis::Z)}};
    }

    // The prepared eigenstate of Alice's observable i with eigenvalue a.
    DensityOp input_state(int i, int a) const {
        check_setting(i);
        return DensityOp(eigenprojector(alice[i - 1], a));
    }

    cmat bob_projector(int j, int b) const {
        check_setting(j);
        return eigenprojector(bob[j - 1], b);
    }
};

class ConditionalStats {
public:
    ConditionalStats() { p_.fill(std::numeric_limits<double>::quiet_NaN()); }

    double prob(int i, int a, int j, int b) const { return p_[index(i, a, j, b)]; }
    void set_prob(int i, int a, int j, int b, double v) { p_[index(i, a, j, b)] = v; }

    // Fill both outcomes of one (i, a, j) cell from P(+1).
    void set_plus(int i, int a, int j, double p_plus) {
        set_prob(i, a, j, 1, p_plus);
        set_prob(i, a, j, -1, 1.0 - p_plus);
    }

    const std::optional<std::array<std::uint64_t, 36>>& counts() const { return counts_; }
    std::uint64_t count(int i, int a, int j, int b) const {
        return counts_ ? (*counts_)[index(i, a, j, b)] : 0;
    }

    // Empirical conditional frequencies; cells without data stay NaN.
    static ConditionalStats from_counts(const std::array<std::uint64_t, 36>& c) {
        ConditionalStats s;
        s.counts_ = c;
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1})
                for (int j = 1; j <= 3; ++j) {
                    const double np = static_cast<double>(c[index(i, a, j, 1)]);
                    const double nm = static_cast<double>(c[index(i, a, j, -1)]);
                    if (np + nm > 0) s.set_plus(i, a, j, np / (np + nm));
                }
        return s;
    }

    bool complete() const {
        for (double v : p_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool normalized(double tol = 1e-9) const {
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1})
                for (int j = 1; j <= 3; ++j)
                    if (std::abs(prob(i, a, j, 1) + prob(i, a, j, -1) - 1.0) > tol) return false;
        return true;
    }

    // Row (i, a) as P(b | j) laid out [j-1][outcome_index(b)].
    std::array<std::array<double, 2>, 3> row(int i, int a) const {
        std::array<std::array<double, 2>, 3> r{};
        for (int j = 1; j <= 3; ++j)
            for (int b : {1, -1}) r[j - 1][outcome_index(b)] = prob(i, a, j, b);
        return r;
    }

    static std::size_t index(int i, int a, int j, int b) {
        check_setting(i);
        check_setting(j);
        return static_cast<std::size_t>(((i - 1) * 2 + outcome_index(a)) * 6 + (j - 1) * 2 + outcome_index(b));
    }

private:
    std::array<double, 36> p_{};
    std::optional<std::array<std::uint64_t, 36>> counts_;
};

using StatsRow = std::array<std::array<double, 2>, 3>;

inline void write_stats_csv(std::ostream& os, const ConditionalStats& s) {
    os << "i,a,j,b,probability,count\n";
    os.precision(17);
    for (int i = 1; i <= 3; ++i)
        for (int a : {1, -1})
            for (int j = 1; j <= 3; ++j)
                for (int b : {1, -1}) {
                    os << i << ',' << a << ',' << j << ',' << b << ',' << s.prob(i, a, j, b) << ',';
                    if (s.counts()) os << s.count(i, a, j, b);
                    os << '\n';
                }
}

inline ConditionalStats read_stats_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line.rfind("i,a,j,b,probability", 0) != 0)
        throw domain_error("stats CSV: missing header");
    ConditionalStats s;
    std::array<std::uint64_t, 36> c{};
    bool have_counts = false;
    while (std::getline(is, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ls(line);
        std::string f[6];
        for (int k = 0; k < 6; ++k) std::getline(ls, f[k], ',');
        const int i = std::stoi(f[0]), a = std::stoi(f[1]), j = std::stoi(f[2]), b = std::stoi(f[3]);
        s.set_prob(i, a, j, b, std::stod(f[4]));
        if (!f[5].empty()) {
            have_counts = true;
            c[ConditionalStats::index(i, a, j, b)] = std::stoull(f[5]);
        }
    }
    if (have_counts) {
        ConditionalStats sc = ConditionalStats::from_counts(c);
        return sc;
    }
    return s;
}

// rho = 1/2 (I + sum_j sum_b b P(b_j) V_j) with Bob's frame observables.
inline DensityOp reconstruct_state(const StatsRow& row, const MeasurementFrame& frame) {
    cmat rho = identity(2);
    for (int j = 0; j < 3; ++j) {
        if (std::abs(row[j][0] + row[j][1] - 1.0) > 1e-9) throw domain_error("reconstruct_state: unnormalized row");
        rho += (row[j][0] - row[j][1]) * frame.bob[j].mat();
    }
    rho *= 0.5;
    return DensityOp::reconstructed(0.5 * (rho + rho.adjoint()));
}

// Hermitian unit-trace matrix in block layout: block (r, c) holds the image of
// |r><c| divided by the input dimension. Not required to be PSD.
class ProcessMatrix {
public:
    ProcessMatrix(cmat m, Eigen::Index d_in) : m_(std::move(m)), d_in_(d_in) {
        if (m_.rows() != m_.cols() || d_in_ < 2 || m_.rows() % d_in_ != 0)
            throw domain_error("ProcessMatrix: inconsistent dimensions");
        if (hermiticity_error(m_) > 1e-10) throw domain_error("ProcessMatrix: not Hermitian");
        if (std::abs(m_.trace() - cplx(1.0)) > 1e-10) throw domain_error("ProcessMatrix: trace != 1");
    }

    // Hermitize and rescale to unit trace.
    static ProcessMatrix normalized(const cmat& raw, Eigen::Index d_in) {
        cmat h = 0.5 * (raw + raw.adjoint());
        const double t = h.trace().real();
        if (!(std::abs(t) > 1e-300)) throw domain_error("ProcessMatrix: zero trace");
        return ProcessMatrix(h / t, d_in);
    }

    const cmat& mat() const { return m_; }
    Eigen::Index d_in() const { return d_in_; }
    Eigen::Index d_out() const { return m_.rows() / d_in_; }

private:
    cmat m_;
    Eigen::Index d_in_;
};

// |Phi+><Phi+| on d_in x d_in: the identity process.
inline ProcessMatrix identity_process(Eigen::Index d) {
    cvec phi = cvec::Zero(d * d);
    for (Eigen::Index i = 0; i < d; ++i) phi(i * d + i) = 1.0 / std::sqrt(static_cast<double>(d));
    return ProcessMatrix(phi * phi.adjoint(), d);
}

inline ProcessMatrix process_matrix_1q(const ConditionalStats& stats, const MeasurementFrame& frame) {
    if (!stats.complete()) throw domain_error("process_matrix_1q: missing rows");
    std::array<cmat, 3> v;
    cmat ihat = cmat::Zero(2, 2);
    for (int i = 1; i <= 3; ++i) {
        const cmat rp = reconstruct_state(stats.row(i, 1), frame).mat();
        const cmat rm = reconstruct_state(stats.row(i, -1), frame).mat();
        v[i - 1] = rp - rm;
        ihat += (rp + rm) / 3.0;
    }
    using namespace std::complex_literals;
    cmat chi(4, 4);
    chi.block(0, 0, 2, 2) = ihat + v[2];
    chi.block(0, 2, 2, 2) = v[0] + 1i * v[1];
    chi.block(2, 0, 2, 2) = v[0] - 1i * v[1];
    chi.block(2, 2, 2, 2) = ihat - v[2];
    return ProcessMatrix::normalized(chi / 4.0, 2);
}

// Linear inversion: the unnormalized Choi-ordered matrix J/d_in of the linear map
// taking inputs[t] to outputs[t]. The inputs must span the operator space on the
// input; extra inputs are used in least squares. Outputs need not be states.
inline cmat linear_inversion(std::span<const cmat> inputs, std::span<const cmat> outputs) {
    if (inputs.empty() || inputs.size() != outputs.size())
        throw domain_error("process_matrix: input/output count mismatch");
    const Eigen::Index din = inputs.front().rows(), dout = outputs.front().rows();
    const Eigen::Index k = static_cast<Eigen::Index>(inputs.size());
    cmat a(din * din, k);
    for (Eigen::Index c = 0; c < k; ++c) {
        if (inputs[c].rows() != din || outputs[c].rows() != dout)
            throw domain_error("process_matrix: inconsistent dimensions");
        a.col(c) = inputs[c].reshaped();
    }
    Eigen::CompleteOrthogonalDecomposition<cmat> cod(a);
    cod.setThreshold(1e-10);
    if (cod.rank() < din * din) throw domain_error("process_matrix: inputs are not tomographically complete");

    cmat j = cmat::Zero(din * dout, din * dout);
    for (Eigen::Index r = 0; r < din; ++r)
        for (Eigen::Index c = 0; c < din; ++c) {
            cmat e = cmat::Zero(din, din);
            e(r, c) = 1.0;
            const cvec x = cod.solve(cvec(e.reshaped()));
            cmat img = cmat::Zero(dout, dout);
            for (Eigen::Index t = 0; t < k; ++t) img += x(t) * outputs[t];
            j.block(r * dout, c * dout, dout, dout) = img;
        }
    return j / static_cast<double>(din);
}

// Linear-inversion tomography for any input/output dimension.
inline ProcessMatrix process_matrix(std::span<const DensityOp> inputs, std::span<const DensityOp> outputs) {
    if (inputs.empty() || inputs.size() != outputs.size())
        throw domain_error("process_matrix: input/output count mismatch");
    std::vector<cmat> in, out;
    for (const DensityOp& r : inputs) in.push_back(r.mat());
    for (const DensityOp& r : outputs) out.push_back(r.mat());
    return ProcessMatrix::normalized(linear_inversion(in, out), inputs.front().dim());
}

inline ProcessMatrix process_matrix_2q(std::span<const DensityOp> inputs, std::span<const DensityOp> outputs) {
    if (inputs.size() != 16 || outputs.size() != 16) throw domain_error("process_matrix_2q: 16 inputs and outputs required");
    for (std::size_t t = 0; t < 16; ++t)
        if (inputs[t].dim() != 4 || outputs[t].dim() != 4) throw domain_error("process_matrix_2q: two-qubit states required");
    return process_matrix(inputs, outputs);
}

inline double process_fidelity(const ProcessMatrix& chi, const ProcessMatrix& target) {
    if (chi.mat().rows() != target.mat().rows() || chi.d_in() != target.d_in())
        throw domain_error("process_fidelity: dimension mismatch");
    const cplx f = (chi.mat() * target.mat()).trace();
    if (std::abs(f.imag()) > 1e-10) throw domain_error("process_fidelity: non-real trace");
    return f.real();
}

// E(rho) = d_in tr_in[(rho^T (x) I) chi].
inline cmat apply_process(const ProcessMatrix& chi, const cmat& rho) {
    const Eigen::Index din = chi.d_in(), dout = chi.d_out();
    if (rho.rows() != din || rho.cols() != din) throw domain_error("apply_process: dimension mismatch");
    cmat out = cmat::Zero(dout, dout);
    for (Eigen::Index r = 0; r < din; ++r)
        for (Eigen::Index c = 0; c < din; ++c) out += rho(r, c) * chi.mat().block(r * dout, c * dout, dout, dout);
    return static_cast<double>(din) * out;
}

inline DensityOp apply_process(const ProcessMatrix& chi, const DensityOp& rho) {
    cmat out = apply_process(chi, rho.mat());
    return DensityOp::reconstructed(0.5 * (out + out.adjoint()));
}

// A linear map on operators; used as a ground-truth oracle for tomography.
using Channel = std::function<cmat(const cmat&)>;

inline Channel kraus_channel(std::vector<cmat> ks) {
    return [ks = std::move(ks)](const cmat& rho) {
        cmat out = cmat::Zero(ks.front().rows(), ks.front().rows());
        for (const cmat& k : ks) out += k * rho * k.adjoint();
        return out;
    };
}

// Bloch-vector shrink by s: rho -> s rho + (1-s) tr(rho) I/2.
inline Channel depolarizing_channel(double shrink) {
    return [shrink](const cmat& rho) { return cmat(shrink * rho + (1.0 - shrink) * rho.trace() * identity(2) / 2.0); };
}

inline ProcessMatrix channel_process(const Channel& ch, Eigen::Index din) {
    cmat j;
    Eigen::Index dout = 0;
    for (Eigen::Index r = 0; r < din; ++r)
        for (Eigen::Index c = 0; c < din; ++c) {
            cmat e = cmat::Zero(din, din);
            e(r, c) = 1.0;
            const cmat img = ch(e);
            if (dout == 0) {
                dout = img.rows();
                j = cmat::Zero(din * dout, din * dout);
            }
            j.block(r * dout, c * dout, dout, dout) = img;
        }
    return ProcessMatrix::normalized(j / static_cast<double>(din), din);
}

// Noiseless conditional statistics of a one-qubit channel in a frame.
inline ConditionalStats exact_stats(const Channel& ch, const MeasurementFrame& frame) {
    ConditionalStats s;
    for (int i = 1; i <= 3; ++i)
        for (int a : {1, -1}) {
            const cmat out = ch(frame.input_state(i, a).mat());
            for (int j = 1; j <= 3; ++j) s.set_plus(i, a, j, (out * frame.bob_projector(j, 1)).trace().real());
        }
    return s;
}

} // namespace ediqkd
