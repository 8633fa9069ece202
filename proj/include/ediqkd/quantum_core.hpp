#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

#include "errors.hpp"

namespace ediqkd {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;

inline constexpr Eigen::Index max_dim = 16;
inline constexpr double hermitian_tol = 1e-12;
inline constexpr double trace_tol = 1e-10;
inline constexpr double psd_tol = 1e-10;

enum class Axis { X, Y, Z };

inline bool is_power_of_two(Eigen::Index n) { return n >= 2 && (n & (n - 1)) == 0; }

inline double hermiticity_error(const cmat& m) {
    return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

inline void require_square_pow2(const cmat& m, const char* what) {
    if (m.rows() != m.cols() || !is_power_of_two(m.rows()) || m.rows() > max_dim)
        throw domain_error(std::string(what) + ": dimension must be 2, 4, 8 or 16");
}

inline cmat identity(Eigen::Index d) { return cmat::Identity(d, d); }

struct EigenPairs {
    Eigen::VectorXd values; // ascending
    cmat vectors;           // columns
};

// Hermitian eigendecomposition; the lower triangle is read.
inline EigenPairs eigh(const cmat& m) {
    Eigen::SelfAdjointEigenSolver<cmat> es(m);
    if (es.info() != Eigen::Success) throw domain_error("eigh: decomposition failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

inline double min_eigenvalue(const cmat& m) { return eigh(m).values.minCoeff(); }

// A Hermitian +-1 valued measurement (or any Hermitian operator).
class Observable {
public:
    explicit Observable(cmat m) : m_(std::move(m)) {
        require_square_pow2(m_, "Observable");
        if (hermiticity_error(m_) > hermitian_tol) throw domain_error("Observable: not Hermitian");
    }

    const cmat& mat() const { return m_; }
    bool is_involution(double tol = 1e-10) const {
        return (m_ * m_ - identity(m_.rows())).cwiseAbs().maxCoeff() <= tol;
    }

private:
    cmat m_;
};

// Hermitian unit-trace operator. Construction through reconstructed() skips
// the positivity check, since tomography of untrusted data may leave the cone.
class DensityOp {
public:
    explicit DensityOp(cmat m) : m_(std::move(m)) {
        check_common();
        if (min_eigenvalue(m_) < -psd_tol) throw domain_error("DensityOp: not positive semidefinite");
    }

    static DensityOp reconstructed(cmat m) {
        DensityOp r;
        r.m_ = std::move(m);
        r.check_common();
        return r;
    }

    static DensityOp pure(const cvec& psi) {
        const double nrm = psi.norm();
        if (nrm == 0.0) throw domain_error("DensityOp::pure: zero vector");
        const cvec v = psi / nrm;
        return DensityOp(v * v.adjoint());
    }

    const cmat& mat() const { return m_; }
    Eigen::Index dim() const { return m_.rows(); }
    double purity() const { return (m_ * m_).trace().real(); }
    double min_eig() const { return min_eigenvalue(m_); }

private:
    DensityOp() = default;

    void check_common() const {
        require_square_pow2(m_, "DensityOp");
        if (hermiticity_error(m_) > hermitian_tol) throw domain_error("DensityOp: not Hermitian");
        if (std::abs(m_.trace() - cplx(1.0)) > trace_tol) throw domain_error("DensityOp: trace != 1");
    }

    cmat m_;
};

inline Observable pauli(Axis axis) {
    cmat m(2, 2);
    using namespace std::complex_literals;
    switch (axis) {
    case Axis::X: m << 0, 1, 1, 0; break;
    case Axis::Y: m << 0, -1i, 1i, 0; break;
    case Axis::Z: m << 1, 0, 0, -1; break;
    }
    return Observable(m);
}

// Bob's frame rotation U = |0><0| + e^{i pi/4} |1><1|.
inline cmat bob_rotation() {
    cmat u = cmat::Zero(2, 2);
    u(0, 0) = 1.0;
    u(1, 1) = std::polar(1.0, std::numbers::pi / 4);
    return u;
}

inline Observable rotated_observable(const Observable& base) {
    if (base.mat().rows() != 2) throw domain_error("rotated_observable: one-qubit observable expected");
    const cmat u = bob_rotation();
    cmat r = u * base.mat() * u.adjoint();
    r = 0.5 * (r + r.adjoint()).eval();
    return Observable(r);
}

inline cmat tensor(const cmat& a, const cmat& b) {
    const Eigen::Index r = a.rows() * b.rows(), c = a.cols() * b.cols();
    if (r > max_dim || c > max_dim) throw domain_error("tensor: dimension exceeds 16");
    cmat out(r, c);
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

inline cvec tensor(const cvec& a, const cvec& b) {
    if (a.size() * b.size() > max_dim) throw domain_error("tensor: dimension exceeds 16");
    cvec out(a.size() * b.size());
    for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
    return out;
}

inline DensityOp tensor(const DensityOp& a, const DensityOp& b) {
    return DensityOp::reconstructed(tensor(a.mat(), b.mat()));
}

// Trace out every subsystem not listed in `keep` (ascending indices into `dims`).
inline cmat partial_trace(const cmat& rho, std::span<const int> dims, std::span<const int> keep) {
    Eigen::Index total = 1;
    for (int d : dims) {
        if (d < 1) throw domain_error("partial_trace: bad subsystem dimension");
        total *= d;
    }
    if (rho.rows() != total || rho.cols() != total)
        throw domain_error("partial_trace: matrix does not match factorization");
    for (std::size_t k = 0; k < keep.size(); ++k) {
        if (keep[k] < 0 || keep[k] >= static_cast<int>(dims.size()) || (k > 0 && keep[k] <= keep[k - 1]))
            throw domain_error("partial_trace: keep must be ascending valid indices");
    }
    const std::size_t n = dims.size();
    std::vector<bool> kept(n, false);
    Eigen::Index out_dim = 1;
    for (int k : keep) {
        kept[k] = true;
        out_dim *= dims[k];
    }

    std::vector<int> digits_r(n), digits_c(n);
    auto split = [&](Eigen::Index idx, std::vector<int>& dg) {
        for (std::size_t s = n; s-- > 0;) {
            dg[s] = static_cast<int>(idx % dims[s]);
            idx /= dims[s];
        }
    };
    auto kept_index = [&](const std::vector<int>& dg) {
        Eigen::Index idx = 0;
        for (std::size_t s = 0; s < n; ++s)
            if (kept[s]) idx = idx * dims[s] + dg[s];
        return idx;
    };

    cmat out = cmat::Zero(out_dim, out_dim);
    for (Eigen::Index r = 0; r < total; ++r) {
        split(r, digits_r);
        for (Eigen::Index c = 0; c < total; ++c) {
            split(c, digits_c);
            bool diag = true;
            for (std::size_t s = 0; s < n && diag; ++s)
                if (!kept[s] && digits_r[s] != digits_c[s]) diag = false;
            if (diag) out(kept_index(digits_r), kept_index(digits_c)) += rho(r, c);
        }
    }
    return out;
}

inline DensityOp partial_trace(const DensityOp& rho, std::span<const int> dims, std::span<const int> keep) {
    return DensityOp::reconstructed(partial_trace(rho.mat(), dims, keep));
}

// Shannon entropy in bits of a probability vector, 0 log 0 = 0.
inline double shannon_entropy(std::span<const double> p) {
    double s = 0.0;
    for (double x : p)
        if (x > 0.0) s -= x * std::log2(x);
    return s;
}

// Eigenvalues in [-1e-10, 0) are clamped to zero before the logarithm.
inline double von_neumann_entropy(const cmat& rho) {
    const Eigen::VectorXd ev = eigh(rho).values;
    std::vector<double> p(ev.size());
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        if (ev(i) < -psd_tol) throw domain_error("von_neumann_entropy: negative eigenvalue");
        p[i] = std::max(ev(i), 0.0);
    }
    return shannon_entropy(p);
}

inline double von_neumann_entropy(const DensityOp& rho) { return von_neumann_entropy(rho.mat()); }

inline double binary_entropy(double x) {
    if (!(x >= 0.0 && x <= 1.0)) throw domain_error("binary_entropy: argument outside [0,1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

inline double trace_distance(const cmat& a, const cmat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw domain_error("trace_distance: dimension mismatch");
    if (hermiticity_error(a) > 1e-10 || hermiticity_error(b) > 1e-10)
        throw domain_error("trace_distance: Hermitian input expected");
    const cmat d = a - b;
    return 0.5 * eigh(0.5 * (d + d.adjoint())).values.cwiseAbs().sum();
}

inline cvec ket(std::initializer_list<cplx> amps) {
    cvec v(static_cast<Eigen::Index>(amps.size()));
    Eigen::Index i = 0;
    for (cplx a : amps) v(i++) = a;
    return v;
}

// Projector onto the `sign` eigenspace of a +-1 observable.
inline cmat eigenprojector(const Observable& o, int sign) {
    return 0.5 * (identity(o.mat().rows()) + static_cast<double>(sign) * o.mat());
}

} // namespace ediqkd
