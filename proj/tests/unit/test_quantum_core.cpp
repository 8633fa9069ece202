#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <random>

#include <ediqkd/quantum_core.hpp>

using namespace ediqkd;
using namespace std::complex_literals;

namespace {

cmat random_unitary(int d, std::mt19937_64& g) {
    std::normal_distribution<double> n;
    cmat a(d, d);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < d; ++c) a(r, c) = cplx(n(g), n(g));
    Eigen::HouseholderQR<cmat> qr(a);
    return qr.householderQ();
}

cmat random_density(int d, std::mt19937_64& g, int rank = -1) {
    std::normal_distribution<double> n;
    const int k = rank < 0 ? d : rank;
    cmat a(d, k);
    for (int r = 0; r < d; ++r)
        for (int c = 0; c < k; ++c) a(r, c) = cplx(n(g), n(g));
    cmat rho = a * a.adjoint();
    return rho / rho.trace().real();
}

// Oracle: half the nuclear norm from singular values.
double trace_distance_svd(const cmat& a, const cmat& b) {
    Eigen::JacobiSVD<cmat> svd(a - b);
    return 0.5 * svd.singularValues().sum();
}

} // namespace

TEST(Pauli, AlgebraAndInvolution) {
    const cmat x = pauli(Axis::X).mat(), y = pauli(Axis::Y).mat(), z = pauli(Axis::Z).mat();
    EXPECT_LT((x * y - 1i * z).norm(), 1e-15);
    EXPECT_LT((y * z - 1i * x).norm(), 1e-15);
    EXPECT_LT((z * x - 1i * y).norm(), 1e-15);
    for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
        EXPECT_TRUE(pauli(a).is_involution());
        EXPECT_TRUE(rotated_observable(pauli(a)).is_involution());
    }
}

TEST(Pauli, BobRotationMapsXtoDiagonal) {
    // U X U^dag = (X + Y)/sqrt2 for U = diag(1, e^{i pi/4}).
    const cmat rx = rotated_observable(pauli(Axis::X)).mat();
    const cmat want = (pauli(Axis::X).mat() + pauli(Axis::Y).mat()) / std::sqrt(2.0);
    EXPECT_LT((rx - want).norm(), 1e-14);
    EXPECT_LT((rotated_observable(pauli(Axis::Z)).mat() - pauli(Axis::Z).mat()).norm(), 1e-15);
}

TEST(Observable, RejectsNonHermitian) {
    cmat m(2, 2);
    m << 0, 1, 0, 0;
    EXPECT_THROW(Observable{m}, domain_error);
}

TEST(DensityOp, Validation) {
    cmat bad = identity(2);
    EXPECT_THROW(DensityOp{bad}, domain_error); // trace 2
    cmat neg(2, 2);
    neg << 1.2, 0, 0, -0.2;
    EXPECT_THROW(DensityOp{neg}, domain_error);
    EXPECT_NO_THROW(DensityOp::reconstructed(neg));
    const DensityOp p = DensityOp::pure(ket({1.0, 1.0}));
    EXPECT_NEAR(p.purity(), 1.0, 1e-14);
    EXPECT_NEAR(p.mat().trace().real(), 1.0, 1e-14);
}

TEST(Tensor, MixedProductProperty) {
    std::mt19937_64 g(7);
    for (int rep = 0; rep < 20; ++rep) {
        const cmat a = random_unitary(2, g), b = random_unitary(2, g), c = random_unitary(2, g), d = random_unitary(2, g);
        EXPECT_LT((tensor(a, b) * tensor(c, d) - tensor(cmat(a * c), cmat(b * d))).norm(), 1e-13);
    }
}

TEST(Tensor, DimensionLimit) {
    EXPECT_NO_THROW(tensor(identity(4), identity(4)));
    EXPECT_THROW(tensor(identity(4), identity(8)), domain_error);
}

TEST(PartialTrace, BellStateMarginalIsMaximallyMixed) {
    const cvec bell = ket({1.0 / std::sqrt(2.0), 0.0, 0.0, 1.0 / std::sqrt(2.0)});
    const cmat rho = bell * bell.adjoint();
    const std::array<int, 2> dims{2, 2};
    for (int k : {0, 1}) {
        const std::array<int, 1> keep{k};
        EXPECT_LT((partial_trace(rho, dims, keep) - identity(2) / 2.0).norm(), 1e-15);
    }
}

TEST(PartialTrace, ProductStatesFactor) {
    std::mt19937_64 g(11);
    const cmat a = random_density(2, g), b = random_density(2, g), c = random_density(2, g);
    const cmat abc = tensor(tensor(a, b), c);
    const std::array<int, 3> dims{2, 2, 2};
    EXPECT_LT((partial_trace(abc, dims, std::array<int, 1>{0}) - a).norm(), 1e-14);
    EXPECT_LT((partial_trace(abc, dims, std::array<int, 1>{1}) - b).norm(), 1e-14);
    EXPECT_LT((partial_trace(abc, dims, std::array<int, 2>{0, 2}) - tensor(a, c)).norm(), 1e-14);
    EXPECT_LT((partial_trace(abc, dims, std::array<int, 3>{0, 1, 2}) - abc).norm(), 1e-14);
}

TEST(PartialTrace, RejectsBadKeep) {
    const std::array<int, 2> dims{2, 2};
    EXPECT_THROW(partial_trace(identity(4), dims, std::array<int, 2>{1, 0}), domain_error);
    EXPECT_THROW(partial_trace(identity(4), dims, std::array<int, 1>{2}), domain_error);
}

TEST(Entropy, KnownValues) {
    EXPECT_NEAR(binary_entropy(0.5), 1.0, 1e-15);
    EXPECT_EQ(binary_entropy(0.0), 0.0);
    EXPECT_EQ(binary_entropy(1.0), 0.0);
    EXPECT_NEAR(binary_entropy(0.11), -0.11 * std::log2(0.11) - 0.89 * std::log2(0.89), 1e-15);
    EXPECT_THROW(binary_entropy(1.5), domain_error);
    const std::array<double, 4> u{0.25, 0.25, 0.25, 0.25};
    EXPECT_NEAR(shannon_entropy(u), 2.0, 1e-15);
    EXPECT_NEAR(von_neumann_entropy(identity(4) / 4.0), 2.0, 1e-12);
    EXPECT_NEAR(von_neumann_entropy(DensityOp::pure(ket({0.6, 0.8}))), 0.0, 1e-10);
}

TEST(Entropy, UnitaryInvarianceAndBounds) {
    std::mt19937_64 g(3);
    for (int rep = 0; rep < 30; ++rep) {
        const int d = rep % 2 ? 2 : 4;
        const cmat rho = random_density(d, g);
        const cmat u = random_unitary(d, g);
        const double s = von_neumann_entropy(rho);
        EXPECT_NEAR(von_neumann_entropy(cmat(u * rho * u.adjoint())), s, 1e-10);
        EXPECT_GE(s, 0.0);
        EXPECT_LE(s, std::log2(d) + 1e-12);
    }
}

TEST(Entropy, SubadditivityAndArakiLieb) {
    std::mt19937_64 g(5);
    const std::array<int, 2> dims{2, 2};
    for (int rep = 0; rep < 30; ++rep) {
        const cmat rho = random_density(4, g, 1 + rep % 4);
        const double sab = von_neumann_entropy(rho);
        const double sa = von_neumann_entropy(partial_trace(rho, dims, std::array<int, 1>{0}));
        const double sb = von_neumann_entropy(partial_trace(rho, dims, std::array<int, 1>{1}));
        EXPECT_LE(sab, sa + sb + 1e-10);
        EXPECT_GE(sab, std::abs(sa - sb) - 1e-10);
    }
}

TEST(TraceDistance, MatchesSvdOracle) {
    std::mt19937_64 g(13);
    for (int rep = 0; rep < 50; ++rep) {
        const int d = 2 << (rep % 3);
        const cmat a = random_density(d, g), b = random_density(d, g);
        EXPECT_NEAR(trace_distance(a, b), trace_distance_svd(a, b), 1e-12);
    }
}

TEST(TraceDistance, MetricProperties) {
    std::mt19937_64 g(17);
    for (int rep = 0; rep < 50; ++rep) {
        const cmat a = random_density(2, g), b = random_density(2, g), c = random_density(2, g);
        EXPECT_NEAR(trace_distance(a, a), 0.0, 1e-14);
        EXPECT_NEAR(trace_distance(a, b), trace_distance(b, a), 1e-14);
        EXPECT_LE(trace_distance(a, c), trace_distance(a, b) + trace_distance(b, c) + 1e-12);
        EXPECT_LE(trace_distance(a, b), 1.0 + 1e-12);
        const cmat u = random_unitary(2, g);
        EXPECT_NEAR(trace_distance(cmat(u * a * u.adjoint()), cmat(u * b * u.adjoint())), trace_distance(a, b), 1e-12);
    }
    EXPECT_NEAR(trace_distance(DensityOp::pure(ket({1.0, 0.0})).mat(), DensityOp::pure(ket({0.0, 1.0})).mat()), 1.0, 1e-14);
    EXPECT_THROW(trace_distance(identity(2), identity(4)), domain_error);
}
