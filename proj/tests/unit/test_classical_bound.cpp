#include <gtest/gtest.h>

#include <random>
#include <set>

#include <ediqkd/classical_bound.hpp>

using namespace ediqkd;

namespace {

std::array<int, 8> identity_vertex() { return {0, 1, 2, 3, 4, 5, 6, 7}; }

BoundOptions enum_opts(unsigned threads = 1) {
    BoundOptions o;
    o.method = BoundMethod::enumerate;
    o.threads = threads;
    return o;
}

// Oracle: Bob's rotated observables read classical identity statistics as
// the unitary U = diag(1, e^{i pi/4}), whose process fidelity is |tr U|^2 / 4.
double unitary_fidelity_oracle() {
    const cplx t = bob_rotation().trace();
    return std::norm(t) / 4.0;
}

} // namespace

TEST(HiddenStates, EncodingCoversAllAssignments) {
    std::set<std::array<int, 3>> seen;
    for (int xi = 0; xi < 8; ++xi)
        seen.insert({HiddenStateSpace::value(xi, 1), HiddenStateSpace::value(xi, 2), HiddenStateSpace::value(xi, 3)});
    EXPECT_EQ(seen.size(), 8u);
}

TEST(GcpModel, IdentityVertexReproducesAlignedStatistics) {
    const ConditionalStats s = gcp_stats(GcpModel::vertex(identity_vertex()));
    const ConditionalStats want = exact_stats([](const cmat& r) { return r; }, MeasurementFrame::aligned());
    for (int i = 1; i <= 3; ++i)
        for (int a : {1, -1})
            for (int j = 1; j <= 3; ++j)
                for (int b : {1, -1}) EXPECT_NEAR(s.prob(i, a, j, b), want.prob(i, a, j, b), 1e-15);
    EXPECT_NEAR(gcp_fidelity(GcpModel::vertex(identity_vertex()), MeasurementFrame::aligned()), 1.0, 1e-12);
}

TEST(GcpModel, ChiHasUnitTrace) {
    std::mt19937_64 g(1);
    std::uniform_int_distribution<int> d(0, 7);
    for (int rep = 0; rep < 50; ++rep) {
        std::array<int, 8> m;
        for (int& x : m) x = d(g);
        EXPECT_NEAR(build_chi_gc(GcpModel::vertex(m), MeasurementFrame::protocol()).mat().trace().real(), 1.0, 1e-12);
    }
}

TEST(GcpModel, ValidationRejectsBadModels) {
    GcpModel g = GcpModel::vertex(identity_vertex());
    g.omega(0, 0) = 0.5;
    EXPECT_THROW(g.validate(), domain_error);
    g = GcpModel::vertex(identity_vertex());
    g.prep(0, 7) = 0.25; // assignment 7 has X = -1, inconsistent with (X, +1)
    g.prep(0, 0) = 0.0;
    EXPECT_THROW(g.validate(), domain_error);
}

TEST(Fidelity, AffineDecompositionMatchesDirectEvaluation) {
    const MeasurementFrame f = MeasurementFrame::protocol();
    const detail::FidelityWeights fw = detail::fidelity_weights(f);
    std::mt19937_64 g(4);
    std::uniform_real_distribution<double> u;
    for (int rep = 0; rep < 25; ++rep) {
        ConditionalStats s;
        std::array<double, 36> p{};
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1})
                for (int j = 1; j <= 3; ++j) s.set_plus(i, a, j, u(g));
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1})
                for (int j = 1; j <= 3; ++j)
                    for (int b : {1, -1}) p[ConditionalStats::index(i, a, j, b)] = s.prob(i, a, j, b);
        double affine = fw.c0;
        for (std::size_t c = 0; c < 36; ++c) affine += fw.w[c] * p[c];
        EXPECT_NEAR(affine, process_fidelity(process_matrix_1q(s, f), identity_process(2)), 1e-12);
    }
}

TEST(Bound, ProtocolFrameValue) {
    const BoundResult r = maximize_fgc(MeasurementFrame::protocol(), enum_opts());
    EXPECT_NEAR(r.f_gc, unitary_fidelity_oracle(), 1e-9);
    EXPECT_NEAR(r.f_gc, 0.8536, 1e-3);
    EXPECT_GE(r.min_eig, -1e-9);
    EXPECT_NO_THROW(r.argmax.validate());
}

TEST(Bound, IdentityVertexIsALowerBound) {
    const double id = gcp_fidelity(GcpModel::vertex(identity_vertex()), MeasurementFrame::protocol());
    EXPECT_NEAR(id, unitary_fidelity_oracle(), 1e-12);
    EXPECT_LT(id, 1.0);
}

TEST(Bound, AlignedControlIsOne) {
    EXPECT_NEAR(maximize_fgc(MeasurementFrame::aligned(), enum_opts()).f_gc, 1.0, 1e-9);
}

TEST(Bound, NoSampledFeasibleVertexBeatsTheMaximum) {
    const MeasurementFrame f = MeasurementFrame::protocol();
    const double best = maximize_fgc(f, enum_opts()).f_gc;
    std::mt19937_64 g(77);
    std::uniform_int_distribution<int> d(0, 7);
    for (int rep = 0; rep < 3000; ++rep) {
        std::array<int, 8> m;
        for (int& x : m) x = d(g);
        const GcpModel model = GcpModel::vertex(m);
        if (gcp_feasible(model, f)) EXPECT_LE(gcp_fidelity(model, f), best + 1e-12);
    }
}

TEST(Bound, DeterministicAcrossThreadsAndRowOrders) {
    const MeasurementFrame f = MeasurementFrame::protocol();
    const BoundResult one = maximize_fgc(f, enum_opts(1));
    const BoundResult four = maximize_fgc(f, enum_opts(4));
    EXPECT_EQ(one.vertex, four.vertex);
    EXPECT_EQ(one.f_gc, four.f_gc);
    BoundOptions rev = enum_opts(2);
    rev.row_order = {7, 6, 5, 4, 3, 2, 1, 0};
    EXPECT_NEAR(maximize_fgc(f, rev).f_gc, one.f_gc, 1e-12);
    BoundOptions bad = enum_opts();
    bad.row_order = {0, 0, 1, 2, 3, 4, 5, 6};
    EXPECT_THROW(maximize_fgc(f, bad), domain_error);
}

TEST(Bound, RefinementDoesNotExceedFeasibleRegion) {
    BoundOptions o;
    o.method = BoundMethod::both;
    o.refine_iterations = 100;
    const BoundResult r = maximize_fgc(MeasurementFrame::protocol(), o);
    EXPECT_GE(r.f_gc, r.vertex_value - 1e-12);
    EXPECT_GE(r.min_eig, -1e-9);
    EXPECT_NO_THROW(r.argmax.validate(1e-8));
}

TEST(Certify, StrictInequality) {
    EXPECT_FALSE(certify(0.8, 0.8));
    EXPECT_TRUE(certify(0.8 + 1e-12, 0.8));
    EXPECT_FALSE(certify(0.75, 0.85));
    EXPECT_THROW(certify(1.5, 0.85), domain_error);
    EXPECT_THROW(certify(-0.1, 0.85), domain_error);
}
