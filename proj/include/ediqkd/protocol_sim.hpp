#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "classical_bound.hpp"
#include "photonic.hpp"

namespace ediqkd {

// Counter-based generator: every draw is a SplitMix64 hash of (seed, round, slot),
// so round k produces the same numbers no matter which thread runs it.
struct CounterRng {
    std::uint64_t seed = 0;

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }
    std::uint64_t bits(std::uint64_t round, std::uint32_t slot) const {
        return mix(mix(seed) ^ mix(round * 8 + slot));
    }
    double uniform(std::uint64_t round, std::uint32_t slot) const {
        return static_cast<double>(bits(round, slot) >> 11) * 0x1.0p-53;
    }
};

enum class ChannelKind { ideal, flip, uqcm, depolarizing, photonic };

struct ChannelSpec {
    ChannelKind kind = ChannelKind::ideal;
    double param = 0.0; // Q for flip, p' for uqcm, q for depolarizing
    PhotonicParams photonic{};
    PhotonicConventions conventions{};

    static ChannelSpec ideal() { return {}; }
    static ChannelSpec flip(double q) { return {ChannelKind::flip, q}; }
    static ChannelSpec uqcm(double p_attack) { return {ChannelKind::uqcm, p_attack}; }
    static ChannelSpec depolarizing(double q) { return {ChannelKind::depolarizing, q}; }
    static ChannelSpec photonic_source(const PhotonicParams& p, PhotonicConventions c = {}) {
        return {ChannelKind::photonic, 0.0, p, c};
    }

    std::string describe() const {
        switch (kind) {
        case ChannelKind::ideal: return "ideal";
        case ChannelKind::flip: return "flip(" + std::to_string(param) + ")";
        case ChannelKind::uqcm: return "uqcm(" + std::to_string(param) + ")";
        case ChannelKind::depolarizing: return "depolarizing(" + std::to_string(param) + ")";
        case ChannelKind::photonic: return "photonic(eta=" + std::to_string(photonic.eta) + "," + conventions.label() + ")";
        }
        return "?";
    }
};

enum class SettingsMode { uniform, biased };

struct SessionConfig {
    std::uint64_t n_rounds = 1'000'000;
    double gamma = 8.0 / 9.0;
    SettingsMode settings = SettingsMode::uniform;
    std::uint64_t seed = 1;
    ChannelSpec channel{};
    bool correction = true;
    unsigned threads = 1;
    int blocks = 4;
    std::optional<std::uint64_t> switch_round; // from this round on `channel_after` is used
    ChannelSpec channel_after{};
    std::optional<double> f_gc; // abort threshold; the classical bound of the protocol frame if empty

    std::uint64_t key_rounds_nominal() const {
        return static_cast<std::uint64_t>(std::floor(static_cast<double>(n_rounds) * (1.0 - gamma)));
    }

    // Probability that a party picks setting Z; X and Y share the rest.
    double z_probability() const { return settings == SettingsMode::uniform ? 1.0 / 3.0 : std::sqrt(1.0 - gamma); }

    void validate() const {
        if (n_rounds < 1) throw domain_error("SessionConfig: N must be >= 1");
        if (settings == SettingsMode::biased && !(gamma > 0 && gamma < 1))
            throw domain_error("SessionConfig: gamma outside (0,1)");
        if (threads < 1) throw domain_error("SessionConfig: threads must be >= 1");
    }
};

enum class RoundKind : std::uint8_t { test, key, discarded };

struct RoundRecord {
    std::uint64_t k = 0;
    std::int8_t i = 0, a = 0, j = 0, b = 0;
    RoundKind kind = RoundKind::test;
};

struct BlockReport {
    std::vector<double> f_expt;
    std::vector<double> std_err;
    std::vector<std::uint64_t> lengths;
    double statistic = 0; // max pairwise |dF|
    double threshold_ratio = 0; // max pairwise |dF| / pooled standard error
    bool flagged = false;
};

struct SessionResult {
    ConditionalStats stats;
    double f_expt = 0;
    double f_gc = 0;
    bool aborted = false;
    std::vector<std::uint8_t> alice_key, bob_key;
    double q_emp = 0;
    BlockReport block_report;
    std::vector<RoundRecord> records;
    std::uint64_t n_test = 0, n_key = 0, n_discarded = 0;
    std::array<std::uint64_t, 9> setting_counts{};
};

inline double protocol_fgc() {
    static const double v = [] {
        BoundOptions o;
        o.method = BoundMethod::enumerate;
        return maximize_fgc(MeasurementFrame::protocol(), o).f_gc;
    }();
    return v;
}

namespace detail {

// Exact per-(i, j) joint tables P(a, b) for a channel plus the kept fraction.
struct JointTable {
    std::array<std::array<std::array<double, 4>, 3>, 3> p{}; // [i][j][a_idx*2 + b_idx]
    std::array<std::array<double, 3>, 3> kept{};
};

inline JointTable joint_table(const ChannelSpec& ch, bool correction) {
    const MeasurementFrame f = MeasurementFrame::protocol();
    JointTable t;
    if (ch.kind == ChannelKind::photonic) {
        const PhotonicConventions& conv = ch.conventions;
        for (int i = 1; i <= 3; ++i)
            for (int j = 1; j <= 3; ++j) {
                double kept = 1.0;
                auto joint = recorded_joint(ch.photonic, conv, f, i, j, &kept);
                if (!correction && correction_sign(f, i, ch.photonic.alpha) < 0) std::swap(joint[0], joint[1]);
                for (int x = 0; x < 2; ++x)
                    for (int y = 0; y < 2; ++y) t.p[i - 1][j - 1][x * 2 + y] = joint[x][y];
                t.kept[i - 1][j - 1] = kept;
            }
        return t;
    }

    Channel bob;
    switch (ch.kind) {
    case ChannelKind::ideal: bob = [](const cmat& r) { return r; }; break;
    case ChannelKind::flip: bob = FlipChannel(ch.param).channel(); break;
    case ChannelKind::depolarizing: bob = depolarizing_channel(1.0 - ch.param); break;
    case ChannelKind::uqcm: {
        if (!(ch.param >= 0 && ch.param <= 1)) throw domain_error("uqcm channel: p' outside [0,1]");
        AttackModel atk;
        atk.p_attack = ch.param;
        bob = [atk](const cmat& r) { return marginal(atk.output(r), {0}); };
        break;
    }
    case ChannelKind::photonic: break;
    }
    // Singlet source: Alice's raw outcome a leaves Bob's half in the -a eigenstate.
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            for (int a_raw : {1, -1}) {
                const cmat out = bob(f.input_state(i, -a_raw).mat());
                const double pb = std::clamp((out * f.bob_projector(j, 1)).trace().real(), 0.0, 1.0);
                const int a = correction ? -a_raw : a_raw;
                t.p[i - 1][j - 1][outcome_index(a) * 2 + 0] = 0.5 * pb;
                t.p[i - 1][j - 1][outcome_index(a) * 2 + 1] = 0.5 * (1 - pb);
            }
            t.kept[i - 1][j - 1] = 1.0;
        }
    return t;
}

inline int sample_setting(double u, double pz) {
    const double px = (1 - pz) / 2;
    return u < px ? 1 : (u < 2 * px ? 2 : 3);
}

} // namespace detail

// Standard error of the fidelity estimate from the per-cell counts.
inline double fidelity_std_error(const ConditionalStats& s, const MeasurementFrame& frame) {
    const detail::FidelityWeights fw = detail::fidelity_weights(frame);
    double var = 0;
    for (int i = 1; i <= 3; ++i)
        for (int a : {1, -1})
            for (int j = 1; j <= 3; ++j) {
                const double n = static_cast<double>(s.count(i, a, j, 1) + s.count(i, a, j, -1));
                const double p = s.prob(i, a, j, 1);
                const double dw = fw.w[ConditionalStats::index(i, a, j, 1)] - fw.w[ConditionalStats::index(i, a, j, -1)];
                var += dw * dw * p * (1 - p) / n;
            }
    return std::sqrt(var);
}

inline std::array<std::uint64_t, 36> count_cells(std::span<const RoundRecord> recs) {
    std::array<std::uint64_t, 36> c{};
    for (const RoundRecord& r : recs)
        if (r.kind != RoundKind::discarded) ++c[ConditionalStats::index(r.i, r.a, r.j, r.b)];
    return c;
}

// Split the records into m contiguous blocks of lengths proportional to 1, 2, ..., m
// and compare their fidelities.
inline BlockReport iid_block_check(std::span<const RoundRecord> records, int m,
                                   const MeasurementFrame& frame = MeasurementFrame::protocol()) {
    if (m < 2) throw domain_error("iid_block_check: need at least 2 blocks");
    const std::uint64_t n = records.size();
    const std::uint64_t weight_total = static_cast<std::uint64_t>(m) * (m + 1) / 2;
    BlockReport rep;
    std::uint64_t start = 0, cum = 0;
    for (int b = 0; b < m; ++b) {
        cum += b + 1;
        const std::uint64_t end = b == m - 1 ? n : n * cum / weight_total;
        const auto blk = records.subspan(start, end - start);
        const auto counts = count_cells(blk);
        // Each conditional distribution needs data; individual outcomes may be absent.
        for (int i = 1; i <= 3; ++i)
            for (int a : {1, -1})
                for (int j = 1; j <= 3; ++j)
                    if (counts[ConditionalStats::index(i, a, j, 1)] + counts[ConditionalStats::index(i, a, j, -1)] < 10)
                        throw domain_error("iid_block_check: insufficient test data in a block");
        const ConditionalStats s = ConditionalStats::from_counts(counts);
        rep.f_expt.push_back(process_fidelity(process_matrix_1q(s, frame), identity_process(2)));
        rep.std_err.push_back(fidelity_std_error(s, frame));
        rep.lengths.push_back(end - start);
        start = end;
    }
    for (int x = 0; x < m; ++x)
        for (int y = x + 1; y < m; ++y) {
            const double d = std::abs(rep.f_expt[x] - rep.f_expt[y]);
            const double se = std::sqrt(rep.std_err[x] * rep.std_err[x] + rep.std_err[y] * rep.std_err[y]);
            rep.statistic = std::max(rep.statistic, d);
            const double ratio = se > 0 ? d / se : (d > 0 ? std::numeric_limits<double>::infinity() : 0.0);
            rep.threshold_ratio = std::max(rep.threshold_ratio, ratio);
        }
    rep.flagged = rep.threshold_ratio > 5.0;
    return rep;
}

struct RawKeys {
    std::vector<std::uint8_t> alice, bob;
    double q_emp = 0;
};

// Key bits from key rounds, +1 -> 0 and -1 -> 1.
inline RawKeys extract_keys(std::span<const RoundRecord> records) {
    RawKeys k;
    std::uint64_t err = 0;
    for (const RoundRecord& r : records) {
        if (r.kind != RoundKind::key) continue;
        k.alice.push_back(r.a > 0 ? 0 : 1);
        k.bob.push_back(r.b > 0 ? 0 : 1);
        err += k.alice.back() != k.bob.back();
    }
    k.q_emp = k.alice.empty() ? 0.0 : static_cast<double>(err) / static_cast<double>(k.alice.size());
    return k;
}

inline RawKeys extract_keys(const SessionResult& res) {
    if (res.aborted) throw domain_error("extract_keys: session aborted");
    return {res.alice_key, res.bob_key, res.q_emp};
}

inline SessionResult run_session(const SessionConfig& cfg) {
    cfg.validate();
    const detail::JointTable before = detail::joint_table(cfg.channel, cfg.correction);
    const detail::JointTable after = cfg.switch_round ? detail::joint_table(cfg.channel_after, cfg.correction) : before;
    const CounterRng rng{cfg.seed};
    const double pz = cfg.z_probability();

    SessionResult res;
    res.records.resize(cfg.n_rounds);
    auto simulate = [&](std::uint64_t lo, std::uint64_t hi) {
        for (std::uint64_t k = lo; k < hi; ++k) {
            const detail::JointTable& t = (cfg.switch_round && k >= *cfg.switch_round) ? after : before;
            RoundRecord r;
            r.k = k;
            r.i = static_cast<std::int8_t>(detail::sample_setting(rng.uniform(k, 0), pz));
            r.j = static_cast<std::int8_t>(detail::sample_setting(rng.uniform(k, 1), pz));
            const auto& cell = t.p[r.i - 1][r.j - 1];
            const double u = rng.uniform(k, 2);
            int idx = 3;
            double acc = 0;
            for (int c = 0; c < 4; ++c) {
                acc += cell[c];
                if (u < acc) {
                    idx = c;
                    break;
                }
            }
            r.a = static_cast<std::int8_t>(idx / 2 == 0 ? 1 : -1);
            r.b = static_cast<std::int8_t>(idx % 2 == 0 ? 1 : -1);
            if (rng.uniform(k, 3) >= t.kept[r.i - 1][r.j - 1]) r.kind = RoundKind::discarded;
            else r.kind = (r.i == 3 && r.j == 3) ? RoundKind::key : RoundKind::test;
            res.records[k] = r;
        }
    };
    const unsigned nt = std::max(1u, cfg.threads);
    if (nt == 1) {
        simulate(0, cfg.n_rounds);
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < nt; ++t) {
            const std::uint64_t lo = cfg.n_rounds * t / nt, hi = cfg.n_rounds * (t + 1) / nt;
            pool.emplace_back(simulate, lo, hi);
        }
        for (auto& th : pool) th.join();
    }

    for (const RoundRecord& r : res.records) {
        ++res.setting_counts[(r.i - 1) * 3 + (r.j - 1)];
        switch (r.kind) {
        case RoundKind::test: ++res.n_test; break;
        case RoundKind::key: ++res.n_key; break;
        case RoundKind::discarded: ++res.n_discarded; break;
        }
    }
    res.stats = ConditionalStats::from_counts(count_cells(res.records));
    const MeasurementFrame frame = MeasurementFrame::protocol();
    res.f_expt = res.stats.complete() ? process_fidelity(process_matrix_1q(res.stats, frame), identity_process(2))
                                      : 0.0;
    res.f_gc = cfg.f_gc ? *cfg.f_gc : protocol_fgc();
    res.aborted = !certify(std::clamp(res.f_expt, 0.0, 1.0), res.f_gc);
    const RawKeys keys = extract_keys(std::span<const RoundRecord>(res.records));
    res.alice_key = keys.alice;
    res.bob_key = keys.bob;
    res.q_emp = keys.q_emp;
    if (cfg.blocks >= 2) {
        try {
            res.block_report = iid_block_check(res.records, cfg.blocks, frame);
        } catch (const domain_error&) {
            res.block_report = {};
        }
    }
    return res;
}

} // namespace ediqkd
