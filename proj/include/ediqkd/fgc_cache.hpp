#pragma once

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <json.hpp>

#include "classical_bound.hpp"

namespace ediqkd {

// FNV-1a over the frame's observables, entries printed at 1e-12 resolution.
inline std::string frame_hash(const MeasurementFrame& f) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    };
    char buf[64];
    for (const auto* set : {&f.alice, &f.bob})
        for (const Observable& o : *set)
            for (Eigen::Index r = 0; r < o.mat().rows(); ++r)
                for (Eigen::Index c = 0; c < o.mat().cols(); ++c) {
                    const cplx z = o.mat()(r, c);
                    std::snprintf(buf, sizeof buf, "%.12f,%.12f;", z.real() + 0.0, z.imag() + 0.0);
                    feed(buf);
                }
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

// EDIQKD_CACHE_DIR, else $XDG_CACHE_HOME/ediqkd, else ~/.cache/ediqkd.
inline std::filesystem::path cache_dir() {
    if (const char* d = std::getenv("EDIQKD_CACHE_DIR"); d && *d) return d;
    if (const char* x = std::getenv("XDG_CACHE_HOME"); x && *x) return std::filesystem::path(x) / "ediqkd";
    if (const char* home = std::getenv("HOME"); home && *home) return std::filesystem::path(home) / ".cache" / "ediqkd";
    return ".ediqkd-cache";
}

struct CachedBound {
    double f_gc = 0;
    std::array<int, 8> vertex{};
    TransitionMatrix omega = TransitionMatrix::Zero();
    bool from_cache = false;
};

// Classical bound for a frame, computed once per frame and stored as JSON.
inline CachedBound cached_fgc(const MeasurementFrame& frame, const BoundOptions& opt = {}, bool use_cache = true) {
    namespace fs = std::filesystem;
    const fs::path file = cache_dir() / ("fgc-" + frame_hash(frame) + ".json");
    if (use_cache && fs::exists(file)) {
        try {
            std::ifstream in(file);
            const auto j = nlohmann::json::parse(in);
            CachedBound c;
            c.f_gc = j.at("f_gc").get<double>();
            c.vertex = j.at("vertex").get<std::array<int, 8>>();
            const auto om = j.at("omega").get<std::vector<std::vector<double>>>();
            for (int r = 0; r < 8; ++r)
                for (int k = 0; k < 8; ++k) c.omega(r, k) = om.at(r).at(k);
            c.from_cache = true;
            return c;
        } catch (const std::exception&) {
            // Unreadable cache entries are recomputed and overwritten.
        }
    }
    const BoundResult r = maximize_fgc(frame, opt);
    CachedBound c{r.f_gc, r.vertex, r.argmax.omega, false};
    if (use_cache) {
        std::error_code ec;
        fs::create_directories(file.parent_path(), ec);
        nlohmann::json j;
        j["f_gc"] = c.f_gc;
        j["vertex"] = c.vertex;
        std::vector<std::vector<double>> om(8, std::vector<double>(8));
        for (int row = 0; row < 8; ++row)
            for (int k = 0; k < 8; ++k) om[row][k] = c.omega(row, k);
        j["omega"] = om;
        j["frame_hash"] = frame_hash(frame);
        std::ofstream out(file);
        if (out) out << j.dump(2) << '\n';
    }
    return c;
}

} // namespace ediqkd
