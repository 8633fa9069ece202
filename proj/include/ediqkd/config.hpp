#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "keyrate.hpp"
#include "photonic.hpp"
#include "protocol_sim.hpp"

namespace ediqkd {

// Thin view over a JSON object that remembers which keys were read, so that
// anything left over can be reported as unknown.
class ConfigSection {
public:
    ConfigSection(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw config_error(where() + "expected an object");
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <class T>
    std::optional<T> get(const std::string& key) {
        allowed_.insert(key);
        if (!j_.contains(key)) return std::nullopt;
        try {
            return j_.at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw config_error(where() + "key '" + key + "' has the wrong type");
        }
    }

    template <class T>
    T get_or(const std::string& key, T fallback) {
        return get<T>(key).value_or(std::move(fallback));
    }

    double number(const std::string& key, double fallback, double lo, double hi) {
        const double v = get_or<double>(key, fallback);
        if (!(v >= lo && v <= hi) || !std::isfinite(v))
            throw config_error(where() + "key '" + key + "' = " + std::to_string(v) + " outside [" +
                               std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return v;
    }

    std::vector<double> numbers(const std::string& key, std::vector<double> fallback, double lo, double hi) {
        const auto v = get_or<std::vector<double>>(key, std::move(fallback));
        for (double x : v)
            if (!(x >= lo && x <= hi)) throw config_error(where() + "entry of '" + key + "' out of range");
        return v;
    }

    std::string choice(const std::string& key, const std::string& fallback, std::initializer_list<const char*> options) {
        const std::string v = get_or<std::string>(key, fallback);
        for (const char* o : options)
            if (v == o) return v;
        throw config_error(where() + "key '" + key + "' has unsupported value '" + v + "'");
    }

    ConfigSection child(const std::string& key) {
        allowed_.insert(key);
        static const nlohmann::json empty = nlohmann::json::object();
        return ConfigSection(j_.contains(key) ? j_.at(key) : empty, path_ + key + ".");
    }

    void finish() const {
        for (const auto& item : j_.items())
            if (!allowed_.count(item.key())) throw config_error(where() + "unknown key '" + item.key() + "'");
    }

private:
    std::string where() const { return "config " + (path_.empty() ? std::string("(root)") : path_) + ": "; }

    const nlohmann::json& j_;
    std::string path_;
    std::set<std::string> allowed_;
};

struct BoundConfig {
    BoundMethod method = BoundMethod::enumerate;
    bool aligned = false;
    bool use_cache = true;
};

struct SweepConfig {
    double q_min = 0.0;
    double q_max = 0.1;
    int points = 101;
    HolevoModel holevo = normative_holevo;
};

struct FiniteConfig {
    double q = 0.025;
    FiniteKeyParams key{};
    double log10_n_min = 2.0;
    double log10_n_max = 12.0;
    int points = 101;
};

struct EfactorConfig {
    std::vector<double> q{0.055, 0.06, 0.065, 0.066, 0.067};
    std::string preset = "published";
    double gamma = 1e-2;
    double r_target = 1e-3;
};

struct PhotonicConfig {
    PhotonicParams params{};
    OptimizeSet optimize{};
    PhotonicConventions conventions{};
    FiniteKeyParams key{};
    double eta_min = 0.85;
    double eta_max = 1.0;
    int points = 31;
    double r_threshold = 1e-5;
};

struct EfactorEtaConfig {
    std::vector<double> eta{1.0, 0.95, 0.92, 0.90, 0.8973, 0.889, 0.888};
    double f_source = 0.998;
    PhotonicConventions conventions{};
};

struct SimulateConfig {
    SessionConfig session{};
    std::string records_path;
};

struct RunConfig {
    std::string output;
    std::uint64_t seed = 1;
    unsigned threads = 1;
    BoundConfig bound;
    SweepConfig rate;
    FiniteConfig finite;
    EfactorConfig efactor;
    SweepConfig secrecy{0.0, 1.0 / 6.0, 50, normative_holevo};
    PhotonicConfig photonic;
    EfactorEtaConfig efactor_eta;
    SimulateConfig simulate;
};

namespace detail {

inline HolevoModel parse_holevo(ConfigSection& s, HolevoModel fallback) {
    const std::string v = s.choice("holevo", std::string(to_string(fallback)), {"mixture", "closed_form", "entropy_bound"});
    if (v == "mixture") return HolevoModel::mixture;
    if (v == "closed_form") return HolevoModel::closed_form;
    return HolevoModel::entropy_bound;
}

inline void parse_key(ConfigSection s, FiniteKeyParams& k) {
    k.n = s.number("n", k.n, 1.0, 1e30);
    k.gamma = s.number("gamma", k.gamma, 1e-12, 1.0 - 1e-12);
    k.eps_s = s.number("eps_s", k.eps_s, 1e-300, 1.0);
    k.eps_ec = s.number("eps_ec", k.eps_ec, 1e-300, 1.0);
    k.eps_ec_prime = s.number("eps_ec_prime", k.eps_ec_prime, 1e-300, 1.0);
    k.eps_pa = s.number("eps_pa", k.eps_pa, 1e-300, 1.0);
    k.eps_pe = s.number("eps_pe", k.eps_pe, 1e-300, 1.0);
    k.log_base = s.choice("log_base", k.log_base == LogBase::binary ? "binary" : "decimal", {"binary", "decimal"}) == "binary"
                     ? LogBase::binary
                     : LogBase::decimal;
    s.finish();
}

inline void parse_sweep(ConfigSection s, SweepConfig& c, double q_hi) {
    c.q_min = s.number("q_min", c.q_min, 0.0, q_hi);
    c.q_max = s.number("q_max", c.q_max, 0.0, q_hi);
    c.points = static_cast<int>(s.number("points", c.points, 2, 1e6));
    c.holevo = parse_holevo(s, c.holevo);
    if (c.q_max < c.q_min) throw config_error("config: q_max < q_min");
    s.finish();
}

inline void parse_conventions(ConfigSection& s, PhotonicConventions& c) {
    const std::string nc = s.choice("no_click", to_string(c.no_click), {"minus", "random", "discard"});
    c.no_click = nc == "minus" ? NoClick::minus : nc == "random" ? NoClick::random : NoClick::discard;
    c.herald_alice = s.get_or<bool>("herald_alice", c.herald_alice);
}

inline void parse_photonic_params(ConfigSection& s, PhotonicParams& p) {
    p.eta = s.number("eta", p.eta, 0.0, 1.0);
    p.p_dc = s.number("p_dc", p.p_dc, 0.0, 1.0);
    p.mu = s.number("mu", p.mu, 0.0, 10.0);
    p.f_source = s.number("f_source", p.f_source, 0.0, 1.0);
    p.alpha = s.number("alpha_deg", p.alpha * 180.0 / std::numbers::pi, 0.0, 45.0) * std::numbers::pi / 180.0;
    p.p_post = s.number("p_post", p.p_post, 0.0, 1.0);
    p.p_noise = s.number("p_noise", p.p_noise, 0.0, 1.0);
}

inline ChannelSpec parse_channel(ConfigSection s) {
    const std::string kind = s.choice("kind", "ideal", {"ideal", "flip", "uqcm", "depolarizing", "photonic"});
    ChannelSpec c;
    if (kind == "flip") c = ChannelSpec::flip(s.number("q", 0.0, 0.0, 1.0 / 6.0));
    else if (kind == "uqcm") c = ChannelSpec::uqcm(s.number("p_attack", 0.0, 0.0, 1.0));
    else if (kind == "depolarizing") c = ChannelSpec::depolarizing(s.number("q", 0.0, 0.0, 4.0 / 3.0));
    else if (kind == "photonic") {
        PhotonicParams p;
        parse_photonic_params(s, p);
        PhotonicConventions conv;
        parse_conventions(s, conv);
        c = ChannelSpec::photonic_source(p, conv);
    }
    s.finish();
    return c;
}

} // namespace detail

inline RunConfig parse_config(const nlohmann::json& j) {
    RunConfig c;
    ConfigSection root(j, "");
    c.output = root.get_or<std::string>("output", "");
    c.seed = static_cast<std::uint64_t>(root.number("seed", 1, 0, 1.8e19));
    c.threads = static_cast<unsigned>(root.number("threads", 1, 1, 1024));

    {
        ConfigSection s = root.child("bound");
        const std::string m = s.choice("method", "enumerate", {"enumerate", "refine", "both"});
        c.bound.method = m == "enumerate" ? BoundMethod::enumerate : m == "refine" ? BoundMethod::refine : BoundMethod::both;
        c.bound.aligned = s.get_or<bool>("aligned", false);
        c.bound.use_cache = s.get_or<bool>("cache", true);
        s.finish();
    }
    detail::parse_sweep(root.child("rate"), c.rate, 0.5);
    {
        ConfigSection s = root.child("finite");
        c.finite.q = s.number("q", c.finite.q, 0.0, 1.0 / 6.0);
        c.finite.log10_n_min = s.number("log10_n_min", c.finite.log10_n_min, 0.0, 30.0);
        c.finite.log10_n_max = s.number("log10_n_max", c.finite.log10_n_max, 0.0, 30.0);
        c.finite.points = static_cast<int>(s.number("points", c.finite.points, 2, 1e6));
        if (c.finite.log10_n_max <= c.finite.log10_n_min) throw config_error("config finite: empty n range");
        detail::parse_key(s.child("key"), c.finite.key);
        s.finish();
    }
    {
        ConfigSection s = root.child("efactor");
        c.efactor.q = s.numbers("q", c.efactor.q, 0.0, 1.0 / 6.0);
        c.efactor.preset = s.choice("preset", c.efactor.preset, {"published", "as_printed"});
        c.efactor.gamma = s.number("gamma", c.efactor.gamma, 1e-12, 1.0 - 1e-12);
        c.efactor.r_target = s.number("r_target", c.efactor.r_target, 1e-12, 1.0);
        s.finish();
    }
    detail::parse_sweep(root.child("secrecy"), c.secrecy, 1.0 / 6.0);
    {
        ConfigSection s = root.child("photonic");
        c.photonic.key.n = 1.44e9 * (1.0 - c.photonic.key.gamma);
        detail::parse_photonic_params(s, c.photonic.params);
        detail::parse_conventions(s, c.photonic.conventions);
        c.photonic.eta_min = s.number("eta_min", c.photonic.eta_min, 0.0, 1.0);
        c.photonic.eta_max = s.number("eta_max", c.photonic.eta_max, 0.0, 1.0);
        c.photonic.points = static_cast<int>(s.number("points", c.photonic.points, 2, 1e5));
        c.photonic.r_threshold = s.number("r_threshold", c.photonic.r_threshold, 0.0, 1.0);
        if (c.photonic.eta_max < c.photonic.eta_min) throw config_error("config photonic: eta_max < eta_min");
        {
            ConfigSection o = s.child("optimize");
            c.photonic.optimize.alpha = o.get_or<bool>("alpha", true);
            c.photonic.optimize.mu = o.get_or<bool>("mu", true);
            c.photonic.optimize.p_post = o.get_or<bool>("p_post", false);
            c.photonic.optimize.p_noise = o.get_or<bool>("p_noise", false);
            c.photonic.optimize.mu_min = o.number("mu_min", c.photonic.optimize.mu_min, 0.0, 10.0);
            c.photonic.optimize.mu_max = o.number("mu_max", c.photonic.optimize.mu_max, 0.0, 10.0);
            o.finish();
        }
        detail::parse_key(s.child("key"), c.photonic.key);
        s.finish();
    }
    {
        ConfigSection s = root.child("efactor_eta");
        c.efactor_eta.eta = s.numbers("eta", c.efactor_eta.eta, 0.0, 1.0);
        c.efactor_eta.f_source = s.number("f_source", c.efactor_eta.f_source, 0.0, 1.0);
        detail::parse_conventions(s, c.efactor_eta.conventions);
        s.finish();
    }
    {
        ConfigSection s = root.child("simulate");
        SessionConfig& sc = c.simulate.session;
        sc.n_rounds = static_cast<std::uint64_t>(s.number("rounds", static_cast<double>(sc.n_rounds), 1, 1e10));
        const std::string mode = s.choice("settings", "uniform", {"uniform", "biased"});
        sc.settings = mode == "uniform" ? SettingsMode::uniform : SettingsMode::biased;
        sc.gamma = s.number("gamma", sc.gamma, 1e-12, 1.0 - 1e-12);
        sc.correction = s.get_or<bool>("correction", true);
        sc.blocks = static_cast<int>(s.number("blocks", sc.blocks, 0, 1000));
        sc.channel = detail::parse_channel(s.child("channel"));
        if (s.has("switch_round")) {
            sc.switch_round = static_cast<std::uint64_t>(s.number("switch_round", 0, 0, 1e10));
            sc.channel_after = detail::parse_channel(s.child("channel_after"));
        } else if (s.has("channel_after")) {
            throw config_error("config simulate: channel_after requires switch_round");
        }
        c.simulate.records_path = s.get_or<std::string>("records", "");
        s.finish();
    }
    root.finish();
    c.simulate.session.seed = c.seed;
    c.simulate.session.threads = c.threads;
    c.photonic.optimize.threads = c.threads;
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in, nullptr, true, true);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config file '" + path + "': " + e.what());
    }
    return parse_config(j);
}

} // namespace ediqkd
