// ediqkd command-line workbench. Every subcommand writes CSV with a "# key: value"
// metadata header to --out (or stdout).

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <ediqkd/ediqkd.hpp>

namespace {

using namespace ediqkd;

enum Exit { ok = 0, config_failure = 2, no_solution_found = 3 };

void emit(const CsvTable& t, const std::string& out) {
    if (out.empty()) {
        t.write(std::cout);
        return;
    }
    std::ofstream f(out);
    if (!f) throw config_error("cannot write output file '" + out + "'");
    t.write(f);
}

void emit_text(const std::string& text, const std::string& out) {
    if (out.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream f(out);
    if (!f) throw config_error("cannot write output file '" + out + "'");
    f << text;
}

// "flip:0.1", "uqcm:0.5", "depolarizing:0.2", "photonic:0.9" or "ideal".
ChannelSpec parse_channel_flag(const std::string& s) {
    const auto colon = s.find(':');
    const std::string kind = s.substr(0, colon);
    double v = 0.0;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            v = std::stod(s.substr(colon + 1), &used);
            if (used != s.size() - colon - 1) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw config_error("bad channel parameter in '" + s + "'");
        }
    } else if (kind != "ideal") {
        throw config_error("channel '" + s + "' needs a parameter, e.g. flip:0.05");
    }
    if (kind == "ideal") return ChannelSpec::ideal();
    if (kind == "flip") return ChannelSpec::flip(v);
    if (kind == "uqcm") return ChannelSpec::uqcm(v);
    if (kind == "depolarizing") return ChannelSpec::depolarizing(v);
    if (kind == "photonic") {
        PhotonicParams p;
        p.eta = v;
        p.validate();
        return ChannelSpec::photonic_source(p);
    }
    throw config_error("unknown channel kind '" + kind + "'");
}

std::string simulate_summary(const SessionConfig& cfg, const SessionResult& r) {
    std::ostringstream os;
    os.precision(10);
    os << "# ediqkd: " << version << '\n'
       << "rounds: " << cfg.n_rounds << '\n'
       << "seed: " << cfg.seed << '\n'
       << "threads: " << cfg.threads << '\n'
       << "settings: " << (cfg.settings == SettingsMode::uniform ? "uniform" : "biased") << '\n'
       << "z_probability: " << cfg.z_probability() << '\n'
       << "channel: " << cfg.channel.describe() << '\n';
    if (cfg.switch_round) os << "switch_round: " << *cfg.switch_round << "\nchannel_after: " << cfg.channel_after.describe() << '\n';
    os << "correction: " << (cfg.correction ? "true" : "false") << '\n'
       << "n_test: " << r.n_test << '\n'
       << "n_key: " << r.n_key << '\n'
       << "n_discarded: " << r.n_discarded << '\n'
       << "f_expt: " << r.f_expt << '\n'
       << "f_gc: " << r.f_gc << '\n'
       << "aborted: " << (r.aborted ? "true" : "false") << '\n'
       << "q_emp: " << r.q_emp << '\n'
       << "raw_key_length: " << r.alice_key.size() << '\n';
    if (!r.block_report.f_expt.empty()) {
        os << "block_f_expt:";
        for (double f : r.block_report.f_expt) os << ' ' << f;
        os << "\nblock_threshold_ratio: " << r.block_report.threshold_ratio << '\n'
           << "block_flagged: " << (r.block_report.flagged ? "true" : "false") << '\n';
    }
    return os.str();
}

void write_records(const SessionResult& r, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw config_error("cannot write records file '" + path + "'");
    f << "k,i,a,j,b,kind\n";
    for (const RoundRecord& x : r.records) {
        const char* kind = x.kind == RoundKind::key ? "key" : x.kind == RoundKind::test ? "test" : "discarded";
        f << x.k << ',' << int(x.i) << ',' << int(x.a) << ',' << int(x.j) << ',' << int(x.b) << ',' << kind << '\n';
    }
}

int run(int argc, char** argv) {
    CLI::App app{"EDIQKD workbench: classical bound, key rates, secrecy, photonic thresholds, simulation"};
    app.require_subcommand(1);

    std::string config_path, out;
    unsigned threads = 0;
    std::uint64_t seed = 0;
    app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("-o,--out", out, "Output file (default stdout)");
    auto* threads_opt = app.add_option("-j,--threads", threads, "Worker threads")->check(CLI::Range(1u, 1024u));
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed");

    auto* bound = app.add_subcommand("bound", "Classical bound F_GC and the argmax transition matrix");
    std::string method;
    bool aligned = false, no_cache = false;
    bound->add_option("--method", method, "enumerate | refine | both")->check(CLI::IsMember({"enumerate", "refine", "both"}));
    bound->add_flag("--aligned", aligned, "Use Bob observables aligned with Alice's");
    bound->add_flag("--no-cache", no_cache, "Recompute and do not touch the cache");

    auto* rate = app.add_subcommand("rate", "Asymptotic key rates vs QBER");
    auto* finite = app.add_subcommand("finite", "Finite-key rates vs number of key rounds");
    double finite_q = -1;
    finite->add_option("-q,--qber", finite_q, "QBER")->check(CLI::Range(0.0, 1.0 / 6.0));
    auto* efactor = app.add_subcommand("efactor", "Minimum key rounds and efficiency factors vs QBER");
    auto* secrecy = app.add_subcommand("secrecy", "Secrecy distance and Eve's information vs QBER");
    auto* photonic = app.add_subcommand("photonic", "Optimized rate vs detection efficiency and the required efficiency");
    auto* efactor_eta = app.add_subcommand("efactor-eta", "Efficiency factors vs detection efficiency");

    auto* simulate = app.add_subcommand("simulate", "Monte Carlo protocol session");
    std::uint64_t rounds = 0;
    double gamma = -1;
    std::string settings, channel, records;
    simulate->add_option("-n,--rounds", rounds, "Number of rounds N")->check(CLI::PositiveNumber);
    simulate->add_option("--gamma", gamma, "Target test fraction for biased settings")->check(CLI::Range(0.0, 1.0));
    simulate->add_option("--settings", settings, "uniform | biased")->check(CLI::IsMember({"uniform", "biased"}));
    simulate->add_option("--channel", channel, "ideal | flip:Q | uqcm:p | depolarizing:q | photonic:eta");
    simulate->add_option("--records", records, "Write per-round CSV (k,i,a,j,b,kind) here");

    auto* repro = app.add_subcommand("repro", "Regenerate the data behind a figure or table");
    std::string repro_id;
    repro->add_option("id", repro_id, "fig3 | fig4 | fig5 | fig6 | fig7 | table2 | table3")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return config_failure;
    }

    RunConfig cfg = config_path.empty() ? parse_config(nlohmann::json::object()) : load_config(config_path);
    if (out.empty()) out = cfg.output;
    if (threads_opt->count()) {
        cfg.threads = threads;
        cfg.simulate.session.threads = threads;
        cfg.photonic.optimize.threads = threads;
    }
    if (seed_opt->count()) {
        cfg.seed = seed;
        cfg.simulate.session.seed = seed;
    }

    std::ostringstream cmdline;
    for (int k = 1; k < argc; ++k) cmdline << (k > 1 ? " " : "") << argv[k];
    auto stamp = [&](CsvTable t) {
        t.meta("command", cmdline.str()).meta("seed", std::to_string(cfg.seed)).meta("threads", std::to_string(cfg.threads));
        return t;
    };

    if (*bound) {
        if (!method.empty())
            cfg.bound.method = method == "enumerate" ? BoundMethod::enumerate : method == "refine" ? BoundMethod::refine : BoundMethod::both;
        if (aligned) cfg.bound.aligned = true;
        if (no_cache) cfg.bound.use_cache = false;
        const MeasurementFrame frame = cfg.bound.aligned ? MeasurementFrame::aligned() : MeasurementFrame::protocol();
        BoundOptions opt;
        opt.method = cfg.bound.method;
        opt.threads = cfg.threads;
        const CachedBound b = cached_fgc(frame, opt, cfg.bound.use_cache && cfg.bound.method == BoundMethod::enumerate);
        std::cout.precision(10);
        std::cout << "F_GC = " << b.f_gc << '\n';
        CsvTable t = bound_table(b, cfg.bound.aligned ? "aligned" : "protocol");
        t.meta("frame_hash", frame_hash(frame));
        emit(stamp(t), out);
    } else if (*rate) {
        emit(stamp(rate_table(cfg.rate)), out);
    } else if (*finite) {
        if (finite_q >= 0) cfg.finite.q = finite_q;
        emit(stamp(finite_table(cfg.finite)), out);
    } else if (*efactor) {
        emit(stamp(efactor_table(cfg.efactor)), out);
    } else if (*secrecy) {
        emit(stamp(secrecy_table(cfg.secrecy)), out);
    } else if (*photonic) {
        emit(stamp(photonic_table(cfg.photonic)), out);
    } else if (*efactor_eta) {
        emit(stamp(efactor_eta_table(cfg.efactor_eta)), out);
    } else if (*simulate) {
        SessionConfig& sc = cfg.simulate.session;
        if (rounds) sc.n_rounds = rounds;
        if (gamma >= 0) sc.gamma = gamma;
        if (!settings.empty()) sc.settings = settings == "uniform" ? SettingsMode::uniform : SettingsMode::biased;
        if (!channel.empty()) sc.channel = parse_channel_flag(channel);
        if (!records.empty()) cfg.simulate.records_path = records;
        sc.f_gc = cached_fgc(MeasurementFrame::protocol()).f_gc;
        const SessionResult r = run_session(sc);
        emit_text(simulate_summary(sc, r), out);
        if (!cfg.simulate.records_path.empty()) write_records(r, cfg.simulate.records_path);
    } else if (*repro) {
        emit(stamp(repro::run(repro_id, cfg.threads)).meta("repro", repro_id), out);
    }
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: ediqkd [--config FILE] [--out FILE] [--threads N] [--seed S] <subcommand> [options]\n"
                     "subcommands: bound rate finite efactor secrecy photonic efactor-eta simulate repro\n"
                     "run 'ediqkd --help' for details\n";
        return config_failure;
    }
    try {
        return run(argc, argv);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_failure;
    } catch (const ediqkd::domain_error& e) {
        std::cerr << "invalid parameter: " << e.what() << '\n';
        return config_failure;
    } catch (const no_solution& e) {
        std::cerr << "no solution: " << e.what() << '\n';
        return no_solution_found;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
