#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <ediqkd/config.hpp>
#include <ediqkd/csv.hpp>
#include <ediqkd/fgc_cache.hpp>

using namespace ediqkd;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int status = -1;
    std::string out;
};

CliRun run_cli(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + " " EDIQKD_CLI_PATH " " + args + " 2>/dev/null";
    CliRun r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    while (std::fgets(buf, sizeof buf, p)) r.out += buf;
    const int st = pclose(p);
    r.status = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

fs::path scratch(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("ediqkd-cli-test-" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d / name;
}

std::string write_file(const std::string& name, const std::string& text) {
    const fs::path p = scratch(name);
    std::ofstream(p) << text;
    return p.string();
}

// Schema of a CSV output: metadata keys in order, then the column line.
std::string schema(const std::string& csv) {
    std::istringstream is(csv);
    std::string line, s;
    while (std::getline(is, line)) {
        if (line.rfind("# ", 0) == 0) {
            const auto colon = line.find(": ");
            if (colon != std::string::npos) s += "meta " + line.substr(2, colon - 2) + "\n";
            continue;
        }
        s += "columns " + line + "\n";
        break;
    }
    return s;
}

std::string golden(const std::string& name) {
    std::ifstream in(std::string(EDIQKD_GOLDEN_DIR) + "/" + name + ".schema");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t data_rows(const std::string& csv) {
    std::istringstream is(csv);
    std::string line;
    std::size_t n = 0;
    bool header = false;
    while (std::getline(is, line)) {
        if (line.rfind("#", 0) == 0 || line.empty()) continue;
        if (!header) {
            header = true;
            continue;
        }
        ++n;
    }
    return n;
}

std::string meta_value(const std::string& csv, const std::string& key) {
    const std::string tag = "# " + key + ": ";
    const auto at = csv.find(tag);
    if (at == std::string::npos) return "";
    const auto end = csv.find('\n', at);
    return csv.substr(at + tag.size(), end - at - tag.size());
}

} // namespace

TEST(Csv, Rfc4180Quoting) {
    EXPECT_EQ(csv_field("plain"), "plain");
    EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
    EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
    EXPECT_EQ(csv_field("two\nlines"), "\"two\nlines\"");
    CsvTable t({"x", "y"});
    EXPECT_THROW(t.row({"1"}), std::invalid_argument);
}

TEST(Config, DefaultsAndUnknownKeys) {
    const RunConfig c = parse_config(nlohmann::json::object());
    EXPECT_EQ(c.seed, 1u);
    EXPECT_EQ(c.efactor.q.size(), 5u);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"sed": 3})")), config_error);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"finite": {"key": {"gama": 0.1}}})")), config_error);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"simulate": {"channel": {"kind": "flip", "p": 0.1}}})")), config_error);
}

TEST(Config, RangeAndTypeChecks) {
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"photonic": {"eta": 1.5}})")), config_error);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"photonic": {"alpha_deg": 60}})")), config_error);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"finite": {"q": 0.3}})")), config_error);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"threads": "four"})")), config_error);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"bound": {"method": "guess"}})")), config_error);
    EXPECT_THROW(parse_config(nlohmann::json::parse(R"({"simulate": {"channel_after": {"kind": "ideal"}}})")), config_error);
}

TEST(Config, NestedValuesAreApplied) {
    const RunConfig c = parse_config(nlohmann::json::parse(R"({
        "seed": 9, "threads": 2,
        "simulate": {"rounds": 1000, "settings": "biased", "gamma": 0.2,
                     "channel": {"kind": "flip", "q": 0.05},
                     "switch_round": 500, "channel_after": {"kind": "depolarizing", "q": 0.1}},
        "photonic": {"f_source": 0.9952, "no_click": "discard", "optimize": {"p_post": true}}
    })"));
    EXPECT_EQ(c.simulate.session.seed, 9u);
    EXPECT_EQ(c.simulate.session.threads, 2u);
    EXPECT_EQ(c.simulate.session.settings, SettingsMode::biased);
    EXPECT_EQ(c.simulate.session.channel.kind, ChannelKind::flip);
    EXPECT_EQ(*c.simulate.session.switch_round, 500u);
    EXPECT_EQ(c.simulate.session.channel_after.kind, ChannelKind::depolarizing);
    EXPECT_EQ(c.photonic.conventions.no_click, NoClick::discard);
    EXPECT_TRUE(c.photonic.optimize.p_post);
    EXPECT_EQ(c.photonic.optimize.threads, 2u);
}

TEST(Cache, HashDependsOnFrame) {
    EXPECT_EQ(frame_hash(MeasurementFrame::protocol()), frame_hash(MeasurementFrame::protocol()));
    EXPECT_NE(frame_hash(MeasurementFrame::protocol()), frame_hash(MeasurementFrame::aligned()));
    EXPECT_EQ(frame_hash(MeasurementFrame::protocol()).size(), 16u);
}

TEST(Cli, EmptyArgvPrintsUsage) {
    const CliRun r = run_cli("");
    EXPECT_EQ(r.status, 2);
}

TEST(Cli, UnknownSubcommandOrReproId) {
    EXPECT_EQ(run_cli("frobnicate").status, 2);
    EXPECT_EQ(run_cli("repro fig99").status, 2);
}

TEST(Cli, ConfigErrorsExitTwo) {
    EXPECT_EQ(run_cli("--config " + write_file("bad.json", R"({"bogus": 1})") + " rate").status, 2);
    EXPECT_EQ(run_cli("--config " + write_file("range.json", R"({"rate": {"points": 0}})") + " rate").status, 2);
    EXPECT_EQ(run_cli("--config " + write_file("syntax.json", "{ not json") + " rate").status, 2);
}

TEST(Cli, NoSolutionExitsThree) {
    const std::string cfg = write_file("poor.json", R"({"photonic": {"f_source": 0.85, "points": 2}})");
    EXPECT_EQ(run_cli("--config " + cfg + " photonic").status, 3);
}

TEST(Cli, BoundPrintsValueAndUsesCache) {
    const fs::path cache = scratch("cache");
    fs::remove_all(cache);
    const std::string env = "EDIQKD_CACHE_DIR=" + cache.string();
    const CliRun first = run_cli("bound", env);
    ASSERT_EQ(first.status, 0);
    EXPECT_NE(first.out.find("F_GC = 0.8535533"), std::string::npos);
    EXPECT_EQ(meta_value(first.out, "from_cache"), "false");
    EXPECT_TRUE(fs::exists(cache / ("fgc-" + frame_hash(MeasurementFrame::protocol()) + ".json")));
    const CliRun second = run_cli("bound", env);
    EXPECT_EQ(meta_value(second.out, "from_cache"), "true");
    EXPECT_EQ(schema(second.out.substr(second.out.find('\n') + 1)), golden("bound"));
    EXPECT_EQ(data_rows(second.out.substr(second.out.find('\n') + 1)), 8u);
}

TEST(Cli, AnalysisSchemas) {
    for (const std::string cmd : {"rate", "finite", "efactor", "secrecy", "efactor-eta"}) {
        const CliRun r = run_cli(cmd);
        ASSERT_EQ(r.status, 0) << cmd;
        EXPECT_EQ(schema(r.out), golden(cmd)) << cmd;
    }
}

TEST(Cli, OutputFileAndSeedMetadata) {
    const fs::path out = scratch("rate.csv");
    ASSERT_EQ(run_cli("--out " + out.string() + " --seed 5 rate").status, 0);
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(meta_value(ss.str(), "seed"), "5");
    EXPECT_EQ(data_rows(ss.str()), 101u);
}

TEST(Cli, ReproTablesAndFigures) {
    const CliRun t2 = run_cli("repro table2");
    ASSERT_EQ(t2.status, 0);
    EXPECT_EQ(schema(t2.out), golden("repro_table2"));
    EXPECT_EQ(data_rows(t2.out), 5u);
    const CliRun t3 = run_cli("repro table3");
    ASSERT_EQ(t3.status, 0);
    EXPECT_EQ(schema(t3.out), golden("repro_table3"));
    EXPECT_EQ(data_rows(t3.out), 7u);
    const CliRun f7 = run_cli("repro fig7");
    ASSERT_EQ(f7.status, 0);
    EXPECT_EQ(schema(f7.out), golden("repro_fig7"));
    EXPECT_NEAR(std::stod(meta_value(f7.out, "d_at_0.069")), 0.2828, 0.02);
    const CliRun f6 = run_cli("repro fig6");
    ASSERT_EQ(f6.status, 0);
    EXPECT_EQ(schema(f6.out), golden("repro_fig6"));
    EXPECT_NEAR(std::stod(meta_value(f6.out, "q_crit_diqkd")), 0.071, 0.002);
    const CliRun f3 = run_cli("repro fig3");
    ASSERT_EQ(f3.status, 0);
    EXPECT_EQ(schema(f3.out), golden("repro_fig3"));
    EXPECT_EQ(data_rows(f3.out), 3u * 181u);
}

TEST(Cli, ReproIsReproducible) {
    const CliRun a = run_cli("repro fig6"), b = run_cli("repro fig6");
    EXPECT_EQ(a.out, b.out);
}

TEST(Cli, SimulateSummaryAndRecords) {
    const fs::path rec = scratch("records.csv");
    const CliRun r = run_cli("--seed 3 simulate --rounds 20000 --channel flip:0.1 --records " + rec.string(),
                          "EDIQKD_CACHE_DIR=" + scratch("simcache").string());
    ASSERT_EQ(r.status, 0);
    for (const char* key : {"rounds: 20000", "seed: 3", "channel: flip(", "f_expt: ", "aborted: ", "q_emp: "})
        EXPECT_NE(r.out.find(key), std::string::npos) << key;
    std::ifstream in(rec);
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "k,i,a,j,b,kind");
    std::size_t lines = 0;
    for (std::string l; std::getline(in, l);) ++lines;
    EXPECT_EQ(lines, 20000u);
    EXPECT_EQ(run_cli("simulate --channel warp:3").status, 2);
}
