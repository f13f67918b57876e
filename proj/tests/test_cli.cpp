#include <doctest.h>

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qh/cli.hpp"

using namespace qh;
using qh::cli::run_cli;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("qh_cli_test_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// parses a CSV payload, skipping comments; returns rows of fields
std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ls(line);
        std::string tok;
        while (std::getline(ls, tok, ',')) fields.push_back(tok);
        rows.push_back(std::move(fields));
    }
    return rows;
}

} // namespace

TEST_CASE("binarize_trajectory follows the horizontal-ties-to-1 rule") {
    using qh::cli::XyRow;
    std::vector<XyRow> rows{{0, 0}, {2, 1}};
    CHECK(qh::cli::binarize_trajectory(rows).symbols == std::vector<Symbol>{1});

    std::vector<XyRow> tie{{0, 0}, {1, 1}};
    CHECK(qh::cli::binarize_trajectory(tie).symbols == std::vector<Symbol>{1});

    std::vector<XyRow> two{{0, 0}, {0, 5}, {3, 6}};
    CHECK(qh::cli::binarize_trajectory(two).symbols == std::vector<Symbol>{0, 1});
    CHECK(qh::cli::binarize_trajectory(two, true).symbols == std::vector<Symbol>{1, 0});

    std::vector<XyRow> single{{0, 0}};
    CHECK_THROWS_AS(qh::cli::binarize_trajectory(single), ConfigError);
}

TEST_CASE("binarize_timings bins at uniform eighths") {
    std::vector<double> v{0.0, 1.0};
    auto r = qh::cli::binarize_timings(v);
    CHECK(r.symbols == std::vector<Symbol>{0, 7});
    CHECK(r.alphabet == 8);

    std::vector<double> mid{0.0, 0.5, 1.0};
    CHECK(qh::cli::binarize_timings(mid).symbols == std::vector<Symbol>{0, 4, 7});

    std::vector<double> close{0.0, 0.999, 1.0};
    CHECK(qh::cli::binarize_timings(close).symbols == std::vector<Symbol>{0, 7, 7});

    auto constant = qh::cli::binarize_timings(std::vector<double>{3.0, 3.0, 3.0});
    CHECK(constant.constant_input);
    CHECK(constant.symbols == std::vector<Symbol>{0, 0, 0});

    // 3-bit expansion, most significant bit first: bin 4 -> 100
    auto bits = qh::cli::binarize_timings(mid, true);
    CHECK(bits.alphabet == 2);
    CHECK(bits.symbols == std::vector<Symbol>{0, 0, 0, 1, 0, 0, 1, 1, 1});
}

TEST_CASE("symbol files round-trip packed and per-line") {
    TempDir tmp;
    std::vector<Symbol> syms{0, 1, 1, 0, 1};
    qh::cli::write_symbol_file(tmp.file("a.txt"), syms, true, "meta");
    CHECK(qh::cli::load_symbol_file(tmp.file("a.txt")) == syms);
    qh::cli::write_symbol_file(tmp.file("b.txt"), syms, false, "");
    CHECK(qh::cli::load_symbol_file(tmp.file("b.txt")) == syms);
}

TEST_CASE("pmf subcommand emits the expected CSV") {
    TempDir tmp;
    const std::string out = tmp.file("pmf.csv");
    int rc = run_cli({"pmf", "--pattern", "11", "--iid-p", "0.5", "--epsilon", "1e-6",
                      "--out", out});
    REQUIRE(rc == 0);
    const std::string text = slurp(out);
    CHECK(text.find("# seed=") != std::string::npos);
    CHECK(text.find("config=") != std::string::npos);
    CHECK(text.find("t,prob") != std::string::npos);

    // expectation from the emitted columns
    double e = 0.0, mass = 0.0;
    for (const auto& row : csv_rows(text)) {
        if (row[0] == "t") continue;
        e += std::stod(row[0]) * std::stod(row[1]);
        mass += std::stod(row[1]);
    }
    CHECK(std::abs(e - 6.0) < 1e-4);
    CHECK(std::abs(mass - 1.0) < 1e-6); // rows print 6 significant digits

    // the summary comment carries the same expectation
    const auto pos = text.find("expected_delta_t=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::abs(std::stod(text.substr(pos + 17)) - 6.0) < 1e-4);
}

TEST_CASE("cycle subcommand reports mu*=0 for identical sources") {
    TempDir tmp;
    const std::string out = tmp.file("cycle.csv");
    int rc = run_cli({"cycle", "--p1", "0.5", "--p2", "0.5", "--m", "2", "--out", out});
    REQUIRE(rc == 0);
    const std::string text = slurp(out);
    const auto pos = text.find("mu_star=");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(text.substr(pos + 8)) == doctest::Approx(0.0));
}

TEST_CASE("stats and optimal-query emit belief sweeps") {
    TempDir tmp;
    const std::string out = tmp.file("stats.csv");
    REQUIRE(run_cli({"stats", "--p1", "0.3", "--p2", "0.7", "--m", "2", "--pi", "0.5",
                     "--out", out}) == 0);
    auto rows = csv_rows(slurp(out));
    REQUIRE(rows.size() == 5); // header + 4 patterns
    CHECK(rows[0] == std::vector<std::string>{"pattern", "kl_nats", "e1", "e2", "pi", "nu"});

    const std::string oq = tmp.file("oq.csv");
    REQUIRE(run_cli({"optimal-query", "--p1", "0.3", "--p2", "0.7", "--m", "4", "--pi-grid",
                     "0.2:0.8:7", "--out", oq}) == 0);
    auto qrows = csv_rows(slurp(oq));
    REQUIRE(qrows.size() == 8);
    // pi = 0.3 and pi = 0.7 land in the fluctuation sets of the figure
    CHECK((qrows[2][1] == "0111" || qrows[2][1] == "1110"));
    CHECK((qrows[6][1] == "0001" || qrows[6][1] == "1000"));
}

TEST_CASE("simulate emits deterministic JSON and a trajectory CSV") {
    TempDir tmp;
    const std::string out1 = tmp.file("sim1.json"), out2 = tmp.file("sim2.json");
    const std::string traj = tmp.file("traj.csv");
    std::vector<std::string> args{"simulate", "--p1", "0.3", "--p2", "0.7", "--m", "3",
                                  "--policy", "adaptive", "--seed", "99",
                                  "--trajectory-out", traj, "--out", out1};
    REQUIRE(run_cli(args) == 0);
    args.back() = out2;
    REQUIRE(run_cli(args) == 0);
    CHECK(slurp(out1) == slurp(out2)); // byte-for-byte reproducible

    auto j = nlohmann::json::parse(slurp(out1));
    CHECK((j["decision"] == 1 || j["decision"] == 2));
    CHECK(j["belief_trajectory"].size() == j["queries_sent"].size() + 1);
    CHECK(j["total_symbols"].get<long>() <= 20);

    auto rows = csv_rows(slurp(traj));
    CHECK(rows.size() == j["belief_trajectory"].size() + 1); // header + points
}

TEST_CASE("heatmap emits one row per cell and policy") {
    TempDir tmp;
    const std::string out = tmp.file("heat.csv");
    REQUIRE(run_cli({"heatmap", "--family", "iid", "--grid", "0.3:0.7:2", "--runs", "20",
                     "--m", "2", "--policy", "adaptive", "--policy", "random", "--out",
                     out}) == 0);
    auto rows = csv_rows(slurp(out));
    REQUIRE(rows.size() == 1 + 4 * 2);
    CHECK(rows[0][0] == "p1");
    for (size_t r = 1; r < rows.size(); ++r) {
        const double acc = std::stod(rows[r][3]);
        CHECK(acc >= 0.0);
        CHECK(acc <= 1.0);
        CHECK(rows[r][8] == "20");
    }
}

TEST_CASE("ingest round-trips through trace sources") {
    TempDir tmp;
    {
        std::ofstream csv(tmp.file("moves.csv"));
        csv << "x,y,timestamp\n0,0,1\n2,1,2\n2,6,3\nbroken,row,4\n9,7,5\n";
    }
    const std::string syms = tmp.file("moves.sym");
    REQUIRE(run_cli({"ingest", "--format", "trajectory", "--in", tmp.file("moves.csv"),
                     "--out-symbols", syms}) == 0);
    CHECK(qh::cli::load_symbol_file(syms) == std::vector<Symbol>{1, 0, 1});

    // byte-identical rerun (determinism / idempotence)
    const std::string syms2 = tmp.file("moves2.sym");
    REQUIRE(run_cli({"ingest", "--format", "trajectory", "--in", tmp.file("moves.csv"),
                     "--out-symbols", syms2}) == 0);
    CHECK(slurp(syms).substr(slurp(syms).find('\n')) ==
          slurp(syms2).substr(slurp(syms2).find('\n')));

    {
        std::ofstream csv(tmp.file("times.csv"));
        csv << "value\n0.0\n0.5\n1.0\n";
    }
    const std::string tsyms = tmp.file("times.sym");
    REQUIRE(run_cli({"ingest", "--format", "timings", "--in", tmp.file("times.csv"),
                     "--out-symbols", tsyms}) == 0);
    CHECK(qh::cli::load_symbol_file(tsyms) == std::vector<Symbol>{0, 4, 7});
}

TEST_CASE("config files drive subcommands and reject unknown keys") {
    TempDir tmp;
    {
        std::ofstream cfg(tmp.file("sim.ini"));
        cfg << "p1=0.3\np2=0.7\nm=2\npolicy=static\nseed=5\n";
    }
    const std::string out = tmp.file("sim.json");
    REQUIRE(run_cli({"simulate", "--config", tmp.file("sim.ini"), "--out", out}) == 0);
    auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["policy"] == "static");
    CHECK(j["m"] == 2);

    {
        std::ofstream cfg(tmp.file("bad.ini"));
        cfg << "p1=0.3\np2=0.7\nnot_a_key=1\n";
    }
    CHECK(run_cli({"simulate", "--config", tmp.file("bad.ini"), "--out", out}) == 2);
}

TEST_CASE("bits flag and full precision") {
    TempDir tmp;
    const std::string out = tmp.file("bits.csv");
    REQUIRE(run_cli({"stats", "--p1", "0.3", "--p2", "0.7", "--m", "1", "--pi", "0.5",
                     "--bits", "--out", out}) == 0);
    auto rows = csv_rows(slurp(out));
    CHECK(rows[0][1] == "kl_bits");
    // kl("1") in bits = nats / ln 2
    const std::string nats_out = tmp.file("nats.csv");
    REQUIRE(run_cli({"stats", "--p1", "0.3", "--p2", "0.7", "--m", "1", "--pi", "0.5",
                     "--full-precision", "--out", nats_out}) == 0);
    auto nrows = csv_rows(slurp(nats_out));
    REQUIRE(nrows[0][1] == "kl_nats");
    const double bits = std::stod(rows[2][1]); // pattern "1" row
    const double nats = std::stod(nrows[2][1]);
    CHECK(bits == doctest::Approx(nats / std::log(2.0)).epsilon(1e-4));

    // full precision round-trips exactly through text
    const std::string full = tmp.file("full.csv");
    REQUIRE(run_cli({"pmf", "--pattern", "1", "--iid-p", "0.5", "--full-precision", "--out",
                     full}) == 0);
    double mass = 0.0;
    for (const auto& row : csv_rows(slurp(full)))
        if (row[0] != "t") mass += std::stod(row[1]);
    CHECK(std::abs(mass - 1.0) < 1e-12);
}

TEST_CASE("exit codes distinguish config errors") {
    CHECK(run_cli({"pmf", "--pattern", "11"}) == 2);               // no source
    CHECK(run_cli({"pmf", "--pattern", "21", "--iid-p", "0.5"}) == 2); // bad symbol
    CHECK(run_cli({"nonsense"}) == 2);
    CHECK(run_cli({"simulate", "--p1", "0.3", "--p2", "0.7", "--alice", "/nonexistent"}) == 2);
}

TEST_CASE("estimator-driven simulate runs end to end") {
    TempDir tmp;
    // synthesize two training traces and an alice stream with the CLI-facing
    // trace format
    Eigen::VectorXd a(2), b(2);
    a << 0.7, 0.3;
    b << 0.3, 0.7;
    auto synth = [&](const SourceModel& src, std::uint64_t seed, const std::string& path) {
        Rng rng = substream(seed);
        StreamCursor cur(src, rng);
        std::vector<Symbol> out;
        for (int i = 0; i < 30000; ++i) out.push_back(cur.next(rng));
        qh::cli::write_symbol_file(path, out, true, "");
    };
    synth(make_iid(a), 1, tmp.file("t1.sym"));
    synth(make_iid(b), 2, tmp.file("t2.sym"));
    synth(make_iid(b), 3, tmp.file("alice.sym"));

    const std::string out = tmp.file("dssa.json");
    const std::string model_out = tmp.file("model.csv");
    REQUIRE(run_cli({"simulate", "--train1", tmp.file("t1.sym"), "--train2",
                     tmp.file("t2.sym"), "--alice", tmp.file("alice.sym"), "--truth", "2",
                     "--m", "2", "--samples", "2000", "--budget-symbols", "200",
                     "--budget-queries", "50", "--seed", "7", "--model-out", model_out,
                     "--out", out}) == 0);
    auto j = nlohmann::json::parse(slurp(out));
    CHECK(j["truth"] == 2);
    CHECK(j["decision"] == 2); // plenty of budget: the estimator should get this right

    auto mrows = csv_rows(slurp(model_out));
    REQUIRE(mrows.size() == 5); // header + 4 patterns
    CHECK(mrows[0][0] == "pattern");
    CHECK(mrows[0][6] == "censor_rate1");
}
