#include "qh/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "qh/engine.hpp"
#include "qh/estimation.hpp"

namespace qh::cli {

TrajectoryBits binarize_trajectory(std::span<const XyRow> rows, bool invert) {
    if (rows.size() < 2) throw ConfigError("binarize_trajectory: need at least 2 rows");
    TrajectoryBits out;
    out.symbols.reserve(rows.size() - 1);
    for (size_t i = 1; i < rows.size(); ++i) {
        const double dx = std::abs(rows[i].x - rows[i - 1].x);
        const double dy = std::abs(rows[i].y - rows[i - 1].y);
        Symbol bit = dx >= dy ? 1 : 0; // ties count as horizontal
        if (invert) bit = 1 - bit;
        out.symbols.push_back(bit);
    }
    return out;
}

TimingSymbols binarize_timings(std::span<const double> values, bool as_bits) {
    if (values.empty()) throw ConfigError("binarize_timings: no values");
    double lo = values[0], hi = values[0];
    for (double v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    TimingSymbols out;
    out.constant_input = !(hi > lo);
    out.alphabet = as_bits ? 2 : 8;
    for (double v : values) {
        int bin = 0;
        if (!out.constant_input) {
            const double norm = (v - lo) / (hi - lo);
            bin = std::min(static_cast<int>(norm * 8.0), 7);
        }
        if (as_bits) {
            out.symbols.push_back((bin >> 2) & 1);
            out.symbols.push_back((bin >> 1) & 1);
            out.symbols.push_back(bin & 1);
        } else {
            out.symbols.push_back(bin);
        }
    }
    return out;
}

std::vector<Symbol> load_symbol_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open symbol file " + path);
    std::vector<Symbol> symbols;
    std::string line;
    while (std::getline(in, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (line.find_first_not_of("0123456789 \t") != std::string::npos)
            throw ConfigError("symbol file " + path + ": unexpected character");
        std::istringstream ls(line);
        std::vector<std::string> tokens;
        std::string token;
        while (ls >> token) tokens.push_back(token);
        if (tokens.size() == 1 && tokens[0].size() > 1) {
            // A run of digits with no separators is a packed string.
            for (char c : tokens[0]) symbols.push_back(c - '0');
        } else {
            for (const auto& t : tokens) symbols.push_back(static_cast<Symbol>(std::stol(t)));
        }
    }
    if (symbols.empty()) throw ConfigError("symbol file " + path + " is empty");
    return symbols;
}

void write_symbol_file(const std::string& path, std::span<const Symbol> symbols, bool packed,
                       const std::string& comment) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    if (packed) {
        for (Symbol s : symbols) {
            if (s > 9) throw ConfigError("packed symbol files need single-digit symbols");
            out << static_cast<char>('0' + s);
        }
        out << "\n";
    } else {
        for (Symbol s : symbols) out << s << "\n";
    }
}

namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fmt_double(double v, int sig) {
    std::ostringstream os;
    os << std::setprecision(sig) << v;
    return os.str();
}

// ----- option bundles ---------------------------------------------------

struct CommonOpts {
    std::uint64_t seed = 1;
    std::string out;
    bool full_precision = false;
    int precision() const { return full_precision ? 17 : 6; }
};

struct SourceOpts {
    double bernoulli = -1.0;  // --p{1,2}: binary IID P(Z=1)
    std::string iid;          // --iid{1,2}: comma-separated law
    double markov_p = -1.0;   // --markov-p{1,2}: persistent family parameter
    double stay = -1.0;       // --stay{1,2}: binary chain stay-probability
    std::string trace;        // --trace{1,2}: symbol file

    bool given() const {
        return bernoulli >= 0.0 || !iid.empty() || markov_p >= 0.0 || stay >= 0.0 ||
               !trace.empty();
    }
};

void add_common(CLI::App* sub, CommonOpts& o) {
    sub->add_option("--seed", o.seed, "RNG seed");
    sub->add_option("--out", o.out, "output path (default stdout)");
    sub->add_flag("--full-precision", o.full_precision, "17 significant digits in CSV output");
    // handled by splice_config_file before parsing; registered for --help only
    std::string dummy;
    sub->add_option("--config", dummy, "flat key=value experiment file");
}

// Expands "--config FILE" into "--key value ..." tokens in place. Keys the
// user already passed explicitly stay as given; unknown keys surface as
// ordinary unrecognized-argument errors. The file format is flat key=value
// (also "key = value"), one per line, '#' comments, repeats allowed.
std::vector<std::string> splice_config_file(std::vector<std::string> args) {
    for (size_t i = 0; i < args.size(); ++i) {
        std::string file;
        size_t erase_count = 0;
        if (args[i] == "--config" && i + 1 < args.size()) {
            file = args[i + 1];
            erase_count = 2;
        } else if (args[i].rfind("--config=", 0) == 0) {
            file = args[i].substr(9);
            erase_count = 1;
        } else {
            continue;
        }
        std::ifstream in(file);
        if (!in) throw ConfigError("cannot open config file " + file);
        std::vector<std::string> tokens;
        std::string line;
        long lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw ConfigError(file + ":" + std::to_string(lineno) + ": expected key=value");
            auto trim = [](std::string s) {
                const auto a = s.find_first_not_of(" \t");
                const auto b = s.find_last_not_of(" \t");
                return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
            };
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            if (key.empty()) throw ConfigError(file + ": empty key");
            const std::string flag = "--" + key;
            bool overridden = false;
            for (const auto& a : args)
                if (a == flag || a.rfind(flag + "=", 0) == 0) overridden = true;
            if (overridden) continue;
            tokens.push_back(flag);
            tokens.push_back(value);
        }
        args.erase(args.begin() + static_cast<long>(i),
                   args.begin() + static_cast<long>(i + erase_count));
        args.insert(args.begin() + static_cast<long>(i), tokens.begin(), tokens.end());
        break;
    }
    return args;
}

void add_source(CLI::App* sub, const std::string& idx, SourceOpts& o) {
    sub->add_option("--p" + idx, o.bernoulli, "binary IID source " + idx + ": P(Z=1)");
    sub->add_option("--iid" + idx, o.iid, "IID source " + idx + ": comma-separated law");
    sub->add_option("--markov-p" + idx, o.markov_p,
                    "persistent Markov source " + idx + " (stay = 0.9 + 0.1p)");
    sub->add_option("--stay" + idx, o.stay, "binary Markov source " + idx + ": stay-probability");
    sub->add_option("--trace" + idx, o.trace, "trace source " + idx + ": symbol file");
}

Eigen::VectorXd parse_prob_vector(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) vals.push_back(std::stod(tok));
    }
    if (vals.empty()) throw ConfigError("empty probability vector '" + text + "'");
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

SourceModel build_source(const SourceOpts& o, const std::string& which) {
    int given = (o.bernoulli >= 0.0) + !o.iid.empty() + (o.markov_p >= 0.0) + (o.stay >= 0.0) +
                !o.trace.empty();
    if (given != 1)
        throw ConfigError("source " + which + ": give exactly one of --p/--iid/--markov-p/--stay/--trace");
    if (o.bernoulli >= 0.0) {
        Eigen::VectorXd p(2);
        p << 1.0 - o.bernoulli, o.bernoulli;
        return make_iid(p);
    }
    if (!o.iid.empty()) return make_iid(parse_prob_vector(o.iid));
    if (o.markov_p >= 0.0) return make_markov_persistent(o.markov_p);
    if (o.stay >= 0.0) {
        Eigen::MatrixXd kernel(2, 2);
        kernel << o.stay, 1.0 - o.stay, 1.0 - o.stay, o.stay;
        return make_markov(kernel, 1);
    }
    return make_trace(load_symbol_file(o.trace));
}

std::vector<double> parse_grid(const std::string& text) {
    // "a:b:n" inclusive linear grid
    double a = 0.0, b = 0.0;
    int n = 0;
    char c1 = 0, c2 = 0;
    std::istringstream ss(text);
    if (!(ss >> a >> c1 >> b >> c2 >> n) || c1 != ':' || c2 != ':' || n < 1)
        throw ConfigError("grid must be a:b:n, got '" + text + "'");
    std::vector<double> out;
    out.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        out.push_back(n == 1 ? a : a + (b - a) * i / (n - 1));
    return out;
}

struct OutStream {
    std::ofstream file;
    std::ostream* os = &std::cout;
    explicit OutStream(const std::string& path) {
        if (!path.empty()) {
            file.open(path);
            if (!file) throw ConfigError("cannot write " + path);
            os = &file;
        }
    }
    std::ostream& operator*() { return *os; }
};

std::string config_hash(const CLI::App* sub) {
    // the hash identifies the experiment: every set option except where the
    // results get written
    std::ostringstream canonical;
    canonical << sub->get_name();
    for (const CLI::Option* opt : sub->get_options()) {
        const std::string name = opt->get_name();
        if (name == "--out" || name == "--trajectory-out" || name == "--out-symbols" ||
            name == "--model-out" || name == "--config" || name == "--help")
            continue;
        if (opt->count() == 0) continue;
        canonical << ";" << name << "=";
        for (const auto& r : opt->results()) canonical << r << ",";
    }
    std::ostringstream hex;
    hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a(canonical.str());
    return hex.str();
}

void csv_preamble(std::ostream& os, const CLI::App* sub, std::uint64_t seed) {
    os << "# seed=" << seed << " config=" << config_hash(sub) << "\n";
}

// ----- subcommands ------------------------------------------------------

struct PmfArgs {
    CommonOpts common;
    std::string pattern;
    double iid_p = -1.0;
    std::string iid;
    double markov_stay = -1.0;
    double markov_p = -1.0;
    std::string start; // explicit start context for Markov sources
    double epsilon = kDefaultPmfEpsilon;
};

int cmd_pmf(const PmfArgs& a, const CLI::App* sub) {
    SourceOpts so;
    so.bernoulli = a.iid_p;
    so.iid = a.iid;
    so.stay = a.markov_stay;
    so.markov_p = a.markov_p;
    SourceModel src = build_source(so, "pmf");
    QueryPattern q = QueryPattern::parse(a.pattern, src.alphabet);
    std::vector<Symbol> ctx;
    if (!a.start.empty()) ctx = QueryPattern::parse(a.start, src.alphabet).symbols;
    HitTimePmf pmf = hit_time_pmf(q, src, ctx, a.epsilon);

    OutStream out(a.common.out);
    const int sig = a.common.precision();
    csv_preamble(*out, sub, a.common.seed);
    *out << "# pattern=" << a.pattern << " t_max=" << pmf.t_max << " mass_captured="
         << fmt_double(pmf.mass_captured, 17) << " expected_delta_t="
         << fmt_double(pmf.mean(), std::max(sig, 10)) << "\n";
    *out << "t,prob\n";
    for (long t = 1; t <= pmf.t_max; ++t)
        *out << t << "," << fmt_double(pmf.probs[t - 1], sig) << "\n";
    return 0;
}

struct PairArgs {
    CommonOpts common;
    SourceOpts s1, s2;
    double prior = 0.5;
    int m = 3;
    double epsilon = kDefaultPmfEpsilon;
};

struct StatsArgs {
    PairArgs pair;
    std::string pi_grid;
    std::vector<double> pi_list;
    bool bits = false;
};

int cmd_stats(const StatsArgs& a, const CLI::App* sub) {
    HypothesisPair pair =
        make_hypothesis_pair(build_source(a.pair.s1, "1"), build_source(a.pair.s2, "2"),
                             a.pair.prior);
    ExactHitModel model(pair, a.pair.m, {.epsilon = a.pair.epsilon});
    std::vector<double> pis = a.pi_list;
    if (!a.pi_grid.empty()) pis = parse_grid(a.pi_grid);
    if (pis.empty()) pis = {pair.prior};

    OutStream out(a.pair.common.out);
    const int sig = a.pair.common.precision();
    const double unit = a.bits ? 1.0 / std::log(2.0) : 1.0;
    csv_preamble(*out, sub, a.pair.common.seed);
    const size_t excluded = model.query_set().size() - model.candidates().size();
    if (excluded > 0) *out << "# excluded_patterns=" << excluded << "\n";
    *out << "pattern," << (a.bits ? "kl_bits" : "kl_nats") << ",e1,e2,pi,"
         << (a.bits ? "nu_bits" : "nu") << "\n";
    for (const QueryStats& s : model.stats_table({})) {
        for (double pi : pis) {
            *out << s.pattern.str() << "," << fmt_double(s.kl * unit, sig) << ","
                 << fmt_double(s.e1, sig) << "," << fmt_double(s.e2, sig) << ","
                 << fmt_double(pi, sig) << "," << fmt_double(efficiency_ratio(s, pi) * unit, sig)
                 << "\n";
        }
    }
    return 0;
}

struct OptQueryArgs {
    PairArgs pair;
    std::string pi_grid = "0:1:101";
};

int cmd_optimal_query(const OptQueryArgs& a, const CLI::App* sub) {
    HypothesisPair pair =
        make_hypothesis_pair(build_source(a.pair.s1, "1"), build_source(a.pair.s2, "2"),
                             a.pair.prior);
    ExactHitModel model(pair, a.pair.m, {.epsilon = a.pair.epsilon});
    auto table = model.stats_table({});

    OutStream out(a.pair.common.out);
    const int sig = a.pair.common.precision();
    csv_preamble(*out, sub, a.pair.common.seed);
    *out << "pi,pattern,score,nu\n";
    for (double pi : parse_grid(a.pi_grid)) {
        const size_t best = optimal_static_query(table, pi);
        *out << fmt_double(pi, sig) << "," << table[best].pattern.str() << ","
             << fmt_double(chernoff_efficiency(table[best], pi), sig) << ","
             << fmt_double(efficiency_ratio(table[best], pi), sig) << "\n";
    }
    return 0;
}

int cmd_cycle(const PairArgs& a, const CLI::App* sub) {
    HypothesisPair pair =
        make_hypothesis_pair(build_source(a.s1, "1"), build_source(a.s2, "2"), a.prior);
    ExactHitModel model(pair, a.m, {.epsilon = a.epsilon});
    QueryGraph graph = build_query_graph(model);
    CyclicStrategy cyc = max_ratio_cycle(graph);

    OutStream out(a.common.out);
    const int sig = a.common.precision();
    csv_preamble(*out, sub, a.common.seed);
    *out << "# mu_star=" << fmt_double(cyc.mu, std::max(sig, 12)) << "\n";
    *out << "# cycle=";
    for (size_t i = 0; i < cyc.nodes.size(); ++i)
        *out << (i > 0 ? "->" : "") << graph.patterns[static_cast<size_t>(cyc.nodes[i])].str();
    *out << "\n";
    *out << "from,to,kl,time\n";
    const int n = static_cast<int>(graph.patterns.size());
    for (int k = 0; k < n; ++k)
        *out << "-," << graph.patterns[static_cast<size_t>(k)].str() << ","
             << fmt_double(graph.kl0(k), sig) << "," << fmt_double(graph.time0(k), sig) << "\n";
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            *out << graph.patterns[static_cast<size_t>(i)].str() << ","
                 << graph.patterns[static_cast<size_t>(k)].str() << ","
                 << fmt_double(graph.kl(i, k), sig) << "," << fmt_double(graph.time(i, k), sig)
                 << "\n";
    return 0;
}

std::pair<Policy, std::optional<std::string>> parse_policy_spec(const std::string& spec) {
    const Policy p = parse_policy(spec);
    if (p == Policy::FixedQuery) {
        auto pos = spec.find(':');
        if (pos == std::string::npos || pos + 1 >= spec.size())
            throw ConfigError("fixed policy must be written fixed:PATTERN");
        return {p, spec.substr(pos + 1)};
    }
    return {p, std::nullopt};
}

struct SimulateArgs {
    PairArgs pair;
    std::string policy = "adaptive";
    double eps_t = 0.01;
    int budget_queries = 10;
    long budget_symbols = 20;
    std::string train1, train2; // estimator mode
    int samples = 10000;
    double smoothing = 0.1;
    std::string alice; // replayed stream
    int truth = 0;
    std::string trajectory_out;
    std::string model_out; // estimator-mode per-pattern summary CSV
};

int cmd_simulate(const SimulateArgs& a, const CLI::App* sub) {
    TestConfig config;
    config.m = a.pair.m;
    config.eps_t = a.eps_t;
    config.max_queries = a.budget_queries;
    config.max_symbols = a.budget_symbols;
    config.seed = a.pair.common.seed;
    config.table_epsilon = a.pair.epsilon;
    auto [policy, fixed] = parse_policy_spec(a.policy);
    config.policy = policy;

    const bool estimator = !a.train1.empty() || !a.train2.empty();
    if (estimator && (a.train1.empty() || a.train2.empty()))
        throw ConfigError("estimator mode needs both --train1 and --train2");

    if (!a.alice.empty()) {
        if (a.truth != 1 && a.truth != 2)
            throw ConfigError("--alice needs --truth 1 or --truth 2");
        if (!estimator) throw ConfigError("--alice needs --train1/--train2 tables");
        SourceModel alice = make_trace(load_symbol_file(a.alice));
        config.hypotheses = HypothesisPair{alice, alice, a.pair.prior};
        config.forced_truth = a.truth;
    } else {
        config.hypotheses = make_hypothesis_pair(build_source(a.pair.s1, "1"),
                                                 build_source(a.pair.s2, "2"), a.pair.prior);
        config.forced_truth = a.truth;
    }
    if (fixed)
        config.fixed_query = QueryPattern::parse(*fixed, config.hypotheses.p1.alphabet);

    std::unique_ptr<HitModel> model;
    if (estimator) {
        TrainingTrace t1{load_symbol_file(a.train1), 1};
        TrainingTrace t2{load_symbol_file(a.train2), 2};
        int alphabet = std::max({config.hypotheses.p1.alphabet,
                                 make_trace(t1.symbols).alphabet, make_trace(t2.symbols).alphabet});
        auto set = make_query_set(alphabet, config.m);
        Rng train_rng = substream(config.seed, 0x747261696eULL); // distinct stream for training
        auto est = std::make_unique<EmpiricalHitModel>(
            t1, t2, set,
            EmpiricalHitModel::Options{.n_samples = a.samples, .smoothing = a.smoothing},
            train_rng);
        if (!a.model_out.empty()) {
            std::ofstream mo(a.model_out);
            if (!mo) throw ConfigError("cannot write " + a.model_out);
            csv_preamble(mo, sub, config.seed);
            mo << "pattern,kl_nats,e1,e2,n1,n2,censor_rate1,censor_rate2\n";
            const int sig = a.pair.common.precision();
            for (const QueryStats& s : est->stats_table({})) {
                const auto& pm = est->pattern_model(s.pattern);
                mo << s.pattern.str() << "," << fmt_double(s.kl, sig) << ","
                   << fmt_double(s.e1, sig) << "," << fmt_double(s.e2, sig) << "," << pm.n1
                   << "," << pm.n2 << "," << fmt_double(pm.censor_rate1, sig) << ","
                   << fmt_double(pm.censor_rate2, sig) << "\n";
            }
        }
        model = std::move(est);
    } else {
        model = std::make_unique<ExactHitModel>(
            config.hypotheses, config.m,
            ExactHitModel::Options{.epsilon = config.table_epsilon,
                                   .likelihood_horizon = config.max_symbols});
    }

    Rng rng = substream(config.seed, 0ULL);
    TestOutcome outcome = run_test(config, *model, rng);

    nlohmann::ordered_json j;
    j["seed"] = config.seed;
    j["config_hash"] = config_hash(sub);
    j["policy"] = to_string(config.policy);
    j["m"] = config.m;
    j["eps_t"] = config.eps_t;
    j["prior"] = config.hypotheses.prior;
    j["max_queries"] = config.max_queries;
    j["max_symbols"] = config.max_symbols;
    j["truth"] = outcome.truth;
    j["decision"] = outcome.decision;
    j["correct"] = outcome.decision == outcome.truth;
    j["stopped_by"] = to_string(outcome.stopped_by);
    j["total_symbols"] = outcome.total_symbols;
    j["queries_sent"] = nlohmann::ordered_json::array();
    for (const auto& q : outcome.queries_sent) j["queries_sent"].push_back(q.str());
    j["hit_times"] = nlohmann::ordered_json::array();
    j["censored"] = nlohmann::ordered_json::array();
    for (const auto& h : outcome.hit_times) {
        j["hit_times"].push_back(h.delta_t);
        j["censored"].push_back(h.censored);
    }
    j["belief_trajectory"] = outcome.belief_trajectory;

    OutStream out(a.pair.common.out);
    *out << j.dump(2) << "\n";

    if (!a.trajectory_out.empty()) {
        std::ofstream traj(a.trajectory_out);
        if (!traj) throw ConfigError("cannot write " + a.trajectory_out);
        csv_preamble(traj, sub, config.seed);
        traj << "k,belief\n";
        for (size_t k = 0; k < outcome.belief_trajectory.size(); ++k)
            traj << k << ","
                 << fmt_double(outcome.belief_trajectory[k], a.pair.common.precision()) << "\n";
    }
    return 0;
}

struct HeatmapArgs {
    CommonOpts common;
    std::string family = "iid";
    std::string grid = "0.1:0.9:9";
    std::vector<std::string> policies{"adaptive"};
    int runs = 400;
    int m = 3;
    double eps_t = 0.01;
    int budget_queries = 10;
    long budget_symbols = 20;
    double prior = 0.5;
    double epsilon = kDefaultPmfEpsilon;
    int threads = 0;
};

int cmd_heatmap(const HeatmapArgs& a, const CLI::App* sub) {
    if (a.family != "iid" && a.family != "markov")
        throw ConfigError("--family must be iid or markov");
    const std::vector<double> grid = parse_grid(a.grid);

    std::vector<PolicySpec> policies;
    for (const auto& spec : a.policies) {
        auto [p, f] = parse_policy_spec(spec);
        PolicySpec ps;
        ps.policy = p;
        if (f) ps.fixed = QueryPattern::parse(*f, 2);
        policies.push_back(std::move(ps));
    }

    std::vector<BatchCell> cells;
    size_t index = 0;
    for (double v1 : grid) {
        for (double v2 : grid) {
            BatchCell cell;
            cell.x1 = v1;
            cell.x2 = v2;
            SourceModel s1, s2;
            if (a.family == "iid") {
                Eigen::VectorXd q1(2), q2(2);
                q1 << 1.0 - v1, v1;
                q2 << 1.0 - v2, v2;
                s1 = make_iid(q1);
                s2 = make_iid(q2);
            } else {
                s1 = make_markov_persistent(v1);
                s2 = make_markov_persistent(v2);
            }
            cell.config.hypotheses = make_hypothesis_pair(std::move(s1), std::move(s2), a.prior);
            cell.config.m = a.m;
            cell.config.eps_t = a.eps_t;
            cell.config.max_queries = a.budget_queries;
            cell.config.max_symbols = a.budget_symbols;
            cell.config.table_epsilon = a.epsilon;
            cell.config.seed = mix_seed(a.common.seed, index++);
            cells.push_back(std::move(cell));
        }
    }
    std::vector<BatchMetrics> rows = run_policy_grid(cells, policies, a.runs, a.threads);

    OutStream out(a.common.out);
    const int sig = a.common.precision();
    csv_preamble(*out, sub, a.common.seed);
    *out << "p1,p2,policy,accuracy,mean_symbols,mean_queries,alpha,beta,n\n";
    for (const BatchMetrics& m : rows) {
        *out << fmt_double(m.x1, sig) << "," << fmt_double(m.x2, sig) << ","
             << to_string(m.policy) << "," << fmt_double(m.accuracy, sig) << ","
             << fmt_double(m.mean_symbols, sig) << "," << fmt_double(m.mean_queries, sig) << ","
             << fmt_double(m.alpha, sig) << "," << fmt_double(m.beta, sig) << "," << m.n << "\n";
    }
    return 0;
}

struct IngestArgs {
    CommonOpts common;
    std::string format;
    std::string in;
    std::string output;
    bool invert = false;
    bool bits = false;
    bool packed = false;
};

int cmd_ingest(const IngestArgs& a, const CLI::App* sub) {
    std::ifstream in(a.in);
    if (!in) throw ConfigError("cannot open " + a.in);
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("empty input " + a.in);

    // Header row: find the needed columns by name; a headerless single-column
    // file of numbers is accepted for timings.
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
            out.push_back(tok);
        }
        return out;
    };
    auto lower = [](std::string s) {
        for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        return s;
    };
    std::vector<std::string> header = split(line);
    int col_x = -1, col_y = -1, col_v = -1;
    bool headerless = false;
    for (size_t i = 0; i < header.size(); ++i) {
        const std::string h = lower(header[i]);
        if (h == "x") col_x = static_cast<int>(i);
        if (h == "y") col_y = static_cast<int>(i);
        if (h == "value") col_v = static_cast<int>(i);
    }
    long skipped = 0;
    std::vector<XyRow> rows;
    std::vector<double> values;
    auto consume = [&](const std::string& text) {
        std::vector<std::string> f = split(text);
        try {
            if (a.format == "trajectory") {
                if (col_x < 0 || col_y < 0) throw std::invalid_argument("no x/y");
                rows.push_back(XyRow{std::stod(f.at(static_cast<size_t>(col_x))),
                                     std::stod(f.at(static_cast<size_t>(col_y)))});
            } else {
                const int c = col_v >= 0 ? col_v : 0;
                values.push_back(std::stod(f.at(static_cast<size_t>(c))));
            }
        } catch (const std::exception&) {
            ++skipped;
        }
    };
    if (a.format == "trajectory") {
        if (col_x < 0 || col_y < 0) throw ConfigError("trajectory input needs x,y header columns");
    } else if (a.format == "timings") {
        if (col_v < 0) {
            // maybe headerless numbers
            try {
                values.push_back(std::stod(header.at(0)));
                headerless = true;
            } catch (const std::exception&) {
                // header without a "value" column name: take the first column
                col_v = 0;
            }
        }
    } else {
        throw ConfigError("--format must be trajectory or timings");
    }
    (void)headerless;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        consume(line);
    }

    std::vector<Symbol> symbols;
    if (a.format == "trajectory") {
        TrajectoryBits bits = binarize_trajectory(rows, a.invert);
        skipped += bits.skipped;
        symbols = std::move(bits.symbols);
    } else {
        TimingSymbols t = binarize_timings(values, a.bits);
        if (t.constant_input)
            std::cerr << "warning: constant input, every value mapped to bin 0\n";
        symbols = std::move(t.symbols);
    }
    if (skipped > 0) std::cerr << "warning: skipped " << skipped << " malformed rows\n";

    std::ostringstream comment;
    comment << "seed=" << a.common.seed << " config=" << config_hash(sub)
            << " skipped=" << skipped;
    write_symbol_file(a.output, symbols, a.packed, comment.str());
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"Query/Hit sequential hypothesis testing"};
    app.require_subcommand(1);

    PmfArgs pmf;
    auto* sub_pmf = app.add_subcommand("pmf", "exact hit-time PMF of one query");
    add_common(sub_pmf, pmf.common);
    sub_pmf->add_option("--pattern", pmf.pattern, "query pattern, e.g. 0111")->required();
    sub_pmf->add_option("--iid-p", pmf.iid_p, "binary IID source: P(Z=1)");
    sub_pmf->add_option("--iid", pmf.iid, "IID source: comma-separated law");
    sub_pmf->add_option("--markov-stay", pmf.markov_stay, "binary Markov stay-probability");
    sub_pmf->add_option("--markov-p", pmf.markov_p, "persistent family parameter");
    sub_pmf->add_option("--start", pmf.start, "Markov start context (default stationary)");
    sub_pmf->add_option("--epsilon", pmf.epsilon, "truncation threshold");

    StatsArgs stats;
    auto* sub_stats = app.add_subcommand("stats", "per-query KL, expected times, efficiency");
    add_common(sub_stats, stats.pair.common);
    add_source(sub_stats, "1", stats.pair.s1);
    add_source(sub_stats, "2", stats.pair.s2);
    sub_stats->add_option("--m", stats.pair.m, "query length");
    sub_stats->add_option("--prior", stats.pair.prior, "pi_0");
    sub_stats->add_option("--epsilon", stats.pair.epsilon, "truncation threshold");
    sub_stats->add_option("--pi-grid", stats.pi_grid, "belief grid a:b:n");
    sub_stats->add_option("--pi", stats.pi_list, "belief values");
    sub_stats->add_flag("--bits", stats.bits, "report KL in bits");

    OptQueryArgs optq;
    auto* sub_optq = app.add_subcommand("optimal-query", "argmax-nu query over a belief grid");
    add_common(sub_optq, optq.pair.common);
    add_source(sub_optq, "1", optq.pair.s1);
    add_source(sub_optq, "2", optq.pair.s2);
    sub_optq->add_option("--m", optq.pair.m, "query length");
    sub_optq->add_option("--prior", optq.pair.prior, "pi_0");
    sub_optq->add_option("--epsilon", optq.pair.epsilon, "truncation threshold");
    sub_optq->add_option("--pi-grid", optq.pi_grid, "belief grid a:b:n");

    PairArgs cyc;
    auto* sub_cyc = app.add_subcommand("cycle", "optimal query cycle and exponent");
    add_common(sub_cyc, cyc.common);
    add_source(sub_cyc, "1", cyc.s1);
    add_source(sub_cyc, "2", cyc.s2);
    sub_cyc->add_option("--m", cyc.m, "query length");
    sub_cyc->add_option("--prior", cyc.prior, "pi_0 used in the t-averaging");
    sub_cyc->add_option("--epsilon", cyc.epsilon, "truncation threshold");

    SimulateArgs sim;
    auto* sub_sim = app.add_subcommand("simulate", "one sequential test, JSON outcome");
    add_common(sub_sim, sim.pair.common);
    add_source(sub_sim, "1", sim.pair.s1);
    add_source(sub_sim, "2", sim.pair.s2);
    sub_sim->add_option("--m", sim.pair.m, "query length");
    sub_sim->add_option("--prior", sim.pair.prior, "pi_0");
    sub_sim->add_option("--epsilon", sim.pair.epsilon, "truncation threshold");
    sub_sim->add_option("--policy", sim.policy, "static|cyclic|adaptive|random|fixed:PATTERN");
    sub_sim->add_option("--eps-t", sim.eps_t, "belief threshold");
    sub_sim->add_option("--budget-queries", sim.budget_queries, "max queries");
    sub_sim->add_option("--budget-symbols", sim.budget_symbols, "max source symbols");
    sub_sim->add_option("--train1", sim.train1, "training trace for hypothesis 1 (estimator)");
    sub_sim->add_option("--train2", sim.train2, "training trace for hypothesis 2 (estimator)");
    sub_sim->add_option("--samples", sim.samples, "estimator hit-time samples per pattern");
    sub_sim->add_option("--smoothing", sim.smoothing, "histogram smoothing constant");
    sub_sim->add_option("--alice", sim.alice, "replay this symbol file as Alice's stream");
    sub_sim->add_option("--truth", sim.truth, "pin the true hypothesis (1 or 2)");
    sub_sim->add_option("--trajectory-out", sim.trajectory_out, "belief trajectory CSV path");
    sub_sim->add_option("--model-out", sim.model_out, "estimator model summary CSV path");

    HeatmapArgs heat;
    auto* sub_heat = app.add_subcommand("heatmap", "accuracy grid over source pairs");
    add_common(sub_heat, heat.common);
    sub_heat->add_option("--family", heat.family, "iid|markov");
    sub_heat->add_option("--grid", heat.grid, "parameter grid a:b:n");
    sub_heat->add_option("--policy", heat.policies, "policies (repeatable)");
    sub_heat->add_option("--runs", heat.runs, "runs per cell");
    sub_heat->add_option("--m", heat.m, "query length");
    sub_heat->add_option("--eps-t", heat.eps_t, "belief threshold");
    sub_heat->add_option("--budget-queries", heat.budget_queries, "max queries");
    sub_heat->add_option("--budget-symbols", heat.budget_symbols, "max source symbols");
    sub_heat->add_option("--prior", heat.prior, "pi_0");
    sub_heat->add_option("--epsilon", heat.epsilon, "truncation threshold");
    sub_heat->add_option("--threads", heat.threads, "worker threads (0 = hardware)");

    IngestArgs ing;
    auto* sub_ing = app.add_subcommand("ingest", "binarize raw CSV into a symbol file");
    add_common(sub_ing, ing.common);
    sub_ing->add_option("--format", ing.format, "trajectory|timings")->required();
    sub_ing->add_option("--in", ing.in, "input CSV")->required();
    sub_ing->add_option("--out-symbols", ing.output, "output symbol file")->required();
    sub_ing->add_flag("--invert", ing.invert, "flip the horizontal/vertical encoding");
    sub_ing->add_flag("--bits", ing.bits, "expand timing bins to 3-bit binary");
    sub_ing->add_flag("--packed", ing.packed, "write one packed digit string");

    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i) args.push_back(argv[i]); // CLI11 takes reversed args
    try {
        std::vector<std::string> forward(args.rbegin(), args.rend());
        forward = splice_config_file(std::move(forward));
        args.assign(forward.rbegin(), forward.rend());
        app.parse(args);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        if (sub_pmf->parsed()) return cmd_pmf(pmf, sub_pmf);
        if (sub_stats->parsed()) return cmd_stats(stats, sub_stats);
        if (sub_optq->parsed()) return cmd_optimal_query(optq, sub_optq);
        if (sub_cyc->parsed()) return cmd_cycle(cyc, sub_cyc);
        if (sub_sim->parsed()) return cmd_simulate(sim, sub_sim);
        if (sub_heat->parsed()) return cmd_heatmap(heat, sub_heat);
        if (sub_ing->parsed()) return cmd_ingest(ing, sub_ing);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> full;
    full.push_back("qh");
    full.insert(full.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(full.size());
    for (const auto& s : full) argv.push_back(s.c_str());
    return run_cli(static_cast<int>(argv.size()), argv.data());
}

} // namespace qh::cli
