#include "qh/engine.hpp"

#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <thread>

namespace qh {

std::string to_string(Policy p) {
    switch (p) {
    case Policy::StaticOptimal: return "static";
    case Policy::CyclicOptimal: return "cyclic";
    case Policy::AdaptiveGreedy: return "adaptive";
    case Policy::RandomChoice: return "random";
    case Policy::FixedQuery: return "fixed";
    }
    return "?";
}

Policy parse_policy(const std::string& name) {
    if (name == "static") return Policy::StaticOptimal;
    if (name == "cyclic") return Policy::CyclicOptimal;
    if (name == "adaptive") return Policy::AdaptiveGreedy;
    if (name == "random") return Policy::RandomChoice;
    if (name == "fixed" || name.rfind("fixed:", 0) == 0) return Policy::FixedQuery;
    throw ConfigError("unknown policy '" + name + "'");
}

std::string to_string(StopReason r) {
    switch (r) {
    case StopReason::Threshold: return "threshold";
    case StopReason::QueryBudget: return "query_budget";
    case StopReason::SymbolBudget: return "symbol_budget";
    }
    return "?";
}

void TestConfig::validate() const {
    if (!(eps_t > 0.0 && eps_t < 0.5)) throw ConfigError("eps_t must lie in (0, 0.5)");
    if (m < 1) throw ConfigError("m must be >= 1");
    if (max_queries < 1 || max_symbols < 1) throw ConfigError("budgets must be >= 1");
    if (forced_truth != 0 && forced_truth != 1 && forced_truth != 2)
        throw ConfigError("forced_truth must be 0, 1, or 2");
    if (policy == Policy::FixedQuery) {
        if (!fixed_query) throw ConfigError("fixed policy needs a pattern");
        if (fixed_query->length() != m) throw ConfigError("fixed pattern length != m");
    }
}

TestOutcome run_test(const TestConfig& config, const HitModel& model, Rng& rng) {
    std::optional<CyclicStrategy> plan;
    if (config.policy == Policy::CyclicOptimal) {
        const auto* exact = dynamic_cast<const ExactHitModel*>(&model);
        if (exact == nullptr)
            throw ConfigError("the cyclic policy needs exact tables");
        plan = max_ratio_cycle(build_query_graph(*exact));
    }
    return run_test(config, model, rng, plan ? &*plan : nullptr);
}

TestOutcome run_test(const TestConfig& config, const HitModel& model, Rng& rng,
                     const CyclicStrategy* plan) {
    config.validate();
    if (config.policy == Policy::CyclicOptimal && plan == nullptr)
        return run_test(config, model, rng);

    TestOutcome out;
    out.truth = config.forced_truth != 0 ? config.forced_truth
                                         : draw_switch(config.hypotheses.prior, rng);
    const SourceModel& source = out.truth == 1 ? config.hypotheses.p1 : config.hypotheses.p2;
    StreamCursor cursor(source, rng);

    double pi = config.hypotheses.prior;
    out.belief_trajectory.push_back(pi);
    std::vector<Symbol> context; // empty until the first hit
    size_t cycle_pos = 0;

    while (true) {
        const Decision d = decide(pi, config.eps_t);
        if (d != Decision::Continue) {
            out.decision = d == Decision::Declare1 ? 1 : 2;
            out.stopped_by = StopReason::Threshold;
            break;
        }
        if (static_cast<int>(out.queries_sent.size()) >= config.max_queries) {
            out.decision = pi >= 0.5 ? 1 : 2;
            out.stopped_by = StopReason::QueryBudget;
            break;
        }
        if (out.total_symbols >= config.max_symbols) {
            out.decision = pi >= 0.5 ? 1 : 2;
            out.stopped_by = StopReason::SymbolBudget;
            break;
        }

        QueryPattern query;
        switch (config.policy) {
        case Policy::StaticOptimal: {
            auto table = model.stats_table({});
            query = table[model.select_query({}, config.hypotheses.prior, config.max_symbols)]
                        .pattern;
            break;
        }
        case Policy::AdaptiveGreedy: {
            auto table = model.stats_table(context);
            query = table[model.select_query(context, pi,
                                             config.max_symbols - out.total_symbols)]
                        .pattern;
            break;
        }
        case Policy::RandomChoice: {
            auto table = model.stats_table(context);
            if (table.empty()) throw EmptyCandidateSet("no admissible query patterns");
            query = table[random_query_index(table.size(), rng)].pattern;
            break;
        }
        case Policy::CyclicOptimal: {
            const auto* exact = dynamic_cast<const ExactHitModel*>(&model);
            const int node = plan->nodes[cycle_pos % plan->nodes.size()];
            ++cycle_pos;
            query = exact->query_set()[static_cast<size_t>(node)];
            break;
        }
        case Policy::FixedQuery:
            query = *config.fixed_query;
            break;
        }

        HitRecord rec = stream_hit(cursor, query, rng, config.max_symbols - out.total_symbols);
        out.total_symbols += rec.delta_t;
        out.queries_sent.push_back(query);
        out.hit_times.push_back(rec);
        if (rec.censored) {
            // "No hit in the remaining budget" is itself an observation; score
            // it with the survivor functions, then the budget forces the call.
            if (rec.delta_t > 0)
                pi = model.censored_posterior(pi, query, context, rec.delta_t);
            out.belief_trajectory.push_back(pi);
            out.decision = pi >= 0.5 ? 1 : 2;
            out.stopped_by = StopReason::SymbolBudget;
            break;
        }
        pi = model.posterior(pi, query, context, rec.delta_t);
        out.belief_trajectory.push_back(pi);
        context = query.symbols;
    }
    return out;
}

BatchMetrics run_cell(const BatchCell& cell, const HitModel& model, int runs_per_cell) {
    if (runs_per_cell < 1) throw ConfigError("runs_per_cell must be >= 1");
    const TestConfig& config = cell.config;
    config.validate();

    std::optional<CyclicStrategy> plan;
    double mu_star = std::numeric_limits<double>::quiet_NaN();
    if (const auto* exact = dynamic_cast<const ExactHitModel*>(&model)) {
        try {
            plan = max_ratio_cycle(build_query_graph(*exact));
            mu_star = plan->mu;
        } catch (const NoFiniteCycle&) {
        }
    }

    BatchMetrics m;
    m.x1 = cell.x1;
    m.x2 = cell.x2;
    m.policy = config.policy;
    m.n = runs_per_cell;
    m.mu_star = mu_star;
    double symbols = 0.0, queries = 0.0;
    int correct = 0;
    for (int run = 0; run < runs_per_cell; ++run) {
        Rng rng = substream(config.seed, static_cast<std::uint64_t>(run));
        TestOutcome out = run_test(config, model, rng, plan ? &*plan : nullptr);
        symbols += static_cast<double>(out.total_symbols);
        queries += static_cast<double>(out.queries_sent.size());
        if (out.truth == 1) {
            ++m.n1;
            if (out.decision != 1) ++m.errors1;
        } else {
            ++m.n2;
            if (out.decision != 2) ++m.errors2;
        }
        if (out.decision == out.truth) ++correct;
    }
    m.accuracy = static_cast<double>(correct) / m.n;
    m.alpha = m.n1 > 0 ? static_cast<double>(m.errors1) / m.n1
                       : std::numeric_limits<double>::quiet_NaN();
    m.beta = m.n2 > 0 ? static_cast<double>(m.errors2) / m.n2
                      : std::numeric_limits<double>::quiet_NaN();
    const double pi0 = config.hypotheses.prior;
    const double a = m.n1 > 0 ? m.alpha : 0.0;
    const double b = m.n2 > 0 ? m.beta : 0.0;
    m.accuracy_weighted = 1.0 - (pi0 * a + (1.0 - pi0) * b);
    m.mean_symbols = symbols / m.n;
    m.mean_queries = queries / m.n;
    return m;
}

BatchMetrics run_cell(const BatchCell& cell, int runs_per_cell) {
    ExactHitModel model(cell.config.hypotheses, cell.config.m,
                        {.epsilon = cell.config.table_epsilon,
                         .likelihood_horizon = cell.config.max_symbols});
    return run_cell(cell, model, runs_per_cell);
}

namespace {

void parallel_over(size_t count, int threads, const std::function<void(size_t)>& body) {
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads < 1) threads = 1;
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= count) return;
            body(i);
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(threads, static_cast<int>(count));
    pool.reserve(static_cast<size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

} // namespace

std::vector<BatchMetrics> run_batch(std::span<const BatchCell> cells, int runs_per_cell,
                                    int threads) {
    std::vector<BatchMetrics> out(cells.size());
    parallel_over(cells.size(), threads,
                  [&](size_t i) { out[i] = run_cell(cells[i], runs_per_cell); });
    return out;
}

std::vector<BatchMetrics> run_policy_grid(std::span<const BatchCell> cells,
                                          std::span<const PolicySpec> policies,
                                          int runs_per_cell, int threads) {
    std::vector<BatchMetrics> out(cells.size() * policies.size());
    parallel_over(cells.size(), threads, [&](size_t i) {
        const BatchCell& cell = cells[i];
        ExactHitModel model(cell.config.hypotheses, cell.config.m,
                            {.epsilon = cell.config.table_epsilon,
                             .likelihood_horizon = cell.config.max_symbols});
        for (size_t p = 0; p < policies.size(); ++p) {
            BatchCell variant = cell;
            variant.config.policy = policies[p].policy;
            variant.config.fixed_query = policies[p].fixed;
            out[i * policies.size() + p] = run_cell(variant, model, runs_per_cell);
        }
    });
    return out;
}

ExponentDiagnostic exponent_diagnostic(const SourceModel& p1, const SourceModel& p2, int m,
                                       double pi0, double epsilon) {
    QueryGraph graph = build_query_graph(p1, p2, m, pi0, epsilon);
    ExponentDiagnostic diag;
    diag.cycle = max_ratio_cycle(graph);
    diag.mu_star = diag.cycle.mu;
    return diag;
}

} // namespace qh
