#include "qh/strategy.hpp"

#include <cmath>
#include <limits>

namespace qh {

namespace {

constexpr double kLambdaTol = 1e-11;

bool edge_valid(const Eigen::MatrixXd& kl, int i, int j) { return !std::isnan(kl(i, j)); }

// Bellman-Ford negative-cycle detection on weights lambda * t - D, with a
// virtual source attached to every node (dist all-zero start). Returns the
// cycle (forward node order) if one exists.
std::vector<int> negative_cycle(const Eigen::MatrixXd& kl, const Eigen::MatrixXd& time,
                                double lambda) {
    const int n = static_cast<int>(kl.rows());
    std::vector<double> dist(static_cast<size_t>(n), 0.0);
    std::vector<int> pred(static_cast<size_t>(n), -1);
    int touched = -1;
    for (int pass = 0; pass < n && touched < 0; ++pass) {
        bool last = (pass == n - 1);
        bool improved = false;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (!edge_valid(kl, i, j)) continue;
                const double w = lambda * time(i, j) - kl(i, j);
                if (dist[i] + w < dist[j] - 1e-300) {
                    dist[j] = dist[i] + w;
                    pred[j] = i;
                    improved = true;
                    if (last) {
                        touched = j;
                        break;
                    }
                }
            }
            if (touched >= 0) break;
        }
        if (!improved) return {};
    }
    if (touched < 0) return {};
    // Walk n predecessor steps to guarantee landing inside the cycle.
    int v = touched;
    for (int i = 0; i < n; ++i) v = pred[v];
    std::vector<int> cycle;
    int u = v;
    do {
        cycle.push_back(u);
        u = pred[u];
    } while (u != v);
    std::reverse(cycle.begin(), cycle.end());
    return cycle;
}

double cycle_ratio(const Eigen::MatrixXd& kl, const Eigen::MatrixXd& time,
                   const std::vector<int>& nodes) {
    double d = 0.0, t = 0.0;
    const size_t k = nodes.size();
    for (size_t i = 0; i < k; ++i) {
        const int a = nodes[i];
        const int b = nodes[(i + 1) % k];
        d += kl(a, b);
        t += time(a, b);
    }
    return d / t;
}

void rotate_to_smallest(std::vector<int>& nodes) {
    auto it = std::min_element(nodes.begin(), nodes.end());
    std::rotate(nodes.begin(), it, nodes.end());
}

} // namespace

CyclicStrategy max_ratio_cycle(const Eigen::MatrixXd& kl, const Eigen::MatrixXd& time) {
    const int n = static_cast<int>(kl.rows());
    if (n < 1 || kl.cols() != n || time.rows() != n || time.cols() != n)
        throw ConfigError("max_ratio_cycle: malformed graph");

    double hi = 0.0;
    bool any_edge = false;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (!edge_valid(kl, i, j)) continue;
            if (!(time(i, j) > 0.0)) throw ConfigError("max_ratio_cycle: non-positive edge time");
            any_edge = true;
            hi = std::max(hi, kl(i, j) / time(i, j));
        }
    }
    if (!any_edge) throw NoFiniteCycle("all edges excluded");
    hi += 1.0; // every cycle ratio is bounded by the best edge ratio

    double lo = -1.0;
    std::vector<int> best = negative_cycle(kl, time, lo);
    if (best.empty()) throw NoFiniteCycle("the valid edges contain no cycle");

    const double tol = kLambdaTol * std::max(1.0, hi);
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        std::vector<int> cyc = negative_cycle(kl, time, mid);
        if (!cyc.empty()) {
            lo = mid;
            best = std::move(cyc);
        } else {
            hi = mid;
        }
    }

    CyclicStrategy out;
    out.nodes = best;
    out.mu = cycle_ratio(kl, time, out.nodes);
    // Prefer an equal-ratio self-loop: it is the lexicographically smallest
    // cycle attaining mu, and it is what the IID corollary predicts.
    for (int i = 0; i < n; ++i) {
        if (!edge_valid(kl, i, i)) continue;
        const double mu_i = kl(i, i) / time(i, i);
        const double scale = std::max(1.0, std::abs(out.mu));
        if (mu_i > out.mu + 1e-12 * scale ||
            (std::abs(mu_i - out.mu) <= 1e-12 * scale &&
             (out.nodes.size() > 1 || i < out.nodes.front()))) {
            out.nodes = {i};
            out.mu = mu_i;
            break;
        }
    }
    rotate_to_smallest(out.nodes);
    out.mu = cycle_ratio(kl, time, out.nodes);
    return out;
}

CyclicStrategy max_ratio_cycle(const QueryGraph& graph) {
    return max_ratio_cycle(graph.kl, graph.time);
}

QueryGraph build_query_graph(const ExactHitModel& model) {
    const auto& set = model.query_set();
    const int n = static_cast<int>(set.size());
    QueryGraph g;
    g.patterns = set;
    g.prior = model.hypotheses().prior;
    g.kl.setConstant(n, n, std::numeric_limits<double>::quiet_NaN());
    g.time.setConstant(n, n, std::numeric_limits<double>::quiet_NaN());
    g.kl0.setConstant(n, std::numeric_limits<double>::quiet_NaN());
    g.time0.setConstant(n, std::numeric_limits<double>::quiet_NaN());

    auto fill = [&](std::span<const Symbol> ctx, auto&& kl_out, auto&& t_out) {
        for (int k = 0; k < n; ++k) {
            const auto& e = model.entry(ctx, static_cast<size_t>(k));
            if (!(e.valid1 && e.valid2)) continue;
            kl_out(k) = e.stats.kl;
            t_out(k) = g.prior * e.stats.e1 + (1.0 - g.prior) * e.stats.e2;
        }
    };

    fill({}, [&](int k) -> double& { return g.kl0(k); },
         [&](int k) -> double& { return g.time0(k); });
    for (int from = 0; from < n; ++from) {
        fill(set[static_cast<size_t>(from)].symbols,
             [&](int k) -> double& { return g.kl(from, k); },
             [&](int k) -> double& { return g.time(from, k); });
    }
    return g;
}

QueryGraph build_query_graph(const SourceModel& p1, const SourceModel& p2, int m, double prior,
                             double epsilon) {
    ExactHitModel model(make_hypothesis_pair(p1, p2, prior), m, {.epsilon = epsilon});
    return build_query_graph(model);
}

size_t optimal_static_query(std::span<const QueryStats> table, double pi) {
    if (table.empty()) throw EmptyCandidateSet("no admissible query patterns");
    size_t best = 0;
    double best_score = chernoff_efficiency(table[0], pi);
    for (size_t i = 1; i < table.size(); ++i) {
        const double score = chernoff_efficiency(table[i], pi);
        if (score > best_score) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

size_t random_query_index(size_t count, Rng& rng) {
    if (count == 0) throw EmptyCandidateSet("no admissible query patterns");
    std::uniform_int_distribution<size_t> u(0, count - 1);
    return u(rng);
}

const QueryPattern& random_query(std::span<const QueryPattern> set, Rng& rng) {
    return set[random_query_index(set.size(), rng)];
}

} // namespace qh
