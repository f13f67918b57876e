#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "qh/exact_model.hpp"
#include "qh/inference.hpp"

namespace qh {

/// Complete directed graph over the query set: edge (n, k) carries the KL
/// divergence and the prior-averaged expected time of query k sent right
/// after a hit of query n. Row 0-analogues kl0/time0 cover the first query
/// (stationary start). Excluded (impossible) edges are NaN.
struct QueryGraph {
    std::vector<QueryPattern> patterns;
    Eigen::MatrixXd kl;   // D_{n,k}
    Eigen::MatrixXd time; // t_{n,k} = pi0 E_P1 + (1-pi0) E_P2
    Eigen::VectorXd kl0;  // D_{0,n}
    Eigen::VectorXd time0;
    double prior = 0.5;
};

/// A cycle of query indices (distinct nodes; a single node means a self-loop)
/// together with its ratio mu = sum D / sum t.
struct CyclicStrategy {
    std::vector<int> nodes;
    double mu = 0.0;
};

QueryGraph build_query_graph(const ExactHitModel& model);
QueryGraph build_query_graph(const SourceModel& p1, const SourceModel& p2, int m,
                             double prior = 0.5, double epsilon = kDefaultPmfEpsilon);

// Maximum cycle ratio over all simple cycles (self-loops admissible), by
// binary search on lambda with Bellman-Ford negative-cycle detection on
// weights lambda * t - D. Throws NoFiniteCycle if every edge is excluded.
CyclicStrategy max_ratio_cycle(const Eigen::MatrixXd& kl, const Eigen::MatrixXd& time);
CyclicStrategy max_ratio_cycle(const QueryGraph& graph);

// Index of the query maximizing the Chernoff discrimination per expected unit
// of time at belief pi; ties resolve to the lexicographically smallest pattern
// (the table is kept in lexicographic order).
size_t optimal_static_query(std::span<const QueryStats> table, double pi);

// Greedy adaptive choice: the static rule re-evaluated at the current belief.
inline size_t adaptive_next_query(std::span<const QueryStats> table, double pi_k) {
    return optimal_static_query(table, pi_k);
}

size_t random_query_index(size_t count, Rng& rng);
const QueryPattern& random_query(std::span<const QueryPattern> set, Rng& rng);

} // namespace qh
