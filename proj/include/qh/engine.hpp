#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qh/strategy.hpp"

namespace qh {

enum class Policy { StaticOptimal, CyclicOptimal, AdaptiveGreedy, RandomChoice, FixedQuery };

std::string to_string(Policy p);
Policy parse_policy(const std::string& name);

enum class StopReason { Threshold, QueryBudget, SymbolBudget };
std::string to_string(StopReason r);

struct TestConfig {
    HypothesisPair hypotheses;
    Policy policy = Policy::AdaptiveGreedy;
    std::optional<QueryPattern> fixed_query; // FixedQuery only
    int m = 3;
    double eps_t = 0.01;
    int max_queries = 10;
    long max_symbols = 20;
    std::uint64_t seed = 1;
    // 0 draws Omega from the prior; 1/2 pins it (trace replays, error-exponent
    // conditioning) while the belief still starts at the prior.
    int forced_truth = 0;
    double table_epsilon = kDefaultPmfEpsilon;

    void validate() const;
};

struct TestOutcome {
    int decision = 0;
    int truth = 0;
    std::vector<double> belief_trajectory; // size = queries + 1
    std::vector<QueryPattern> queries_sent;
    std::vector<HitRecord> hit_times;
    long total_symbols = 0;
    StopReason stopped_by = StopReason::Threshold;
};

// One full sequential test: switch draw, query loop, hit collection, belief
// updates, stopping. A budget trip forces the decision at the 0.5 threshold.
TestOutcome run_test(const TestConfig& config, const HitModel& model, Rng& rng);
// Variant with a precomputed cycle for the cyclic policy (batch drivers reuse
// one plan across runs).
TestOutcome run_test(const TestConfig& config, const HitModel& model, Rng& rng,
                     const CyclicStrategy* plan);

struct BatchCell {
    double x1 = 0.0, x2 = 0.0; // grid coordinates, echoed into the CSV
    TestConfig config;
};

struct BatchMetrics {
    double x1 = 0.0, x2 = 0.0;
    Policy policy = Policy::AdaptiveGreedy;
    int n = 0;
    int n1 = 0, n2 = 0;        // runs with Omega = 1 / 2
    int errors1 = 0, errors2 = 0;
    double accuracy = 0.0;          // raw fraction of correct decisions
    double accuracy_weighted = 0.0; // 1 - (pi0 alpha + (1-pi0) beta)
    double alpha = 0.0, beta = 0.0; // NaN when a condition has no runs
    double mean_symbols = 0.0;
    double mean_queries = 0.0;
    double mu_star = 0.0; // theoretical exponent of the cell, NaN if undefined
};

// Runs one cell with per-run RNG substreams derived from (config.seed, run).
// Pass a prebuilt model to share tables across policies.
BatchMetrics run_cell(const BatchCell& cell, const HitModel& model, int runs_per_cell);
BatchMetrics run_cell(const BatchCell& cell, int runs_per_cell);

// Cells are independent; execution parallelizes over them and the result is
// byte-identical regardless of the schedule. threads = 0 picks the hardware
// concurrency.
std::vector<BatchMetrics> run_batch(std::span<const BatchCell> cells, int runs_per_cell,
                                    int threads = 0);

struct PolicySpec {
    Policy policy = Policy::AdaptiveGreedy;
    std::optional<QueryPattern> fixed;
};

// Runs several policies over the same cells, sharing each cell's exact tables
// and per-run RNG substreams (paired comparisons). Output is cell-major.
std::vector<BatchMetrics> run_policy_grid(std::span<const BatchCell> cells,
                                          std::span<const PolicySpec> policies,
                                          int runs_per_cell, int threads = 0);

struct ExponentDiagnostic {
    double mu_star = 0.0;
    CyclicStrategy cycle;
};

// Theoretical error exponent and the attaining cycle; for IID sources this
// equals max_q nu(q, pi0).
ExponentDiagnostic exponent_diagnostic(const SourceModel& p1, const SourceModel& p2, int m,
                                       double pi0, double epsilon = kDefaultPmfEpsilon);

} // namespace qh
