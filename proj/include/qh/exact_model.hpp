#pragma once

#include <vector>

#include "qh/inference.hpp"
#include "qh/sources.hpp"

namespace qh {

/// Exact truncated hit-time tables for every (start context, query) pair of a
/// hypothesis pair, plus the derived QueryStats. This is the inference backend
/// for parametric (IID / Markov) sources.
///
/// Context slot 0 is the stationary start (first query of a run); for order-l
/// Markov sources there is one further slot per length-l context, reached via
/// the suffix of the previous query.
class ExactHitModel : public HitModel {
  public:
    struct Options {
        double epsilon = kDefaultPmfEpsilon;
        // Likelihood lookups are only needed for delta_t up to the engine's
        // symbol budget; anything longer is summarized by the tail mass.
        // Negative keeps the full truncated range.
        long likelihood_horizon = -1;
    };

    struct Entry {
        bool valid1 = false; // pattern has a hit-time law under P1
        bool valid2 = false;
        QueryStats stats;    // defined when valid1 && valid2
        Eigen::VectorXd like1, like2; // normalized P(DeltaT = t), t = 1..horizon
        Eigen::VectorXd surv1, surv2; // P(DeltaT > n), n = 0..horizon
        double tail1 = 0.0, tail2 = 0.0; // raw mass beyond t_max
        long t_max = 0;
    };

    ExactHitModel(HypothesisPair pair, int m) : ExactHitModel(std::move(pair), m, Options{}) {}
    ExactHitModel(HypothesisPair pair, int m, Options opts);

    std::span<const QueryStats> stats_table(std::span<const Symbol> context) const override;
    double posterior(double pi, const QueryPattern& q, std::span<const Symbol> context,
                     long delta_t) const override;
    double censored_posterior(double pi, const QueryPattern& q, std::span<const Symbol> context,
                              long elapsed) const override;
    size_t select_query(std::span<const Symbol> context, double pi, long budget) const override;

    // Likelihood of delta_t under one hypothesis (tail mass past t_max, zero
    // for impossible patterns).
    double likelihood(int hypothesis, const QueryPattern& q, std::span<const Symbol> context,
                      long delta_t) const;
    // Survivor P(DeltaT > elapsed) under one hypothesis (1 for impossible
    // patterns, which never hit).
    double survival(int hypothesis, const QueryPattern& q, std::span<const Symbol> context,
                    long elapsed) const;

    const std::vector<QueryPattern>& query_set() const { return query_set_; }
    const std::vector<QueryPattern>& candidates() const { return candidates_; }
    const HypothesisPair& hypotheses() const { return pair_; }
    int pattern_length() const { return m_; }
    int context_order() const { return order_; }
    double epsilon() const { return opts_.epsilon; }

    const Entry& entry(std::span<const Symbol> context, size_t pattern_index) const;
    size_t pattern_index(const QueryPattern& q) const;

  private:
    int slot_of(std::span<const Symbol> context) const;

    HypothesisPair pair_;
    int m_;
    int order_; // max Markov order of the pair (0 for IID pairs)
    Options opts_;
    std::vector<QueryPattern> query_set_;
    std::vector<QueryPattern> candidates_;
    std::vector<std::vector<Entry>> entries_;          // [slot][pattern]
    std::vector<std::vector<QueryStats>> stats_;       // [slot][candidate]
};

} // namespace qh
