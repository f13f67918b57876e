#pragma once

#include <span>

#include "qh/hitpmf.hpp"
#include "qh/patterns.hpp"

namespace qh {

// Beliefs are clamped away from the absorbing endpoints so an underflowed
// posterior can still move.
constexpr double kBeliefClamp = 1e-12;

inline double clamp_belief(double pi) {
    if (pi < kBeliefClamp) return kBeliefClamp;
    if (pi > 1.0 - kBeliefClamp) return 1.0 - kBeliefClamp;
    return pi;
}

/// Per-query divergence and expected hit times under the two hypotheses.
struct QueryStats {
    QueryPattern pattern;
    double kl = 0.0;       // D_KL(P1 || P2 | q), nats
    double chernoff = 0.0; // Chernoff information C(P1, P2 | q), nats
    double e1 = 0.0;       // E_P1[DeltaT | q]
    double e2 = 0.0;       // E_P2[DeltaT | q]
};

// sum_t p1(t) ln(p1(t)/p2(t)) in nats, with 0 ln 0 = 0. Both PMFs must share
// the truncation range; p1 > 0 where p2 = 0 throws AbsoluteContinuityViolation.
double kl_divergence(const HitTimePmf& pmf1, const HitTimePmf& pmf2);

// Chernoff information max_{lambda in [0,1]} -ln sum_t p1^lambda p2^(1-lambda):
// the symmetric Bayesian discrimination exponent of the two laws.
double chernoff_information(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2);
double chernoff_information(const HitTimePmf& pmf1, const HitTimePmf& pmf2);

// nu(q, pi) = kl / (pi e1 + (1-pi) e2): discrimination power per expected
// unit of observation time (the error-exponent objective of the query graph).
double efficiency_ratio(const QueryStats& stats, double pi);

// Selection score of the querying policies: the symmetric Chernoff
// discrimination per expected unit of time at the current belief.
double chernoff_efficiency(const QueryStats& stats, double pi);

// Posterior of Omega = 1 after observing likelihoods (l1, l2) from belief pi,
// clamped to [1e-12, 1 - 1e-12]. Throws BothLikelihoodsZero on l1 = l2 = 0.
double bayes_update(double pi, double l1, double l2);

// Reweights a uniform-prior posterior p_eq to the actual prior s:
// s / (s + (1-s)(1/p_eq - 1)). p_eq is clamped away from {0,1} first.
double general_prior_posterior(double p_eq, double s);

enum class Decision { Declare1, Declare2, Continue };

// Declare1 iff pi > 1 - eps_t, Declare2 iff pi < eps_t.
Decision decide(double pi, double eps_t);

/// What the engine needs from an inference backend: a stats table for query
/// selection and a posterior update for observed hit times. Implemented by
/// the exact DP tables and by the trace-trained histogram estimators.
class HitModel {
  public:
    virtual ~HitModel() = default;

    // Candidate query stats (lexicographic by pattern) conditional on the last
    // emitted symbols; empty context means the stationary start.
    virtual std::span<const QueryStats> stats_table(std::span<const Symbol> context) const = 0;

    // Belief update after observing delta_t for query q in the given context.
    virtual double posterior(double pi, const QueryPattern& q, std::span<const Symbol> context,
                             long delta_t) const = 0;

    // Belief update for a censored search: the budget ran out after `elapsed`
    // symbols with no hit, so the likelihoods are the survivors P_i(DeltaT > elapsed).
    virtual double censored_posterior(double pi, const QueryPattern& q,
                                      std::span<const Symbol> context, long elapsed) const = 0;

    // Index (into stats_table) of the query the greedy policies send next.
    // With a finite budget the score is the Chernoff discrimination of the
    // censored observable min(DeltaT, budget) per expected consumed symbol;
    // budget < 0 is the unconstrained rate of chernoff_efficiency.
    virtual size_t select_query(std::span<const Symbol> context, double pi, long budget) const;
};

} // namespace qh
