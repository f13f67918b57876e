#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

#include "qh/patterns.hpp"
#include "qh/sources.hpp"

namespace qh {

constexpr double kDefaultPmfEpsilon = 1e-6;
constexpr long kPmfGrowthCap = 1L << 22;

/// Truncated, normalized law of the inter-arrival time DeltaT of one query
/// under one hypothesis. probs[i] = P(DeltaT = i+1 | DeltaT <= t_max).
struct HitTimePmf {
    Eigen::VectorXd probs;
    long t_max = 0;
    double mass_captured = 0.0; // raw mass before normalization
    double epsilon = 0.0;
    // True when the source kernel is strictly positive, so every t >= m has
    // positive mass mathematically and a stored zero can only be underflow.
    bool full_support = false;

    double at(long t) const { // P(DeltaT = t), zero outside [1, t_max]
        return (t >= 1 && t <= t_max) ? probs[t - 1] : 0.0;
    }
    double mean() const;
};

// Normalizes a raw partial PMF; throws InsufficientMass when the captured
// mass is below 1 - epsilon.
HitTimePmf truncate_and_normalize(std::span<const double> raw, double epsilon);

/// Incremental dynamic program over (matched-prefix length, source context).
/// extend() appends raw first-occurrence probabilities; total DP mass plus
/// emitted mass stays 1 to rounding at every step.
class HitTimeDp {
  public:
    // IID source with the given symbol law.
    HitTimeDp(const QueryPattern& pattern, const Eigen::VectorXd& symbol_probs);
    // Markov source; empty start_context means the stationary context law
    // (the stream has been running forever), otherwise the search begins right
    // after the given concrete symbols.
    HitTimeDp(const QueryPattern& pattern, const SourceModel& model,
              std::span<const Symbol> start_context);

    void extend(long target_t);
    double mass() const { return mass_; }
    const std::vector<double>& raw() const { return pmf_; }
    double state_mass() const; // mass still waiting for a first occurrence
    bool full_support() const { return full_support_; }

  private:
    void init_tables(const QueryPattern& pattern, const Eigen::MatrixXd& kernel);
    void check_reachable(std::span<const Symbol> q);

    int m_ = 0;
    int z_ = 0;
    int n_ctx_ = 1;
    Eigen::MatrixXd kernel_;       // n_ctx x |Z|
    std::vector<int> kmp_next_;    // m x |Z| -> next matched length
    std::vector<double> dp_, dp_scratch_; // (k, ctx) row-major, k in [0, m)
    std::vector<double> pmf_;
    std::vector<int> start_ctxs_;  // contexts with positive initial mass
    double mass_ = 0.0;
    bool full_support_ = false;
};

// Grows t_max by doubling from 4m until mass >= 1 - epsilon, then normalizes.
// Throws PatternImpossible when the pattern has probability zero under the
// source and InsufficientMass when the growth cap is reached first.
HitTimePmf hit_time_pmf_iid(const QueryPattern& pattern, const Eigen::VectorXd& symbol_probs,
                            double epsilon = kDefaultPmfEpsilon);

HitTimePmf hit_time_pmf_markov(const QueryPattern& pattern, const SourceModel& model,
                               std::span<const Symbol> start_context,
                               double epsilon = kDefaultPmfEpsilon);

// Dispatch on the model kind (trace models have no parametric PMF).
HitTimePmf hit_time_pmf(const QueryPattern& pattern, const SourceModel& model,
                        std::span<const Symbol> start_context,
                        double epsilon = kDefaultPmfEpsilon);

// PMFs of the same query under two hypotheses, truncated at a shared t_max so
// that KL divergences are well defined on the common support.
std::pair<HitTimePmf, HitTimePmf> hit_time_pmf_pair(const QueryPattern& pattern,
                                                    const SourceModel& p1,
                                                    const SourceModel& p2,
                                                    std::span<const Symbol> start_context,
                                                    double epsilon = kDefaultPmfEpsilon);

} // namespace qh
