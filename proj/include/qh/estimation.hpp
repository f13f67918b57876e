#pragma once

#include <span>
#include <vector>

#include "qh/inference.hpp"

namespace qh {

/// A finite symbol sequence drawn from one hypothesis, used to train the
/// histogram estimators (what the paper feeds its MINE/MLP).
struct TrainingTrace {
    std::vector<Symbol> symbols;
    int label = 1; // 1 or 2
};

struct HitTimeSample {
    std::vector<long> delta_ts; // uncensored hit times
    long attempts = 0;
    long censored = 0;
    double censor_rate() const {
        return attempts == 0 ? 0.0 : static_cast<double>(censored) / attempts;
    }
};

// Hit times from uniformly random start offsets; censored starts are dropped
// and resampled up to a retry cap. Throws InsufficientTrace when fewer than
// half the starts hit or the cap is reached first.
HitTimeSample sample_hit_times_detail(std::span<const Symbol> trace, const QueryPattern& pattern,
                                      int n_samples, Rng& rng);
std::vector<long> sample_hit_times(std::span<const Symbol> trace, const QueryPattern& pattern,
                                   int n_samples, Rng& rng);

/// Laplace-smoothed hit-time histogram on integer bins [lo, cutoff] plus one
/// overflow bin for everything past the cutoff.
struct SmoothedHistogram {
    long lo = 1;
    long cutoff = 1;       // last regular bin
    Eigen::VectorXd probs; // cutoff - lo + 2 bins, overflow last

    double at(long delta_t) const;
    double survival(long elapsed) const; // P(DeltaT > elapsed)
};

SmoothedHistogram build_histogram(std::span<const long> samples, long lo, long cutoff,
                                  double smoothing);

/// Trace-trained estimator backend: per (pattern, hypothesis) smoothed
/// histograms of sampled hit times and empirical means, exposed through the
/// same interface as the exact tables (the role MINE + MLP play in the paper's
/// adaptive algorithm). Context is ignored: the training data carries no
/// conditional structure.
class EmpiricalHitModel : public HitModel {
  public:
    struct Options {
        int n_samples = 10000;
        double smoothing = 0.1;
        double overflow_quantile = 0.995; // pooled cutoff for the overflow bin
    };

    struct PatternModel {
        QueryStats stats;
        SmoothedHistogram h1, h2;
        double censor_rate1 = 0.0, censor_rate2 = 0.0;
        long n1 = 0, n2 = 0;
    };

    EmpiricalHitModel(const TrainingTrace& t1, const TrainingTrace& t2,
                      std::span<const QueryPattern> query_set, const Options& opts, Rng& rng);

    // Direct construction from per-pattern models (e.g. exact PMFs rendered as
    // histograms with zero smoothing) so other estimators can slot in.
    explicit EmpiricalHitModel(std::vector<PatternModel> models);

    std::span<const QueryStats> stats_table(std::span<const Symbol> context) const override;
    double posterior(double pi, const QueryPattern& q, std::span<const Symbol> context,
                     long delta_t) const override;
    double censored_posterior(double pi, const QueryPattern& q, std::span<const Symbol> context,
                              long elapsed) const override;
    size_t select_query(std::span<const Symbol> context, double pi, long budget) const override;

    const PatternModel& pattern_model(const QueryPattern& q) const;
    const std::vector<QueryPattern>& skipped() const { return skipped_; }

  private:
    std::vector<PatternModel> models_;
    std::vector<QueryStats> stats_;
    std::vector<QueryPattern> skipped_; // patterns whose sampling failed
};

// Plug-in KL of the smoothed histograms, in nats.
double estimate_kl(const EmpiricalHitModel& model, const QueryPattern& pattern);

// Empirical mean of the uncensored hit-time samples under one hypothesis.
double estimate_expected_hit_time(const EmpiricalHitModel& model, const QueryPattern& pattern,
                                  int hypothesis);

// Uniform-prior posterior p_eq = h1(dt) / (h1(dt) + h2(dt)); combine with
// general_prior_posterior for the belief update.
double posterior_from_histograms(const EmpiricalHitModel& model, const QueryPattern& pattern,
                                 long delta_t);

} // namespace qh
