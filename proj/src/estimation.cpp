#include "qh/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qh {

HitTimeSample sample_hit_times_detail(std::span<const Symbol> trace, const QueryPattern& pattern,
                                      int n_samples, Rng& rng) {
    if (n_samples < 1) throw ConfigError("sample_hit_times: n_samples must be >= 1");
    if (static_cast<long>(trace.size()) < pattern.length() + 1)
        throw InsufficientTrace("trace shorter than pattern length + 1");
    const long cap = std::max<long>(4L * n_samples, 64);
    std::uniform_int_distribution<long> start(0, static_cast<long>(trace.size()) - 1);
    HitTimeSample out;
    out.delta_ts.reserve(static_cast<size_t>(n_samples));
    while (static_cast<int>(out.delta_ts.size()) < n_samples && out.attempts < cap) {
        ++out.attempts;
        const long dt = scan_hit(trace, start(rng), pattern);
        if (dt < 0)
            ++out.censored;
        else
            out.delta_ts.push_back(dt);
    }
    if (static_cast<int>(out.delta_ts.size()) < n_samples)
        throw InsufficientTrace("retry cap reached for pattern " + pattern.str());
    if (2 * out.censored > out.attempts)
        throw InsufficientTrace("more than half of the starts censored for " + pattern.str());
    return out;
}

std::vector<long> sample_hit_times(std::span<const Symbol> trace, const QueryPattern& pattern,
                                   int n_samples, Rng& rng) {
    return sample_hit_times_detail(trace, pattern, n_samples, rng).delta_ts;
}

double SmoothedHistogram::at(long delta_t) const {
    if (delta_t < lo) throw ConfigError("histogram lookup below the support");
    const long idx = std::min(delta_t - lo, static_cast<long>(probs.size()) - 1);
    return probs[idx];
}

double SmoothedHistogram::survival(long elapsed) const {
    if (elapsed < lo) return 1.0;
    double s = probs[probs.size() - 1]; // overflow bin holds everything past the cutoff
    for (long dt = elapsed + 1; dt <= cutoff; ++dt) s += probs[dt - lo];
    return s;
}

SmoothedHistogram build_histogram(std::span<const long> samples, long lo, long cutoff,
                                  double smoothing) {
    if (cutoff < lo) throw ConfigError("build_histogram: cutoff below lo");
    SmoothedHistogram h;
    h.lo = lo;
    h.cutoff = cutoff;
    const long bins = cutoff - lo + 2; // regular bins + overflow
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(bins);
    for (long dt : samples) {
        if (dt < lo) throw ConfigError("build_histogram: sample below lo");
        counts[std::min(dt - lo, bins - 1)] += 1.0;
    }
    const double total = static_cast<double>(samples.size()) + smoothing * bins;
    h.probs = (counts.array() + smoothing) / total;
    return h;
}

namespace {

long nearest_rank_quantile(std::vector<long> pooled, double q) {
    std::sort(pooled.begin(), pooled.end());
    const size_t rank = static_cast<size_t>(
        std::ceil(q * static_cast<double>(pooled.size())));
    return pooled[std::min(pooled.size() - 1, std::max<size_t>(rank, 1) - 1)];
}

double mean_of(std::span<const long> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double histogram_kl(const SmoothedHistogram& h1, const SmoothedHistogram& h2) {
    if (h1.probs.size() != h2.probs.size() || h1.lo != h2.lo)
        throw ConfigError("histogram KL needs a common binning");
    double kl = 0.0;
    for (Eigen::Index i = 0; i < h1.probs.size(); ++i) {
        const double p = h1.probs[i];
        if (p == 0.0) continue;
        const double q = h2.probs[i];
        if (q == 0.0)
            throw AbsoluteContinuityViolation("histogram KL: zero bin without smoothing");
        kl += p * std::log(p / q);
    }
    return kl < 0.0 ? 0.0 : kl;
}

} // namespace

EmpiricalHitModel::EmpiricalHitModel(const TrainingTrace& t1, const TrainingTrace& t2,
                                     std::span<const QueryPattern> query_set,
                                     const Options& opts, Rng& rng) {
    if (t1.label == t2.label) throw ConfigError("training traces must carry distinct labels");
    const TrainingTrace& a = t1.label == 1 ? t1 : t2;
    const TrainingTrace& b = t1.label == 1 ? t2 : t1;
    for (const QueryPattern& q : query_set) {
        HitTimeSample s1, s2;
        try {
            s1 = sample_hit_times_detail(a.symbols, q, opts.n_samples, rng);
            s2 = sample_hit_times_detail(b.symbols, q, opts.n_samples, rng);
        } catch (const InsufficientTrace&) {
            skipped_.push_back(q);
            continue;
        }
        std::vector<long> pooled = s1.delta_ts;
        pooled.insert(pooled.end(), s2.delta_ts.begin(), s2.delta_ts.end());
        const long lo = q.length();
        const long cutoff = std::max(nearest_rank_quantile(pooled, opts.overflow_quantile), lo);

        PatternModel pm;
        pm.h1 = build_histogram(s1.delta_ts, lo, cutoff, opts.smoothing);
        pm.h2 = build_histogram(s2.delta_ts, lo, cutoff, opts.smoothing);
        pm.censor_rate1 = s1.censor_rate();
        pm.censor_rate2 = s2.censor_rate();
        pm.n1 = static_cast<long>(s1.delta_ts.size());
        pm.n2 = static_cast<long>(s2.delta_ts.size());
        pm.stats = QueryStats{q, histogram_kl(pm.h1, pm.h2),
                              chernoff_information(pm.h1.probs, pm.h2.probs),
                              mean_of(s1.delta_ts), mean_of(s2.delta_ts)};
        models_.push_back(std::move(pm));
    }
    if (models_.empty()) throw EmptyCandidateSet("no pattern could be sampled from the traces");
    for (const auto& pm : models_) stats_.push_back(pm.stats);
}

EmpiricalHitModel::EmpiricalHitModel(std::vector<PatternModel> models)
    : models_(std::move(models)) {
    if (models_.empty()) throw EmptyCandidateSet("empty estimator model");
    for (auto& pm : models_) {
        pm.stats.kl = histogram_kl(pm.h1, pm.h2);
        pm.stats.chernoff = chernoff_information(pm.h1.probs, pm.h2.probs);
        stats_.push_back(pm.stats);
    }
}

std::span<const QueryStats> EmpiricalHitModel::stats_table(std::span<const Symbol>) const {
    return stats_;
}

const EmpiricalHitModel::PatternModel&
EmpiricalHitModel::pattern_model(const QueryPattern& q) const {
    for (const auto& pm : models_)
        if (pm.stats.pattern == q) return pm;
    throw ConfigError("pattern " + q.str() + " not in the estimator model");
}

double EmpiricalHitModel::posterior(double pi, const QueryPattern& q, std::span<const Symbol>,
                                    long delta_t) const {
    return general_prior_posterior(posterior_from_histograms(*this, q, delta_t), pi);
}

double EmpiricalHitModel::censored_posterior(double pi, const QueryPattern& q,
                                             std::span<const Symbol>, long elapsed) const {
    const auto& pm = pattern_model(q);
    const double s1 = pm.h1.survival(elapsed);
    const double s2 = pm.h2.survival(elapsed);
    return general_prior_posterior(s1 / (s1 + s2), pi);
}

size_t EmpiricalHitModel::select_query(std::span<const Symbol> context, double pi,
                                       long budget) const {
    if (budget < 0) return HitModel::select_query(context, pi, budget);
    size_t best = 0;
    double best_score = -1.0;
    for (size_t i = 0; i < models_.size(); ++i) {
        const PatternModel& pm = models_[i];
        const long head = std::max<long>(std::min(budget, pm.h1.cutoff) - pm.h1.lo + 1, 0);
        Eigen::VectorXd p1(head + 1), p2(head + 1);
        double cost1 = 0.0, cost2 = 0.0;
        for (long k = 0; k < head; ++k) {
            const long dt = pm.h1.lo + k;
            p1[k] = pm.h1.probs[k];
            p2[k] = pm.h2.probs[k];
            cost1 += dt * p1[k];
            cost2 += dt * p2[k];
        }
        p1[head] = pm.h1.survival(budget);
        p2[head] = pm.h2.survival(budget);
        cost1 += budget * p1[head];
        cost2 += budget * p2[head];
        const double denom = pi * cost1 + (1.0 - pi) * cost2;
        if (!(denom > 0.0)) continue;
        const double score = chernoff_information(p1, p2) / denom;
        if (score > best_score) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

double estimate_kl(const EmpiricalHitModel& model, const QueryPattern& pattern) {
    return model.pattern_model(pattern).stats.kl;
}

double estimate_expected_hit_time(const EmpiricalHitModel& model, const QueryPattern& pattern,
                                  int hypothesis) {
    const auto& pm = model.pattern_model(pattern);
    if (hypothesis == 1) return pm.stats.e1;
    if (hypothesis == 2) return pm.stats.e2;
    throw ConfigError("hypothesis must be 1 or 2");
}

double posterior_from_histograms(const EmpiricalHitModel& model, const QueryPattern& pattern,
                                 long delta_t) {
    const auto& pm = model.pattern_model(pattern);
    const double l1 = pm.h1.at(delta_t);
    const double l2 = pm.h2.at(delta_t);
    if (l1 + l2 == 0.0) throw BothLikelihoodsZero("posterior_from_histograms: empty bins");
    return l1 / (l1 + l2);
}

} // namespace qh
