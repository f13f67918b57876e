#include "qh/inference.hpp"

#include <cmath>
#include <limits>

namespace qh {

double kl_divergence(const HitTimePmf& pmf1, const HitTimePmf& pmf2) {
    if (pmf1.t_max != pmf2.t_max)
        throw ConfigError("kl_divergence: PMFs not on a common index range");

    // For a full-support law a stored zero can only be underflow of its
    // asymptotically log-linear tail; extrapolate log q from the last decades
    // instead of reporting an absolute-continuity violation.
    long q_last = -1;
    double q_slope = 0.0;
    auto log_q = [&](long t) {
        if (q_last < 0) {
            q_last = pmf2.t_max - 1;
            while (q_last > 0 && pmf2.probs[q_last] == 0.0) --q_last;
            long w = std::min<long>(64, q_last);
            while (w > 0 && pmf2.probs[q_last - w] == 0.0) --w; // underflow interleaves zeros
            q_slope = w > 0 ? (std::log(pmf2.probs[q_last]) - std::log(pmf2.probs[q_last - w])) / w
                            : 0.0;
            if (!(q_slope < 0.0)) q_slope = 0.0;
        }
        return std::log(pmf2.probs[q_last]) + q_slope * static_cast<double>(t - q_last);
    };

    double kl = 0.0;
    for (long t = 0; t < pmf1.t_max; ++t) {
        const double p = pmf1.probs[t];
        if (p == 0.0) continue;
        const double q = pmf2.probs[t];
        if (q == 0.0) {
            if (!pmf2.full_support)
                throw AbsoluteContinuityViolation("p1 positive where p2 is zero at t=" +
                                                  std::to_string(t + 1));
            kl += p * (std::log(p) - log_q(t));
            continue;
        }
        // log-domain difference: p/q itself can overflow when q is subnormal
        kl += p * (std::log(p) - std::log(q));
    }
    return kl < 0.0 ? 0.0 : kl; // rounding could leave a tiny negative sum
}

double chernoff_information(const Eigen::VectorXd& p1, const Eigen::VectorXd& p2) {
    if (p1.size() != p2.size())
        throw ConfigError("chernoff_information: laws not on a common index range");
    if (p1 == p2) return 0.0;
    // Collect the shared support once; evaluate -ln sum exp(l ln p + (1-l) ln q)
    // by golden-section on the concave objective.
    Eigen::ArrayXd lp(p1.size()), lq(p1.size());
    Eigen::Index n = 0;
    for (Eigen::Index i = 0; i < p1.size(); ++i) {
        if (p1[i] > 0.0 && p2[i] > 0.0) {
            lp[n] = std::log(p1[i]);
            lq[n] = std::log(p2[i]);
            ++n;
        }
    }
    if (n == 0) return std::numeric_limits<double>::infinity(); // disjoint supports
    auto value = [&](double lambda) {
        const double s = (lambda * lp.head(n) + (1.0 - lambda) * lq.head(n)).exp().sum();
        return -std::log(s);
    };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.0, b = 1.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = value(x1), f2 = value(x2);
    for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = value(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = value(x1);
        }
    }
    const double c = std::max(f1, f2);
    return c < 0.0 ? 0.0 : c;
}

double chernoff_information(const HitTimePmf& pmf1, const HitTimePmf& pmf2) {
    if (pmf1.t_max != pmf2.t_max)
        throw ConfigError("chernoff_information: PMFs not on a common index range");
    return chernoff_information(pmf1.probs, pmf2.probs);
}

double efficiency_ratio(const QueryStats& stats, double pi) {
    const double denom = pi * stats.e1 + (1.0 - pi) * stats.e2;
    if (!(denom > 0.0)) throw ConfigError("efficiency_ratio: non-positive expected time");
    return stats.kl / denom;
}

double chernoff_efficiency(const QueryStats& stats, double pi) {
    const double denom = pi * stats.e1 + (1.0 - pi) * stats.e2;
    if (!(denom > 0.0)) throw ConfigError("chernoff_efficiency: non-positive expected time");
    return stats.chernoff / denom;
}

double bayes_update(double pi, double l1, double l2) {
    if (l1 < 0.0 || l2 < 0.0) throw ConfigError("bayes_update: negative likelihood");
    const double num = pi * l1;
    const double denom = num + (1.0 - pi) * l2;
    if (denom == 0.0) throw BothLikelihoodsZero("bayes_update: both likelihoods zero");
    return clamp_belief(num / denom);
}

double general_prior_posterior(double p_eq, double s) {
    p_eq = clamp_belief(p_eq);
    const double r = 1.0 / p_eq - 1.0;
    const double denom = s + (1.0 - s) * r;
    if (denom == 0.0) throw BothLikelihoodsZero("general_prior_posterior: degenerate input");
    return clamp_belief(s / denom);
}

size_t HitModel::select_query(std::span<const Symbol> context, double pi, long) const {
    const std::span<const QueryStats> table = stats_table(context);
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

Decision decide(double pi, double eps_t) {
    if (!(eps_t > 0.0 && eps_t < 0.5)) throw ConfigError("decide: eps_t must lie in (0, 0.5)");
    if (pi > 1.0 - eps_t) return Decision::Declare1;
    if (pi < eps_t) return Decision::Declare2;
    return Decision::Continue;
}

} // namespace qh
