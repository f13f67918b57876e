#include "qh/hitpmf.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

namespace qh {

namespace {

void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 0.5))
        throw ConfigError("pmf epsilon must lie in (0, 0.5)");
}

int kmp_transition(std::span<const Symbol> q, std::span<const int> failure, int matched, Symbol s) {
    int k = matched;
    while (k > 0 && q[static_cast<size_t>(k)] != s) k = failure[static_cast<size_t>(k - 1)];
    if (q[static_cast<size_t>(k)] == s) ++k;
    return k;
}

} // namespace

double HitTimePmf::mean() const {
    double e = 0.0;
    for (long t = 1; t <= t_max; ++t) e += static_cast<double>(t) * probs[t - 1];
    return e;
}

HitTimePmf truncate_and_normalize(std::span<const double> raw, double epsilon) {
    check_epsilon(epsilon);
    double mass = 0.0;
    for (double v : raw) mass += v;
    if (mass < 1.0 - epsilon)
        throw InsufficientMass("raw PMF captured mass " + std::to_string(mass) +
                               " < 1 - epsilon");
    HitTimePmf pmf;
    pmf.t_max = static_cast<long>(raw.size());
    pmf.probs = Eigen::Map<const Eigen::VectorXd>(raw.data(), pmf.t_max) / mass;
    pmf.mass_captured = mass;
    pmf.epsilon = epsilon;
    return pmf;
}

HitTimeDp::HitTimeDp(const QueryPattern& pattern, const Eigen::VectorXd& symbol_probs) {
    m_ = pattern.length();
    z_ = static_cast<int>(symbol_probs.size());
    n_ctx_ = 1;
    kernel_ = symbol_probs.transpose();
    for (Symbol s : pattern.symbols)
        if (s >= z_ || symbol_probs[s] == 0.0)
            throw PatternImpossible("pattern uses a zero-probability symbol");
    full_support_ = (symbol_probs.array() > 0.0).all();
    init_tables(pattern, kernel_);
    dp_.assign(static_cast<size_t>(m_), 0.0);
    dp_[0] = 1.0;
    dp_scratch_ = dp_;
    start_ctxs_ = {0};
}

HitTimeDp::HitTimeDp(const QueryPattern& pattern, const SourceModel& model,
                     std::span<const Symbol> start_context) {
    if (model.kind == SourceKind::Iid) {
        *this = HitTimeDp(pattern, model.iid_probs);
        return;
    }
    if (model.kind != SourceKind::Markov)
        throw ConfigError("HitTimeDp: trace sources have no parametric PMF");
    if (model.markov_order > pattern.length())
        throw ConfigError("HitTimeDp: Markov order must not exceed the pattern length");

    m_ = pattern.length();
    z_ = model.alphabet;
    n_ctx_ = model.context_count();
    kernel_ = model.kernel;
    full_support_ = (kernel_.array() > 0.0).all();
    init_tables(pattern, kernel_);

    dp_.assign(static_cast<size_t>(m_) * n_ctx_, 0.0);
    if (start_context.empty()) {
        Eigen::VectorXd stat = stationary_context_distribution(model);
        for (int c = 0; c < n_ctx_; ++c) {
            if (stat[c] > 0.0) {
                dp_[static_cast<size_t>(c)] = stat[c];
                start_ctxs_.push_back(c);
            }
        }
    } else {
        if (static_cast<int>(start_context.size()) < model.markov_order)
            throw ConfigError("HitTimeDp: start context shorter than the Markov order");
        int ctx = encode_context(start_context.last(model.markov_order), z_);
        dp_[static_cast<size_t>(ctx)] = 1.0;
        start_ctxs_ = {ctx};
    }
    dp_scratch_ = dp_;
    check_reachable(pattern.symbols);
}

void HitTimeDp::init_tables(const QueryPattern& pattern, const Eigen::MatrixXd&) {
    kmp_next_.assign(static_cast<size_t>(m_) * z_, 0);
    for (int k = 0; k < m_; ++k)
        for (Symbol s = 0; s < z_; ++s)
            kmp_next_[static_cast<size_t>(k) * z_ + s] =
                kmp_transition(pattern.symbols, pattern.failure, k, s);
}

void HitTimeDp::check_reachable(std::span<const Symbol> q) {
    // A context can realize the pattern if walking the pattern from it never
    // crosses a zero-probability transition.
    auto feasible = [&](int ctx) {
        for (Symbol s : q) {
            if (kernel_(ctx, s) == 0.0) return false;
            ctx = shift_context(ctx, s, z_, n_ctx_);
        }
        return true;
    };
    std::vector<char> seen(static_cast<size_t>(n_ctx_), 0);
    std::deque<int> frontier;
    for (int c : start_ctxs_) {
        seen[static_cast<size_t>(c)] = 1;
        frontier.push_back(c);
    }
    while (!frontier.empty()) {
        int c = frontier.front();
        frontier.pop_front();
        if (feasible(c)) return;
        for (Symbol s = 0; s < z_; ++s) {
            if (kernel_(c, s) == 0.0) continue;
            int c2 = shift_context(c, s, z_, n_ctx_);
            if (!seen[static_cast<size_t>(c2)]) {
                seen[static_cast<size_t>(c2)] = 1;
                frontier.push_back(c2);
            }
        }
    }
    throw PatternImpossible("pattern unreachable under the source kernel");
}

double HitTimeDp::state_mass() const {
    return std::accumulate(dp_.begin(), dp_.end(), 0.0);
}

void HitTimeDp::extend(long target_t) {
    const long from = static_cast<long>(pmf_.size());
    if (target_t <= from) return;
    pmf_.resize(static_cast<size_t>(target_t), 0.0);
    if (state_mass() == 0.0) return; // everything already hit

    for (long t = from + 1; t <= target_t; ++t) {
        std::fill(dp_scratch_.begin(), dp_scratch_.end(), 0.0);
        double hit = 0.0;
        for (int k = 0; k < m_; ++k) {
            for (int c = 0; c < n_ctx_; ++c) {
                const double mass = dp_[static_cast<size_t>(k) * n_ctx_ + c];
                if (mass == 0.0) continue;
                for (Symbol s = 0; s < z_; ++s) {
                    const double p = kernel_(c, s);
                    if (p == 0.0) continue;
                    const int k2 = kmp_next_[static_cast<size_t>(k) * z_ + s];
                    if (k2 == m_) {
                        hit += mass * p;
                    } else {
                        const int c2 = shift_context(c, s, z_, n_ctx_);
                        dp_scratch_[static_cast<size_t>(k2) * n_ctx_ + c2] += mass * p;
                    }
                }
            }
        }
        pmf_[static_cast<size_t>(t - 1)] = hit;
        mass_ += hit;
        dp_.swap(dp_scratch_);
    }
}

namespace {

HitTimePmf grow_until_captured(HitTimeDp& dp, int m, double epsilon) {
    long t = std::max<long>(4L * m, 8);
    while (true) {
        dp.extend(t);
        if (dp.mass() >= 1.0 - epsilon) break;
        if (t >= kPmfGrowthCap)
            throw InsufficientMass("PMF growth cap reached at mass " +
                                   std::to_string(dp.mass()));
        t *= 2;
    }
    HitTimePmf pmf = truncate_and_normalize(dp.raw(), epsilon);
    pmf.full_support = dp.full_support();
    return pmf;
}

} // namespace

HitTimePmf hit_time_pmf_iid(const QueryPattern& pattern, const Eigen::VectorXd& symbol_probs,
                            double epsilon) {
    check_epsilon(epsilon);
    HitTimeDp dp(pattern, symbol_probs);
    return grow_until_captured(dp, pattern.length(), epsilon);
}

HitTimePmf hit_time_pmf_markov(const QueryPattern& pattern, const SourceModel& model,
                               std::span<const Symbol> start_context, double epsilon) {
    check_epsilon(epsilon);
    HitTimeDp dp(pattern, model, start_context);
    return grow_until_captured(dp, pattern.length(), epsilon);
}

HitTimePmf hit_time_pmf(const QueryPattern& pattern, const SourceModel& model,
                        std::span<const Symbol> start_context, double epsilon) {
    if (model.kind == SourceKind::Iid) return hit_time_pmf_iid(pattern, model.iid_probs, epsilon);
    return hit_time_pmf_markov(pattern, model, start_context, epsilon);
}

std::pair<HitTimePmf, HitTimePmf> hit_time_pmf_pair(const QueryPattern& pattern,
                                                    const SourceModel& p1, const SourceModel& p2,
                                                    std::span<const Symbol> start_context,
                                                    double epsilon) {
    check_epsilon(epsilon);
    HitTimeDp dp1(pattern, p1, start_context);
    HitTimeDp dp2(pattern, p2, start_context);
    long t = std::max<long>(4L * pattern.length(), 8);
    while (true) {
        dp1.extend(t);
        dp2.extend(t);
        if (dp1.mass() >= 1.0 - epsilon && dp2.mass() >= 1.0 - epsilon) break;
        if (t >= kPmfGrowthCap)
            throw InsufficientMass("paired PMF growth cap reached");
        t *= 2;
    }
    HitTimePmf f1 = truncate_and_normalize(dp1.raw(), epsilon);
    HitTimePmf f2 = truncate_and_normalize(dp2.raw(), epsilon);
    f1.full_support = dp1.full_support();
    f2.full_support = dp2.full_support();
    return {std::move(f1), std::move(f2)};
}

} // namespace qh
