#include "qh/exact_model.hpp"

#include <algorithm>
#include <cmath>

namespace qh {

namespace {

constexpr double kLikelihoodFloor = 1e-300;

int source_order(const SourceModel& m) {
    switch (m.kind) {
    case SourceKind::Iid:
        return 0;
    case SourceKind::Markov:
        return m.markov_order;
    default:
        throw ConfigError("exact tables need parametric (IID/Markov) sources");
    }
}

// surv[n] = P(DeltaT > n) for n = 0..keep, summed backwards so small
// survivors stay accurate.
Eigen::VectorXd survivors(const Eigen::VectorXd& probs, long keep) {
    Eigen::VectorXd surv(keep + 1);
    double acc = 0.0;
    for (long t = probs.size() - 1; t >= keep; --t) acc += probs[t];
    surv[keep] = acc;
    for (long n = keep - 1; n >= 0; --n) {
        acc += probs[n];
        surv[n] = acc;
    }
    return surv;
}

} // namespace

ExactHitModel::ExactHitModel(HypothesisPair pair, int m, Options opts)
    : pair_(std::move(pair)), m_(m), opts_(opts) {
    order_ = std::max(source_order(pair_.p1), source_order(pair_.p2));
    if (order_ > m_)
        throw ConfigError("Markov order exceeds the query length");
    query_set_ = make_query_set(pair_.p1.alphabet, m_);

    int n_ctx_slots = 1;
    if (order_ > 0) {
        n_ctx_slots = 1;
        for (int i = 0; i < order_; ++i) n_ctx_slots *= pair_.p1.alphabet;
        n_ctx_slots += 1;
    }
    entries_.resize(static_cast<size_t>(n_ctx_slots));

    const long horizon = opts_.likelihood_horizon;
    std::vector<Symbol> ctx_syms;
    for (int slot = 0; slot < n_ctx_slots; ++slot) {
        ctx_syms.clear();
        if (slot > 0) {
            // Decode the slot back into its length-order symbol context.
            int code = slot - 1;
            ctx_syms.assign(static_cast<size_t>(order_), 0);
            for (int i = order_ - 1; i >= 0; --i) {
                ctx_syms[static_cast<size_t>(i)] = code % pair_.p1.alphabet;
                code /= pair_.p1.alphabet;
            }
        }
        auto& row = entries_[static_cast<size_t>(slot)];
        row.resize(query_set_.size());
        for (size_t qi = 0; qi < query_set_.size(); ++qi) {
            Entry& e = row[qi];
            const QueryPattern& q = query_set_[qi];
            try {
                auto [pmf1, pmf2] = hit_time_pmf_pair(q, pair_.p1, pair_.p2, ctx_syms,
                                                      opts_.epsilon);
                e.valid1 = e.valid2 = true;
                e.stats = QueryStats{q, kl_divergence(pmf1, pmf2),
                                     chernoff_information(pmf1, pmf2), pmf1.mean(),
                                     pmf2.mean()};
                e.t_max = pmf1.t_max;
                e.tail1 = std::max(1.0 - pmf1.mass_captured, 0.0);
                e.tail2 = std::max(1.0 - pmf2.mass_captured, 0.0);
                const long keep = horizon < 0 ? e.t_max : std::min(horizon, e.t_max);
                e.like1 = pmf1.probs.head(keep);
                e.like2 = pmf2.probs.head(keep);
                e.surv1 = survivors(pmf1.probs, keep);
                e.surv2 = survivors(pmf2.probs, keep);
            } catch (const PatternImpossible&) {
                // One or both sides have no hit-time law; retry each side alone
                // so FixedQuery runs can still score the possible side.
                for (int hyp = 1; hyp <= 2; ++hyp) {
                    const SourceModel& src = hyp == 1 ? pair_.p1 : pair_.p2;
                    try {
                        HitTimePmf pmf = hit_time_pmf(q, src, ctx_syms, opts_.epsilon);
                        const long keep = horizon < 0 ? pmf.t_max : std::min(horizon, pmf.t_max);
                        if (hyp == 1) {
                            e.valid1 = true;
                            e.tail1 = std::max(1.0 - pmf.mass_captured, 0.0);
                            e.like1 = pmf.probs.head(keep);
                            e.surv1 = survivors(pmf.probs, keep);
                        } else {
                            e.valid2 = true;
                            e.tail2 = std::max(1.0 - pmf.mass_captured, 0.0);
                            e.like2 = pmf.probs.head(keep);
                            e.surv2 = survivors(pmf.probs, keep);
                        }
                        e.t_max = std::max(e.t_max, pmf.t_max);
                    } catch (const PatternImpossible&) {
                    }
                }
            }
        }
    }

    // Candidates must carry finite stats in every context slot.
    for (size_t qi = 0; qi < query_set_.size(); ++qi) {
        bool ok = true;
        for (const auto& row : entries_)
            ok = ok && row[qi].valid1 && row[qi].valid2;
        if (ok) candidates_.push_back(query_set_[qi]);
    }
    stats_.resize(entries_.size());
    for (size_t slot = 0; slot < entries_.size(); ++slot) {
        for (size_t qi = 0; qi < query_set_.size(); ++qi) {
            bool everywhere = true;
            for (const auto& row : entries_)
                everywhere = everywhere && row[qi].valid1 && row[qi].valid2;
            if (everywhere) stats_[slot].push_back(entries_[slot][qi].stats);
        }
    }
}

int ExactHitModel::slot_of(std::span<const Symbol> context) const {
    if (order_ == 0 || context.empty()) return 0;
    if (static_cast<int>(context.size()) < order_)
        throw ConfigError("context shorter than the Markov order");
    return 1 + encode_context(context.last(static_cast<size_t>(order_)), pair_.p1.alphabet);
}

std::span<const QueryStats> ExactHitModel::stats_table(std::span<const Symbol> context) const {
    return stats_[static_cast<size_t>(slot_of(context))];
}

const ExactHitModel::Entry& ExactHitModel::entry(std::span<const Symbol> context,
                                                 size_t pattern_index) const {
    return entries_[static_cast<size_t>(slot_of(context))].at(pattern_index);
}

size_t ExactHitModel::pattern_index(const QueryPattern& q) const {
    auto it = std::lower_bound(query_set_.begin(), query_set_.end(), q,
                               [](const QueryPattern& a, const QueryPattern& b) {
                                   return a.symbols < b.symbols;
                               });
    if (it == query_set_.end() || !(*it == q))
        throw ConfigError("pattern " + q.str() + " not in the query set");
    return static_cast<size_t>(it - query_set_.begin());
}

double ExactHitModel::likelihood(int hypothesis, const QueryPattern& q,
                                 std::span<const Symbol> context, long delta_t) const {
    const Entry& e = entry(context, pattern_index(q));
    const bool valid = hypothesis == 1 ? e.valid1 : e.valid2;
    if (!valid) return 0.0;
    const Eigen::VectorXd& like = hypothesis == 1 ? e.like1 : e.like2;
    const double tail = hypothesis == 1 ? e.tail1 : e.tail2;
    if (delta_t < 1) throw ConfigError("likelihood: delta_t must be positive");
    if (delta_t <= like.size()) return like[delta_t - 1];
    if (delta_t <= e.t_max)
        throw ConfigError("likelihood: delta_t beyond the configured horizon");
    return std::max(tail, kLikelihoodFloor);
}

double ExactHitModel::survival(int hypothesis, const QueryPattern& q,
                               std::span<const Symbol> context, long elapsed) const {
    const Entry& e = entry(context, pattern_index(q));
    const bool valid = hypothesis == 1 ? e.valid1 : e.valid2;
    if (!valid) return 1.0; // an impossible pattern never hits
    const Eigen::VectorXd& surv = hypothesis == 1 ? e.surv1 : e.surv2;
    const double tail = hypothesis == 1 ? e.tail1 : e.tail2;
    if (elapsed < 0) throw ConfigError("survival: negative elapsed time");
    if (elapsed < surv.size()) return std::max(surv[elapsed], kLikelihoodFloor);
    if (elapsed < e.t_max) throw ConfigError("survival: elapsed beyond the configured horizon");
    return std::max(tail, kLikelihoodFloor);
}

double ExactHitModel::posterior(double pi, const QueryPattern& q,
                                std::span<const Symbol> context, long delta_t) const {
    const double l1 = likelihood(1, q, context, delta_t);
    const double l2 = likelihood(2, q, context, delta_t);
    if (l1 == 0.0 && l2 == 0.0)
        throw BothLikelihoodsZero("no hypothesis explains the observed hit time");
    return bayes_update(pi, l1, l2);
}

double ExactHitModel::censored_posterior(double pi, const QueryPattern& q,
                                         std::span<const Symbol> context, long elapsed) const {
    return bayes_update(pi, survival(1, q, context, elapsed),
                        survival(2, q, context, elapsed));
}

size_t ExactHitModel::select_query(std::span<const Symbol> context, double pi,
                                   long budget) const {
    if (budget < 0) return HitModel::select_query(context, pi, budget);
    const auto table = stats_table(context);
    if (table.empty()) throw EmptyCandidateSet("no admissible query patterns");
    const int slot = slot_of(context);
    size_t best = 0;
    double best_score = -1.0;
    for (size_t i = 0; i < table.size(); ++i) {
        const Entry& e = entries_[static_cast<size_t>(slot)][pattern_index(table[i].pattern)];
        const long head = std::min<long>(budget, e.like1.size());
        // Law of the censored observable min(DeltaT, budget): head terms plus
        // the survivor atom.
        Eigen::VectorXd p1(head + 1), p2(head + 1);
        p1.head(head) = e.like1.head(head);
        p2.head(head) = e.like2.head(head);
        p1[head] = e.surv1[std::min<long>(budget, e.surv1.size() - 1)];
        p2[head] = e.surv2[std::min<long>(budget, e.surv2.size() - 1)];
        double cost1 = budget * p1[head], cost2 = budget * p2[head];
        for (long t = 0; t < head; ++t) {
            cost1 += (t + 1) * p1[t];
            cost2 += (t + 1) * p2[t];
        }
        const double denom = pi * cost1 + (1.0 - pi) * cost2;
        const double score = chernoff_information(p1, p2) / denom;
        if (score > best_score) {
            best = i;
            best_score = score;
        }
    }
    return best;
}

} // namespace qh
