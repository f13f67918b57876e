#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

#include "qh/errors.hpp"
#include "qh/random.hpp"

namespace qh {

// Index into the shared alphabet {0, ..., |Z|-1}.
using Symbol = int;

enum class SourceKind { Iid, Markov, Trace };

/// Generative model for one symbol stream. Immutable once built; cursors
/// carry the mutable per-run state.
struct SourceModel {
    SourceKind kind = SourceKind::Iid;
    int alphabet = 0; // |Z| >= 2

    // Iid: law of each symbol.
    Eigen::VectorXd iid_probs;

    // Markov: order-l chain. kernel(c, s) = P(next = s | last l symbols encode to c),
    // initial is the law of the hidden context preceding the stream.
    int markov_order = 0;
    Eigen::MatrixXd kernel;
    Eigen::VectorXd initial;

    // Trace: fixed replayed sequence, no wrap-around.
    std::vector<Symbol> trace;

    int context_count() const;
};

SourceModel make_iid(const Eigen::VectorXd& probs);

SourceModel make_markov(const Eigen::MatrixXd& kernel, int order,
                        std::optional<Eigen::VectorXd> initial = std::nullopt);

// Binary symmetric chain of the persistent family: stay-probability
// 1/2 + (0.4 + 0.1 p) = 0.9 + 0.1 p, uniform initial distribution.
SourceModel make_markov_persistent(double p);

// alphabet = 0 infers max(symbol)+1 (at least 2).
SourceModel make_trace(std::vector<Symbol> symbols, int alphabet = 0);

// Stationary law of the length-l context chain (lazy power iteration; for the
// symmetric persistent family this is uniform). Iid models return iid_probs.
Eigen::VectorXd stationary_context_distribution(const SourceModel& model);

// Contexts encode the last l symbols with the most recent in the lowest digit.
int encode_context(std::span<const Symbol> ctx, int alphabet);
inline int shift_context(int ctx, Symbol s, int alphabet, int n_ctx) {
    return (ctx * alphabet + s) % n_ctx;
}

struct HypothesisPair {
    SourceModel p1;
    SourceModel p2;
    double prior = 0.5; // pi_0 = P_Omega(1), Bob's initial belief
};

HypothesisPair make_hypothesis_pair(SourceModel p1, SourceModel p2, double prior);

// Returns 1 with probability prior, else 2.
int draw_switch(double prior, Rng& rng);

/// Single-owner streaming access to one realization. Alice never looks
/// backward: there is no way to re-read an emitted symbol.
class StreamCursor {
  public:
    // Markov cursors draw their hidden initial context from model.initial.
    StreamCursor(const SourceModel& model, Rng& rng);
    // Pins the initial context (Markov) — used when a search continues right
    // after a known window, e.g. the suffix of the previous query.
    StreamCursor(const SourceModel& model, std::span<const Symbol> start_context);
    // Trace cursor starting at an offset into the trace.
    StreamCursor(const SourceModel& model, long trace_offset);

    Symbol next(Rng& rng); // throws TraceExhausted
    bool has_next() const;
    long position() const { return t_; } // symbols emitted so far
    int context() const { return ctx_; }

  private:
    const SourceModel* model_;
    long t_ = 0;
    int ctx_ = 0;      // Markov
    long cursor_ = 0;  // Trace
};

inline Symbol next_symbol(StreamCursor& cursor, Rng& rng) { return cursor.next(rng); }

} // namespace qh
