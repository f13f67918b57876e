#include "qh/sources.hpp"

#include <algorithm>
#include <cmath>

namespace qh {

namespace {

constexpr double kProbSumTol = 1e-12;

void check_prob_vector(const Eigen::VectorXd& p, const char* what) {
    if (p.size() < 1) throw ConfigError(std::string(what) + ": empty probability vector");
    if ((p.array() < -0.0).any() || (p.array() > 1.0 + kProbSumTol).any())
        throw ConfigError(std::string(what) + ": entries outside [0,1]");
    if (std::abs(p.sum() - 1.0) > kProbSumTol)
        throw ConfigError(std::string(what) + ": probabilities do not sum to 1");
}

int ipow(int base, int exp) {
    int r = 1;
    while (exp-- > 0) r *= base;
    return r;
}

Symbol sample_from_row(const Eigen::VectorXd& probs, Rng& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double x = u(rng);
    double acc = 0.0;
    const int n = static_cast<int>(probs.size());
    for (int s = 0; s < n; ++s) {
        acc += probs[s];
        if (x < acc) return s;
    }
    // x landed in the rounding slack past the last cumulative step.
    for (int s = n - 1; s >= 0; --s)
        if (probs[s] > 0.0) return s;
    return n - 1;
}

} // namespace

int SourceModel::context_count() const {
    return kind == SourceKind::Markov ? ipow(alphabet, markov_order) : 1;
}

SourceModel make_iid(const Eigen::VectorXd& probs) {
    check_prob_vector(probs, "make_iid");
    if (probs.size() < 2) throw ConfigError("make_iid: alphabet must have at least 2 symbols");
    SourceModel m;
    m.kind = SourceKind::Iid;
    m.alphabet = static_cast<int>(probs.size());
    m.iid_probs = probs;
    return m;
}

SourceModel make_markov(const Eigen::MatrixXd& kernel, int order,
                        std::optional<Eigen::VectorXd> initial) {
    if (order < 1) throw ConfigError("make_markov: order must be >= 1");
    const int z = static_cast<int>(kernel.cols());
    if (z < 2) throw ConfigError("make_markov: alphabet must have at least 2 symbols");
    if (kernel.rows() != ipow(z, order))
        throw ConfigError("make_markov: kernel must have |Z|^order rows");
    for (Eigen::Index r = 0; r < kernel.rows(); ++r)
        check_prob_vector(kernel.row(r).transpose(), "make_markov kernel row");

    SourceModel m;
    m.kind = SourceKind::Markov;
    m.alphabet = z;
    m.markov_order = order;
    m.kernel = kernel;
    if (initial) {
        if (initial->size() != kernel.rows())
            throw ConfigError("make_markov: initial distribution size mismatch");
        check_prob_vector(*initial, "make_markov initial");
        m.initial = *initial;
    } else {
        m.initial = stationary_context_distribution(m);
    }
    return m;
}

SourceModel make_markov_persistent(double p) {
    if (!(p > 0.0) || p > 1.0)
        throw ConfigError("make_markov_persistent: p must be in (0,1]");
    const double stay = 0.5 + (0.4 + 0.1 * p);
    const double flip = 0.5 - (0.4 + 0.1 * p);
    if (stay < 0.0 || stay > 1.0)
        throw ConfigError("make_markov_persistent: stay-probability outside [0,1]");
    Eigen::MatrixXd kernel(2, 2);
    kernel << stay, flip, // from state 0
        flip, stay;       // from state 1
    return make_markov(kernel, 1, Eigen::VectorXd::Constant(2, 0.5));
}

SourceModel make_trace(std::vector<Symbol> symbols, int alphabet) {
    if (symbols.empty()) throw ConfigError("make_trace: empty trace");
    Symbol max_sym = *std::max_element(symbols.begin(), symbols.end());
    Symbol min_sym = *std::min_element(symbols.begin(), symbols.end());
    if (min_sym < 0) throw ConfigError("make_trace: negative symbol");
    if (alphabet == 0) alphabet = std::max(max_sym + 1, 2);
    if (max_sym >= alphabet) throw ConfigError("make_trace: symbol outside alphabet");
    SourceModel m;
    m.kind = SourceKind::Trace;
    m.alphabet = alphabet;
    m.trace = std::move(symbols);
    return m;
}

Eigen::VectorXd stationary_context_distribution(const SourceModel& model) {
    if (model.kind == SourceKind::Iid) return model.iid_probs;
    if (model.kind != SourceKind::Markov)
        throw ConfigError("stationary_context_distribution: needs a parametric model");
    const int n = model.context_count();
    const int z = model.alphabet;
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / n);
    // Lazy iteration v <- (v + vP)/2 removes periodicity; reducible kernels
    // settle on the component mix of the uniform start.
    for (int iter = 0; iter < 100000; ++iter) {
        Eigen::VectorXd next = Eigen::VectorXd::Zero(n);
        for (int c = 0; c < n; ++c) {
            if (v[c] == 0.0) continue;
            for (int s = 0; s < z; ++s) {
                double p = model.kernel(c, s);
                if (p > 0.0) next[shift_context(c, s, z, n)] += v[c] * p;
            }
        }
        next = 0.5 * (v + next);
        const double delta = (next - v).cwiseAbs().maxCoeff();
        v = next;
        if (delta < 1e-15) break;
    }
    v /= v.sum();
    return v;
}

int encode_context(std::span<const Symbol> ctx, int alphabet) {
    int code = 0;
    for (Symbol s : ctx) code = code * alphabet + s;
    return code;
}

HypothesisPair make_hypothesis_pair(SourceModel p1, SourceModel p2, double prior) {
    if (p1.alphabet != p2.alphabet)
        throw ConfigError("hypothesis pair: sources must share the alphabet");
    if (!(prior >= 0.0 && prior <= 1.0)) throw ConfigError("hypothesis pair: prior outside [0,1]");
    return HypothesisPair{std::move(p1), std::move(p2), prior};
}

int draw_switch(double prior, Rng& rng) {
    if (!(prior >= 0.0 && prior <= 1.0)) throw ConfigError("draw_switch: prior outside [0,1]");
    std::uniform_real_distribution<double> u(0.0, 1.0);
    return u(rng) < prior ? 1 : 2;
}

StreamCursor::StreamCursor(const SourceModel& model, Rng& rng) : model_(&model) {
    if (model.kind == SourceKind::Markov) ctx_ = sample_from_row(model.initial, rng);
}

StreamCursor::StreamCursor(const SourceModel& model, std::span<const Symbol> start_context)
    : model_(&model) {
    if (model.kind != SourceKind::Markov)
        throw ConfigError("StreamCursor: start context only applies to Markov models");
    if (static_cast<int>(start_context.size()) < model.markov_order)
        throw ConfigError("StreamCursor: start context shorter than the Markov order");
    ctx_ = encode_context(start_context.last(model.markov_order), model.alphabet);
}

StreamCursor::StreamCursor(const SourceModel& model, long trace_offset) : model_(&model) {
    if (model.kind != SourceKind::Trace)
        throw ConfigError("StreamCursor: offsets only apply to trace models");
    if (trace_offset < 0 || trace_offset > static_cast<long>(model.trace.size()))
        throw ConfigError("StreamCursor: offset outside the trace");
    cursor_ = trace_offset;
}

bool StreamCursor::has_next() const {
    if (model_->kind == SourceKind::Trace)
        return cursor_ < static_cast<long>(model_->trace.size());
    return true;
}

Symbol StreamCursor::next(Rng& rng) {
    Symbol s;
    switch (model_->kind) {
    case SourceKind::Iid:
        s = sample_from_row(model_->iid_probs, rng);
        break;
    case SourceKind::Markov:
        s = sample_from_row(model_->kernel.row(ctx_).transpose(), rng);
        ctx_ = shift_context(ctx_, s, model_->alphabet, model_->context_count());
        break;
    case SourceKind::Trace:
    default:
        if (!has_next()) throw TraceExhausted("trace source exhausted");
        s = model_->trace[static_cast<size_t>(cursor_++)];
        break;
    }
    ++t_;
    return s;
}

} // namespace qh
