#include "qh/patterns.hpp"

#include <algorithm>

namespace qh {

std::vector<int> build_failure_function(std::span<const Symbol> symbols) {
    const int m = static_cast<int>(symbols.size());
    if (m < 1) throw ConfigError("build_failure_function: empty pattern");
    std::vector<int> failure(static_cast<size_t>(m), 0);
    int k = 0;
    for (int i = 1; i < m; ++i) {
        while (k > 0 && symbols[static_cast<size_t>(i)] != symbols[static_cast<size_t>(k)])
            k = failure[static_cast<size_t>(k - 1)];
        if (symbols[static_cast<size_t>(i)] == symbols[static_cast<size_t>(k)]) ++k;
        failure[static_cast<size_t>(i)] = k;
    }
    return failure;
}

QueryPattern::QueryPattern(std::vector<Symbol> syms) : symbols(std::move(syms)) {
    failure = build_failure_function(symbols);
}

std::string QueryPattern::str() const {
    std::string s;
    s.reserve(symbols.size());
    for (Symbol v : symbols) {
        if (v < 0 || v > 9) throw ConfigError("QueryPattern::str: symbol not a single digit");
        s.push_back(static_cast<char>('0' + v));
    }
    return s;
}

QueryPattern QueryPattern::parse(const std::string& text, int alphabet) {
    if (text.empty()) throw ConfigError("pattern: empty");
    std::vector<Symbol> syms;
    syms.reserve(text.size());
    for (char c : text) {
        if (c < '0' || c > '9') throw ConfigError("pattern: non-digit character");
        Symbol v = c - '0';
        if (v >= alphabet) throw ConfigError("pattern: symbol outside alphabet");
        syms.push_back(v);
    }
    return QueryPattern(std::move(syms));
}

QueryPattern reversed(const QueryPattern& q) {
    std::vector<Symbol> syms(q.symbols.rbegin(), q.symbols.rend());
    return QueryPattern(std::move(syms));
}

QueryPattern complemented(const QueryPattern& q) {
    std::vector<Symbol> syms;
    syms.reserve(q.symbols.size());
    for (Symbol s : q.symbols) {
        if (s > 1) throw ConfigError("complemented: binary patterns only");
        syms.push_back(1 - s);
    }
    return QueryPattern(std::move(syms));
}

std::vector<QueryPattern> make_query_set(int alphabet, int m) {
    if (alphabet < 2) throw ConfigError("make_query_set: alphabet must be >= 2");
    if (m < 1) throw ConfigError("make_query_set: m must be >= 1");
    long count = 1;
    for (int i = 0; i < m; ++i) {
        count *= alphabet;
        if (count > (1L << 22)) throw ConfigError("make_query_set: |Z|^m too large");
    }
    std::vector<QueryPattern> set;
    set.reserve(static_cast<size_t>(count));
    std::vector<Symbol> syms(static_cast<size_t>(m), 0);
    for (long code = 0; code < count; ++code) {
        long rest = code;
        for (int i = m - 1; i >= 0; --i) {
            syms[static_cast<size_t>(i)] = static_cast<Symbol>(rest % alphabet);
            rest /= alphabet;
        }
        set.emplace_back(syms);
    }
    return set;
}

int StreamMatcher::step(Symbol s) {
    const auto& q = pattern_->symbols;
    const auto& fail = pattern_->failure;
    int k = matched_;
    ++transitions_;
    while (k > 0 && q[static_cast<size_t>(k)] != s) {
        k = fail[static_cast<size_t>(k - 1)];
        ++transitions_;
    }
    if (q[static_cast<size_t>(k)] == s) ++k;
    matched_ = (k == pattern_->length()) ? 0 : k; // a hit resets the window
    return k;
}

HitRecord stream_hit(StreamCursor& cursor, const QueryPattern& pattern, Rng& rng,
                     long max_symbols) {
    StreamMatcher matcher(pattern);
    HitRecord rec;
    while (true) {
        if (max_symbols >= 0 && rec.delta_t >= max_symbols) {
            rec.censored = true;
            break;
        }
        if (!cursor.has_next()) {
            rec.censored = true;
            break;
        }
        Symbol s = cursor.next(rng);
        ++rec.delta_t;
        if (matcher.step(s) == pattern.length()) break;
    }
    rec.absolute_end = cursor.position();
    return rec;
}

long scan_hit(std::span<const Symbol> symbols, long begin, const QueryPattern& pattern) {
    StreamMatcher matcher(pattern);
    const long n = static_cast<long>(symbols.size());
    for (long i = begin; i < n; ++i) {
        if (matcher.step(symbols[static_cast<size_t>(i)]) == pattern.length())
            return i - begin + 1;
    }
    return -1;
}

} // namespace qh
