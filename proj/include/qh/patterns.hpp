#pragma once

#include <span>
#include <string>
#include <vector>

#include "qh/sources.hpp"

namespace qh {

// Longest proper prefix of symbols[0..i] that is also its suffix, for every i.
// failure[0] == 0 and failure[i] < i+1. O(m).
std::vector<int> build_failure_function(std::span<const Symbol> symbols);

/// A fixed-length query pattern plus its failure function — the object Bob
/// sends to Alice.
struct QueryPattern {
    std::vector<Symbol> symbols;
    std::vector<int> failure;

    QueryPattern() = default;
    explicit QueryPattern(std::vector<Symbol> syms);

    int length() const { return static_cast<int>(symbols.size()); }
    std::string str() const; // digit string, e.g. "0111"

    // Parses a digit string over {0..alphabet-1}.
    static QueryPattern parse(const std::string& text, int alphabet);

    bool operator==(const QueryPattern& other) const { return symbols == other.symbols; }
};

QueryPattern reversed(const QueryPattern& q);
QueryPattern complemented(const QueryPattern& q); // binary alphabets only

// All alphabet^m patterns in lexicographic order.
std::vector<QueryPattern> make_query_set(int alphabet, int m);

/// Streaming KMP matcher. step() consumes one symbol and returns the matched
/// prefix length after it; a return value of m is a completed hit.
class StreamMatcher {
  public:
    explicit StreamMatcher(const QueryPattern& pattern) : pattern_(&pattern) {}

    int step(Symbol s);
    void reset() { matched_ = 0; }
    int matched() const { return matched_; }
    // Steps plus failure-function hops; bounded by 2 * symbols consumed.
    long transitions() const { return transitions_; }

  private:
    const QueryPattern* pattern_;
    int matched_ = 0;
    long transitions_ = 0;
};

struct HitRecord {
    long delta_t = 0;      // symbols consumed by this search
    long absolute_end = 0; // cursor position at the end of the search
    bool censored = false; // budget or trace ran out before a hit
};

// Consumes symbols until the pattern completes or the budget/trace runs out.
// Successive calls on one cursor give disjoint occurrence windows: each search
// starts with an empty partial match at the symbol after the previous window.
HitRecord stream_hit(StreamCursor& cursor, const QueryPattern& pattern, Rng& rng,
                     long max_symbols = -1);

// First-occurrence scan over a span (used by the trace estimators): number of
// symbols consumed from `begin` until the pattern completes, or -1 if it never
// does before the end.
long scan_hit(std::span<const Symbol> symbols, long begin, const QueryPattern& pattern);

} // namespace qh
