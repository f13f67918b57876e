#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qh::oracle {

namespace {

bool window_matches(std::span<const Symbol> buf, long end, std::span<const Symbol> pattern) {
    const long m = static_cast<long>(pattern.size());
    if (end + 1 < m) return false;
    for (long i = 0; i < m; ++i)
        if (buf[static_cast<size_t>(end - m + 1 + i)] != pattern[static_cast<size_t>(i)])
            return false;
    return true;
}

void enumerate_rec(std::span<const Symbol> pattern, long t_cap, std::vector<Symbol>& buf,
                   long depth, int ones, FirstOccurrenceCounts& out) {
    if (depth >= t_cap) return;
    for (Symbol s = 0; s <= 1; ++s) {
        buf[static_cast<size_t>(depth)] = s;
        const int ones2 = ones + s;
        if (window_matches(buf, depth, pattern)) {
            out.counts[static_cast<size_t>(depth)][static_cast<size_t>(ones2)] += 1.0;
        } else {
            enumerate_rec(pattern, t_cap, buf, depth + 1, ones2, out);
        }
    }
}

} // namespace

FirstOccurrenceCounts enumerate_first_occurrences(std::span<const Symbol> pattern, long t_cap) {
    FirstOccurrenceCounts out;
    out.m = static_cast<int>(pattern.size());
    out.t_cap = t_cap;
    out.counts.assign(static_cast<size_t>(t_cap), {});
    for (long t = 1; t <= t_cap; ++t)
        out.counts[static_cast<size_t>(t - 1)].assign(static_cast<size_t>(t) + 1, 0.0);
    std::vector<Symbol> buf(static_cast<size_t>(t_cap), 0);
    enumerate_rec(pattern, t_cap, buf, 0, 0, out);
    return out;
}

std::vector<double> pmf_from_counts(const FirstOccurrenceCounts& counts, double p) {
    std::vector<double> pmf(static_cast<size_t>(counts.t_cap), 0.0);
    std::vector<double> pow_p(static_cast<size_t>(counts.t_cap) + 1, 1.0);
    std::vector<double> pow_q(static_cast<size_t>(counts.t_cap) + 1, 1.0);
    for (size_t i = 1; i < pow_p.size(); ++i) {
        pow_p[i] = pow_p[i - 1] * p;
        pow_q[i] = pow_q[i - 1] * (1.0 - p);
    }
    for (long t = 1; t <= counts.t_cap; ++t) {
        double total = 0.0;
        const auto& row = counts.counts[static_cast<size_t>(t - 1)];
        for (long k = 0; k <= t; ++k) {
            const double c = row[static_cast<size_t>(k)];
            if (c != 0.0)
                total += c * pow_p[static_cast<size_t>(k)] * pow_q[static_cast<size_t>(t - k)];
        }
        pmf[static_cast<size_t>(t - 1)] = total;
    }
    return pmf;
}

long naive_scan_hit(std::span<const Symbol> symbols, long begin,
                    std::span<const Symbol> pattern) {
    const long n = static_cast<long>(symbols.size());
    const long m = static_cast<long>(pattern.size());
    for (long end = begin + m - 1; end < n; ++end) {
        bool match = true;
        for (long i = 0; i < m && match; ++i)
            match = symbols[static_cast<size_t>(end - m + 1 + i)] == pattern[static_cast<size_t>(i)];
        if (match) return end - begin + 1;
    }
    return -1;
}

namespace {

struct CycleSearch {
    const Eigen::MatrixXd* kl;
    const Eigen::MatrixXd* time;
    int n;
    std::vector<char> used;
    std::vector<int> path;
    double best = -std::numeric_limits<double>::infinity();

    bool valid(int i, int j) const { return !std::isnan((*kl)(i, j)); }

    void close(int start) {
        const int last = path.back();
        if (!valid(last, start)) return;
        double d = 0.0, t = 0.0;
        for (size_t i = 0; i + 1 < path.size(); ++i) {
            d += (*kl)(path[i], path[i + 1]);
            t += (*time)(path[i], path[i + 1]);
        }
        d += (*kl)(last, start);
        t += (*time)(last, start);
        best = std::max(best, d / t);
    }

    void extend(int start) {
        close(start);
        const int u = path.back();
        for (int v = start + 1; v < n; ++v) { // start stays the smallest node
            if (used[static_cast<size_t>(v)] || !valid(u, v)) continue;
            used[static_cast<size_t>(v)] = 1;
            path.push_back(v);
            extend(start);
            path.pop_back();
            used[static_cast<size_t>(v)] = 0;
        }
    }
};

} // namespace

double brute_force_max_cycle_ratio(const Eigen::MatrixXd& kl, const Eigen::MatrixXd& time) {
    CycleSearch search;
    search.kl = &kl;
    search.time = &time;
    search.n = static_cast<int>(kl.rows());
    search.used.assign(static_cast<size_t>(search.n), 0);
    for (int s = 0; s < search.n; ++s) {
        search.path = {s};
        search.used.assign(static_cast<size_t>(search.n), 0);
        search.used[static_cast<size_t>(s)] = 1;
        search.extend(s);
    }
    return search.best;
}

double ks_statistic(std::vector<long> a, std::vector<long> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const double na = static_cast<double>(a.size());
    const double nb = static_cast<double>(b.size());
    size_t ia = 0, ib = 0;
    double d = 0.0;
    while (ia < a.size() && ib < b.size()) {
        const long x = std::min(a[ia], b[ib]);
        while (ia < a.size() && a[ia] == x) ++ia;
        while (ib < b.size() && b[ib] == x) ++ib;
        d = std::max(d, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return d;
}

} // namespace qh::oracle
