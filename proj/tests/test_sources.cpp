#include <doctest.h>

#include "qh/sources.hpp"

using namespace qh;

TEST_CASE("make_iid validates and reproduces symbol frequencies") {
    Eigen::VectorXd bad(2);
    bad << 0.5, 0.6;
    CHECK_THROWS_AS(make_iid(bad), ConfigError);

    Eigen::VectorXd fair(2);
    fair << 0.5, 0.5;
    SourceModel m = make_iid(fair);
    CHECK(m.alphabet == 2);

    // degenerate law: constant all-zero stream
    Eigen::VectorXd degen(2);
    degen << 1.0, 0.0;
    SourceModel zeros = make_iid(degen);
    Rng rng = substream(7);
    StreamCursor cur(zeros, rng);
    for (int i = 0; i < 50; ++i) CHECK(cur.next(rng) == 0);

    // empirical frequency of symbol 1 under p = (0.3, 0.7)
    Eigen::VectorXd p(2);
    p << 0.3, 0.7;
    SourceModel biased = make_iid(p);
    Rng rng2 = substream(11);
    StreamCursor cur2(biased, rng2);
    long ones = 0;
    const long n = 100000;
    for (long i = 0; i < n; ++i) ones += cur2.next(rng2);
    CHECK(std::abs(static_cast<double>(ones) / n - 0.7) < 0.01);
}

TEST_CASE("persistent Markov family follows stay = 0.9 + 0.1 p") {
    CHECK_THROWS_AS(make_markov_persistent(0.0), ConfigError);
    CHECK_THROWS_AS(make_markov_persistent(1.5), ConfigError);

    SourceModel frozen = make_markov_persistent(1.0);
    CHECK(frozen.kernel(0, 0) == doctest::Approx(1.0));
    CHECK(frozen.kernel(0, 1) == doctest::Approx(0.0));

    SourceModel half = make_markov_persistent(0.5);
    CHECK(half.kernel(0, 0) == doctest::Approx(0.95));
    CHECK(half.kernel(1, 1) == doctest::Approx(0.95));
    CHECK(half.initial(0) == doctest::Approx(0.5));

    // geometric run lengths: mean run = 1/flip
    SourceModel sticky = make_markov_persistent(0.1); // stay 0.91, flip 0.09
    Rng rng = substream(3);
    StreamCursor cur(sticky, rng);
    Symbol prev = cur.next(rng);
    long runs = 0, steps = 0;
    const long n = 200000;
    for (long i = 0; i < n; ++i) {
        Symbol s = cur.next(rng);
        ++steps;
        if (s != prev) ++runs;
        prev = s;
    }
    const double mean_run = static_cast<double>(steps) / static_cast<double>(runs);
    CHECK(mean_run == doctest::Approx(1.0 / 0.09).epsilon(0.05));
}

TEST_CASE("persistent chain empirical stay frequency matches the kernel") {
    SourceModel m = make_markov_persistent(0.5);
    Rng rng = substream(17);
    StreamCursor cur(m, rng);
    Symbol prev = cur.next(rng);
    long stays = 0;
    const long n = 100000;
    for (long i = 0; i < n; ++i) {
        Symbol s = cur.next(rng);
        if (s == prev) ++stays;
        prev = s;
    }
    CHECK(std::abs(static_cast<double>(stays) / n - 0.95) < 0.01);
}

TEST_CASE("draw_switch honors the prior") {
    Rng rng = substream(5);
    for (int i = 0; i < 20; ++i) {
        CHECK(draw_switch(1.0, rng) == 1);
        CHECK(draw_switch(0.0, rng) == 2);
    }
    long ones = 0;
    const long n = 100000;
    for (long i = 0; i < n; ++i)
        if (draw_switch(0.5, rng) == 1) ++ones;
    CHECK(std::abs(static_cast<double>(ones) / n - 0.5) < 0.01);
}

TEST_CASE("trace cursors replay deterministically and exhaust") {
    SourceModel t = make_trace({0, 1, 1, 0});
    Rng rng = substream(1);
    StreamCursor cur(t, rng);
    CHECK(cur.next(rng) == 0);
    CHECK(cur.next(rng) == 1);
    CHECK(cur.next(rng) == 1);
    CHECK(cur.next(rng) == 0);
    CHECK_FALSE(cur.has_next());
    CHECK_THROWS_AS(cur.next(rng), TraceExhausted);

    // two cursors over the same trace emit identical streams
    StreamCursor a(t, rng), b(t, rng);
    for (int i = 0; i < 4; ++i) CHECK(a.next(rng) == b.next(rng));
}

TEST_CASE("markov cursor with a pinned frozen state is absorbing") {
    SourceModel frozen = make_markov_persistent(1.0);
    std::vector<Symbol> ctx{0};
    StreamCursor cur(frozen, ctx);
    Rng rng = substream(9);
    for (int i = 0; i < 30; ++i) CHECK(cur.next(rng) == 0);
}

TEST_CASE("stationary distribution of the symmetric family is uniform") {
    SourceModel m = make_markov_persistent(0.3);
    Eigen::VectorXd stat = stationary_context_distribution(m);
    CHECK(stat(0) == doctest::Approx(0.5));
    CHECK(stat(1) == doctest::Approx(0.5));

    // an asymmetric chain for contrast: stay0=0.9, stay1=0.5
    Eigen::MatrixXd kernel(2, 2);
    kernel << 0.9, 0.1, 0.5, 0.5;
    SourceModel asym = make_markov(kernel, 1);
    Eigen::VectorXd s = stationary_context_distribution(asym);
    // balance: pi0 * 0.1 = pi1 * 0.5
    CHECK(s(0) == doctest::Approx(5.0 / 6.0).epsilon(1e-9));
    CHECK(s(1) == doctest::Approx(1.0 / 6.0).epsilon(1e-9));

    // empirical unigram frequencies match the stationary law
    Rng rng = substream(23);
    StreamCursor cur(asym, rng);
    long zeros = 0;
    const long n = 100000;
    for (long i = 0; i < n; ++i)
        if (cur.next(rng) == 0) ++zeros;
    CHECK(std::abs(static_cast<double>(zeros) / n - 5.0 / 6.0) < 0.01);
}

TEST_CASE("identical seeds reproduce identical streams") {
    Eigen::VectorXd p(3);
    p << 0.2, 0.3, 0.5;
    SourceModel m = make_iid(p);
    Rng r1 = substream(42, 0), r2 = substream(42, 0);
    StreamCursor c1(m, r1), c2(m, r2);
    for (int i = 0; i < 1000; ++i) CHECK(c1.next(r1) == c2.next(r2));
    CHECK(c1.position() == 1000);
}

TEST_CASE("hypothesis pairs require a shared alphabet") {
    Eigen::VectorXd p2(2), p3(3);
    p2 << 0.5, 0.5;
    p3 << 0.2, 0.3, 0.5;
    CHECK_THROWS_AS(make_hypothesis_pair(make_iid(p2), make_iid(p3), 0.5), ConfigError);
    CHECK_THROWS_AS(make_hypothesis_pair(make_iid(p2), make_iid(p2), 1.5), ConfigError);
}
