#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "qh/exact_model.hpp"
#include "qh/inference.hpp"

using namespace qh;

namespace {

HitTimePmf pmf_of(std::initializer_list<double> vals) {
    std::vector<double> raw(vals);
    HitTimePmf pmf = truncate_and_normalize(raw, 0.49);
    return pmf;
}

} // namespace

TEST_CASE("kl_divergence basics") {
    HitTimePmf a = pmf_of({0.9, 0.1});
    HitTimePmf b = pmf_of({0.1, 0.9});
    CHECK(kl_divergence(a, a) == 0.0);
    // 0.9 ln 9 + 0.1 ln(1/9)
    CHECK(kl_divergence(a, b) == doctest::Approx(0.8 * std::log(9.0)).epsilon(1e-9));

    HitTimePmf c = pmf_of({1.0, 0.0});
    CHECK_THROWS_AS(kl_divergence(b, c), AbsoluteContinuityViolation);

    HitTimePmf wide = pmf_of({0.5, 0.25, 0.25});
    CHECK_THROWS_AS(kl_divergence(a, wide), ConfigError);
}

TEST_CASE("kl_divergence matches the closed-form geometric divergence") {
    // D(geom(a) || geom(b)) = ln(a/b) + (1/a - 1) ln((1-a)/(1-b))
    const double pa = 0.5, pb = 0.25;
    const double closed =
        std::log(pa / pb) + (1.0 / pa - 1.0) * std::log((1.0 - pa) / (1.0 - pb));
    Eigen::VectorXd law_a(2), law_b(2);
    law_a << 0.5, 0.5;
    law_b << 0.75, 0.25;
    QueryPattern q = QueryPattern::parse("1", 2);
    auto [f1, f2] = hit_time_pmf_pair(q, make_iid(law_a), make_iid(law_b), {}, 1e-9);
    CHECK(kl_divergence(f1, f2) == doctest::Approx(closed).epsilon(1e-4));
    CHECK(closed == doctest::Approx(0.2876820724).epsilon(1e-8));
}

TEST_CASE("kl is nonnegative and zero only for identical PMFs") {
    Rng rng = substream(404);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int it = 0; it < 200; ++it) {
        std::vector<double> raw1, raw2;
        for (int t = 0; t < 6; ++t) {
            raw1.push_back(u(rng));
            raw2.push_back(u(rng));
        }
        HitTimePmf p = truncate_and_normalize(raw1, 0.49);
        HitTimePmf q = truncate_and_normalize(raw2, 0.49);
        const double kl = kl_divergence(p, q);
        CHECK(kl >= 0.0);
        double max_diff = (p.probs - q.probs).cwiseAbs().maxCoeff();
        if (kl == 0.0) CHECK(max_diff <= 1e-6);
        if (max_diff > 1e-3) CHECK(kl > 0.0);
    }
}

TEST_CASE("chernoff information") {
    HitTimePmf a = pmf_of({0.9, 0.1});
    HitTimePmf b = pmf_of({0.1, 0.9});
    // symmetric pair: optimum at lambda = 1/2, C = -ln(2 sqrt(0.09))
    CHECK(chernoff_information(a, b) == doctest::Approx(-std::log(0.6)).epsilon(1e-6));
    CHECK(chernoff_information(a, a) == doctest::Approx(0.0).epsilon(1e-12));

    Rng rng = substream(405);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (int it = 0; it < 50; ++it) {
        std::vector<double> raw1, raw2;
        for (int t = 0; t < 8; ++t) {
            raw1.push_back(u(rng));
            raw2.push_back(u(rng));
        }
        HitTimePmf p = truncate_and_normalize(raw1, 0.49);
        HitTimePmf q = truncate_and_normalize(raw2, 0.49);
        const double c_pq = chernoff_information(p, q);
        const double c_qp = chernoff_information(q, p);
        CHECK(c_pq == doctest::Approx(c_qp).epsilon(1e-7));
        CHECK(c_pq <= std::min(kl_divergence(p, q), kl_divergence(q, p)) + 1e-9);
        CHECK(c_pq >= 0.0);
    }
}

TEST_CASE("efficiency ratio arithmetic") {
    QueryStats s{QueryPattern::parse("01", 2), 1.0, 0.5, 2.0, 4.0};
    CHECK(efficiency_ratio(s, 0.5) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(efficiency_ratio(s, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(chernoff_efficiency(s, 1.0) == doctest::Approx(0.25).epsilon(1e-15));

    // monotone in pi iff e1 != e2
    double prev = efficiency_ratio(s, 0.0);
    for (double pi = 0.1; pi <= 1.0; pi += 0.1) {
        double now = efficiency_ratio(s, pi);
        CHECK(now > prev);
        prev = now;
    }
    QueryStats flat{QueryPattern::parse("01", 2), 1.0, 0.5, 3.0, 3.0};
    CHECK(efficiency_ratio(flat, 0.1) == efficiency_ratio(flat, 0.9));
}

TEST_CASE("bayes_update") {
    CHECK(bayes_update(0.3, 0.7, 0.7) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(bayes_update(0.5, 0.2, 0.1) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
    CHECK_THROWS_AS(bayes_update(0.5, 0.0, 0.0), BothLikelihoodsZero);

    // clamp arithmetic: from the clamp floor, a 1e10 likelihood ratio lands at
    // 1e-2 / (1e-2 + 1 - 1e-12), still below a 0.01 decision threshold
    const double expect = 1e-2 / (1e-2 + 1.0 - 1e-12);
    CHECK(bayes_update(1e-12, 1e10, 1.0) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(decide(bayes_update(1e-12, 1e10, 1.0), 0.01) == Decision::Declare2);

    // one-sided zero pins to the clamped endpoint
    CHECK(bayes_update(0.5, 1.0, 0.0) == 1.0 - kBeliefClamp);
    CHECK(bayes_update(0.5, 0.0, 1.0) == kBeliefClamp);
}

TEST_CASE("general_prior_posterior identities") {
    CHECK(general_prior_posterior(0.7, 0.5) == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(general_prior_posterior(0.5, 0.123) == doctest::Approx(0.123).epsilon(1e-12));

    Rng rng = substream(406);
    std::uniform_real_distribution<double> u(1e-6, 1.0);
    for (int it = 0; it < 1000; ++it) {
        const double l1 = u(rng), l2 = u(rng), s = u(rng);
        const double p_eq = l1 / (l1 + l2);
        const double direct = bayes_update(s, l1, l2);
        const double via = general_prior_posterior(p_eq, s);
        CHECK(via == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("posterior composition is order independent") {
    Rng rng = substream(407);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int it = 0; it < 200; ++it) {
        std::vector<std::pair<double, double>> obs;
        double ratio = 1.0;
        for (int k = 0; k < 6; ++k) {
            obs.emplace_back(u(rng), u(rng));
            ratio *= obs.back().first / obs.back().second;
        }
        const double pi0 = 0.5;
        double forward = pi0;
        for (auto [l1, l2] : obs) forward = bayes_update(forward, l1, l2);
        std::shuffle(obs.begin(), obs.end(), rng);
        double shuffled = pi0;
        for (auto [l1, l2] : obs) shuffled = bayes_update(shuffled, l1, l2);
        const double product_form = pi0 * ratio / (pi0 * ratio + (1.0 - pi0));
        CHECK(forward == doctest::Approx(shuffled).epsilon(1e-9));
        CHECK(forward == doctest::Approx(product_form).epsilon(1e-9));
    }
}

TEST_CASE("decide") {
    CHECK(decide(0.995, 0.01) == Decision::Declare1);
    CHECK(decide(0.5, 0.01) == Decision::Continue);
    CHECK(decide(0.005, 0.01) == Decision::Declare2);
    CHECK_THROWS_AS(decide(0.5, 0.7), ConfigError);
}

TEST_CASE("exact model likelihoods and survivors") {
    Eigen::VectorXd a(2), b(2);
    a << 0.5, 0.5;
    b << 0.3, 0.7;
    ExactHitModel model(make_hypothesis_pair(make_iid(a), make_iid(b), 0.5), 1);
    QueryPattern q = QueryPattern::parse("1", 2);
    // geometric laws: P(DeltaT = t) = p (1-p)^(t-1), survivor (1-p)^t
    CHECK(model.likelihood(1, q, {}, 1) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(model.likelihood(2, q, {}, 2) == doctest::Approx(0.7 * 0.3).epsilon(1e-6));
    CHECK(model.survival(1, q, {}, 3) == doctest::Approx(0.125).epsilon(1e-6));
    CHECK(model.survival(2, q, {}, 0) == doctest::Approx(1.0).epsilon(1e-12));

    const double post = model.posterior(0.5, q, {}, 4);
    const double expect = bayes_update(0.5, std::pow(0.5, 4), 0.7 * std::pow(0.3, 3));
    CHECK(post == doctest::Approx(expect).epsilon(1e-6));

    const double cens = model.censored_posterior(0.5, q, {}, 5);
    const double expect_c = bayes_update(0.5, std::pow(0.5, 5), std::pow(0.3, 5));
    CHECK(cens == doctest::Approx(expect_c).epsilon(1e-5));
}
