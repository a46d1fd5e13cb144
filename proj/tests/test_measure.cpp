#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "common.hpp"
#include "measure.hpp"
#include "rng.hpp"

using namespace qploc;

namespace {

const Frequency kGold{0.61803398874989485};

std::shared_ptr<const Region> box11(int N) {
    return std::make_shared<const Region>(make_box({1, 1}, Site{0, 0}, N));
}

std::shared_ptr<const DisorderSample> disorder(int N, std::uint64_t seed) {
    return std::make_shared<const DisorderSample>(sample_disorder(Distribution{}, 1, N, seed));
}

}  // namespace

TEST_SUITE("measure") {

TEST_CASE("theta Wegner estimate at zero coupling is the interval union") {
    OperatorSpec spec;
    spec.eps = spec.delta = 0.0;
    const int N = 6;
    auto reg = box11(N);
    auto smp = disorder(N, 41);
    for (double kappa : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const double E = 0.2;
        // oracle: theta within kappa of E - v_j - n w
        std::vector<std::pair<double, double>> iv;
        for (int j = -N; j <= N; ++j)
            for (int n = -N; n <= N; ++n) {
                double c = E - smp->value(Site{j}) - n * kGold[0];
                iv.emplace_back(std::max(0.0, c - kappa), std::min(1.0, c + kappa));
            }
        std::sort(iv.begin(), iv.end());
        double len = 0, lo = -1, hi = -1;
        for (auto [a, b] : iv) {
            if (a >= b) continue;
            if (a > hi) {
                len += hi - lo;
                lo = a;
                hi = b;
            } else {
                hi = std::max(hi, b);
            }
        }
        len += hi - lo;
        auto est = wegner_theta(spec, reg, smp, kGold, E, kappa);
        CHECK(est.exact);
        CHECK(std::abs(est.value - len) < 1e-6);
        CHECK(est.value <= est.bound);
    }
    auto all = wegner_theta(spec, reg, smp, kGold, 0.0, 100.0, {0.2, 0.7});
    CHECK(all.value == doctest::Approx(0.5));
}

TEST_CASE("theta Wegner sweep stays below 2 kappa |box|") {
    OperatorSpec spec;
    const int N = 6;
    auto reg = box11(N);
    for (std::uint64_t seed : {1, 2, 3}) {
        auto smp = disorder(N, seed);
        for (double kappa : {1e-1, 1e-2, 1e-3, 1e-4}) {
            auto est = wegner_theta(spec, reg, smp, kGold, 0.0, kappa);
            CHECK(est.value <= 2.0 * kappa * reg->size());
            CHECK(est.pass());
        }
    }
    spec.model = Model::Wave;
    CHECK_THROWS_AS(wegner_theta(spec, reg, disorder(N, 1), kGold, 0.0, 0.1), Error);
}

TEST_CASE("disorder Wegner estimate") {
    OperatorSpec spec;
    McOptions mc;
    mc.trials = 10000;
    mc.seed = 7;
    Region one = make_box({1, 1}, Site{0, 0}, 0);
    auto single = wegner_x(spec, one, kGold, 0.0, 0.0, 0.1, mc);
    // P(|v| <= 0.1) for v uniform on [-1, 1]
    CHECK(std::abs(single.value - 0.1) <= single.ci_halfwidth);
    CHECK(single.bound == doctest::Approx(4 * 0.1 * 0.5));
    CHECK(wegner_x(spec, one, kGold, 0.0, 0.0, 0.0, mc).value == 0.0);

    Region b5 = make_box({1, 1}, Site{0, 0}, 5);
    auto k1 = wegner_x(spec, b5, kGold, 0.0, 0.0, 1e-3, mc);
    auto k2 = wegner_x(spec, b5, kGold, 0.0, 0.0, 2e-3, mc);
    CHECK(k1.value - k1.ci_halfwidth <= k1.bound);
    CHECK(k2.value <= 2.2 * k1.value);
    CHECK(k1.value > 0.0);
}

TEST_CASE("counting function shift") {
    OperatorSpec spec;
    spec.eps = 0.1;
    spec.delta = 0.05;
    Rng rng(12);
    for (int t = 0; t < 100; ++t) {
        int N = 2 + t % 5;
        auto reg = box11(N);
        auto smp = disorder(N, 500 + t);
        double theta = rng.uniform(), E = rng.uniform(-2, 2);
        CHECK(counting_shift_check(spec, reg, smp, kGold, theta, E, 0.3) == 0);
        CHECK(counting_shift_check(spec, reg, smp, kGold, theta, E, 0.0) == 0);
    }
    // the inertia path agrees with the eigenvalue count
    auto reg = box11(4);
    auto H = assemble(spec, reg, disorder(4, 3), kGold, 0.1);
    auto count = eigenvalue_count(H, 0.25);
    auto lam = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(H.dense(), Eigen::EigenvaluesOnly).eigenvalues();
    CHECK(count == static_cast<std::size_t>((lam.array() <= 0.25).count()));
}

TEST_CASE("bad-set measures") {
    OperatorSpec spec;
    spec.eps = spec.delta = 0.0;
    auto reg = box11(4);
    auto smp = disorder(4, 9);
    auto far = badset_measure_theta(spec, reg, smp, kGold, 10.0, 1.0, 0.5, 128);
    CHECK(far.value == 0.0);

    spec.eps = spec.delta = 0.01;
    auto strict = badset_measure_theta(spec, reg, smp, kGold, 10.0, 1e3, 0.5, 64);
    CHECK(strict.value == 1.0);
    CHECK(strict.bound == doctest::Approx(std::exp(-std::sqrt(2.0))));

    spec.eps = spec.delta = 0.0;
    McOptions mc;
    mc.trials = 50;
    Region b1 = make_box({1, 1}, Site{0, 0}, 1);
    // no diagonal entry of the N = 1 box comes within 0.8 of E = 2.5
    auto none = badset_probability_x(spec, b1, kGold, 0.0, 2.5, 1.0, 0.5, mc);
    CHECK(none.value == 0.0);
    CHECK(none.reliable);
    mc.trials = 20;
    CHECK_FALSE(badset_probability_x(spec, b1, kGold, 0.0, 2.5, 1.0, 0.5, mc).reliable);
    CHECK_THROWS_AS(badset_probability_x(spec, Region::from_sites({1, 1}, {Site{0, 0}}), kGold, 0.0, 0.0, 1.0, 0.5, mc),
                    Error);
}

TEST_CASE("separation oracle") {
    CHECK(separation_oracle(1, 0.1, 2.0) == doctest::Approx(1.0 - 0.95 * 0.95));
    CHECK(separation_oracle(3, 0.0, 2.0) == doctest::Approx(0.0));
    CHECK(separation_oracle(3, 5.0, 2.0) == doctest::Approx(1.0));
    // brute force with uniform points
    Rng rng(31);
    const int n = 4, T = 40000;
    const double t = 0.05;
    int hits = 0;
    for (int k = 0; k < T; ++k) {
        double a[n], b[n];
        for (int i = 0; i < n; ++i) a[i] = rng.uniform(-1, 1), b[i] = rng.uniform(-1, 1);
        double m = 1e9;
        for (double x : a)
            for (double y : b) m = std::min(m, std::abs(x - y));
        hits += m < t;
    }
    double p = separation_oracle(n, t, 2.0);
    CHECK(std::abs(hits / double(T) - p) <= 4.0 * std::sqrt(p * (1 - p) / T));
}

TEST_CASE("eigenvalue separation at zero hopping") {
    OperatorSpec spec;
    spec.eps = 0.0;
    McOptions mc;
    mc.trials = 4000;
    mc.seed = 2;
    auto r = eigenvalue_separation(spec, 3, 0.5, mc);
    double p = separation_oracle(7, r.threshold, 2.0);
    CHECK(std::abs(r.probability.value - p) <= r.probability.ci_halfwidth);
    CHECK(r.trials == 4000);
    CHECK_THROWS_AS(eigenvalue_separation(spec, 0, 0.5, mc), Error);
}

}  // TEST_SUITE
