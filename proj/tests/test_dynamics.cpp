#include <doctest.h>

#include <cmath>
#include <numbers>

#include "common.hpp"
#include "dynamics.hpp"
#include "rng.hpp"

using namespace qploc;

namespace {

const double kPi = std::numbers::pi;
const Frequency kGold{0.61803398874989485};

DisorderSample single_site(double v) { return DisorderSample(Distribution{}, Site{0}, Site{0}, {v}, 0); }

}  // namespace

TEST_SUITE("dynamics") {

TEST_CASE("drive value") {
    OperatorSpec spec;
    spec.delta = 0.3;
    CHECK(drive_value(spec, kGold, {0.0}, 0.0, Site{2}) == doctest::Approx(spec.drive(0, Site{2})));
    CHECK(drive_value(spec, kGold, {0.0}, 1.0 / (2 * kGold[0]), Site{1}) ==
          doctest::Approx(-spec.drive(0, Site{1})));
    spec.dims = {2, 2};
    spec.profile = DriveProfile::Saturating;
    Rng rng(3);
    for (int t = 0; t < 10000; ++t) {
        Site j{static_cast<int>(rng.uniform(-20, 20)), static_cast<int>(rng.uniform(-20, 20))};
        double w = drive_value(spec, {0.3, 0.7}, {rng.uniform(), rng.uniform()}, rng.uniform(-100, 100), j);
        CHECK(std::abs(w) <= 2 * 2 * spec.delta * std::exp(-spec.b * j.l1()) * (1 + 1e-14));
    }
    spec.drive_enabled = false;
    CHECK(drive_value(spec, {0.3, 0.7}, {0, 0}, 0.0, Site{0, 0}) == 0.0);
}

TEST_CASE("decoupled sites only pick up phases") {
    OperatorSpec spec;
    spec.eps = spec.delta = 0.0;
    auto smp = sample_disorder(spec.g, 1, 3, 5);
    WavePacket p = WavePacket::delta(1, 3);
    Rng rng(2);
    for (int a = 0; a < 7; ++a) p.amplitudes[a] = cplx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    p.amplitudes.normalize();
    const double T = 5.3;
    auto tr = evolve_schrodinger(spec, smp, p, kGold, {0.0}, T);
    for (int a = 0; a < 7; ++a) {
        cplx want = p.amplitudes[a] * std::polar(1.0, -smp.value(Site{a - 3}) * T);
        CHECK(std::abs(tr.final_state.amplitudes[a] - want) < 1e-12);
    }
    for (double m : tr.second_moment) CHECK(m == doctest::Approx(tr.second_moment[0]).epsilon(1e-12));
}

TEST_CASE("free lattice propagator") {
    OperatorSpec spec;
    spec.eps = 0.5;
    spec.delta = 0.0;
    const double T = 20.0;
    const int R = static_cast<int>(4 * spec.eps * T) + 20;
    EvolveOptions opt;
    opt.zero_potential = true;
    opt.dt = 0.05;
    auto tr = evolve_schrodinger(spec, DisorderSample{}, WavePacket::delta(1, R), kGold, {0.0}, T, opt);
    CHECK_FALSE(tr.leaked);
    for (std::size_t k = 1; k < tr.times.size(); ++k) {
        double want = 2 * spec.eps * spec.eps * tr.times[k] * tr.times[k];
        CHECK(std::abs(tr.second_moment[k] - want) <= 0.01 * want);
    }
    // psi_n(T) = i^{-n} J_n(2 eps T)
    double worst = 0;
    for (int n = -R; n <= R; ++n) {
        double jn = std::cyl_bessel_j(static_cast<double>(std::abs(n)), 2 * spec.eps * T);
        if (n < 0 && (std::abs(n) % 2)) jn = -jn;  // J_{-n} = (-1)^n J_n
        cplx want = std::pow(cplx(0, 1), -n) * jn;
        worst = std::max(worst, std::abs(tr.final_state.amplitudes[n + R] - want));
    }
    CHECK(worst < 1e-10);
    CHECK(tr.norm_drift.back() < 1e-10);
}

TEST_CASE("single driven site matches the closed form") {
    OperatorSpec spec;
    spec.eps = 0.0;
    spec.delta = 0.4;
    const double v = 0.37, theta = 0.21, W = spec.drive(0, Site{0});
    auto smp = single_site(v);
    WavePacket p = WavePacket::delta(1, 0);
    EvolveOptions opt;
    opt.samples = 20;
    int checked = 0;
    opt.observer = [&](double t, const Eigen::VectorXcd& psi) {
        double ph = v * t + W / (2 * kPi * kGold[0]) *
                                (std::sin(2 * kPi * (kGold[0] * t + theta)) - std::sin(2 * kPi * theta));
        CHECK(std::abs(psi[0] - std::polar(1.0, -ph)) < 1e-8);
        ++checked;
    };
    evolve_schrodinger(spec, smp, p, kGold, {theta}, 30.0, opt);
    CHECK(checked > 10);
}

TEST_CASE("unitarity and time reversal") {
    OperatorSpec spec;
    spec.eps = 0.1;
    spec.delta = 0.05;
    auto smp = sample_disorder(spec.g, 1, 30, 8);
    WavePacket p = WavePacket::delta(1, 30);
    EvolveOptions opt;
    opt.dt = 0.02;
    auto fwd = evolve_schrodinger(spec, smp, p, kGold, {0.3}, 200.0, opt);  // 1e4 steps
    CHECK(fwd.steps == 10000);
    for (double drift : fwd.norm_drift) CHECK(drift <= 1e-8);
    auto back = evolve_schrodinger(spec, smp, fwd.final_state, kGold, {0.3}, 0.0, opt);
    CHECK((back.final_state.amplitudes - p.amplitudes).norm() < 1e-6);
    CHECK(back.final_state.time == 0.0);
}

TEST_CASE("window and step guards") {
    OperatorSpec spec;
    spec.eps = 0.5;
    spec.delta = 0.0;
    EvolveOptions opt;
    opt.zero_potential = true;
    auto small = WavePacket::delta(1, 5);
    CHECK_THROWS_AS(evolve_schrodinger(spec, DisorderSample{}, small, kGold, {0.0}, 30.0, opt), Error);
    try {
        evolve_schrodinger(spec, DisorderSample{}, small, kGold, {0.0}, 30.0, opt);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::BoundaryLeak);
    }
    opt.on_leak = LeakPolicy::Stop;
    auto tr = evolve_schrodinger(spec, DisorderSample{}, small, kGold, {0.0}, 30.0, opt);
    CHECK(tr.leaked);
    CHECK(tr.leak_time < 30.0);
    CHECK(tr.times.back() == tr.leak_time);

    OperatorSpec dis;
    dis.eps = 0.5;
    auto smp = sample_disorder(dis.g, 1, 40, 1);
    EvolveOptions big;
    big.dt = 2.0;
    try {
        evolve_schrodinger(dis, smp, WavePacket::delta(1, 40), kGold, {0.0}, 100.0, big);
        CHECK(false);
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::StepTooLarge);
    }
    CHECK_THROWS_AS(evolve_schrodinger(dis, sample_disorder(dis.g, 1, 3, 1), WavePacket::delta(1, 10), kGold,
                                       {0.0}, 1.0),
                    Error);
}

TEST_CASE("wave equation") {
    OperatorSpec spec;
    spec.eps = spec.delta = 0.0;
    spec.model = Model::Wave;
    const double v = -0.64, w0 = std::sqrt(-v);
    auto smp = single_site(v);
    WavePacket p = WavePacket::delta(1, 0);
    Eigen::VectorXcd pd(1);
    pd[0] = 0.3;
    EvolveOptions opt;
    opt.dt = 1e-3;
    opt.samples = 10;
    opt.observer = [&](double t, const Eigen::VectorXcd& psi) {
        double want = std::cos(w0 * t) + 0.3 * std::sin(w0 * t) / w0;
        CHECK(std::abs(psi[0] - want) < 1e-5);
    };
    evolve_wave(spec, smp, p, pd, kGold, {0.0}, 10.0, opt);

    // autonomous invariant over 1e3 steps
    OperatorSpec a;
    a.eps = 0.2;
    a.delta = 0.0;
    a.model = Model::Wave;
    auto ds = sample_disorder(a.g, 1, 40, 4);
    EvolveOptions o2;
    o2.dt = 0.01;
    o2.leak_threshold = 1.0;
    Eigen::VectorXcd v0 = Eigen::VectorXcd::Zero(81);
    v0[40] = 0.5;
    auto tr = evolve_wave(a, ds, WavePacket::delta(1, 40), v0, kGold, {0.0}, 10.0, o2);
    CHECK(tr.steps == 1000);
    for (double r : tr.norm_drift) CHECK(r <= 1e-6);
    double inv0 = wave_invariant(a, ds, tr.final_state.window, WavePacket::delta(1, 40).amplitudes, v0);
    double inv1 = wave_invariant(a, ds, tr.final_state.window, tr.final_state.amplitudes, tr.final_velocity);
    CHECK(std::abs(inv1 - inv0) <= 1e-6 * std::abs(inv0));
}

TEST_CASE("quasi-energy lift") {
    // single site, closed form available
    OperatorSpec spec;
    spec.eps = 0.0;
    spec.delta = 0.4;
    auto smp = single_site(0.37);
    EvolveOptions opt;
    opt.samples = 16;
    auto rep = quasienergy_consistency(spec, smp, WavePacket::delta(1, 0), kGold, {0.21}, 20.0, 32, opt);
    CHECK(rep.deviation <= 1e-6);

    // no drive: modes decouple at any cutoff
    OperatorSpec nd;
    nd.eps = 0.05;
    nd.delta = 0.0;
    auto ds = sample_disorder(nd.g, 1, 6, 2);
    EvolveOptions fine;
    fine.dt = 0.005;
    fine.leak_threshold = 1.0;
    auto r0 = quasienergy_consistency(nd, ds, WavePacket::delta(1, 6), kGold, {0.1}, 10.0, 1, fine);
    CHECK(r0.deviation <= 1e-5);

    // truncation error shrinks with the cutoff under a strong drive
    OperatorSpec strong;
    strong.eps = 0.0;
    strong.delta = 1.0;
    std::vector<double> dev;
    for (int M : {1, 2, 3, 4, 6}) {
        auto r = quasienergy_consistency(strong, smp, WavePacket::delta(1, 0), {0.1}, {0.0}, 20.0, M, opt);
        dev.push_back(r.deviation);
    }
    CHECK(dev.front() > 1e-2);
    for (std::size_t k = 1; k < dev.size(); ++k) CHECK(dev[k] < dev[k - 1]);
}

TEST_CASE("localization contrast") {
    OperatorSpec spec;
    spec.eps = 0.05;
    spec.delta = 0.01;
    ContrastOptions opt;
    opt.trials = 3;
    opt.seed = 1;
    auto zero = localization_contrast(spec, kGold, {0.0}, 0.0, opt);
    CHECK(zero.ratio == 1.0);
    auto r = localization_contrast(spec, kGold, {0.0}, 100.0, opt);
    CHECK(r.free_sup == doctest::Approx(r.free_oracle).epsilon(0.01));
    CHECK(r.disordered_max < r.free_sup);
    CHECK(r.disordered_sup.size() == 3);
}

}  // TEST_SUITE
