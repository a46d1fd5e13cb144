// One PASS/FAIL line per acceptance criterion. Runtime budgets are part of each criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "common.hpp"
#include "dynamics.hpp"
#include "experiment.hpp"
#include "greens.hpp"
#include "measure.hpp"
#include "msa.hpp"
#include "rng.hpp"

using namespace qploc;
namespace fs = std::filesystem;

namespace {

const Frequency kGold{0.61803398874989485};

// Frozen from calibration seeds 100..104 (trials 3, theta points [64, 12]); see README.
const double kFrozenGood[] = {0.0302, 0.8889};
const double kGammaBand[2][2] = {{0.9066, 1.0528}, {4.0283, 4.0310}};

fs::path g_tmp;

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4g", x);
    return buf;
}

ExperimentConfig config(const std::string& toml, const std::string& dir) {
    auto c = ExperimentConfig::parse(toml, "toml");
    c.out = (g_tmp / dir).string();
    return c;
}

const Assertion* find(const RunResult& rr, const std::string& name) {
    for (const auto& a : rr.assertions)
        if (a.name == name) return &a;
    return nullptr;
}

bool passed(const RunResult& rr, const std::string& name) {
    const Assertion* a = find(rr, name);
    return a && a->pass;
}

// 1 -------------------------------------------------------------------------
Outcome exact_identities() {
    auto rr = run_experiment(config(R"(
kind = "identities"
trials = 100
[operator]
eps = 0.05
delta = 0.02
[params]
max_radius = 8
tolerance = 1e-8
)",
                                    "identities"));
    Outcome o{true, ""};
    for (const auto& a : rr.assertions) {
        int n = a.detail["instances"].get<int>();
        o.pass = o.pass && a.pass && n >= 100;
        o.detail += a.name + "=" + num(a.detail["max_residual"].get<double>()) + "(" + std::to_string(n) + ") ";
    }
    return o;
}

// 2 -------------------------------------------------------------------------
double union_oracle(const Region& box, const DisorderSample& smp, double E, double kappa) {
    // eps = delta = 0: eigenvalue n w + theta + v_j crosses E within kappa on an interval of theta
    std::vector<std::pair<double, double>> iv;
    for (const Site& s : box.sites()) {
        double c = E - s[1] * kGold[0] - smp.value(s.head(1));
        iv.emplace_back(std::clamp(c - kappa, 0.0, 1.0), std::clamp(c + kappa, 0.0, 1.0));
    }
    std::sort(iv.begin(), iv.end());
    double total = 0, lo = iv[0].first, hi = iv[0].second;
    for (auto [a, b] : iv) {
        if (a > hi) {
            total += hi - lo;
            lo = a;
        }
        hi = std::max(hi, b);
    }
    return total + (hi - lo);
}

Outcome wegner_theta_check() {
    const std::vector<double> kappas{1e-1, 1e-2, 1e-3, 1e-4};
    OperatorSpec spec;
    spec.eps = spec.delta = 0.01;
    auto box = std::make_shared<const Region>(make_box({1, 1}, Site{0, 0}, 6));
    bool bound_ok = true;
    double worst_ratio = 0;
    for (int s = 0; s < 20; ++s) {
        auto smp = std::make_shared<const DisorderSample>(sample_disorder(spec.g, 1, 6, derive_seed(2, {7u, static_cast<std::uint64_t>(s)})));
        for (double k : kappas) {
            auto m = wegner_theta(spec, box, smp, kGold, 0.0, k);
            bound_ok = bound_ok && m.value <= 2 * k * box->size();
            worst_ratio = std::max(worst_ratio, m.value / (2 * k * box->size()));
        }
    }
    OperatorSpec zero;
    zero.eps = zero.delta = 0.0;
    double worst_dev = 0;
    for (int s = 0; s < 20; ++s) {
        auto smp = std::make_shared<const DisorderSample>(sample_disorder(zero.g, 1, 6, derive_seed(3, {7u, static_cast<std::uint64_t>(s)})));
        for (double k : kappas)
            worst_dev = std::max(worst_dev, std::abs(wegner_theta(zero, box, smp, kGold, 0.0, k).value -
                                                     union_oracle(*box, *smp, 0.0, k)));
    }
    return {bound_ok && worst_dev <= 1e-6,
            "max measure/(2 kappa |L|)=" + num(worst_ratio) + " oracle deviation=" + num(worst_dev)};
}

// 3 -------------------------------------------------------------------------
Outcome wegner_x_check() {
    OperatorSpec spec;
    spec.eps = spec.delta = 0.01;
    Region one = make_box({1, 1}, Site{0, 0}, 0);
    Region nine = make_box({1, 1}, Site{0, 0}, 1);
    bool ok = true;
    std::string detail;
    int k = 0;
    for (double kappa : {0.1, 0.03, 0.01, 0.003}) {
        McOptions mc{10000, derive_seed(11, {static_cast<std::uint64_t>(k++)}), 1};
        auto a = wegner_x(spec, one, kGold, 0.0, 0.0, kappa, mc);
        const double exact = 2 * kappa * spec.g.density_bound();
        const bool in_ci = std::abs(a.value - exact) <= a.ci_halfwidth;
        auto b = wegner_x(spec, nine, kGold, 0.0, 0.0, kappa, mc, 4.0);
        const bool below = b.value - b.ci_halfwidth <= 4 * kappa * nine.size() * spec.g.density_bound();
        ok = ok && in_ci && below;
        detail += "k=" + num(kappa) + ":" + num(a.value) + "vs" + num(exact) + (in_ci ? "" : "!") + " ";
    }
    return {ok, detail};
}

// 4 -------------------------------------------------------------------------
Outcome resolvent_expansion_check() {
    OperatorSpec spec;
    spec.eps = 0.05;
    spec.delta = 1e-3;
    OperatorSpec undriven = spec;
    undriven.delta = 0.0;
    Region box = make_box({1, 1}, Site{0, 0}, 4);
    double worst = 0;
    int used = 0;
    bool ok = true;
    for (int t = 0; t < 20; ++t) {
        Rng rng(derive_seed(4, {static_cast<std::uint64_t>(t)}));
        auto smp = sample_disorder(spec.g, 1, 4, rng.next());
        const double theta = rng.uniform(), E = rng.uniform(-1, 1);
        Eigen::MatrixXd H = assemble(spec, box, smp, kGold, theta).dense();
        Eigen::MatrixXd H0 = assemble(undriven, box, smp, kGold, theta).dense();
        try {
            const double bound = norm_inf(green(H0, E)) * norm_inf(H - H0);
            double prev = resolvent_expansion_residual(H, H0, E, 0);
            for (int K = 1; K <= 5; ++K) {
                double r = resolvent_expansion_residual(H, H0, E, K);
                double ratio = r / prev;
                worst = std::max(worst, ratio / bound);
                ok = ok && ratio <= 1.1 * bound;
                prev = r;
            }
            ++used;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NearSingular) throw;
        }
    }
    return {ok && used >= 10, "max ratio/(|G0||dW|)=" + num(worst) + " instances=" + std::to_string(used)};
}

// 5 -------------------------------------------------------------------------
Outcome melnikov_check() {
    auto rr = run_experiment(config(R"(
kind = "exclusion"
trials = 100
[params]
N0 = 3
N = 9
sigma = 2.0
constraint_sets = 20
)",
                                    "exclusion"));
    // the cubic constraints over pooled eigenvalue differences exclude every frequency at sigma 2,
    // so the wave census runs with a smaller threshold to have accepted frequencies at all
    auto wr = run_experiment(config(R"(
kind = "exclusion"
trials = 100
[operator]
model = "wave"
[params]
N0 = 3
N = 6
sigma = 2.6
constraint_sets = 0
)",
                                    "exclusion-wave"));
    const Assertion* c = find(rr, "census_bound");
    const Assertion* w = find(wr, "census_bound");
    const int accepted = c->detail["accepted_trials"].get<int>(), waccepted = w->detail["accepted_trials"].get<int>();
    bool ok = passed(rr, "exclusion_measure_agreement") && c->pass && w->pass && accepted > 0 && waccepted > 0;
    return {ok, "qmc/oracle agree=" + std::string(passed(rr, "exclusion_measure_agreement") ? "yes" : "no") +
                    " schrodinger max=" + c->detail["max_disjoint_bad"].dump() + " over " + std::to_string(accepted) +
                    " accepted, wave max=" + w->detail["max_disjoint_bad"].dump() + " over " +
                    std::to_string(waccepted)};
}

// 6 -------------------------------------------------------------------------
Outcome free_dynamics_check() {
    OperatorSpec spec;
    spec.eps = 0.5;
    spec.delta = 0.0;
    EvolveOptions opt;
    opt.zero_potential = true;
    opt.on_leak = LeakPolicy::Stop;
    opt.dt = 0.05;
    auto tr = evolve_schrodinger(spec, DisorderSample{}, WavePacket::delta(1, 60), kGold, {0.0}, 200.0, opt);
    double worst = 0;
    for (std::size_t k = 0; k < tr.times.size(); ++k) {
        double want = 2 * spec.eps * spec.eps * tr.times[k] * tr.times[k];
        if (want > 0) worst = std::max(worst, std::abs(tr.second_moment[k] - want) / want);
    }

    OperatorSpec drv;
    drv.eps = 0.0;
    drv.delta = 0.4;
    const double v = 0.37, theta = 0.21, W = drv.drive(0, Site{0});
    DisorderSample one(Distribution{}, Site{0}, Site{0}, {v}, 0);
    EvolveOptions o2;
    o2.samples = 40;
    double dev = 0;
    o2.observer = [&](double t, const Eigen::VectorXcd& psi) {
        const double pi = 3.14159265358979323846;
        double ph = v * t + W / (2 * pi * kGold[0]) *
                                (std::sin(2 * pi * (kGold[0] * t + theta)) - std::sin(2 * pi * theta));
        dev = std::max(dev, std::abs(psi[0] - std::polar(1.0, -ph)));
    };
    evolve_schrodinger(drv, one, WavePacket::delta(1, 0), kGold, {theta}, 50.0, o2);
    return {worst <= 0.01 && dev <= 1e-8 && tr.leaked,
            "moment rel. error=" + num(worst) + " up to leak at t=" + num(tr.leak_time) + ", driven site error=" +
                num(dev)};
}

// 7 -------------------------------------------------------------------------
Outcome contrast_check() {
    auto rr = run_experiment(config(R"(
kind = "dynamics"
trials = 20
[operator]
eps = 0.05
delta = 0.01
[params]
T_short = 100.0
T_long = 1000.0
)",
                                    "dynamics"));
    const Assertion* d = find(rr, "disordered_growth");
    const Assertion* f = find(rr, "free_growth");
    return {d->pass && f->pass && passed(rr, "free_oracle"),
            "max disordered growth=" + num(d->detail["max_growth"].get<double>()) +
                " free growth=" + num(f->detail["growth"].get<double>())};
}

// 8 -------------------------------------------------------------------------
Outcome msa_check() {
    OperatorSpec spec;
    spec.eps = spec.delta = 0.01;
    ScaleSchedule sched = schedule_from(8, 0.5, 2.0, 3, ScheduleMode::Paper, spec.dims);
    const std::size_t levels = sched.scales.size();
    std::vector<double> good(levels, 0), trials(levels, 0), gsum(levels, 0), gcount(levels, 0);
    bool stable = true;
    std::string detail;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        MsaConfig mc;
        mc.samples = 3;
        mc.theta_points = {64, 12};
        mc.seed = seed;
        MsaResult res = msa_run(spec, sched, kGold, mc);
        for (std::size_t k = 0; k < levels; ++k) {
            const ScaleCensus& s = res.scales[k];
            good[k] += s.good_fraction * s.trials;
            trials[k] += s.trials;
            if (std::isfinite(s.gamma_mean)) {
                gsum[k] += s.gamma_mean * s.trials;
                gcount[k] += s.trials;
            }
            Interval ci = wilson(static_cast<std::size_t>(std::lround(s.good_fraction * s.trials)), s.trials, 2.576);
            stable = stable && kFrozenGood[k] >= ci.lo && kFrozenGood[k] <= ci.hi;
        }
    }
    bool ok = stable && levels == 2;
    for (std::size_t k = 0; k < levels; ++k) {
        double frac = good[k] / trials[k], gamma = gcount[k] > 0 ? gsum[k] / gcount[k] : NAN;
        bool lvl = frac >= kFrozenGood[k] - 0.03 && gamma >= kGammaBand[k][0] && gamma <= kGammaBand[k][1];
        ok = ok && lvl;
        detail += "N=" + std::to_string(sched.scales[k]) + ": good=" + num(frac) + " (frozen " +
                  num(kFrozenGood[k]) + ") gamma=" + num(gamma) + " ";
    }
    return {ok, detail + (stable ? "seeds stable" : "seed outside 99% CI of frozen value")};
}

// 9 -------------------------------------------------------------------------
Outcome separation_check() {
    OperatorSpec spec;
    spec.eps = 0.01;
    std::vector<double> p;
    std::string detail;
    for (int L : {4, 8, 16}) {
        auto r = eigenvalue_separation(spec, L, 0.5, {10000, derive_seed(9, {static_cast<std::uint64_t>(L)}), 1});
        p.push_back(r.probability.value);
        detail += "P(" + std::to_string(L) + ")=" + num(r.probability.value) + " ";
    }
    bool decreasing = p[0] > p[1] && p[1] > p[2];

    OperatorSpec zero;
    zero.eps = 0.0;
    bool oracle_ok = true;
    for (int L : {4, 8, 16}) {
        auto r = eigenvalue_separation(zero, L, 0.5, {10000, derive_seed(10, {static_cast<std::uint64_t>(L)}), 1});
        const int n = 2 * L + 1;
        double want = separation_oracle(n, r.threshold, 2 * zero.g.half_width);
        bool in = std::abs(r.probability.value - want) <= r.probability.ci_halfwidth;
        oracle_ok = oracle_ok && in;
        detail += "eps0 L=" + std::to_string(L) + ":" + num(r.probability.value) + "vs" + num(want) + " ";
    }
    return {decreasing && oracle_ok, detail + (decreasing ? "" : "not decreasing in L")};
}

// 10 ------------------------------------------------------------------------
Outcome reproducibility_check() {
    const std::vector<std::pair<std::string, std::string>> runs{
        {"r-identities", "kind = \"identities\"\ntrials = 20\n[params]\nmax_radius = 4\n"},
        {"r-wegner", "kind = \"wegner\"\ntrials = 3000\n[params]\nmode = \"both\"\nN = 4\nsamples = 3\n"},
        {"r-exclusion", "kind = \"exclusion\"\ntrials = 10\n[params]\nN0 = 2\nN = 5\nconstraint_sets = 3\n"},
        {"r-dynamics", "kind = \"dynamics\"\ntrials = 3\n[params]\nT_short = 10.0\nT_long = 40.0\n"},
        {"r-localization", "kind = \"localization\"\ntrials = 4\n[params]\nN = 6\n"},
        {"r-msa", "kind = \"msa\"\ntrials = 2\n[schedule]\nN0 = 4\nlevels = 2\n[params]\ntheta_points = [16, 4]\n"},
    };
    bool ok = true;
    std::string detail;
    for (const auto& [dir, toml] : runs) {
        auto cfg = config(toml, dir);
        cfg.seed = 17;
        cfg.workers = 1;
        run_experiment(cfg);
        auto a = replay(g_tmp / dir, 3);
        auto b = replay(g_tmp / dir, 1);
        ok = ok && a.ok && b.ok;
        detail += dir.substr(2) + (a.ok && b.ok ? ":ok " : ":DIFF ");
    }
    // tampering must be detected
    fs::path csv = g_tmp / "r-localization" / "localization.csv";
    std::string text;
    {
        std::ifstream f(csv, std::ios::binary);
        std::stringstream ss;
        ss << f.rdbuf();
        text = ss.str();
    }
    text.insert(text.size() - 1, "0");
    std::ofstream(csv, std::ios::binary) << text;
    bool caught = !replay(g_tmp / "r-localization").ok;
    return {ok && caught, detail + (caught ? "tamper detected" : "tamper missed")};
}

}  // namespace

int main(int argc, char** argv) {
    // optional criterion ids to run a subset
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    std::random_device rd;
    g_tmp = fs::temp_directory_path() / ("qploc-acceptance-" + std::to_string(rd()));
    fs::create_directories(g_tmp);

    struct Criterion {
        int id;
        const char* name;
        double budget;  // seconds
        std::function<Outcome()> run;
    };
    const Criterion criteria[] = {
        {1, "exact-identities", 60, exact_identities},
        {2, "wegner-theta", 60, wegner_theta_check},
        {3, "wegner-x", 120, wegner_x_check},
        {4, "resolvent-expansion", 60, resolvent_expansion_check},
        {5, "melnikov-exclusion", 300, melnikov_check},
        {6, "free-dynamics-oracle", 60, free_dynamics_check},
        {7, "localization-contrast", 600, contrast_check},
        {8, "msa-census", 900, msa_check},
        {9, "eigenvalue-separation", 300, separation_check},
        {10, "reproducibility", 600, reproducibility_check},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        if (!only.empty() && !only.count(c.id)) continue;
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        bool in_time = secs <= c.budget;
        bool pass = o.pass && in_time;
        failures += !pass;
        std::printf("%s %d %s: %s [%.1fs / %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                    c.budget, in_time ? "" : " over budget");
        std::fflush(stdout);
    }
    std::error_code ec;
    fs::remove_all(g_tmp, ec);
    return failures == 0 ? 0 : 1;
}
