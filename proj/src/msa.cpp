#include "msa.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace qploc {

namespace {

double box_sites(int N, int D) { return std::pow(2.0 * N + 1.0, D); }

nlohmann::json finite_or_null(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

}  // namespace

std::string to_string(ScheduleMode m) { return m == ScheduleMode::Paper ? "paper" : "vdk"; }

ScheduleMode parse_schedule_mode(const std::string& s) {
    if (s == "paper") return ScheduleMode::Paper;
    if (s == "vdk" || s == "vDK") return ScheduleMode::VDK;
    fail(ErrorCode::Config, "unknown schedule mode '" + s + "' (paper | vdk)");
}

std::size_t site_cap(Dims dims) { return dims.nu == 1 ? 100000 : static_cast<std::size_t>(kDenseCap); }

nlohmann::json ScaleSchedule::to_json() const {
    return {{"N0", N0},         {"C", C},         {"alpha", alpha},   {"sigma", sigma},
            {"gamma0", gamma0}, {"kappa", kappa}, {"levels", levels}, {"mode", to_string(mode)},
            {"scales", scales}, {"gammas", gammas}, {"capped", capped}};
}

int initial_scale(double delta, double c, double sigma) {
    double cd = c * delta;
    require(cd > 0.0 && cd < 1.0, "initial scale needs 0 < c*delta < 1");
    require(sigma > 0.0, "sigma must be positive");
    return static_cast<int>(std::floor(std::pow(std::abs(std::log(cd)), 1.0 / sigma))) + 1;
}

int next_scale(int N, double exponent) {
    require(N >= 1 && exponent > 1.0, "next scale needs N >= 1 and exponent > 1");
    double next = std::floor(std::pow(static_cast<double>(N), exponent)) + 1.0;
    if (next > 1e9) fail(ErrorCode::CapExceeded, "scale overflow");
    return static_cast<int>(next);
}

ScaleSchedule schedule_from(int N0, double sigma, double exponent, int levels, ScheduleMode mode, Dims dims,
                            double gamma0, double kappa) {
    require(N0 >= 1, "initial scale must be at least 1");
    require(levels >= 1, "schedule needs at least one level");
    require(sigma > 0.0 && sigma < 1.0, "sigma must lie in (0,1)");
    if (mode == ScheduleMode::Paper)
        require(exponent > 1.0, "paper schedule needs C > 1");
    else
        require(exponent > 1.0 && exponent < 2.0, "vDK schedule needs 1 < alpha < 2");
    ScaleSchedule s;
    s.N0 = N0;
    s.sigma = sigma;
    (mode == ScheduleMode::Paper ? s.C : s.alpha) = exponent;
    s.gamma0 = gamma0;
    s.kappa = kappa;
    s.levels = levels;
    s.mode = mode;
    const double cap = static_cast<double>(site_cap(dims));
    if (box_sites(N0, dims.total()) > cap)
        fail(ErrorCode::CapExceeded, "initial scale " + std::to_string(N0) + " exceeds the site cap");
    s.scales.push_back(N0);
    s.gammas.push_back(gamma0);
    while (static_cast<int>(s.scales.size()) < levels) {
        double next = std::floor(std::pow(static_cast<double>(s.scales.back()), exponent)) + 1.0;
        if (next > 1e6 || box_sites(static_cast<int>(next), dims.total()) > cap) {
            s.capped = true;
            break;
        }
        int N = static_cast<int>(next);
        s.scales.push_back(N);
        s.gammas.push_back(s.gammas.back() - std::pow(static_cast<double>(N), -kappa));
    }
    return s;
}

ScaleSchedule schedule(double delta, double c, double sigma, double exponent, int levels, ScheduleMode mode,
                       Dims dims, double gamma0, double kappa) {
    return schedule_from(initial_scale(delta, c, sigma), sigma, exponent, levels, mode, dims, gamma0, kappa);
}

nlohmann::json ScaleCensus::to_json() const {
    return {{"scale", scale},
            {"trials", trials},
            {"gamma", gamma},
            {"good_fraction", good_fraction},
            {"good_ci", {good_ci.lo, good_ci.hi}},
            {"gamma_mean", finite_or_null(gamma_mean)},
            {"gamma_degradation", finite_or_null(gamma_degradation)},
            {"max_disjoint_bad", max_disjoint_bad}};
}

bool MsaPrecondition::satisfied() const {
    return diophantine && std::none_of(exclusion.begin(), exclusion.end(),
                                       [](const std::string& s) { return s == "excluded"; });
}

nlohmann::json MsaPrecondition::to_json() const {
    return {{"diophantine", diophantine}, {"exclusion", exclusion}, {"satisfied", satisfied()}};
}

nlohmann::json MsaResult::to_json() const {
    nlohmann::json sc = nlohmann::json::array();
    for (const auto& c : scales) sc.push_back(c.to_json());
    return {{"schedule", schedule.to_json()},
            {"scales", sc},
            {"precondition", precondition.to_json()},
            {"kappa_fit", finite_or_null(kappa_fit)}};
}

MsaResult msa_run(const OperatorSpec& spec, const ScaleSchedule& sched, const Frequency& omega, const MsaConfig& cfg) {
    spec.validate();
    validate_frequency(omega, spec.dims.nu);
    require(!sched.scales.empty(), "empty schedule");
    require(cfg.samples >= 1, "msa needs at least one sample");
    require(!cfg.theta_points.empty(), "theta grid is empty");
    for (int t : cfg.theta_points) require(t >= 1, "theta grid needs at least one point");
    const int d = spec.dims.d;
    const int top = sched.scales.back();
    const double sigma = sched.sigma;

    MsaResult res;
    res.schedule = sched;
    std::vector<DisorderSample> samples;
    for (int s = 0; s < cfg.samples; ++s)
        samples.push_back(sample_disorder(spec.g, d, top, derive_seed(cfg.seed, {0xD15Cu, static_cast<unsigned>(s)})));

    res.precondition.diophantine = diophantine_check(omega, cfg.diophantine);
    for (std::size_t k = 1; k < sched.scales.size(); ++k) {
        int Nk = sched.scales[k], Np = sched.scales[k - 1];
        auto spectra = spectra_of(j_box_spectra(spec, samples[0], Np, Nk));
        if (spec.model == Model::Schrodinger) {
            bool ex = pair_excluded(omega, spectra, Nk, pair_threshold(Np, sigma));
            res.precondition.exclusion.push_back(ex ? "excluded" : "accepted");
        } else {
            double K = 0;
            for (const auto& s : spectra) K += s.size();
            double work = K * K * std::pow(4.0 * Nk + 1.0, 2.0 * spec.dims.nu) / 4.0;
            if (work > 2e8) {
                res.precondition.exclusion.push_back("skipped");
            } else {
                bool ex = triple_excluded(omega, spectra, Nk, triple_threshold(Np, sigma));
                res.precondition.exclusion.push_back(ex ? "excluded" : "accepted");
            }
        }
    }

    for (std::size_t k = 0; k < sched.scales.size(); ++k) {
        const int N = sched.scales[k];
        const double gamma = sched.gammas[k];
        const int T = cfg.theta_points[std::min(k, cfg.theta_points.size() - 1)];
        auto box = std::make_shared<const Region>(make_box(spec.dims, Site(spec.dims.total()), N));
        auto per_sample = parallel_map(samples.size(), cfg.workers, [&](std::size_t s) {
            auto smp = std::make_shared<const DisorderSample>(samples[s]);
            std::vector<JBoxSpectrum> sub;
            if (k > 0 && cfg.subbox_census) sub = j_box_spectra(spec, *smp, sched.scales[k - 1], N);
            std::vector<double> thetas(T);
            for (int t = 0; t < T; ++t) thetas[t] = static_cast<double>(t) / T;
            auto reports = classify_theta_sweep(spec, box, smp, omega, thetas, cfg.E, N, gamma, sigma);
            std::vector<MsaTrial> out;
            for (int t = 0; t < T; ++t) {
                MsaTrial tr;
                tr.level = static_cast<int>(k);
                tr.N = N;
                tr.sample = static_cast<int>(s);
                tr.theta_index = t;
                tr.theta = thetas[t];
                tr.report = std::move(reports[t]);
                if (!sub.empty())
                    tr.bad_subboxes = static_cast<int>(
                        census_bad_boxes(spec, sub, omega, tr.theta, cfg.E, sched.scales[k - 1], N, sigma).count);
                out.push_back(std::move(tr));
            }
            return out;
        });
        ScaleCensus c;
        c.scale = N;
        c.gamma = gamma;
        std::size_t good = 0;
        std::vector<double> fits;
        for (auto& v : per_sample)
            for (auto& tr : v) {
                ++c.trials;
                good += tr.report.good;
                if (std::isfinite(tr.report.gamma_fit)) fits.push_back(tr.report.gamma_fit);
                c.max_disjoint_bad = std::max(c.max_disjoint_bad, tr.bad_subboxes);
                res.trials.push_back(std::move(tr));
            }
        c.good_fraction = static_cast<double>(good) / c.trials;
        c.good_ci = wilson(good, c.trials);
        if (!fits.empty()) c.gamma_mean = mean(fits);
        if (k > 0) c.gamma_degradation = res.scales.back().gamma_mean - c.gamma_mean;
        res.scales.push_back(c);
    }

    // gamma - gamma' ~ N^{-kappa}
    LineAccumulator acc;
    for (const auto& c : res.scales)
        if (std::isfinite(c.gamma_degradation) && c.gamma_degradation > 0)
            acc.add(std::log(static_cast<double>(c.scale)), std::log(c.gamma_degradation));
    if (acc.count() == 1) {
        for (const auto& c : res.scales)
            if (std::isfinite(c.gamma_degradation) && c.gamma_degradation > 0)
                res.kappa_fit = -std::log(c.gamma_degradation) / std::log(static_cast<double>(c.scale));
    } else if (acc.count() >= 2) {
        res.kappa_fit = -acc.fit().slope;
    }
    return res;
}

// ---------------------------------------------------------------------------

nlohmann::json RegularityResult::to_json() const {
    return {{"successes", successes}, {"trials", trials}, {"estimate", estimate},
            {"ci", {ci.lo, ci.hi}},   {"p_fit", std::isfinite(p_fit) ? nlohmann::json(p_fit) : nlohmann::json("inf")}};
}

namespace {

bool box_regular(const OperatorSpec& spec, const Frequency& omega, std::shared_ptr<const Region> box,
                 std::shared_ptr<const DisorderSample> smp, double E, const RegularityOptions& opt) {
    auto H = assemble(spec, box, smp, omega, opt.theta);
    Decomposition dec = decompose(H.dense());
    double dist = (dec.values.array() - E).abs().minCoeff();
    if (!(dist > 0.0) || dist < 1e-12 * dec.norm() || dist < opt.tolerance) return false;
    Eigen::MatrixXd G = green(dec, E);
    const double window = opt.L / 4.0;
    const Region& R = *box;
    for (std::size_t a = 0; a < R.size(); ++a)
        for (std::size_t c = a + 1; c < R.size(); ++c) {
            int r = l1_distance(R.site(a), R.site(c));
            if (r > window && !(std::abs(G(a, c)) <= std::exp(-opt.m * r))) return false;
        }
    return true;
}

}  // namespace

RegularityResult regularity_probability(const OperatorSpec& spec, const Frequency& omega,
                                        const RegularityOptions& opt) {
    spec.validate();
    validate_frequency(omega, spec.dims.nu);
    require(opt.trials >= 1, "regularity estimate needs at least one trial");
    require(opt.L >= 1, "box radius must be at least 1");
    require(!opt.energies.empty(), "energy grid is empty");
    const int d = spec.dims.d, D = spec.dims.total();
    Site ci(D), cj(D);
    cj[0] = 2 * opt.L + 1;
    auto bi = std::make_shared<const Region>(make_box(spec.dims, ci, opt.L));
    auto bj = std::make_shared<const Region>(make_box(spec.dims, cj, opt.L));
    Site lo(d), hi(d);
    for (int k = 0; k < d; ++k) lo[k] = -opt.L, hi[k] = opt.L;
    hi[0] = 3 * opt.L + 1;
    auto ok = parallel_map(static_cast<std::size_t>(opt.trials), opt.workers, [&](std::size_t t) {
        auto smp = std::make_shared<const DisorderSample>(
            sample_disorder(spec.g, lo, hi, derive_seed(opt.seed, {0x2E6u, t})));
        for (double E : opt.energies)
            if (!box_regular(spec, omega, bi, smp, E, opt) && !box_regular(spec, omega, bj, smp, E, opt)) return 0;
        return 1;
    });
    RegularityResult r;
    r.trials = ok.size();
    for (int v : ok) r.successes += v;
    r.estimate = static_cast<double>(r.successes) / r.trials;
    r.ci = wilson(r.successes, r.trials);
    r.p_fit = r.estimate < 1.0 ? -std::log(1.0 - r.estimate) / (2.0 * std::log(static_cast<double>(opt.L)))
                               : std::numeric_limits<double>::infinity();
    return r;
}

double regularity_probability_exact(const OperatorSpec& spec, const Frequency& omega, const RegularityOptions& opt) {
    require(spec.eps == 0.0 && (spec.delta == 0.0 || !spec.drive_enabled),
            "closed form needs eps = 0 and no drive");
    require(opt.energies.size() == 1, "closed form is for a single energy");
    const int d = spec.dims.d, nu = spec.dims.nu;
    const double w = spec.g.half_width, E = opt.energies[0];
    // a site (j, n) is resonant when v_j falls in (E - f(n) - tau, E - f(n) + tau)
    double tau = opt.tolerance;
    std::vector<Interval> bad;
    Region nbox = make_box({nu, 0}, Site(nu), opt.L);
    for (const Site& n : nbox.sites()) {
        double f = mode_energy(spec.model, omega, n, opt.theta);
        double a = std::max(-w, E - f - tau), b = std::min(w, E - f + tau);
        if (a < b) bad.push_back({a, b});
    }
    std::sort(bad.begin(), bad.end(), [](const Interval& x, const Interval& y) { return x.lo < y.lo; });
    double len = 0, lo = -w, hi = -w;
    for (const Interval& iv : bad) {
        if (iv.lo > hi) {
            len += hi - lo;
            lo = iv.lo;
            hi = iv.hi;
        } else {
            hi = std::max(hi, iv.hi);
        }
    }
    len += hi - lo;
    double site_ok = 1.0 - len / (2.0 * w);
    double q = std::pow(site_ok, std::pow(2.0 * opt.L + 1.0, d));
    return 1.0 - (1.0 - q) * (1.0 - q);
}

// ---------------------------------------------------------------------------

nlohmann::json DoubleResonanceResult::to_json() const {
    auto f = [&](std::size_t k) { return trials ? static_cast<double>(k) / trials : 0.0; };
    return {{"trials", trials},
            {"resonant", resonant},
            {"bad", bad},
            {"joint", joint},
            {"resonant_frequency", f(resonant)},
            {"bad_frequency", f(bad)},
            {"joint_frequency", f(joint)},
            {"resonant_ci", {resonant_ci.lo, resonant_ci.hi}},
            {"bad_ci", {bad_ci.lo, bad_ci.hi}},
            {"joint_ci", {joint_ci.lo, joint_ci.hi}},
            {"product", product},
            {"bound", bound}};
}

DoubleResonanceResult double_resonance_probe(const OperatorSpec& spec, const Frequency& omega,
                                             const DoubleResonanceOptions& opt) {
    spec.validate();
    validate_frequency(omega, spec.dims.nu);
    require(opt.N >= 1, "small scale must be at least 1");
    require(opt.Nbar >= opt.N, "large scale must not be below the small scale");
    require(opt.trials >= 1, "probe needs at least one trial");
    const int d = spec.dims.d, D = spec.dims.total();
    auto big = std::make_shared<const Region>(make_box(spec.dims, Site(D), opt.Nbar));
    Site far(D);
    far[0] = opt.Nbar + opt.N + 1;  // j-projections of the two boxes are disjoint
    auto small = std::make_shared<const Region>(make_box(spec.dims, far, opt.N));
    Site lo(d), hi(d);
    for (int k = 0; k < d; ++k) lo[k] = -opt.Nbar, hi[k] = opt.Nbar;
    hi[0] = opt.Nbar + 2 * opt.N + 1;
    const double threshold = std::exp(opt.Cbar * opt.N);
    auto flags = parallel_map(static_cast<std::size_t>(opt.trials), opt.workers, [&](std::size_t t) {
        auto smp = std::make_shared<const DisorderSample>(
            sample_disorder(spec.g, lo, hi, derive_seed(opt.seed, {0xD0Bu, t})));
        double rn = resolvent_norm(assemble(spec, big, smp, omega, opt.theta), opt.E);
        bool res = rn >= threshold;
        auto rep = classify_hamiltonian(assemble(spec, small, smp, omega, opt.theta), opt.E, opt.N, opt.gamma,
                                        opt.sigma);
        return std::make_pair(res, !rep.good);
    });
    DoubleResonanceResult r;
    r.trials = flags.size();
    for (auto [res, bad] : flags) {
        r.resonant += res;
        r.bad += bad;
        r.joint += res && bad;
    }
    r.resonant_ci = wilson(r.resonant, r.trials);
    r.bad_ci = wilson(r.bad, r.trials);
    r.joint_ci = wilson(r.joint, r.trials);
    double pr = static_cast<double>(r.resonant) / r.trials, pb = static_cast<double>(r.bad) / r.trials;
    r.product = pr * pb;
    r.bound = r.product + 3.0 * std::sqrt(r.product * (1.0 - r.product) / r.trials);
    return r;
}

}  // namespace qploc
