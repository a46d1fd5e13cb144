#include "measure.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>

#include "common.hpp"
#include "frequency.hpp"
#include "greens.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace qploc {

namespace {

nlohmann::json num(double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); }

// disorder window covering the j-projection of a region
std::pair<Site, Site> j_window(const Region& region, int d) {
    require(!region.empty(), "empty region");
    Site lo = region.site(0).head(d), hi = lo;
    for (const Site& s : region.sites())
        for (int k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], s[k]);
            hi[k] = std::max(hi[k], s[k]);
        }
    return {lo, hi};
}

double union_length(std::vector<std::pair<double, double>> iv) {
    std::sort(iv.begin(), iv.end());
    double len = 0, lo = 0, hi = 0;
    bool open = false;
    for (auto [a, b] : iv) {
        if (!(a < b)) continue;
        if (open && a <= hi) {
            hi = std::max(hi, b);
            continue;
        }
        if (open) len += hi - lo;
        lo = a;
        hi = b;
        open = true;
    }
    if (open) len += hi - lo;
    return len;
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

void require_box(const Region& r) {
    require(r.kind() == RegionKind::Box, "bad-set measures are defined for boxes");
}

}  // namespace

nlohmann::json MeasureEstimate::to_json() const {
    return {{"value", value}, {"ci_halfwidth", ci_halfwidth}, {"trials", trials}, {"bound", num(bound)},
            {"exact", exact}, {"reliable", reliable},         {"pass", pass()}};
}

MeasureEstimate binomial_estimate(std::size_t hits, std::size_t trials) {
    MeasureEstimate m;
    m.trials = trials;
    if (trials == 0) {
        m.reliable = false;
        return m;
    }
    m.value = static_cast<double>(hits) / trials;
    Interval ci = wilson(hits, trials);
    m.ci_halfwidth = std::max(m.value - ci.lo, ci.hi - m.value);
    m.reliable = trials >= 30;
    return m;
}

MeasureEstimate wegner_theta(const OperatorSpec& spec, std::shared_ptr<const Region> region,
                             std::shared_ptr<const DisorderSample> sample, const Frequency& omega, double E,
                             double kappa, ThetaRange range, const WegnerThetaOptions& opt) {
    require(spec.model == Model::Schrodinger, "the theta Wegner estimate holds only for the Schrodinger model");
    require(kappa > 0.0, "kappa must be positive");
    require(range.hi > range.lo, "empty theta range");
    MeasureEstimate m;
    m.bound = opt.C * kappa * static_cast<double>(region->size());
    if (region->size() <= static_cast<std::size_t>(kDenseCap)) {
        // spec H(theta) = spec H(0) + theta, so the set is a union of intervals
        Eigen::VectorXd lam = eigenvalues(assemble(spec, region, sample, omega, 0.0).dense());
        std::vector<std::pair<double, double>> iv;
        for (double l : lam)
            iv.emplace_back(std::max(range.lo, E - l - kappa), std::min(range.hi, E - l + kappa));
        m.value = union_length(iv);
        m.exact = true;
        m.trials = lam.size();
        return m;
    }
    require(opt.grid_points >= 1, "theta grid needs at least one point");
    const double width = range.hi - range.lo;
    std::size_t hits = 0;
    for (int t = 0; t < opt.grid_points; ++t) {
        double th = range.lo + width * (t + 0.5) / opt.grid_points;
        hits += resolvent_norm(assemble(spec, region, sample, omega, th), E) * kappa >= 1.0;
    }
    m.value = width * static_cast<double>(hits) / opt.grid_points;
    m.ci_halfwidth = width / opt.grid_points;
    m.trials = opt.grid_points;
    return m;
}

MeasureEstimate wegner_x(const OperatorSpec& spec, const Region& region, const Frequency& omega, double theta,
                         double E, double kappa, const McOptions& mc, double C) {
    spec.validate();
    require(kappa >= 0.0, "kappa must be non-negative");
    require(mc.trials >= 1, "need at least one trial");
    auto reg = std::make_shared<const Region>(region);
    auto [lo, hi] = j_window(region, spec.dims.d);
    auto hits = parallel_map(static_cast<std::size_t>(mc.trials), mc.workers, [&](std::size_t t) {
        if (kappa == 0.0) return 0;
        auto smp = std::make_shared<const DisorderSample>(
            sample_disorder(spec.g, lo, hi, derive_seed(mc.seed, {0x3E6u, t})));
        return resolvent_norm(assemble(spec, reg, smp, omega, theta), E) * kappa >= 1.0 ? 1 : 0;
    });
    std::size_t k = 0;
    for (int h : hits) k += h;
    MeasureEstimate m = binomial_estimate(k, hits.size());
    m.bound = C * kappa * static_cast<double>(region.size()) * spec.g.density_bound();
    return m;
}

std::size_t eigenvalue_count(const HamiltonianMatrix& H, double E) {
    if (H.size() <= static_cast<std::size_t>(kDenseCap)) {
        Eigen::VectorXd lam = eigenvalues(H.dense());
        return static_cast<std::size_t>((lam.array() <= E).count());
    }
    // Sylvester inertia of H - E
    Eigen::SparseMatrix<double> A = H.matrix;
    for (int k = 0; k < A.rows(); ++k) A.coeffRef(k, k) -= E;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) fail(ErrorCode::NearSingular, "LDL^T of H - E failed");
    return static_cast<std::size_t>((ldlt.vectorD().array() < 0.0).count());
}

int counting_shift_check(const OperatorSpec& spec, std::shared_ptr<const Region> region,
                         std::shared_ptr<const DisorderSample> sample, const Frequency& omega, double theta,
                         double E, double kappa) {
    require(spec.model == Model::Schrodinger, "counting shift holds only for the Schrodinger model");
    auto H = assemble(spec, region, sample, omega, theta);
    int worst = 0;
    for (double s : {kappa, -kappa}) {
        auto a = static_cast<long>(eigenvalue_count(H, E + s));
        auto b = static_cast<long>(eigenvalue_count(assemble(spec, region, sample, omega, theta - s), E));
        worst = std::max(worst, static_cast<int>(std::labs(a - b)));
    }
    return worst;
}

MeasureEstimate badset_measure_theta(const OperatorSpec& spec, std::shared_ptr<const Region> box,
                                     std::shared_ptr<const DisorderSample> sample, const Frequency& omega, double E,
                                     double gamma, double sigma, int grid_points) {
    require_box(*box);
    require(grid_points >= 1, "theta grid needs at least one point");
    const int N = box->box_descriptor().radius;
    std::vector<double> thetas(grid_points);
    for (int t = 0; t < grid_points; ++t) thetas[t] = static_cast<double>(t) / grid_points;
    auto reps = classify_theta_sweep(spec, box, sample, omega, thetas, E, N, gamma, sigma);
    std::size_t bad = 0;
    for (const auto& r : reps) bad += !r.good;
    MeasureEstimate m;
    m.trials = grid_points;
    m.value = static_cast<double>(bad) / grid_points;
    m.ci_halfwidth = 1.0 / grid_points;
    m.bound = std::exp(-std::pow(static_cast<double>(N), sigma / 2.0));
    return m;
}

MeasureEstimate badset_probability_x(const OperatorSpec& spec, const Region& box, const Frequency& omega,
                                     double theta, double E, double gamma, double sigma, const McOptions& mc) {
    spec.validate();
    require_box(box);
    require(mc.trials >= 1, "need at least one trial");
    const int N = box.box_descriptor().radius;
    auto reg = std::make_shared<const Region>(box);
    auto [lo, hi] = j_window(box, spec.dims.d);
    auto bad = parallel_map(static_cast<std::size_t>(mc.trials), mc.workers, [&](std::size_t t) {
        auto smp = std::make_shared<const DisorderSample>(
            sample_disorder(spec.g, lo, hi, derive_seed(mc.seed, {0xBAD5u, t})));
        return classify_hamiltonian(assemble(spec, reg, smp, omega, theta), E, N, gamma, sigma).good ? 0 : 1;
    });
    std::size_t k = 0;
    for (int b : bad) k += b;
    return binomial_estimate(k, bad.size());
}

nlohmann::json ScaleSweep::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t k = 0; k < scales.size(); ++k) {
        auto r = estimates[k].to_json();
        r["N"] = scales[k];
        rows.push_back(r);
    }
    return {{"rows", rows}, {"p_fit", num(p_fit)}};
}

ScaleSweep badset_probability_sweep(const OperatorSpec& spec, const std::vector<int>& scales,
                                    const Frequency& omega, double theta, double E, double gamma, double sigma,
                                    const McOptions& mc) {
    ScaleSweep sw;
    LineAccumulator acc;
    for (int N : scales) {
        auto est = badset_probability_x(spec, make_box(spec.dims, Site(spec.dims.total()), N), omega, theta, E,
                                        gamma, sigma, mc);
        if (est.value > 0) acc.add(std::log(static_cast<double>(N)), std::log(est.value));
        sw.scales.push_back(N);
        sw.estimates.push_back(est);
    }
    if (acc.count() >= 2) sw.p_fit = -acc.fit().slope;
    return sw;
}

nlohmann::json SeparationResult::to_json() const {
    return {{"L", L},           {"beta", beta},           {"threshold", threshold},
            {"trials", trials}, {"violations", violations}, {"probability", probability.to_json()}};
}

SeparationResult eigenvalue_separation(const OperatorSpec& spec, int L, double beta, const McOptions& mc) {
    spec.validate();
    require(L >= 1, "box radius must be at least 1");
    require(beta > 0.0, "beta must be positive");
    require(mc.trials >= 1, "need at least one trial");
    const int d = spec.dims.d;
    Site ci(d), cj(d), lo(d), hi(d);
    cj[0] = 2 * L + 1;
    for (int k = 0; k < d; ++k) lo[k] = -L, hi[k] = L;
    hi[0] = 3 * L + 1;
    SeparationResult r;
    r.L = L;
    r.beta = beta;
    r.threshold = std::exp(-std::pow(static_cast<double>(L), beta));
    r.min_distances = parallel_map(static_cast<std::size_t>(mc.trials), mc.workers, [&](std::size_t t) {
        auto smp = sample_disorder(spec.g, lo, hi, derive_seed(mc.seed, {0x5E9u, t}));
        auto a = j_box_spectrum(spec, smp, ci, L);
        auto b = j_box_spectrum(spec, smp, cj, L);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        double best = std::numeric_limits<double>::infinity();
        std::size_t p = 0;
        for (double x : a) {
            while (p < b.size() && b[p] < x) ++p;
            if (p < b.size()) best = std::min(best, b[p] - x);
            if (p > 0) best = std::min(best, x - b[p - 1]);
        }
        return best;
    });
    r.trials = r.min_distances.size();
    for (double m : r.min_distances) r.violations += m < r.threshold;
    r.probability = binomial_estimate(r.violations, r.trials);
    return r;
}

double separation_oracle(int n, double t, double width) {
    require(n >= 1 && width > 0.0 && t >= 0.0, "invalid oracle arguments");
    // label runs of the merged order are independent of the spacings;
    // k given spacings all exceed t with probability (1 - k t / width)_+^{2n}
    auto lbinom = [](int a, int b) { return std::lgamma(a + 1.0) - std::lgamma(b + 1.0) - std::lgamma(a - b + 1.0); };
    const double ltotal = lbinom(2 * n, n);
    auto spaced = [&](int runs) {
        double x = 1.0 - (runs - 1) * t / width;
        return x > 0 ? std::pow(x, 2 * n) : 0.0;
    };
    double ok = 0.0;
    for (int r = 1; r <= n; ++r) {
        ok += 2.0 * std::exp(2 * lbinom(n - 1, r - 1) - ltotal) * spaced(2 * r);
        if (r < n) ok += 2.0 * std::exp(lbinom(n - 1, r - 1) + lbinom(n - 1, r) - ltotal) * spaced(2 * r + 1);
    }
    return 1.0 - ok;
}

}  // namespace qploc
