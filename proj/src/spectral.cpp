#include "spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace qploc {

namespace {

int j_distance(const Site& a, const Site& b, int d) {
    int s = 0;
    for (int k = 0; k < d; ++k) s += std::abs(a[k] - b[k]);
    return s;
}

}  // namespace

std::string EigenPair::csv_header() { return "value,loc_center,decay_rate,participation"; }

std::string EigenPair::csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << value << ",\"" << loc_center.str() << "\"," << decay_rate << ',' << participation;
    return os.str();
}

std::vector<EigenPair> eigensolve(const HamiltonianMatrix& H) {
    if (H.size() > static_cast<std::size_t>(kDenseCap))
        fail(ErrorCode::CapExceeded, "eigensolve: " + std::to_string(H.size()) + " sites exceed the dense cap");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.dense());
    if (es.info() != Eigen::Success) fail(ErrorCode::Internal, "eigensolver did not converge");
    std::vector<EigenPair> out(H.size());
    for (std::size_t k = 0; k < H.size(); ++k) {
        EigenPair& p = out[k];
        p.value = es.eigenvalues()[k];
        p.vector = es.eigenvectors().col(k);
        p.region = H.region;
        Eigen::Index arg;
        p.vector.cwiseAbs().maxCoeff(&arg);
        p.loc_center = H.region->site(arg);
        p.participation = 1.0 / p.vector.array().pow(4).sum();
        p.decay_rate = decay_profile(p).rate;
    }
    return out;
}

DecayFit decay_profile(const EigenPair& pair, DecayDirection dir) {
    require(pair.region != nullptr, "eigenpair has no region");
    const Region& R = *pair.region;
    const int d = R.dims().d;
    auto dist = [&](const Site& s) {
        return dir == DecayDirection::J ? j_distance(s, pair.loc_center, d) : l1_distance(s, pair.loc_center);
    };
    std::map<int, double> shells;
    for (std::size_t a = 0; a < R.size(); ++a) {
        double& m = shells[dist(R.site(a))];
        m = std::max(m, std::abs(pair.vector[a]));
    }
    if (shells.size() < 4) fail(ErrorCode::InvalidArgument, "decay fit needs at least 4 distinct radii");
    const double peak = pair.vector.cwiseAbs().maxCoeff();
    DecayFit fit;
    LineAccumulator acc;
    for (auto [r, m] : shells)
        if (m > 1e-13 * peak) {
            fit.radii.push_back(r);
            fit.shell_max.push_back(m);
            acc.add(r, std::log(m));
        }
    if (fit.radii.size() < 2) {
        fit.rate = std::numeric_limits<double>::infinity();
        fit.residual = 0.0;
        return fit;
    }
    LineFit lf = acc.fit();
    fit.rate = -lf.slope;
    fit.residual = lf.rms_residual;
    return fit;
}

bool schnol_bound_check(const Eigen::VectorXd& psi, const Region& region, double c) {
    require(static_cast<std::size_t>(psi.size()) == region.size(), "vector and region sizes differ");
    for (std::size_t a = 0; a < region.size(); ++a)
        if (std::abs(psi[a]) > 1.0 + std::pow(static_cast<double>(region.site(a).l1()), c)) return false;
    return true;
}

bool schnol_bound_check(const EigenPair& pair, double c) {
    require(pair.region != nullptr, "eigenpair has no region");
    return schnol_bound_check(pair.vector, *pair.region, c);
}

nlohmann::json LocalizationCensus::to_json() const {
    return {{"pairs", pairs},
            {"localized", localized},
            {"fraction", fraction},
            {"ci", {ci.lo, ci.hi}},
            {"per_sample_pairs", per_sample_pairs},
            {"per_sample_localized", per_sample_localized},
            {"median_rate", std::isfinite(median_rate) ? nlohmann::json(median_rate) : nlohmann::json("inf")}};
}

LocalizationCensus localization_census(const OperatorSpec& spec, const Region& box, const Frequency& omega,
                                       double theta, const LocalizationOptions& opt) {
    spec.validate();
    validate_frequency(omega, spec.dims.nu);
    require(opt.samples >= 1, "need at least one sample");
    require(opt.E_lo <= opt.E_hi, "empty energy window");
    const int d = spec.dims.d;
    auto reg = std::make_shared<const Region>(box);
    Site lo = box.site(0).head(d), hi = lo;
    for (const Site& s : box.sites())
        for (int k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], s[k]);
            hi[k] = std::max(hi[k], s[k]);
        }
    struct Tally {
        std::size_t pairs = 0, localized = 0;
        std::vector<double> rates;
    };
    auto tallies = parallel_map(static_cast<std::size_t>(opt.samples), opt.workers, [&](std::size_t s) {
        auto smp = std::make_shared<const DisorderSample>(
            sample_disorder(spec.g, lo, hi, derive_seed(opt.seed, {0x10Cu, s})));
        Tally t;
        for (const EigenPair& p : eigensolve(assemble(spec, reg, smp, omega, theta))) {
            if (p.value < opt.E_lo || p.value > opt.E_hi) continue;
            ++t.pairs;
            t.rates.push_back(p.decay_rate);
            t.localized += p.decay_rate >= opt.gamma_min && p.participation <= opt.pr_max;
        }
        return t;
    });
    LocalizationCensus c;
    std::vector<double> rates;
    for (const Tally& t : tallies) {
        c.pairs += t.pairs;
        c.localized += t.localized;
        c.per_sample_pairs.push_back(t.pairs);
        c.per_sample_localized.push_back(t.localized);
        rates.insert(rates.end(), t.rates.begin(), t.rates.end());
    }
    c.fraction = c.pairs ? static_cast<double>(c.localized) / c.pairs : 1.0;
    c.ci = c.pairs ? wilson(c.localized, c.pairs) : Interval{0.0, 1.0};
    if (!rates.empty()) {
        std::nth_element(rates.begin(), rates.begin() + rates.size() / 2, rates.end());
        c.median_rate = rates[rates.size() / 2];
    }
    return c;
}

}  // namespace qploc
