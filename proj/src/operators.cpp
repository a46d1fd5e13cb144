#include "operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "rng.hpp"

namespace qploc {

std::string to_string(Model m) { return m == Model::Schrodinger ? "schrodinger" : "wave"; }

Model parse_model(const std::string& s) {
    if (s == "schrodinger" || s == "schroedinger") return Model::Schrodinger;
    if (s == "wave") return Model::Wave;
    fail(ErrorCode::InvalidArgument, "unknown model '" + s + "'");
}

double Distribution::draw(std::uint64_t bits) const { return -half_width + 2.0 * half_width * to_unit(bits); }

std::string Distribution::name() const {
    if (half_width == 1.0) return "uniform";
    char buf[64];
    std::snprintf(buf, sizeof buf, "uniform:%.17g", half_width);
    return buf;
}

Distribution Distribution::parse(const std::string& s) {
    Distribution g;
    if (s == "uniform") return g;
    if (s.rfind("uniform:", 0) == 0) {
        try {
            g.half_width = std::stod(s.substr(8));
        } catch (const std::exception&) {
            fail(ErrorCode::InvalidArgument, "bad uniform width in '" + s + "'");
        }
        require(g.half_width > 0 && g.half_width <= 1.0, "uniform half width must lie in (0,1]");
        return g;
    }
    fail(ErrorCode::InvalidArgument, "unsupported distribution '" + s + "'");
}

std::string to_string(DriveProfile p) { return p == DriveProfile::Exponential ? "exponential" : "saturating"; }

DriveProfile parse_drive_profile(const std::string& s) {
    if (s == "exponential") return DriveProfile::Exponential;
    if (s == "saturating") return DriveProfile::Saturating;
    fail(ErrorCode::InvalidArgument, "unknown drive profile '" + s + "'");
}

double OperatorSpec::drive(int /*k*/, const Site& j) const {
    double base = delta * std::exp(-b * j.l1()) * drive_factor;
    return profile == DriveProfile::Exponential ? base : 2.0 * base;
}

double OperatorSpec::drive_row_sum(const Site& j) const {
    double s = 0;
    for (int k = 0; k < dims.nu; ++k) s += std::abs(drive(k, j));
    return s;
}

void OperatorSpec::validate() const {
    if (dims.d < 1) fail(ErrorCode::Config, "d: must be a positive integer");
    if (dims.nu < 1) fail(ErrorCode::Config, "nu: must be a positive integer");
    if (dims.total() > kMaxDim) fail(ErrorCode::Config, "d+nu: at most 6 supported");
    if (!(eps >= 0)) fail(ErrorCode::Config, "eps: must be non-negative");
    if (!(delta >= 0)) fail(ErrorCode::Config, "delta: must be non-negative");
    if (!(b > 0)) fail(ErrorCode::Config, "b: must be positive");
    if (!(g.half_width > 0 && g.half_width <= 1.0)) fail(ErrorCode::Config, "g: support must lie in [-1,1]");
}

nlohmann::json OperatorSpec::to_json() const {
    return {{"d", dims.d},
            {"nu", dims.nu},
            {"eps", eps},
            {"delta", delta},
            {"b", b},
            {"model", to_string(model)},
            {"g", g.name()},
            {"drive_profile", to_string(profile)}};
}

OperatorSpec OperatorSpec::from_json(const nlohmann::json& j) {
    OperatorSpec s;
    s.dims.d = j.value("d", 1);
    s.dims.nu = j.value("nu", 1);
    s.eps = j.value("eps", 0.01);
    s.delta = j.value("delta", 0.01);
    s.b = j.value("b", 1.0);
    s.model = parse_model(j.value("model", std::string("schrodinger")));
    s.g = Distribution::parse(j.value("g", std::string("uniform")));
    s.profile = parse_drive_profile(j.value("drive_profile", std::string("exponential")));
    return s;
}

void validate_frequency(const Frequency& w, int nu) {
    if (static_cast<int>(w.size()) != nu) fail(ErrorCode::Config, "omega: expected " + std::to_string(nu) + " components");
    for (double x : w)
        if (!(x > 0.0 && x <= 1.0)) fail(ErrorCode::Config, "omega: components must lie in (0,1]");
}

DisorderSample::DisorderSample(Distribution g, Site lo, Site hi, std::vector<double> values, std::uint64_t seed)
    : g_(g), lo_(lo), hi_(hi), values_(std::move(values)), seed_(seed) {
    std::size_t n = 1;
    for (int i = 0; i < lo.dim(); ++i) {
        require(hi[i] >= lo[i], "disorder window is empty");
        n *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
    }
    require(values_.size() == n, "disorder values do not match the window");
}

bool DisorderSample::covers(const Site& j) const {
    if (j.dim() != lo_.dim()) return false;
    for (int i = 0; i < j.dim(); ++i)
        if (j[i] < lo_[i] || j[i] > hi_[i]) return false;
    return true;
}

std::size_t DisorderSample::offset(const Site& j) const {
    std::size_t off = 0;
    for (int i = 0; i < j.dim(); ++i) off = off * static_cast<std::size_t>(hi_[i] - lo_[i] + 1) + (j[i] - lo_[i]);
    return off;
}

double DisorderSample::value(const Site& j) const {
    if (!covers(j)) fail(ErrorCode::InvalidArgument, "site " + j.str() + " is outside the disorder window");
    return values_[offset(j)];
}

double disorder_value(const Distribution& g, std::uint64_t seed, const Site& j) {
    std::uint64_t h = splitmix64(seed ^ 0xd1b54a32d192ed03ULL);
    for (int c : j.coords()) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<std::int64_t>(c)));
    return g.draw(h);
}

DisorderSample sample_disorder(const Distribution& g, const Site& lo, const Site& hi, std::uint64_t seed) {
    require(lo.dim() == hi.dim(), "window corners differ in dimension");
    std::vector<double> vals;
    Site cur = lo;
    for (;;) {
        vals.push_back(disorder_value(g, seed, cur));
        int k = lo.dim() - 1;
        while (k >= 0 && cur[k] == hi[k]) {
            cur[k] = lo[k];
            --k;
        }
        if (k < 0) break;
        ++cur[k];
    }
    return DisorderSample(g, lo, hi, std::move(vals), seed);
}

DisorderSample sample_disorder(const Distribution& g, int d, int r, std::uint64_t seed) {
    Site lo(d), hi(d);
    for (int i = 0; i < d; ++i) {
        lo[i] = -r;
        hi[i] = r;
    }
    return sample_disorder(g, lo, hi, seed);
}

Eigen::MatrixXd HamiltonianMatrix::dense() const {
    if (matrix.rows() > kDenseCap)
        fail(ErrorCode::CapExceeded, "dense storage requested for " + std::to_string(matrix.rows()) + " sites");
    return Eigen::MatrixXd(matrix);
}

double mode_energy(Model m, const Frequency& w, const Site& n, double theta) {
    double x = theta;
    for (int k = 0; k < n.dim(); ++k) x += n[k] * w[k];
    return m == Model::Schrodinger ? x : x * x;
}

HamiltonianMatrix assemble(const OperatorSpec& spec, std::shared_ptr<const Region> region,
                           std::shared_ptr<const DisorderSample> sample, const Frequency& omega, double theta) {
    const Region& R = *region;
    int d = spec.dims.d, nu = spec.dims.nu;
    require(R.dims() == spec.dims, "region dimensions differ from the operator spec");
    require(static_cast<int>(omega.size()) == nu, "frequency vector has wrong length");
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(R.size() * (1 + 2 * (d + nu)));
    for (std::size_t a = 0; a < R.size(); ++a) {
        const Site& s = R.site(a);
        Site j = s.head(d), n = s.tail(nu);
        if (!sample->covers(j))
            fail(ErrorCode::InvalidArgument, "region site " + s.str() + " lies outside the disorder window");
        trip.emplace_back(a, a, mode_energy(spec.model, omega, n, theta) + sample->value(j));
        Site t = s;
        for (int k = 0; k < d + nu; ++k) {
            if (k >= d && !spec.drive_enabled) continue;
            double w = k < d ? spec.eps : spec.drive(k - d, j);
            for (int step : {1, -1}) {
                t[k] = s[k] + step;
                int c = R.index_of(t);
                if (c >= 0) trip.emplace_back(a, c, w);
            }
            t[k] = s[k];
        }
    }
    HamiltonianMatrix H;
    H.region = std::move(region);
    H.sample = std::move(sample);
    H.spec = spec;
    H.omega = omega;
    H.theta = theta;
    H.matrix.resize(R.size(), R.size());
    H.matrix.setFromTriplets(trip.begin(), trip.end());
    return H;
}

HamiltonianMatrix assemble(const OperatorSpec& spec, const Region& region, const DisorderSample& sample,
                           const Frequency& omega, double theta) {
    return assemble(spec, std::make_shared<const Region>(region), std::make_shared<const DisorderSample>(sample),
                    omega, theta);
}

SupportReport spectrum_support_check(const OperatorSpec& spec, const Region& region,
                                     const std::vector<DisorderSample>& samples, const Frequency& omega,
                                     double theta) {
    require(!samples.empty(), "spectrum support check needs at least one sample");
    int d = spec.dims.d, nu = spec.dims.nu;
    double dlo = std::numeric_limits<double>::infinity(), dhi = -dlo, widen = 0;
    for (const Site& s : region.sites()) {
        double e = mode_energy(spec.model, omega, s.tail(nu), theta);
        dlo = std::min(dlo, e);
        dhi = std::max(dhi, e);
        if (spec.drive_enabled) widen = std::max(widen, 2.0 * spec.drive_row_sum(s.head(d)));
    }
    SupportReport rep;
    double hop = 2.0 * d * spec.eps;
    rep.allowed_lo = dlo + spec.g.support_lo() - hop - widen;
    rep.allowed_hi = dhi + spec.g.support_hi() + hop + widen;
    rep.observed_lo = std::numeric_limits<double>::infinity();
    rep.observed_hi = -rep.observed_lo;
    auto shared = std::make_shared<const Region>(region);
    for (const auto& smp : samples) {
        auto H = assemble(spec, shared, std::make_shared<const DisorderSample>(smp), omega, theta);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.dense(), Eigen::EigenvaluesOnly);
        const double tol = 1e-12 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
        for (double ev : es.eigenvalues()) {
            ++rep.eigenvalues;
            rep.observed_lo = std::min(rep.observed_lo, ev);
            rep.observed_hi = std::max(rep.observed_hi, ev);
            if (ev < rep.allowed_lo - tol || ev > rep.allowed_hi + tol) ++rep.violations;
        }
    }
    return rep;
}

double theta_derivative_check(const OperatorSpec& spec, const Region& region, const DisorderSample& sample,
                              const Frequency& omega, double theta, double h, DifferenceScheme scheme) {
    require(h > 0, "difference step must be positive");
    auto R = std::make_shared<const Region>(region);
    auto S = std::make_shared<const DisorderSample>(sample);
    Eigen::MatrixXd plus = assemble(spec, R, S, omega, theta + h).dense();
    Eigen::MatrixXd base = scheme == DifferenceScheme::Central ? assemble(spec, R, S, omega, theta - h).dense()
                                                                : assemble(spec, R, S, omega, theta).dense();
    double span = scheme == DifferenceScheme::Central ? 2.0 * h : h;
    Eigen::MatrixXd fd = (plus - base) / span;
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(fd.rows(), fd.cols());
    int nu = spec.dims.nu;
    for (std::size_t a = 0; a < region.size(); ++a) {
        double x = mode_energy(Model::Schrodinger, omega, region.site(a).tail(nu), theta);
        expected(a, a) = spec.model == Model::Schrodinger ? 1.0 : 2.0 * x;
    }
    return (fd - expected).cwiseAbs().maxCoeff();
}

double drive_gershgorin_excess(const HamiltonianMatrix& H) {
    const Region& R = *H.region;
    int d = H.spec.dims.d;
    double worst = -std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < R.size(); ++a) {
        const Site& s = R.site(a);
        double row = 0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(H.matrix, static_cast<Eigen::Index>(a)); it; ++it) {
            if (it.row() == static_cast<Eigen::Index>(a)) continue;
            const Site& t = R.site(static_cast<std::size_t>(it.row()));
            bool same_j = true;
            for (int k = 0; k < d; ++k)
                if (s[k] != t[k]) same_j = false;
            if (same_j) row += std::abs(it.value());
        }
        Site j = s.head(d);
        double bound = 2.0 * H.spec.dims.nu * H.spec.delta * std::exp(-H.spec.b * j.l1());
        worst = std::max(worst, row - bound * (1 + 1e-14));
    }
    return worst;
}

}  // namespace qploc
