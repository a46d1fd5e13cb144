#include "dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <sstream>

#include <fftw3.h>

#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace qploc {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// exp(-i h eps Delta) with Dirichlet walls, diagonalized by a DST-I per axis.
class KineticPropagator {
public:
    KineticPropagator(const JWindow& w, double eps) : n_(w.size()) {
        const int M = 2 * w.R + 1;
        std::vector<int> dims(w.d, M);
        std::vector<fftw_r2r_kind> kinds(w.d, FFTW_RODFT00);
        re_ = fftw_alloc_real(n_);
        im_ = fftw_alloc_real(n_);
        {
            std::lock_guard<std::mutex> lock(fftw_planner_mutex());
            plan_ = fftw_plan_r2r(w.d, dims.data(), re_, re_, kinds.data(), FFTW_ESTIMATE);
        }
        lambda_.resize(n_);
        std::vector<double> c(M);
        for (int k = 0; k < M; ++k) c[k] = 2.0 * eps * std::cos(std::numbers::pi * (k + 1) / (M + 1));
        for (std::size_t a = 0; a < n_; ++a) {
            double l = 0;
            std::size_t rest = a;
            for (int k = 0; k < w.d; ++k) {
                l += c[rest % M];
                rest /= M;
            }
            lambda_[a] = l;
        }
        scale_ = std::pow(2.0 * (M + 1), -w.d);
    }
    ~KineticPropagator() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(re_);
        fftw_free(im_);
    }
    KineticPropagator(const KineticPropagator&) = delete;
    KineticPropagator& operator=(const KineticPropagator&) = delete;

    void set_step(double h) {
        if (h == h_) return;
        h_ = h;
        phase_.resize(n_);
        for (std::size_t a = 0; a < n_; ++a) phase_[a] = std::polar(scale_, -lambda_[a] * h);
    }

    void apply(Eigen::VectorXcd& psi) {
        for (std::size_t a = 0; a < n_; ++a) {
            re_[a] = psi[a].real();
            im_[a] = psi[a].imag();
        }
        fftw_execute_r2r(plan_, re_, re_);
        fftw_execute_r2r(plan_, im_, im_);
        for (std::size_t a = 0; a < n_; ++a) {
            cplx z = cplx(re_[a], im_[a]) * phase_[a];
            re_[a] = z.real();
            im_[a] = z.imag();
        }
        fftw_execute_r2r(plan_, re_, re_);
        fftw_execute_r2r(plan_, im_, im_);
        for (std::size_t a = 0; a < n_; ++a) psi[a] = cplx(re_[a], im_[a]);
    }

private:
    std::size_t n_;
    double* re_ = nullptr;
    double* im_ = nullptr;
    fftw_plan plan_;
    std::vector<double> lambda_;
    std::vector<cplx> phase_;
    double scale_ = 1.0;
    double h_ = std::numeric_limits<double>::quiet_NaN();
};

std::vector<double> window_potential(const DisorderSample& sample, const JWindow& w, bool zero) {
    std::vector<double> v(w.size(), 0.0);
    if (zero) return v;
    for (std::size_t a = 0; a < w.size(); ++a) {
        if (!sample.covers(w.sites[a])) fail(ErrorCode::InvalidArgument, "disorder sample does not cover the window");
        v[a] = sample.value(w.sites[a]);
    }
    return v;
}

// W_k(j) per site and drive component
std::vector<std::vector<double>> window_drive(const OperatorSpec& spec, const JWindow& w) {
    std::vector<std::vector<double>> W(spec.dims.nu, std::vector<double>(w.size(), 0.0));
    if (!spec.drive_enabled) return W;
    for (int k = 0; k < spec.dims.nu; ++k)
        for (std::size_t a = 0; a < w.size(); ++a) W[k][a] = spec.drive(k, w.sites[a]);
    return W;
}

void check_inputs(const OperatorSpec& spec, const WavePacket& psi0, const Frequency& omega,
                  const std::vector<double>& theta, const EvolveOptions& opt) {
    spec.validate();
    validate_frequency(omega, spec.dims.nu);
    require(static_cast<int>(theta.size()) == spec.dims.nu, "theta needs one phase per frequency");
    require(psi0.window.d == spec.dims.d, "packet dimension differs from d");
    require(static_cast<std::size_t>(psi0.amplitudes.size()) == psi0.window.size(), "packet size mismatch");
    require(opt.dt > 0.0, "time step must be positive");
    require(opt.samples >= 1, "need at least one diagnostic sample");
}

// step indices for the log-spaced diagnostics, always including 0 and the last step
std::vector<std::size_t> record_steps(std::size_t nsteps, int samples) {
    std::vector<std::size_t> out{0};
    if (nsteps == 0) return out;
    for (int k = 0; k < samples; ++k) {
        double x = samples == 1 ? std::log(static_cast<double>(nsteps))
                                : std::log(static_cast<double>(nsteps)) * k / (samples - 1);
        out.push_back(std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::exp(x))), 1, nsteps));
    }
    out.push_back(nsteps);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double boundary_mass(const JWindow& w, const Eigen::VectorXcd& psi) {
    double m = 0;
    for (int a : w.boundary) m += std::norm(psi[a]);
    return m;
}

double second_moment(const JWindow& w, const Eigen::VectorXcd& psi) {
    double num = 0, den = 0;
    for (std::size_t a = 0; a < w.size(); ++a) {
        double p = std::norm(psi[a]);
        num += w.r2[a] * p;
        den += p;
    }
    return den > 0 ? num / den : 0.0;
}

void apply_h(const OperatorSpec& spec, const JWindow& w, const std::vector<double>& v,
             const std::vector<double>& diag_drive, const Eigen::VectorXcd& x, Eigen::VectorXcd& y) {
    for (std::size_t a = 0; a < w.size(); ++a) {
        cplx s = (v[a] + diag_drive[a]) * x[a];
        for (int b : w.nbrs[a]) s += spec.eps * x[b];
        y[a] = s;
    }
}

}  // namespace

JWindow::JWindow(int d_, int R_) : d(d_), R(R_) {
    require(d >= 1 && d <= kMaxDim, "window dimension out of range");
    require(R >= 0, "window radius must be non-negative");
    const int M = 2 * R + 1;
    std::size_t n = 1;
    for (int k = 0; k < d; ++k) n *= M;
    sites.reserve(n);
    for (std::size_t a = 0; a < n; ++a) {
        Site s(d);
        std::size_t rest = a;
        for (int k = d - 1; k >= 0; --k) {
            s[k] = static_cast<int>(rest % M) - R;
            rest /= M;
        }
        sites.push_back(s);
    }
    r2.resize(n);
    nbrs.resize(n);
    for (std::size_t a = 0; a < n; ++a) {
        double q = 0;
        bool face = false;
        for (int k = 0; k < d; ++k) {
            q += static_cast<double>(sites[a][k]) * sites[a][k];
            face = face || std::abs(sites[a][k]) == R;
        }
        r2[a] = q;
        if (face) boundary.push_back(static_cast<int>(a));
        for_each_neighbor(sites[a], [&](const Site& y, int) {
            int b = index_of(y);
            if (b >= 0) nbrs[a].push_back(b);
        });
    }
}

int JWindow::index_of(const Site& j) const {
    if (j.dim() != d) return -1;
    const int M = 2 * R + 1;
    int idx = 0;
    for (int k = 0; k < d; ++k) {
        if (std::abs(j[k]) > R) return -1;
        idx = idx * M + (j[k] + R);
    }
    return idx;
}

WavePacket WavePacket::delta(int d, int R, const Site& j0) {
    WavePacket p;
    p.window = JWindow(d, R);
    p.amplitudes = Eigen::VectorXcd::Zero(p.window.size());
    int a = p.window.index_of(j0.dim() == 0 ? Site(d) : j0);
    require(a >= 0, "packet centre outside the window");
    p.amplitudes[a] = 1.0;
    return p;
}

std::string Trajectory::csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "t,second_moment,return_prob,norm_drift\n";
    for (std::size_t k = 0; k < times.size(); ++k)
        os << times[k] << ',' << second_moment[k] << ',' << return_prob[k] << ',' << norm_drift[k] << '\n';
    return os.str();
}

nlohmann::json Trajectory::summary() const {
    double sup = second_moment.empty() ? 0.0 : *std::max_element(second_moment.begin(), second_moment.end());
    double drift = norm_drift.empty() ? 0.0 : *std::max_element(norm_drift.begin(), norm_drift.end());
    return {{"steps", steps},
            {"samples", times.size()},
            {"t_end", times.empty() ? 0.0 : times.back()},
            {"sup_second_moment", sup},
            {"max_norm_drift", drift},
            {"boundary_mass", boundary_mass},
            {"leaked", leaked},
            {"leak_time", std::isfinite(leak_time) ? nlohmann::json(leak_time) : nlohmann::json(nullptr)},
            {"step_error_estimate", step_error_estimate}};
}

double drive_value(const OperatorSpec& spec, const Frequency& omega, const std::vector<double>& theta, double t,
                   const Site& j) {
    if (!spec.drive_enabled) return 0.0;
    double s = 0;
    for (int k = 0; k < spec.dims.nu; ++k) s += spec.drive(k, j) * std::cos(kTwoPi * (omega[k] * t + theta[k]));
    return s;
}

Trajectory evolve_schrodinger(const OperatorSpec& spec, const DisorderSample& sample, const WavePacket& psi0,
                              const Frequency& omega, const std::vector<double>& theta, double T,
                              const EvolveOptions& opt) {
    check_inputs(spec, psi0, omega, theta, opt);
    const JWindow& w = psi0.window;
    const std::size_t n = w.size();
    const double t0 = psi0.time, span = T - t0;
    const std::size_t nsteps = static_cast<std::size_t>(std::ceil(std::abs(span) / opt.dt - 1e-12));
    const double h = nsteps ? span / nsteps : 0.0;
    std::vector<double> v = window_potential(sample, w, opt.zero_potential);
    auto W = window_drive(spec, w);

    // a-priori Strang error: |T| h^2 (|K|^2 |D| / 12 + |K| |D|^2 / 24), D centred
    double dlo = 1e300, dhi = -1e300;
    for (std::size_t a = 0; a < n; ++a) {
        double wsum = 0;
        for (const auto& Wk : W) wsum += std::abs(Wk[a]);
        dlo = std::min(dlo, v[a] - wsum);
        dhi = std::max(dhi, v[a] + wsum);
    }
    const double Dn = n ? (dhi - dlo) / 2 : 0.0, Kn = 2.0 * spec.dims.d * spec.eps;
    Trajectory tr;
    tr.step_error_estimate = std::abs(span) * h * h * (Kn * Kn * Dn / 12.0 + Kn * Dn * Dn / 24.0);
    if (tr.step_error_estimate > opt.error_budget)
        fail(ErrorCode::StepTooLarge, "splitting error estimate " + std::to_string(tr.step_error_estimate) +
                                          " exceeds the budget; reduce dt");

    const double n0 = psi0.amplitudes.norm();
    require(n0 > 0, "initial packet is zero");
    KineticPropagator kin(w, spec.eps);
    Eigen::VectorXcd psi = psi0.amplitudes;
    auto record = [&](double t) {
        tr.times.push_back(t);
        tr.second_moment.push_back(second_moment(w, psi));
        double nn = psi.norm();
        tr.return_prob.push_back(std::norm(psi0.amplitudes.dot(psi)) / (n0 * n0 * nn * nn));
        tr.norm_drift.push_back(std::abs(nn - n0));
        if (opt.observer) opt.observer(t, psi);
    };
    // without hopping nothing reaches the walls
    const double leak_at = spec.eps > 0 ? opt.leak_threshold * n0 * n0 : std::numeric_limits<double>::infinity();
    auto steps_at = record_steps(nsteps, opt.samples);
    std::size_t next = 0;
    record(t0);
    ++next;
    tr.boundary_mass = boundary_mass(w, psi);

    // sine antiderivative of the drive phase
    std::vector<double> s_prev(spec.dims.nu);
    for (int k = 0; k < spec.dims.nu; ++k) s_prev[k] = std::sin(kTwoPi * (omega[k] * t0 + theta[k]));
    std::vector<double> s_next(spec.dims.nu);

    bool half_pending = false;
    for (std::size_t s = 1; s <= nsteps; ++s) {
        const double tb = t0 + s * h;
        if (!half_pending) {
            kin.set_step(h / 2);
            kin.apply(psi);
        }
        for (int k = 0; k < spec.dims.nu; ++k) s_next[k] = std::sin(kTwoPi * (omega[k] * tb + theta[k]));
        for (std::size_t a = 0; a < n; ++a) {
            double phi = v[a] * h;
            for (int k = 0; k < spec.dims.nu; ++k) {
                if (W[k][a] == 0.0) continue;
                phi += W[k][a] * (s_next[k] - s_prev[k]) / (kTwoPi * omega[k]);
            }
            psi[a] *= std::polar(1.0, -phi);
        }
        s_prev = s_next;
        const bool rec = next < steps_at.size() && steps_at[next] == s;
        double bm = boundary_mass(w, psi);
        if (rec || s == nsteps || bm > leak_at) {
            kin.set_step(h / 2);
            kin.apply(psi);
            half_pending = false;
            bm = boundary_mass(w, psi);
            tr.boundary_mass = std::max(tr.boundary_mass, bm);
            if (bm > leak_at) {
                if (opt.on_leak == LeakPolicy::Throw)
                    fail(ErrorCode::BoundaryLeak, "boundary mass " + std::to_string(bm) + " at t = " +
                                                      std::to_string(tb) + "; enlarge the window");
                tr.leaked = true;
                tr.leak_time = tb;
                tr.steps = s;
                record(tb);
                break;
            }
            if (rec) {
                record(tb);
                ++next;
            }
        } else {
            // merge the two half kinetic steps
            kin.set_step(h);
            kin.apply(psi);
            half_pending = true;
            tr.boundary_mass = std::max(tr.boundary_mass, bm);
        }
        tr.steps = s;
    }
    tr.final_state = psi0;
    tr.final_state.amplitudes = psi;
    tr.final_state.time = tr.leaked ? tr.leak_time : T;
    return tr;
}

double wave_invariant(const OperatorSpec& spec, const DisorderSample& sample, const JWindow& w,
                      const Eigen::VectorXcd& psi, const Eigen::VectorXcd& psidot, bool zero_potential) {
    std::vector<double> v = window_potential(sample, w, zero_potential);
    std::vector<double> zero(w.size(), 0.0);
    Eigen::VectorXcd Hpsi(w.size());
    apply_h(spec, w, v, zero, psi, Hpsi);
    return psidot.squaredNorm() - psi.dot(Hpsi).real();
}

Trajectory evolve_wave(const OperatorSpec& spec, const DisorderSample& sample, const WavePacket& psi0,
                       const Eigen::VectorXcd& psidot0, const Frequency& omega, const std::vector<double>& theta,
                       double T, const EvolveOptions& opt) {
    check_inputs(spec, psi0, omega, theta, opt);
    const JWindow& w = psi0.window;
    const std::size_t n = w.size();
    require(static_cast<std::size_t>(psidot0.size()) == n, "velocity size mismatch");
    const double t0 = psi0.time, span = T - t0;
    const std::size_t nsteps = static_cast<std::size_t>(std::ceil(std::abs(span) / opt.dt - 1e-12));
    const double h = nsteps ? span / nsteps : 0.0;
    std::vector<double> v = window_potential(sample, w, opt.zero_potential);
    auto W = window_drive(spec, w);
    bool driven = false;
    double hn = 2.0 * spec.dims.d * spec.eps;
    double vmax = 0;
    for (std::size_t a = 0; a < n; ++a) {
        double wsum = 0;
        for (const auto& Wk : W) wsum += std::abs(Wk[a]);
        driven = driven || wsum > 0;
        vmax = std::max(vmax, std::abs(v[a]) + wsum);
    }
    hn += vmax;
    Trajectory tr;
    // midpoint phase error ~ |T| h^2 |H|^{3/2} / 12; the fixed-point solve needs h^2 |H| / 4 well below 1
    tr.step_error_estimate = std::abs(span) * h * h * std::pow(hn, 1.5) / 12.0;
    if (h * h * hn > 1.0 || tr.step_error_estimate > opt.error_budget)
        fail(ErrorCode::StepTooLarge, "time step too large for the wave integrator; reduce dt");

    std::vector<double> dd(n, 0.0);
    auto drive_diag = [&](double t) {
        for (std::size_t a = 0; a < n; ++a) {
            double s = 0;
            for (int k = 0; k < spec.dims.nu; ++k)
                if (W[k][a] != 0.0) s += W[k][a] * std::cos(kTwoPi * (omega[k] * t + theta[k]));
            dd[a] = s;
        }
    };
    Eigen::VectorXcd psi = psi0.amplitudes, p = psidot0, rhs(n), Hx(n), pn(n);
    const double n0 = psi0.amplitudes.norm();
    require(n0 > 0, "initial packet is zero");
    const double inv0 = wave_invariant(spec, sample, w, psi, p, opt.zero_potential);
    const double pair0 = std::sqrt(psi.squaredNorm() + p.squaredNorm());
    auto record = [&](double t) {
        tr.times.push_back(t);
        tr.second_moment.push_back(second_moment(w, psi));
        double nn = psi.norm();
        tr.return_prob.push_back(nn > 0 ? std::norm(psi0.amplitudes.dot(psi)) / (n0 * n0 * nn * nn) : 0.0);
        if (!driven) {
            double inv = wave_invariant(spec, sample, w, psi, p, opt.zero_potential);
            tr.norm_drift.push_back(std::abs(inv - inv0) / std::max(std::abs(inv0), 1e-300));
        } else {
            tr.norm_drift.push_back(std::abs(std::sqrt(psi.squaredNorm() + p.squaredNorm()) - pair0));
        }
        if (opt.observer) opt.observer(t, psi);
    };
    const double leak_at = spec.eps > 0 ? opt.leak_threshold * n0 * n0 : std::numeric_limits<double>::infinity();
    auto steps_at = record_steps(nsteps, opt.samples);
    std::size_t next = 1;
    record(t0);
    tr.boundary_mass = boundary_mass(w, psi);
    // implicit midpoint on (psi, p): exact for the quadratic invariant when undriven
    const double c = h * h / 4;
    for (std::size_t s = 1; s <= nsteps; ++s) {
        const double tb = t0 + s * h;
        drive_diag(tb - h / 2);
        apply_h(spec, w, v, dd, psi, Hx);
        rhs = p + h * Hx;
        pn = p;
        bool converged = false;
        for (int it = 0; it < 100 && !converged; ++it) {
            apply_h(spec, w, v, dd, p + pn, Hx);
            Eigen::VectorXcd upd = rhs + c * Hx;
            converged = (upd - pn).norm() <= 1e-14 * std::max(1.0, upd.norm());
            pn = upd;
        }
        if (!converged) fail(ErrorCode::StepTooLarge, "midpoint iteration did not converge; reduce dt");
        psi += (h / 2) * (p + pn);
        p = pn;
        double bm = boundary_mass(w, psi);
        tr.boundary_mass = std::max(tr.boundary_mass, bm);
        tr.steps = s;
        if (bm > leak_at) {
            if (opt.on_leak == LeakPolicy::Throw)
                fail(ErrorCode::BoundaryLeak, "boundary mass " + std::to_string(bm) + " at t = " +
                                                  std::to_string(tb) + "; enlarge the window");
            tr.leaked = true;
            tr.leak_time = tb;
            record(tb);
            break;
        }
        if (next < steps_at.size() && steps_at[next] == s) {
            record(tb);
            ++next;
        }
    }
    tr.final_state = psi0;
    tr.final_state.amplitudes = psi;
    tr.final_state.time = tr.leaked ? tr.leak_time : T;
    tr.final_velocity = p;
    return tr;
}

nlohmann::json QuasienergyReport::to_json() const {
    return {{"cutoff", cutoff}, {"deviation", deviation}, {"n_boundary", n_boundary}};
}

QuasienergyReport quasienergy_consistency(const OperatorSpec& spec, const DisorderSample& sample,
                                          const WavePacket& psi0, const Frequency& omega,
                                          const std::vector<double>& theta, double T, int cutoff,
                                          const EvolveOptions& opt) {
    check_inputs(spec, psi0, omega, theta, opt);
    require(spec.model == Model::Schrodinger, "the lift is implemented for the Schrodinger equation");
    require(cutoff >= 0, "cutoff must be non-negative");
    const JWindow& w = psi0.window;
    const int nu = spec.dims.nu;
    JWindow nbox(nu, cutoff);
    const std::size_t nj = w.size(), nn = nbox.size(), dim = nj * nn;
    if (dim > static_cast<std::size_t>(kDenseCap))
        fail(ErrorCode::CapExceeded, "lifted box has " + std::to_string(dim) + " sites");
    std::vector<double> v = window_potential(sample, w, opt.zero_potential);
    auto W = window_drive(spec, w);

    // i dphi_n/dt = (eps Delta + V + 2 pi n.w) phi_n + sum_k W_k/2 (phi_{n-e_k} + phi_{n+e_k})
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(dim, dim);
    auto at = [&](std::size_t a, std::size_t m) { return a * nn + m; };
    for (std::size_t a = 0; a < nj; ++a)
        for (std::size_t m = 0; m < nn; ++m) {
            const Site& ns = nbox.sites[m];
            double diag = v[a];
            for (int k = 0; k < nu; ++k) diag += kTwoPi * omega[k] * ns[k];
            K(at(a, m), at(a, m)) = diag;
            for (int b : w.nbrs[a]) K(at(a, m), at(b, m)) = spec.eps;
            for (int k = 0; k < nu; ++k)
                for (int step : {-1, 1}) {
                    Site t = ns;
                    t[k] += step;
                    int mm = nbox.index_of(t);
                    if (mm >= 0) K(at(a, m), at(a, mm)) = W[k][a] / 2;
                }
        }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
    const Eigen::MatrixXd& U = es.eigenvectors();
    Eigen::VectorXcd phi0 = Eigen::VectorXcd::Zero(dim);
    const std::size_t zero_mode = static_cast<std::size_t>(nbox.index_of(Site(nu)));
    for (std::size_t a = 0; a < nj; ++a) phi0[at(a, zero_mode)] = psi0.amplitudes[a];
    Eigen::VectorXcd c = U.transpose().cast<cplx>() * phi0;

    QuasienergyReport rep;
    rep.cutoff = cutoff;
    EvolveOptions direct = opt;
    direct.observer = [&](double t, const Eigen::VectorXcd& psi) {
        Eigen::VectorXcd ct(dim);
        for (std::size_t q = 0; q < dim; ++q) ct[q] = c[q] * std::polar(1.0, -es.eigenvalues()[q] * (t - psi0.time));
        Eigen::VectorXcd phi = U.cast<cplx>() * ct;
        Eigen::VectorXcd lifted = Eigen::VectorXcd::Zero(nj);
        for (std::size_t m = 0; m < nn; ++m) {
            double arg = 0;
            for (int k = 0; k < nu; ++k) arg += nbox.sites[m][k] * (omega[k] * t + theta[k]);
            cplx ph = std::polar(1.0, kTwoPi * arg);
            for (std::size_t a = 0; a < nj; ++a) lifted[a] += phi[at(a, m)] * ph;
        }
        double edge = 0;
        for (int m : nbox.boundary)
            for (std::size_t a = 0; a < nj; ++a) edge += std::norm(phi[at(a, m)]);
        if (cutoff > 0) rep.n_boundary = std::max(rep.n_boundary, edge);
        double dev = (lifted - psi).norm();
        rep.times.push_back(t);
        rep.deviations.push_back(dev);
        rep.deviation = std::max(rep.deviation, dev);
        if (opt.observer) opt.observer(t, psi);
    };
    evolve_schrodinger(spec, sample, psi0, omega, theta, T, direct);
    return rep;
}

nlohmann::json ContrastReport::to_json() const {
    return {{"T", T},
            {"disordered_sup", disordered_sup},
            {"disordered_max", disordered_max},
            {"disordered_mean", disordered_mean},
            {"free_sup", free_sup},
            {"free_oracle", free_oracle},
            {"ratio", ratio}};
}

ContrastReport localization_contrast(const OperatorSpec& spec, const Frequency& omega,
                                     const std::vector<double>& theta, double T, const ContrastOptions& opt) {
    spec.validate();
    require(T >= 0.0, "T must be non-negative");
    require(opt.trials >= 1, "need at least one trial");
    const int d = spec.dims.d;
    const int Rfree = static_cast<int>(std::ceil(4.0 * spec.eps * T)) + 20;
    const int R = opt.window > 0 ? opt.window : Rfree;
    ContrastReport rep;
    rep.T = T;
    rep.disordered_sup = parallel_map(static_cast<std::size_t>(opt.trials), opt.workers, [&](std::size_t t) {
        auto smp = sample_disorder(spec.g, d, R, derive_seed(opt.seed, {0xC0u, t}));
        auto tr = evolve_schrodinger(spec, smp, WavePacket::delta(d, R), omega, theta, T, opt.evolve);
        return *std::max_element(tr.second_moment.begin(), tr.second_moment.end());
    });
    rep.disordered_max = *std::max_element(rep.disordered_sup.begin(), rep.disordered_sup.end());
    double s = 0;
    for (double x : rep.disordered_sup) s += x;
    rep.disordered_mean = s / rep.disordered_sup.size();

    OperatorSpec free = spec;
    free.delta = 0.0;
    EvolveOptions fo = opt.evolve;
    fo.zero_potential = true;
    auto ftr = evolve_schrodinger(free, DisorderSample{}, WavePacket::delta(d, Rfree), omega, theta, T, fo);
    rep.free_sup = *std::max_element(ftr.second_moment.begin(), ftr.second_moment.end());
    rep.free_oracle = 2.0 * d * spec.eps * spec.eps * T * T;
    rep.ratio = rep.disordered_mean > 0 ? rep.free_sup / rep.disordered_mean : 1.0;
    return rep;
}

}  // namespace qploc
