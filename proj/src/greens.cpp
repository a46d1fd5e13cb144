#include "greens.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#if defined(__SSE2__)
#include <xmmintrin.h>
#endif

#include "common.hpp"

namespace qploc {

Decomposition decompose(const Eigen::MatrixXd& H) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    if (es.info() != Eigen::Success) fail(ErrorCode::Internal, "symmetric eigensolver did not converge");
    return {es.eigenvalues(), es.eigenvectors()};
}

void check_nonsingular(double dist, double hnorm, const std::string& what) {
    if (!(dist > 0.0) || dist < 1e-12 * hnorm) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s: energy within %.3g of the spectrum", what.c_str(), dist);
        fail(ErrorCode::NearSingular, buf);
    }
}

Eigen::MatrixXd green(const Decomposition& dec, double E, double shift) {
    Eigen::ArrayXd den = dec.values.array() + shift - E;
    double dist = den.abs().minCoeff();
    double hnorm = (dec.values.array() + shift).abs().maxCoeff();
    check_nonsingular(dist, hnorm, "green");
    Eigen::MatrixXd scaled = dec.vectors * den.inverse().matrix().asDiagonal();
    return scaled * dec.vectors.transpose();
}

Eigen::MatrixXd green(const Eigen::MatrixXd& H, double E) { return green(decompose(H), E); }

Eigen::MatrixXd green(const HamiltonianMatrix& H, double E) { return green(H.dense(), E); }

double norm_inf(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    return M.cwiseAbs().rowwise().sum().maxCoeff();
}

double norm_2_symmetric(const Eigen::MatrixXd& M) {
    if (M.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

double relative_residual(const Eigen::MatrixXd& H, double E, const Eigen::MatrixXd& G) {
    Eigen::MatrixXd HE = H - E * Eigen::MatrixXd::Identity(H.rows(), H.cols());
    Eigen::MatrixXd R = HE * G - Eigen::MatrixXd::Identity(H.rows(), H.cols());
    return norm_inf(R) / (norm_inf(HE) * norm_inf(G));
}

std::string GreenReport::csv_header() { return "region,theta,E,op_norm,gamma_fit,verdict"; }

namespace {
std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}
}  // namespace

std::string GreenReport::csv_row() const {
    return "\"" + region + "\"," + num(theta) + "," + num(E) + "," + num(op_norm) + "," + num(gamma_fit) + "," +
           verdict();
}

void DecayCheck::finish(GreenReport& rep) const {
    rep.fit_pairs = n_;
    if (n_ < 2) return;
    long double n = n_;
    long double vx = sxx_ - sx_ * sx_ / n;
    if (vx <= 0) return;
    long double slope = (sxy_ - sx_ * sy_ / n) / vx;
    long double icpt = (sy_ - slope * sx_) / n;
    long double sse = syy_ - icpt * sy_ - slope * sxy_;
    rep.gamma_fit = static_cast<double>(-slope);
    rep.fit_residual = static_cast<double>(std::sqrt(std::max<long double>(0, sse) / n));
}

GreenReport classify(const Eigen::MatrixXd& G, const Region& region, int N, double gamma, double sigma,
                     double op_norm) {
    require(G.rows() == static_cast<Eigen::Index>(region.size()), "Green's function does not match the region");
    GreenReport rep;
    rep.region = region.descriptor();
    rep.N = N;
    rep.gamma = gamma;
    rep.sigma = sigma;
    rep.op_norm = std::isnan(op_norm) ? norm_2_symmetric(G) : op_norm;
    DecayCheck dc(N, gamma);
    const auto& sites = region.sites();
    const Eigen::Index n = G.rows();
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index c = a + 1; c < n; ++c) {
            int r = l1_distance(sites[a], sites[c]);
            if (!dc.in_window(r)) continue;
            dc.add_log(std::log(std::abs(G(a, c))), r);
        }
    dc.finish(rep);
    rep.good = rep.op_norm < std::exp(std::pow(static_cast<double>(N), sigma)) && dc.decay_ok();
    return rep;
}

namespace {

// n-slice block structure of a nu = 1 box; slice i holds the sites with the
// i-th n value, in j-lexicographic order
class FlushDenormals {
public:
#if defined(__SSE2__)
    FlushDenormals() : saved_(_mm_getcsr()) { _mm_setcsr(saved_ | 0x8040); }
    ~FlushDenormals() { _mm_setcsr(saved_); }

private:
    unsigned saved_;
#endif
};

struct BlockSystem {
    int nb = 0;   // number of slices
    int bs = 0;   // sites per slice
    std::vector<Eigen::MatrixXd> D;   // diagonal blocks of H - E
    std::vector<Eigen::VectorXd> C;   // coupling slice i -> i+1 (diagonal)
    Eigen::MatrixXi dj;               // l1 distance between j positions
};

BlockSystem build_blocks(const HamiltonianMatrix& H, double E) {
    const Region& R = *H.region;
    require(R.kind() == RegionKind::Box && R.dims().nu == 1, "block path needs a box with nu = 1");
    BlockSystem B;
    B.nb = 2 * R.box_descriptor().radius + 1;
    B.bs = static_cast<int>(R.size()) / B.nb;
    B.D.assign(B.nb, Eigen::MatrixXd::Zero(B.bs, B.bs));
    B.C.assign(std::max(0, B.nb - 1), Eigen::VectorXd::Zero(B.bs));
    for (Eigen::Index col = 0; col < H.matrix.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(H.matrix, col); it; ++it) {
            int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            int nr = r % B.nb, nc = c % B.nb;
            if (nr == nc) {
                B.D[nr](r / B.nb, c / B.nb) = it.value();
            } else if (nc == nr + 1) {
                require(r / B.nb == c / B.nb, "n-coupling is not diagonal in j");
                B.C[nr](r / B.nb) = it.value();
            }
        }
    for (auto& d : B.D) d.diagonal().array() -= E;
    int d = R.dims().d;
    B.dj.resize(B.bs, B.bs);
    for (int a = 0; a < B.bs; ++a)
        for (int c = 0; c < B.bs; ++c) {
            const Site& sa = R.site(static_cast<std::size_t>(a) * B.nb);
            const Site& sc = R.site(static_cast<std::size_t>(c) * B.nb);
            int s = 0;
            for (int k = 0; k < d; ++k) s += std::abs(sa[k] - sc[k]);
            B.dj(a, c) = s;
        }
    return B;
}

Eigen::MatrixXd sandwich_diag(const Eigen::VectorXd& c, const Eigen::MatrixXd& M) {
    return c.asDiagonal() * M * c.asDiagonal();
}

Eigen::MatrixXd invert(const Eigen::MatrixXd& M) { return M.partialPivLu().inverse(); }

bool finite(const Eigen::MatrixXd& M) { return M.allFinite(); }

// left- and right-connected Green's functions of the slice chain
bool sweep(const BlockSystem& B, std::vector<Eigen::MatrixXd>& gL, std::vector<Eigen::MatrixXd>& gR) {
    const int nb = B.nb;
    gL.assign(nb, {});
    gR.assign(nb, {});
    gL[0] = invert(B.D[0]);
    for (int i = 1; i < nb; ++i) gL[i] = invert(B.D[i] - sandwich_diag(B.C[i - 1], gL[i - 1]));
    gR[nb - 1] = invert(B.D[nb - 1]);
    for (int i = nb - 2; i >= 0; --i) gR[i] = invert(B.D[i] - sandwich_diag(B.C[i], gR[i + 1]));
    bool ok = true;
    for (int i = 0; i < nb; ++i) ok = ok && finite(gL[i]) && finite(gR[i]);
    return ok;
}

// |G| by Lanczos on G = (H - E)^{-1} through block solves
double lanczos_norm_of_inverse(const BlockSystem& B, const std::vector<Eigen::MatrixXd>& gL) {
    const int nb = B.nb;
    auto solve = [&](const Eigen::VectorXd& y) {
        std::vector<Eigen::VectorXd> w(nb);
        auto slice = [&](const Eigen::VectorXd& v, int i) {
            Eigen::VectorXd s(B.bs);
            for (int a = 0; a < B.bs; ++a) s(a) = v(static_cast<Eigen::Index>(a) * nb + i);
            return s;
        };
        w[0] = slice(y, 0);
        for (int i = 1; i < nb; ++i) w[i] = slice(y, i) - B.C[i - 1].cwiseProduct(gL[i - 1] * w[i - 1]);
        Eigen::VectorXd x(y.size());
        Eigen::VectorXd xi = gL[nb - 1] * w[nb - 1];
        for (int i = nb - 1; i >= 0; --i) {
            if (i < nb - 1) xi = gL[i] * (w[i] - B.C[i].cwiseProduct(xi));
            for (int a = 0; a < B.bs; ++a) x(static_cast<Eigen::Index>(a) * nb + i) = xi(a);
        }
        return x;
    };
    const Eigen::Index n = static_cast<Eigen::Index>(nb) * B.bs;
    const int max_steps = static_cast<int>(std::min<Eigen::Index>(90, n));
    Eigen::MatrixXd Q(n, max_steps + 1);
    std::vector<double> alpha, beta;
    Eigen::VectorXd q = Eigen::VectorXd::Ones(n);
    for (Eigen::Index i = 0; i < n; ++i) q(i) += 0.5 * std::sin(0.7 * static_cast<double>(i));
    q.normalize();
    Q.col(0) = q;
    double prev = 0.0, est = 0.0;
    for (int k = 0; k < max_steps; ++k) {
        Eigen::VectorXd v = solve(Q.col(k));
        alpha.push_back(Q.col(k).dot(v));
        // full reorthogonalisation, twice
        for (int pass = 0; pass < 2; ++pass) v -= Q.leftCols(k + 1) * (Q.leftCols(k + 1).transpose() * v);
        double bnorm = v.norm();
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(k + 1, k + 1);
        for (int i = 0; i <= k; ++i) {
            T(i, i) = alpha[i];
            if (i < k) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        est = norm_2_symmetric(T);
        bool converged = k > 4 && std::abs(est - prev) <= 1e-10 * est;
        prev = est;
        if (converged || bnorm <= 1e-14 * est) break;
        beta.push_back(bnorm);
        Q.col(k + 1) = v / bnorm;
    }
    return est;
}

double sparse_norm_inf(const Eigen::SparseMatrix<double>& M) {
    double hnorm = 0.0;
    for (Eigen::Index col = 0; col < M.outerSize(); ++col) {
        double s = 0;
        for (Eigen::SparseMatrix<double>::InnerIterator it(M, col); it; ++it) s += std::abs(it.value());
        hnorm = std::max(hnorm, s);
    }
    return hnorm;
}

}  // namespace

GreenReport classify_block_tridiagonal(const HamiltonianMatrix& H, double E, int N, double gamma, double sigma) {
    BlockSystem B = build_blocks(H, E);
    const int nb = B.nb;
    GreenReport rep;
    rep.region = H.region->descriptor();
    rep.theta = H.theta;
    rep.E = E;
    rep.N = N;
    rep.gamma = gamma;
    rep.sigma = sigma;

    std::vector<Eigen::MatrixXd> gL, gR;
    bool ok = sweep(B, gL, gR);
    double lanczos_norm = ok ? lanczos_norm_of_inverse(B, gL) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(lanczos_norm)) ok = false;
    double hnorm = sparse_norm_inf(H.matrix);
    if (!ok || lanczos_norm * 1e-12 * hnorm > 1.0) {
        rep.op_norm = std::numeric_limits<double>::infinity();
        rep.good = false;
        return rep;
    }

    DecayCheck dc(N, gamma);
    const double window = dc.window();
    // pair sums of the j-distance, reused for blocks where every pair counts
    const Eigen::ArrayXXd djd = B.dj.cast<double>().array();
    const double sum_dj = djd.sum(), sum_dj2 = djd.square().sum();
    double max_abs = 0.0;
    struct Sums {
        long double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    } tot;
    bool decay_ok = true;

    auto visit = [&](int k, const Eigen::MatrixXd& X) {
        max_abs = std::max(max_abs, X.cwiseAbs().maxCoeff());
        Eigen::ArrayXXd Y = X.array().abs().log();
        if (k == 0 || k <= window) {
            // partial block: scalar loop with the window mask
            for (int a = 0; a < B.bs; ++a)
                for (int c = (k == 0 ? a + 1 : 0); c < B.bs; ++c) {
                    int r = B.dj(a, c) + k;
                    if (r <= window) continue;
                    double y = Y(a, c);
                    if (!(y < -gamma * r)) decay_ok = false;
                    if (y >= DecayCheck::kLogFloor) {
                        tot.n += 1;
                        tot.sx += r;
                        tot.sy += y;
                        tot.sxx += static_cast<long double>(r) * r;
                        tot.sxy += r * y;
                        tot.syy += y * y;
                    }
                }
            return;
        }
        if (!((Y + gamma * (djd + k)).maxCoeff() < 0)) decay_ok = false;
        if (Y.minCoeff() >= DecayCheck::kLogFloor) {
            double m = static_cast<double>(Y.size());
            double sy = Y.sum(), syy = Y.square().sum(), sdy = (djd * Y).sum();
            tot.n += m;
            tot.sx += sum_dj + k * m;
            tot.sy += sy;
            tot.sxx += sum_dj2 + 2.0 * k * sum_dj + static_cast<double>(k) * k * m;
            tot.sxy += sdy + k * sy;
            tot.syy += syy;
        } else {
            Eigen::ArrayXXd valid = (Y >= DecayCheck::kLogFloor).cast<double>();
            Eigen::ArrayXXd Yv = (Y >= DecayCheck::kLogFloor).select(Y, 0.0);
            Eigen::ArrayXXd Xv = valid * (djd + k);
            tot.n += valid.sum();
            tot.sx += Xv.sum();
            tot.sy += Yv.sum();
            tot.sxx += Xv.square().sum();
            tot.sxy += (Xv * Yv).sum();
            tot.syy += Yv.square().sum();
        }
    };

    // Far blocks underflow; subnormal arithmetic would dominate the run time and
    // those entries sit below the log floor anyway.
    FlushDenormals ftz;
    // step matrices of the chain G_{i,j} = G_{i,j-1} (-C_{j-1} gR_j)
    std::vector<Eigen::MatrixXd> step(nb);
    for (int j = 1; j < nb; ++j) step[j] = -(B.C[j - 1].asDiagonal() * gR[j]);
    Eigen::MatrixXd X, next;
    for (int i = 0; i < nb; ++i) {
        Eigen::MatrixXd S = B.D[i];
        if (i > 0) S -= sandwich_diag(B.C[i - 1], gL[i - 1]);
        if (i < nb - 1) S -= sandwich_diag(B.C[i], gR[i + 1]);
        X = invert(S);
        visit(0, X);
        for (int j = i + 1; j < nb; ++j) {
            next.noalias() = X * step[j];
            X.swap(next);
            visit(j - i, X);
        }
    }
    rep.op_norm = std::max(lanczos_norm, max_abs);
    if (tot.n >= 2) {
        long double vx = tot.sxx - tot.sx * tot.sx / tot.n;
        if (vx > 0) {
            long double slope = (tot.sxy - tot.sx * tot.sy / tot.n) / vx;
            long double icpt = (tot.sy - slope * tot.sx) / tot.n;
            long double sse = tot.syy - icpt * tot.sy - slope * tot.sxy;
            rep.gamma_fit = static_cast<double>(-slope);
            rep.fit_residual = static_cast<double>(std::sqrt(std::max<long double>(0, sse) / tot.n));
        }
    }
    rep.fit_pairs = static_cast<std::size_t>(tot.n);
    rep.good = rep.op_norm < std::exp(std::pow(static_cast<double>(N), sigma)) && decay_ok;
    return rep;
}

double resolvent_norm(const HamiltonianMatrix& H, double E) {
    if (H.size() <= static_cast<std::size_t>(kDenseCap)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H.dense(), Eigen::EigenvaluesOnly);
        double dist = (es.eigenvalues().array() - E).abs().minCoeff();
        double hnorm = es.eigenvalues().cwiseAbs().maxCoeff();
        if (!(dist > 0.0) || dist < 1e-12 * hnorm) return std::numeric_limits<double>::infinity();
        return 1.0 / dist;
    }
    BlockSystem B = build_blocks(H, E);
    std::vector<Eigen::MatrixXd> gL, gR;
    if (!sweep(B, gL, gR)) return std::numeric_limits<double>::infinity();
    double est = lanczos_norm_of_inverse(B, gL);
    if (!std::isfinite(est) || est * 1e-12 * sparse_norm_inf(H.matrix) > 1.0)
        return std::numeric_limits<double>::infinity();
    return est;
}

namespace {

GreenReport classify_decomposed(const Decomposition& dec, const Region& region, double E, double shift, int N,
                                double gamma, double sigma) {
    GreenReport rep;
    try {
        Eigen::MatrixXd G = green(dec, E, shift);
        double dist = (dec.values.array() + shift - E).abs().minCoeff();
        rep = classify(G, region, N, gamma, sigma, 1.0 / dist);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NearSingular) throw;
        rep.region = region.descriptor();
        rep.op_norm = std::numeric_limits<double>::infinity();
        rep.good = false;
        rep.N = N;
        rep.gamma = gamma;
        rep.sigma = sigma;
    }
    rep.E = E;
    return rep;
}

}  // namespace

GreenReport classify_hamiltonian(const HamiltonianMatrix& H, double E, int N, double gamma, double sigma) {
    if (H.size() > static_cast<std::size_t>(kDenseCap)) return classify_block_tridiagonal(H, E, N, gamma, sigma);
    GreenReport rep = classify_decomposed(decompose(H.dense()), *H.region, E, 0.0, N, gamma, sigma);
    rep.theta = H.theta;
    return rep;
}

std::vector<GreenReport> classify_theta_sweep(const OperatorSpec& spec, std::shared_ptr<const Region> region,
                                              std::shared_ptr<const DisorderSample> sample, const Frequency& omega,
                                              const std::vector<double>& thetas, double E, int N, double gamma,
                                              double sigma) {
    std::vector<GreenReport> out;
    out.reserve(thetas.size());
    // theta only shifts the Schrodinger diagonal, so one decomposition serves the grid
    if (spec.model == Model::Schrodinger && region->size() <= static_cast<std::size_t>(kDenseCap)) {
        Decomposition dec = decompose(assemble(spec, region, sample, omega, 0.0).dense());
        for (double th : thetas) {
            out.push_back(classify_decomposed(dec, *region, E, th, N, gamma, sigma));
            out.back().theta = th;
        }
        return out;
    }
    for (double th : thetas)
        out.push_back(classify_hamiltonian(assemble(spec, region, sample, omega, th), E, N, gamma, sigma));
    return out;
}

double resolvent_expansion_residual(const Eigen::MatrixXd& H_full, const Eigen::MatrixXd& H0, double E, int K) {
    require(K >= 0, "expansion order must be non-negative");
    Eigen::MatrixXd G = green(H_full, E);
    Eigen::MatrixXd G0 = green(H0, E);
    Eigen::MatrixXd M = -G0 * (H_full - H0);
    // G = G0 + M G, so the remainder after K terms is M^{K+1} G; forming it directly
    // avoids the cancellation in G - S once the remainder drops below eps * |G|
    Eigen::MatrixXd R = M * G;
    for (int k = 1; k <= K; ++k) R = M * R;
    return norm_inf(R);
}

double resolvent_identity_residual(const Eigen::MatrixXd& H, double E, double lambda) {
    Decomposition dec = decompose(H);
    Eigen::MatrixXd RE = green(dec, E);
    Eigen::MatrixXd RL = green(dec, lambda);
    Eigen::MatrixXd M = RL - RE - (lambda - E) * (RL * RE);
    return norm_inf(M);
}

double poisson_residual(const HamiltonianMatrix& H_ambient, double E, const Eigen::VectorXd& psi, const Region& sub) {
    const Region& amb = *H_ambient.region;
    require(amb.contains(sub), "subregion is not contained in the ambient region");
    require(psi.size() == static_cast<Eigen::Index>(amb.size()), "eigenvector does not match the ambient region");
    std::vector<int> s_idx;
    std::vector<int> pos(amb.size(), -1);
    for (const Site& s : sub.sites()) {
        int a = amb.index_of(s);
        pos[a] = static_cast<int>(s_idx.size());
        s_idx.push_back(a);
    }
    const int ns = static_cast<int>(s_idx.size());
    Eigen::MatrixXd Hs(ns, ns);
    Hs.setZero();
    Eigen::VectorXd u = Eigen::VectorXd::Zero(ns);
    for (Eigen::Index col = 0; col < H_ambient.matrix.outerSize(); ++col)
        for (Eigen::SparseMatrix<double>::InnerIterator it(H_ambient.matrix, col); it; ++it) {
            int pr = pos[it.row()], pc = pos[it.col()];
            if (pr >= 0 && pc >= 0)
                Hs(pr, pc) = it.value();
            else if (pr >= 0)
                u(pr) += it.value() * psi(it.col());
        }
    Eigen::MatrixXd Gs = green(Hs, E);
    Eigen::VectorXd predicted = -(Gs * u);
    double worst = 0.0;
    for (int a = 0; a < ns; ++a) worst = std::max(worst, std::abs(psi(s_idx[a]) - predicted(a)));
    return worst;
}

AuxiliaryMatrix auxiliary_matrix(const HamiltonianMatrix& H, const Region& regular, double E) {
    const Region& R = *H.region;
    require(R.contains(regular), "regular part is not contained in the region");
    AuxiliaryMatrix aux;
    aux.theta = H.theta;
    aux.E = E;
    for (std::size_t a = 0; a < R.size(); ++a)
        (regular.contains(R.site(a)) ? aux.q_index : aux.p_index).push_back(static_cast<int>(a));
    require(!aux.p_index.empty(), "regular part covers the whole region");
    Eigen::MatrixXd HE = H.dense();
    HE.diagonal().array() -= E;
    auto block = [&](const std::vector<int>& r, const std::vector<int>& c) {
        Eigen::MatrixXd M(r.size(), c.size());
        for (std::size_t i = 0; i < r.size(); ++i)
            for (std::size_t k = 0; k < c.size(); ++k) M(i, k) = HE(r[i], c[k]);
        return M;
    };
    aux.A = block(aux.p_index, aux.p_index);
    if (!aux.q_index.empty()) {
        Eigen::MatrixXd HQQ = block(aux.q_index, aux.q_index);
        Eigen::MatrixXd GQ = green(HQQ, 0.0);  // HQQ already carries -E
        Eigen::MatrixXd HPQ = block(aux.p_index, aux.q_index);
        aux.A -= HPQ * GQ * HPQ.transpose();
    }
    return aux;
}

SandwichReport sandwich_check(const AuxiliaryMatrix& A, const Eigen::MatrixXd& G_region, int N0) {
    SandwichReport rep;
    Eigen::MatrixXd Asym = 0.5 * (A.A + A.A.transpose());
    Decomposition dec = decompose(Asym);
    double dist = dec.values.cwiseAbs().minCoeff();
    check_nonsingular(dist, dec.norm(), "auxiliary matrix");
    Eigen::MatrixXd Ainv = green(dec, 0.0);
    rep.norm_a_inv = 1.0 / dist;
    rep.norm_g = norm_2_symmetric(G_region);
    rep.c1 = rep.norm_a_inv / rep.norm_g;
    rep.c2 = rep.norm_g / (std::exp(2.0 * N0) * rep.norm_a_inv);
    double worst = 0.0;
    for (std::size_t i = 0; i < A.p_index.size(); ++i)
        for (std::size_t k = 0; k < A.p_index.size(); ++k)
            worst = std::max(worst, std::abs(G_region(A.p_index[i], A.p_index[k]) - Ainv(i, k)));
    rep.schur_residual = worst;
    rep.pass = rep.c1 <= 10.0 && rep.c2 <= 10.0;
    return rep;
}

}  // namespace qploc
