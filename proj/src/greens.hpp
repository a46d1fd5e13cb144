#pragma once

#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lattice.hpp"
#include "operators.hpp"

namespace qploc {

struct Decomposition {
    Eigen::VectorXd values;
    Eigen::MatrixXd vectors;
    double norm() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

Decomposition decompose(const Eigen::MatrixXd& H);

// raises NearSingular when dist(E, spectrum) < 1e-12 |H|
void check_nonsingular(double dist, double hnorm, const std::string& what);

Eigen::MatrixXd green(const Eigen::MatrixXd& H, double E);
Eigen::MatrixXd green(const HamiltonianMatrix& H, double E);
// (H + shift - E)^{-1} from a decomposition of H
Eigen::MatrixXd green(const Decomposition& dec, double E, double shift = 0.0);

// |(H-E)G - I|_inf / (|H-E|_inf |G|_inf)
double relative_residual(const Eigen::MatrixXd& H, double E, const Eigen::MatrixXd& G);

// induced infinity norm (max row sum)
double norm_inf(const Eigen::MatrixXd& M);
double norm_2_symmetric(const Eigen::MatrixXd& M);

struct GreenReport {
    std::string region;
    double theta = 0.0;
    double E = 0.0;
    double op_norm = 0.0;
    double gamma_fit = std::numeric_limits<double>::quiet_NaN();
    double fit_residual = std::numeric_limits<double>::quiet_NaN();
    std::size_t fit_pairs = 0;
    bool good = false;
    double gamma = 0.0;
    double sigma = 0.0;
    int N = 0;

    std::string verdict() const { return good ? "Good" : "Bad"; }
    static std::string csv_header();
    std::string csv_row() const;
};

// Accumulates the verdict and the decay fit over pairs (m, m') one at a time.
class DecayCheck {
public:
    DecayCheck(int N, double gamma) : window_(N / 4.0), gamma_(gamma) {}
    double window() const { return window_; }
    bool in_window(int dist) const { return dist > window_; }
    // log|G(m,m')| for a pair at distance dist inside the window
    void add_log(double logabs, int dist) {
        if (!(logabs < -gamma_ * dist)) ok_ = false;
        if (logabs >= kLogFloor) {
            ++n_;
            long double x = dist, y = logabs;
            sx_ += x;
            sy_ += y;
            sxx_ += x * x;
            sxy_ += x * y;
            syy_ += y * y;
        }
    }
    bool decay_ok() const { return ok_; }
    void finish(GreenReport& rep) const;

    static constexpr double kLogFloor = -690.77552789821368;  // ln 1e-300

private:
    double window_;
    double gamma_;
    bool ok_ = true;
    std::size_t n_ = 0;
    long double sx_ = 0, sy_ = 0, sxx_ = 0, sxy_ = 0, syy_ = 0;
};

GreenReport classify(const Eigen::MatrixXd& G, const Region& region, int N, double gamma, double sigma,
                     double op_norm = std::numeric_limits<double>::quiet_NaN());

// Classification of the box Green's function without storing it; for nu = 1
// boxes the n-slices form a block tridiagonal matrix. Works at any size but
// is meant for boxes above the dense cap.
GreenReport classify_block_tridiagonal(const HamiltonianMatrix& H, double E, int N, double gamma, double sigma);

// ||(H - E)^{-1}||_2, +inf when E is numerically on the spectrum
double resolvent_norm(const HamiltonianMatrix& H, double E);

// picks the dense or block path by size; NearSingular becomes a Bad verdict
GreenReport classify_hamiltonian(const HamiltonianMatrix& H, double E, int N, double gamma, double sigma);

// classify_hamiltonian over a theta grid
std::vector<GreenReport> classify_theta_sweep(const OperatorSpec& spec, std::shared_ptr<const Region> region,
                                              std::shared_ptr<const DisorderSample> sample, const Frequency& omega,
                                              const std::vector<double>& thetas, double E, int N, double gamma,
                                              double sigma);

double resolvent_expansion_residual(const Eigen::MatrixXd& H_full, const Eigen::MatrixXd& H0, double E, int K);

double resolvent_identity_residual(const Eigen::MatrixXd& H, double E, double lambda);

double poisson_residual(const HamiltonianMatrix& H_ambient, double E, const Eigen::VectorXd& psi, const Region& sub);

struct AuxiliaryMatrix {
    std::vector<int> p_index;  // sites of the region outside the regular part
    std::vector<int> q_index;  // sites of the regular part
    Eigen::MatrixXd A;
    double theta = 0.0;
    double E = 0.0;
};

AuxiliaryMatrix auxiliary_matrix(const HamiltonianMatrix& H, const Region& regular, double E);

struct SandwichReport {
    double norm_a_inv = 0, norm_g = 0;
    double c1 = 0, c2 = 0;
    double schur_residual = 0;  // max |G_PP - A^{-1}|
    bool pass = false;
};

SandwichReport sandwich_check(const AuxiliaryMatrix& A, const Eigen::MatrixXd& G_region, int N0);

}  // namespace qploc
