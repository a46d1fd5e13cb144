#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "operators.hpp"

namespace qploc {

using cplx = std::complex<double>;

// Cube [-R, R]^d of Z^d, lexicographic.
struct JWindow {
    int d = 1;
    int R = 0;
    std::vector<Site> sites;
    std::vector<double> r2;              // |j|^2
    std::vector<std::vector<int>> nbrs;  // in-window neighbours
    std::vector<int> boundary;           // sites on the faces of the cube

    JWindow() = default;
    JWindow(int d, int R);
    std::size_t size() const { return sites.size(); }
    int index_of(const Site& j) const;  // -1 outside
};

struct WavePacket {
    JWindow window;
    Eigen::VectorXcd amplitudes;
    double time = 0.0;
    double norm0 = 1.0;

    static WavePacket delta(int d, int R, const Site& j0 = {});
};

struct Trajectory {
    std::vector<double> times;
    std::vector<double> second_moment;
    std::vector<double> return_prob;
    // Schrodinger: | |psi| - |psi0| |. Wave: relative drift of the quadratic invariant when
    // undriven, otherwise drift of the norm of the pair (psi, psidot).
    std::vector<double> norm_drift;
    double boundary_mass = 0.0;  // largest boundary |psi|^2 seen
    bool leaked = false;         // stopped early at the leak threshold
    double leak_time = std::numeric_limits<double>::quiet_NaN();
    std::size_t steps = 0;
    double step_error_estimate = 0.0;
    WavePacket final_state;
    Eigen::VectorXcd final_velocity;  // wave equation only

    std::string csv() const;
    nlohmann::json summary() const;
};

// sum_k W_k(j) cos 2 pi (w_k t + theta_k)
double drive_value(const OperatorSpec& spec, const Frequency& omega, const std::vector<double>& theta, double t,
                   const Site& j);

enum class LeakPolicy { Throw, Stop };

struct EvolveOptions {
    double dt = 0.02;
    int samples = 64;              // log-spaced diagnostic times
    double leak_threshold = 1e-8;  // on boundary |psi|^2
    LeakPolicy on_leak = LeakPolicy::Throw;
    double error_budget = 0.05;  // a-priori splitting error allowed over the run
    bool zero_potential = false;
    std::function<void(double, const Eigen::VectorXcd&)> observer;  // called at every diagnostic time
};

// Evolves to time T (backwards when T < packet.time). The sample supplies V on the window.
Trajectory evolve_schrodinger(const OperatorSpec& spec, const DisorderSample& sample, const WavePacket& psi0,
                              const Frequency& omega, const std::vector<double>& theta, double T,
                              const EvolveOptions& opt = {});

Trajectory evolve_wave(const OperatorSpec& spec, const DisorderSample& sample, const WavePacket& psi0,
                       const Eigen::VectorXcd& psidot0, const Frequency& omega, const std::vector<double>& theta,
                       double T, const EvolveOptions& opt = {});

// |psidot|^2 - <psi, (eps Delta + V) psi>
double wave_invariant(const OperatorSpec& spec, const DisorderSample& sample, const JWindow& w,
                      const Eigen::VectorXcd& psi, const Eigen::VectorXcd& psidot, bool zero_potential = false);

struct QuasienergyReport {
    int cutoff = 0;
    double deviation = 0.0;     // max over sampled times of |psi_lift - psi_direct|_2
    double n_boundary = 0.0;    // largest mass on the n-faces of the lifted box
    std::vector<double> times;
    std::vector<double> deviations;

    nlohmann::json to_json() const;
};

// Evolves the lifted autonomous operator on the j-window times [-M, M]^nu and projects back.
QuasienergyReport quasienergy_consistency(const OperatorSpec& spec, const DisorderSample& sample,
                                          const WavePacket& psi0, const Frequency& omega,
                                          const std::vector<double>& theta, double T, int cutoff,
                                          const EvolveOptions& opt = {});

struct ContrastOptions {
    int trials = 20;
    std::uint64_t seed = 0;
    int workers = 1;
    int window = 0;  // disordered-run radius; 0 picks 4 eps T + 20
    EvolveOptions evolve;
};

struct ContrastReport {
    double T = 0.0;
    std::vector<double> disordered_sup;  // per trial
    double disordered_max = 0.0;
    double disordered_mean = 0.0;
    double free_sup = 0.0;
    double free_oracle = 0.0;  // 2 eps^2 T^2 in d = 1
    double ratio = 1.0;        // free_sup / disordered_mean

    nlohmann::json to_json() const;
};

ContrastReport localization_contrast(const OperatorSpec& spec, const Frequency& omega,
                                     const std::vector<double>& theta, double T, const ContrastOptions& opt);

}  // namespace qploc
