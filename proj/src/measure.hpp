#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <vector>

#include <json.hpp>

#include "operators.hpp"
#include "stats.hpp"

namespace qploc {

struct MeasureEstimate {
    double value = 0.0;
    double ci_halfwidth = 0.0;  // 95%; 0 for exact values
    std::size_t trials = 0;
    double bound = std::numeric_limits<double>::quiet_NaN();
    bool exact = false;
    bool reliable = true;  // false below 30 trials

    // value - ci <= bound; true when no bound is asserted
    bool pass() const { return std::isnan(bound) || value - ci_halfwidth <= bound; }
    nlohmann::json to_json() const;
};

MeasureEstimate binomial_estimate(std::size_t hits, std::size_t trials);

struct ThetaRange {
    double lo = 0.0;
    double hi = 1.0;
};

struct WegnerThetaOptions {
    double C = 2.0;
    int grid_points = 4096;  // only above the dense cap
};

// mes{theta in range : dist(E, spec H(theta)) <= kappa}, Schrodinger only
MeasureEstimate wegner_theta(const OperatorSpec& spec, std::shared_ptr<const Region> region,
                             std::shared_ptr<const DisorderSample> sample, const Frequency& omega, double E,
                             double kappa, ThetaRange range = {}, const WegnerThetaOptions& opt = {});

struct McOptions {
    int trials = 10000;
    std::uint64_t seed = 0;
    int workers = 1;
};

// P_x{dist(E, spec H) <= kappa}; bound C kappa |region| sup g
MeasureEstimate wegner_x(const OperatorSpec& spec, const Region& region, const Frequency& omega, double theta,
                         double E, double kappa, const McOptions& mc, double C = 4.0);

// max |N(theta, E +- kappa) - N(theta -+ kappa, E)|, with N the eigenvalue count
int counting_shift_check(const OperatorSpec& spec, std::shared_ptr<const Region> region,
                         std::shared_ptr<const DisorderSample> sample, const Frequency& omega, double theta,
                         double E, double kappa);
std::size_t eigenvalue_count(const HamiltonianMatrix& H, double E);

// fraction of a uniform theta grid on [0,1) where the box is Bad; region must be a box
MeasureEstimate badset_measure_theta(const OperatorSpec& spec, std::shared_ptr<const Region> box,
                                     std::shared_ptr<const DisorderSample> sample, const Frequency& omega, double E,
                                     double gamma, double sigma, int grid_points = 512);

MeasureEstimate badset_probability_x(const OperatorSpec& spec, const Region& box, const Frequency& omega,
                                     double theta, double E, double gamma, double sigma, const McOptions& mc);

struct ScaleSweep {
    std::vector<int> scales;
    std::vector<MeasureEstimate> estimates;
    double p_fit = std::numeric_limits<double>::quiet_NaN();  // P ~ N^{-p}

    nlohmann::json to_json() const;
};

ScaleSweep badset_probability_sweep(const OperatorSpec& spec, const std::vector<int>& scales,
                                    const Frequency& omega, double theta, double E, double gamma, double sigma,
                                    const McOptions& mc);

struct SeparationResult {
    int L = 0;
    double beta = 0.0;
    double threshold = 0.0;  // e^{-L^beta}
    std::size_t trials = 0;
    std::size_t violations = 0;  // min distance < threshold
    MeasureEstimate probability;
    std::vector<double> min_distances;  // per trial

    nlohmann::json to_json() const;
};

// Spectra of eps*Delta + V on the j-boxes of radius L around 0 and (2L+1) e_1.
SeparationResult eigenvalue_separation(const OperatorSpec& spec, int L, double beta, const McOptions& mc);
// P(min |a_i - b_k| < t) for two independent sets of n uniform points on an interval of length `width`
double separation_oracle(int n, double t, double width);

}  // namespace qploc
