#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "operators.hpp"
#include "stats.hpp"

namespace qploc {

struct EigenPair {
    double value = 0.0;
    Eigen::VectorXd vector;
    std::shared_ptr<const Region> region;
    Site loc_center;  // argmax |psi|
    double decay_rate = std::numeric_limits<double>::quiet_NaN();  // j-direction fit, +inf for a site indicator
    double participation = 0.0;                                      // 1 / sum |psi|^4

    static std::string csv_header();
    std::string csv_row() const;
};

// full spectrum, sorted by value; CapExceeded above the dense cap
std::vector<EigenPair> eigensolve(const HamiltonianMatrix& H);

enum class DecayDirection { J, All };

struct DecayFit {
    double rate = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();
    std::vector<int> radii;         // shells used in the fit
    std::vector<double> shell_max;  // max |psi| on each shell
};

// Least squares of log(shell max of |psi|) against the distance from loc_center. Shells below
// 1e-13 of the peak are rounding noise and left out.
DecayFit decay_profile(const EigenPair& pair, DecayDirection dir = DecayDirection::J);

// |psi(m)| <= 1 + |m|^c on the whole region
bool schnol_bound_check(const EigenPair& pair, double c);
bool schnol_bound_check(const Eigen::VectorXd& psi, const Region& region, double c);

struct LocalizationOptions {
    int samples = 100;
    double E_lo = -std::numeric_limits<double>::infinity();
    double E_hi = std::numeric_limits<double>::infinity();
    double gamma_min = 1.0;
    double pr_max = 10.0;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct LocalizationCensus {
    std::size_t pairs = 0;      // eigenpairs with value in the window
    std::size_t localized = 0;  // decay_rate >= gamma_min and participation <= pr_max
    double fraction = 1.0;
    Interval ci;
    std::vector<std::size_t> per_sample_pairs, per_sample_localized;
    double median_rate = std::numeric_limits<double>::quiet_NaN();

    nlohmann::json to_json() const;
};

LocalizationCensus localization_census(const OperatorSpec& spec, const Region& box, const Frequency& omega,
                                       double theta, const LocalizationOptions& opt);

}  // namespace qploc
