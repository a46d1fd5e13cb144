#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <json.hpp>

#include "lattice.hpp"

namespace qploc {

enum class Model { Schrodinger, Wave };

std::string to_string(Model m);
Model parse_model(const std::string& s);

// uniform on [-half_width, half_width]; support must stay inside [-1,1]
struct Distribution {
    double half_width = 1.0;

    double density_bound() const { return 0.5 / half_width; }
    double support_lo() const { return -half_width; }
    double support_hi() const { return half_width; }
    double draw(std::uint64_t bits) const;
    std::string name() const;
    static Distribution parse(const std::string& s);
    bool operator==(const Distribution&) const = default;
};

enum class DriveProfile { Exponential, Saturating };

std::string to_string(DriveProfile p);
DriveProfile parse_drive_profile(const std::string& s);

struct OperatorSpec {
    Dims dims;
    double eps = 0.01;
    double delta = 0.01;
    double b = 1.0;
    Model model = Model::Schrodinger;
    Distribution g;
    DriveProfile profile = DriveProfile::Exponential;
    double drive_factor = 1.0;  // multiplies every W_k; 1/2 for the Fourier lift
    bool drive_enabled = true;  // false drops the n-hopping edges altogether

    // W_k(j)
    double drive(int k, const Site& j) const;
    // sum_k |W_k(j)|
    double drive_row_sum(const Site& j) const;
    void validate() const;
    nlohmann::json to_json() const;
    static OperatorSpec from_json(const nlohmann::json& j);
};

using Frequency = std::vector<double>;
void validate_frequency(const Frequency& w, int nu);

class DisorderSample {
public:
    DisorderSample() = default;
    // explicit values on the window [lo, hi] (lexicographic)
    DisorderSample(Distribution g, Site lo, Site hi, std::vector<double> values, std::uint64_t seed);

    const Distribution& distribution() const { return g_; }
    std::uint64_t seed() const { return seed_; }
    const Site& lo() const { return lo_; }
    const Site& hi() const { return hi_; }
    bool covers(const Site& j) const;
    double value(const Site& j) const;
    const std::vector<double>& values() const { return values_; }

private:
    std::size_t offset(const Site& j) const;

    Distribution g_;
    Site lo_, hi_;
    std::vector<double> values_;
    std::uint64_t seed_ = 0;
};

// counter-based draw: v_j depends only on (seed, j)
double disorder_value(const Distribution& g, std::uint64_t seed, const Site& j);
DisorderSample sample_disorder(const Distribution& g, const Site& lo, const Site& hi, std::uint64_t seed);
// window [-r, r]^d around the origin
DisorderSample sample_disorder(const Distribution& g, int d, int r, std::uint64_t seed);

struct HamiltonianMatrix {
    std::shared_ptr<const Region> region;
    std::shared_ptr<const DisorderSample> sample;
    OperatorSpec spec;
    Frequency omega;
    double theta = 0.0;
    Eigen::SparseMatrix<double> matrix;

    std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
    Eigen::MatrixXd dense() const;
};

// f(n.w + theta) on the diagonal, before the potential
double mode_energy(Model m, const Frequency& w, const Site& n, double theta);

HamiltonianMatrix assemble(const OperatorSpec& spec, std::shared_ptr<const Region> region,
                           std::shared_ptr<const DisorderSample> sample, const Frequency& omega, double theta);
HamiltonianMatrix assemble(const OperatorSpec& spec, const Region& region, const DisorderSample& sample,
                           const Frequency& omega, double theta);

struct SupportReport {
    double allowed_lo = 0, allowed_hi = 0;
    double observed_lo = 0, observed_hi = 0;
    std::size_t eigenvalues = 0;
    std::size_t violations = 0;
    bool pass() const { return violations == 0; }
};

SupportReport spectrum_support_check(const OperatorSpec& spec, const Region& region,
                                     const std::vector<DisorderSample>& samples, const Frequency& omega,
                                     double theta);

enum class DifferenceScheme { Central, Forward };

double theta_derivative_check(const OperatorSpec& spec, const Region& region, const DisorderSample& sample,
                              const Frequency& omega, double theta, double h,
                              DifferenceScheme scheme = DifferenceScheme::Central);

// max over rows of (sum of |n-hopping entries|) - 2 nu delta e^{-b|j|}; <= 0 when the drive decay assumption holds
double drive_gershgorin_excess(const HamiltonianMatrix& H);

}  // namespace qploc
