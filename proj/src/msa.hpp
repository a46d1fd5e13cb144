#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "frequency.hpp"
#include "greens.hpp"
#include "operators.hpp"
#include "stats.hpp"

namespace qploc {

enum class ScheduleMode { Paper, VDK };

std::string to_string(ScheduleMode m);
ScheduleMode parse_schedule_mode(const std::string& s);

// largest box the classifier handles for a given dimension split
std::size_t site_cap(Dims dims);

struct ScaleSchedule {
    int N0 = 1;
    double C = 2.0;      // exponent in the default mode
    double alpha = 1.5;  // vDK mode exponent
    double sigma = 0.5;
    double gamma0 = 1.0;
    double kappa = 0.25;  // gamma_{k+1} = gamma_k - N_{k+1}^{-kappa}
    int levels = 1;      // requested
    ScheduleMode mode = ScheduleMode::Paper;
    std::vector<int> scales;
    std::vector<double> gammas;
    bool capped = false;  // fewer scales than requested because of the site cap

    nlohmann::json to_json() const;
};

// floor(|ln(c delta)|^{1/sigma}) + 1
int initial_scale(double delta, double c, double sigma);
// floor(N^exponent) + 1
int next_scale(int N, double exponent);

ScaleSchedule schedule_from(int N0, double sigma, double exponent, int levels, ScheduleMode mode, Dims dims,
                            double gamma0 = 1.0, double kappa = 0.25);
ScaleSchedule schedule(double delta, double c, double sigma, double exponent, int levels, ScheduleMode mode,
                       Dims dims, double gamma0 = 1.0, double kappa = 0.25);

struct MsaConfig {
    int samples = 4;
    std::vector<int> theta_points{512};  // per scale; the last entry repeats
    double E = 0.0;
    std::uint64_t seed = 0;
    int workers = 1;
    bool subbox_census = true;
    DiophantineParams diophantine;
};

struct MsaTrial {
    int level = 0;
    int N = 0;
    int sample = 0;
    int theta_index = 0;
    double theta = 0.0;
    GreenReport report;
    int bad_subboxes = 0;  // disjoint resonant boxes of the previous scale
};

struct ScaleCensus {
    int scale = 0;
    int trials = 0;
    double gamma = 0.0;  // threshold used for the verdict
    double good_fraction = 0.0;
    Interval good_ci;
    double gamma_mean = std::numeric_limits<double>::quiet_NaN();
    double gamma_degradation = std::numeric_limits<double>::quiet_NaN();
    int max_disjoint_bad = 0;

    nlohmann::json to_json() const;
};

struct MsaPrecondition {
    bool diophantine = false;
    // per level >= 1: whether omega lies in the exclusion set built from sample 0
    std::vector<std::string> exclusion;  // "accepted", "excluded" or "skipped"
    bool satisfied() const;
    nlohmann::json to_json() const;
};

struct MsaResult {
    ScaleSchedule schedule;
    std::vector<ScaleCensus> scales;
    std::vector<MsaTrial> trials;
    MsaPrecondition precondition;
    double kappa_fit = std::numeric_limits<double>::quiet_NaN();

    nlohmann::json to_json() const;
};

MsaResult msa_run(const OperatorSpec& spec, const ScaleSchedule& sched, const Frequency& omega, const MsaConfig& cfg);

struct RegularityOptions {
    int L = 6;
    double m = 1.0;
    std::vector<double> energies{0.0};
    double tolerance = 0.0;  // also require dist(E, spectrum) >= tolerance
    double theta = 0.0;
    int trials = 1000;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct RegularityResult {
    std::size_t successes = 0;
    std::size_t trials = 0;
    double estimate = 0.0;
    Interval ci;
    // p in 1 - L^{-2p}; +inf when every trial succeeded
    double p_fit = 0.0;

    nlohmann::json to_json() const;
};

// Boxes of radius L around i = 0 and j = (2L+1) e_1 in Z^d (n-centre 0).
RegularityResult regularity_probability(const OperatorSpec& spec, const Frequency& omega,
                                        const RegularityOptions& opt);
// closed form at eps = delta = 0 for a single energy
double regularity_probability_exact(const OperatorSpec& spec, const Frequency& omega, const RegularityOptions& opt);

struct DoubleResonanceOptions {
    int N = 8;
    int Nbar = 64;
    double Cbar = 1.0;
    double E = 0.0;
    double theta = 0.0;
    double gamma = 1.0;
    double sigma = 0.5;
    int trials = 500;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct DoubleResonanceResult {
    std::size_t trials = 0;
    std::size_t resonant = 0;  // ||G_Nbar|| >= e^{Cbar N}
    std::size_t bad = 0;       // far small box Bad
    std::size_t joint = 0;
    Interval resonant_ci, bad_ci, joint_ci;
    double product = 0.0;
    double bound = 0.0;  // product + 3 binomial sd

    nlohmann::json to_json() const;
};

DoubleResonanceResult double_resonance_probe(const OperatorSpec& spec, const Frequency& omega,
                                             const DoubleResonanceOptions& opt);

}  // namespace qploc
