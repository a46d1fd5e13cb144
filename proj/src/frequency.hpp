#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <json.hpp>

#include "operators.hpp"
#include "stats.hpp"

namespace qploc {

struct DiophantineParams {
    double A = 2.0;
    double c = 0.1;
    int M = 50;
};

// ||n.w||_T >= c / |n|_1^A for every n in [-M,M]^nu \ {0}
bool diophantine_check(const Frequency& w, const DiophantineParams& p);

// Quadratic irrationals frac(sqrt(D)) over square-free D, golden mean first.
// Entry k of the result is a nu-vector with rationally independent components.
std::vector<Frequency> quadratic_frequencies(int nu, int count);

// Pair constraint:   |m.w + lambda| <= eta
// Triple constraint: |(m.w)(m2.w)((m-m2).w) - lambda (m2.w) + lambda2 (m.w)| <= eta
struct Constraint {
    std::vector<int> m;
    std::vector<int> m2;  // empty for pair constraints
    double lambda = 0.0;
    double lambda2 = 0.0;
    double eta = 0.0;

    bool triple() const { return !m2.empty(); }
    double value(const Frequency& w) const;
    bool excludes(const Frequency& w) const;
};

enum class MeasureMethod { Auto, Exact, Qmc };

struct MeasureOptions {
    MeasureMethod method = MeasureMethod::Auto;
    std::size_t points = 1000000;  // total over all replicates
    int replicates = 16;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct ExclusionReport {
    int nu = 1;
    std::vector<Constraint> constraints;
    double excluded_measure = 0.0;
    Interval ci;
    bool exact = false;
    std::size_t component_count = 0;
    bool components_exact = false;  // only nu = 1 exact runs count true components
    std::vector<Interval> components;
    // largest single-constraint measure (exact runs only) and the reference scale
    // it is compared against
    double max_constraint_measure = 0.0;
    double reference_bound = 0.0;

    nlohmann::json to_json() const;
};

ExclusionReport measure_constraints(std::vector<Constraint> constraints, int nu, const MeasureOptions& opt = {});

// exact set {w in (0,1] : constraint holds}, nu = 1
std::vector<Interval> constraint_intervals(const Constraint& c);

// eigenvalues of eps*Laplacian + V on the j-box of radius r around j0
struct JBoxSpectrum {
    Site j0;
    std::vector<double> mu;
};

// spectrum of eps*Delta + V on the j-box of radius r around j0
std::vector<double> j_box_spectrum(const OperatorSpec& spec, const DisorderSample& sample, const Site& j0, int r);
// every j-box of radius N0 inside [-N,N]^d
std::vector<JBoxSpectrum> j_box_spectra(const OperatorSpec& spec, const DisorderSample& sample, int N0, int N);

inline double pair_threshold(int N0, double sigma) { return 4.0 * std::exp(-std::pow(N0, sigma)); }
inline double triple_threshold(int N0, double sigma) { return std::exp(-std::pow(N0, sigma) / 2.0); }
inline double resonance_threshold(int N0, double sigma) { return 2.0 * std::exp(-std::pow(N0, sigma)); }

// all pair constraints m in [-2N,2N]^nu \ {0} (one of +-m), lambda over every
// ordered eigenvalue pair, that meet (0,1]^nu
ExclusionReport melnikov_pair_constraints(const std::vector<std::vector<double>>& spectra, int nu, int N, int N0,
                                          double sigma, const MeasureOptions& opt = {});
ExclusionReport melnikov_triple_constraints(const std::vector<std::vector<double>>& spectra, int nu, int N, int N0,
                                            double sigma, const MeasureOptions& opt = {},
                                            std::size_t max_constraints = 2000000);

// Membership in the union of the above constraint sets without listing them.
bool pair_excluded(const Frequency& w, const std::vector<std::vector<double>>& spectra, int N, double eta);
bool triple_excluded(const Frequency& w, const std::vector<std::vector<double>>& spectra, int N, double eta);

std::vector<std::vector<double>> spectra_of(const std::vector<JBoxSpectrum>& boxes);

struct CensusResult {
    std::size_t count = 0;  // size of the largest family of pairwise disjoint resonant boxes
    bool exact = true;
    std::size_t resonant_boxes = 0;
    std::size_t witnesses = 0;
    std::vector<Site> family;  // box centres in Z^{d+nu}

    nlohmann::json to_json() const;
};

CensusResult census_bad_boxes(const OperatorSpec& spec, const DisorderSample& sample, const Frequency& omega,
                              double theta, double E, int N0, int N, double sigma);
// same, on precomputed j-box spectra
CensusResult census_bad_boxes(const OperatorSpec& spec, const std::vector<JBoxSpectrum>& boxes,
                              const Frequency& omega, double theta, double E, int N0, int N, double sigma,
                              std::size_t budget = 20000000);

// largest family of boxes (radius r, centres given) that are pairwise disjoint;
// exact unless the search budget (pair tests) runs out, else a greedy lower bound
CensusResult max_disjoint_boxes(const std::vector<Site>& centres, int radius, std::size_t budget = 20000000);

}  // namespace qploc
