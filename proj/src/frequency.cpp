#include "frequency.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "common.hpp"
#include "parallel.hpp"
#include "rng.hpp"

namespace qploc {

namespace {

// calls f(v) for every v in [-R,R]^nu
template <class F>
void for_each_vector(int nu, int R, F&& f) {
    std::vector<int> v(nu, -R);
    for (;;) {
        f(static_cast<const std::vector<int>&>(v));
        int k = nu - 1;
        while (k >= 0 && v[k] == R) v[k--] = -R;
        if (k < 0) return;
        ++v[k];
    }
}

bool is_zero(const std::vector<int>& v) {
    return std::all_of(v.begin(), v.end(), [](int x) { return x == 0; });
}

// first nonzero entry positive
bool upper_half(const std::vector<int>& v) {
    for (int x : v)
        if (x != 0) return x > 0;
    return false;
}

std::vector<int> negate(std::vector<int> v) {
    for (int& x : v) x = -x;
    return v;
}

double dot(const std::vector<int>& m, const Frequency& w) {
    double s = 0;
    for (std::size_t i = 0; i < m.size(); ++i) s += m[i] * w[i];
    return s;
}

double torus_distance(double x) { return std::abs(x - std::nearbyint(x)); }

// {x in [l,r] : lo <= f(x) <= hi} for f monotone on [l,r]
std::optional<Interval> monotone_preimage(const std::function<double(double)>& f, double l, double r, double lo,
                                          double hi) {
    double fl = f(l), fr = f(r);
    bool increasing = fr >= fl;
    double vmin = std::min(fl, fr), vmax = std::max(fl, fr);
    if (vmax < lo || vmin > hi) return std::nullopt;
    auto solve = [&](double target) {
        // smallest x with f(x) >= target (increasing) / f(x) <= target (decreasing)
        double a = l, b = r;
        for (int it = 0; it < 200 && b - a > 0; ++it) {
            double m = 0.5 * (a + b);
            if (m <= a || m >= b) break;
            bool past = increasing ? f(m) >= target : f(m) <= target;
            (past ? b : a) = m;
        }
        return 0.5 * (a + b);
    };
    double x_lo = increasing ? (lo <= fl ? l : solve(lo)) : (hi >= fl ? l : solve(hi));
    double x_hi = increasing ? (hi >= fr ? r : solve(hi)) : (lo <= fr ? r : solve(lo));
    if (x_hi < x_lo) return std::nullopt;
    return Interval{x_lo, x_hi};
}

std::vector<Interval> merge(std::vector<Interval> v) {
    std::sort(v.begin(), v.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> out;
    for (const Interval& iv : v) {
        if (!out.empty() && iv.lo <= out.back().hi)
            out.back().hi = std::max(out.back().hi, iv.hi);
        else
            out.push_back(iv);
    }
    return out;
}

double total_length(const std::vector<Interval>& v) {
    double s = 0;
    for (const Interval& iv : v) s += iv.hi - iv.lo;
    return s;
}

nlohmann::json vec_json(const std::vector<int>& v) { return nlohmann::json(v); }

// generalised golden ratio: the positive root of x^(k+1) = x + 1
double harmonious(int k) {
    double x = 2.0;
    for (int i = 0; i < 100; ++i) x = std::pow(1.0 + x, 1.0 / (k + 1));
    return x;
}

// Index for fast membership in a union of constraint sets.
class ConstraintIndex {
public:
    explicit ConstraintIndex(const std::vector<Constraint>& cs) {
        for (const Constraint& c : cs) {
            if (c.triple())
                triples_[{c.m, c.m2, c.eta, c.lambda}].push_back(c.lambda2);
            else
                pairs_[{c.m, c.eta}].push_back(c.lambda);
        }
        for (auto& [k, v] : pairs_) std::sort(v.begin(), v.end());
        for (auto& [k, v] : triples_) std::sort(v.begin(), v.end());
    }

    bool contains(const Frequency& w) const {
        for (const auto& [key, lams] : pairs_) {
            double s = dot(key.first, w), eta = key.second;
            // lambda in [-s-eta, -s+eta]
            auto it = std::lower_bound(lams.begin(), lams.end(), -s - eta);
            if (it != lams.end() && *it <= -s + eta) return true;
        }
        for (const auto& [key, l2s] : triples_) {
            const auto& [m, m2, eta, lam] = key;
            double X = dot(m, w), Y = dot(m2, w);
            double P = X * Y * (X - Y);
            double base = P - lam * Y;
            // |base + lambda2 X| <= eta
            if (X == 0.0) {
                if (std::abs(base) <= eta) return true;
                continue;
            }
            double a = (-base - eta) / X, b = (-base + eta) / X;
            if (a > b) std::swap(a, b);
            auto it = std::lower_bound(l2s.begin(), l2s.end(), a);
            if (it != l2s.end() && *it <= b) return true;
        }
        return false;
    }

private:
    std::map<std::pair<std::vector<int>, double>, std::vector<double>> pairs_;
    std::map<std::tuple<std::vector<int>, std::vector<int>, double, double>, std::vector<double>> triples_;
};

std::vector<double> pooled_sorted(const std::vector<std::vector<double>>& spectra) {
    std::vector<double> u;
    for (const auto& s : spectra) u.insert(u.end(), s.begin(), s.end());
    std::sort(u.begin(), u.end());
    return u;
}

bool any_in(const std::vector<double>& sorted, double lo, double hi) {
    auto it = std::lower_bound(sorted.begin(), sorted.end(), lo);
    return it != sorted.end() && *it <= hi;
}

// representative of {(m,m2), (m2,m), (-m,-m2), (-m2,-m)}, all of which give the
// same triple constraint family
bool canonical_triple(const std::vector<int>& m, const std::vector<int>& m2) {
    auto key = std::make_pair(m, m2);
    return key <= std::make_pair(m2, m) && key <= std::make_pair(negate(m), negate(m2)) &&
           key <= std::make_pair(negate(m2), negate(m));
}

}  // namespace

bool diophantine_check(const Frequency& w, const DiophantineParams& p) {
    require(!w.empty(), "empty frequency vector");
    require(p.A > 0 && p.c > 0, "Diophantine parameters must be positive");
    require(p.M >= 1, "Diophantine cutoff must be at least 1");
    const int nu = static_cast<int>(w.size());
    bool ok = true;
    for_each_vector(nu, p.M, [&](const std::vector<int>& n) {
        if (!ok || !upper_half(n)) return;
        int l1 = 0;
        for (int x : n) l1 += std::abs(x);
        if (torus_distance(dot(n, w)) < p.c / std::pow(l1, p.A)) ok = false;
    });
    return ok;
}

std::vector<Frequency> quadratic_frequencies(int nu, int count) {
    require(nu >= 1 && count >= 0, "invalid frequency request");
    std::vector<double> pool{(std::sqrt(5.0) - 1.0) / 2.0};
    for (int D = 2; static_cast<int>(pool.size()) < nu * count + 1; ++D) {
        bool square_free = true;
        for (int q = 2; q * q <= D; ++q)
            if (D % (q * q) == 0) square_free = false;
        if (!square_free || D == 5) continue;
        double r = std::sqrt(static_cast<double>(D));
        pool.push_back(r - std::floor(r));
    }
    std::vector<Frequency> out;
    for (int k = 0; k < count; ++k) out.emplace_back(pool.begin() + k * nu, pool.begin() + (k + 1) * nu);
    return out;
}

double Constraint::value(const Frequency& w) const {
    double X = dot(m, w);
    if (!triple()) return X + lambda;
    double Y = dot(m2, w);
    return X * Y * (X - Y) - lambda * Y + lambda2 * X;
}

bool Constraint::excludes(const Frequency& w) const { return std::abs(value(w)) <= eta; }

std::vector<Interval> constraint_intervals(const Constraint& c) {
    require(c.m.size() == 1, "exact constraint sets need nu = 1");
    std::vector<Interval> out;
    if (!c.triple()) {
        int m = c.m[0];
        if (m == 0) {
            if (std::abs(c.lambda) <= c.eta) out.push_back({0.0, 1.0});
            return out;
        }
        double a = (-c.lambda - c.eta) / m, b = (-c.lambda + c.eta) / m;
        if (a > b) std::swap(a, b);
        a = std::max(a, 0.0);
        b = std::min(b, 1.0);
        if (a <= b) out.push_back({a, b});
        return out;
    }
    // f(w) = A w^3 - B w with A = m m2 (m - m2), B = lambda m2 - lambda2 m
    double m = c.m[0], m2 = c.m2[0];
    double A = m * m2 * (m - m2), B = c.lambda * m2 - c.lambda2 * m;
    auto f = [&](double x) { return A * x * x * x - B * x; };
    std::vector<double> cuts{0.0};
    if (A != 0.0 && B / A > 0.0) {
        double xc = std::sqrt(B / (3.0 * A));
        if (xc > 0.0 && xc < 1.0) cuts.push_back(xc);
    }
    cuts.push_back(1.0);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        auto piece = monotone_preimage(f, cuts[i], cuts[i + 1], -c.eta, c.eta);
        if (piece) out.push_back(*piece);
    }
    return merge(out);
}

nlohmann::json ExclusionReport::to_json() const {
    nlohmann::json cs = nlohmann::json::array();
    for (const Constraint& c : constraints) {
        nlohmann::json e{{"m", vec_json(c.m)}, {"lambda", c.lambda}, {"eta", c.eta}};
        if (c.triple()) {
            e["m2"] = vec_json(c.m2);
            e["lambda2"] = c.lambda2;
        }
        cs.push_back(std::move(e));
    }
    nlohmann::json comps = nlohmann::json::array();
    for (const Interval& iv : components) comps.push_back({iv.lo, iv.hi});
    return {{"nu", nu},
            {"excluded_measure", excluded_measure},
            {"ci", {ci.lo, ci.hi}},
            {"exact", exact},
            {"component_count", component_count},
            {"components_exact", components_exact},
            {"components", comps},
            {"max_constraint_measure", max_constraint_measure},
            {"reference_bound", reference_bound},
            {"constraints", cs}};
}

ExclusionReport measure_constraints(std::vector<Constraint> constraints, int nu, const MeasureOptions& opt) {
    require(nu >= 1, "nu must be positive");
    for (const Constraint& c : constraints) {
        require(static_cast<int>(c.m.size()) == nu, "constraint has wrong dimension");
        require(!c.triple() || static_cast<int>(c.m2.size()) == nu, "constraint has wrong dimension");
        require(c.eta >= 0, "constraint threshold must be non-negative");
    }
    ExclusionReport rep;
    rep.nu = nu;
    for (const Constraint& c : constraints) {
        double ref = 0.0;
        if (c.triple()) {
            ref = std::cbrt(c.eta);
        } else {
            int l1 = 0;
            for (int x : c.m) l1 += std::abs(x);
            ref = l1 > 0 ? 2.0 * c.eta / l1 : 1.0;
        }
        rep.reference_bound = std::max(rep.reference_bound, std::min(1.0, ref));
    }
    bool exact = opt.method == MeasureMethod::Exact || (opt.method == MeasureMethod::Auto && nu == 1);
    if (exact) {
        require(nu == 1, "exact exclusion measure is only available for nu = 1");
        std::vector<Interval> all;
        for (const Constraint& c : constraints) {
            auto iv = constraint_intervals(c);
            rep.max_constraint_measure = std::max(rep.max_constraint_measure, total_length(iv));
            all.insert(all.end(), iv.begin(), iv.end());
        }
        rep.components = merge(std::move(all));
        rep.excluded_measure = std::min(1.0, total_length(rep.components));
        rep.ci = {rep.excluded_measure, rep.excluded_measure};
        rep.exact = true;
        rep.component_count = rep.components.size();
        rep.components_exact = true;
    } else {
        require(opt.replicates >= 2, "QMC needs at least two replicates");
        const std::size_t P = std::max<std::size_t>(1, opt.points / opt.replicates);
        std::vector<double> alpha(nu);
        double phi = harmonious(nu);
        for (int i = 0; i < nu; ++i) alpha[i] = std::fmod(std::pow(1.0 / phi, i + 1), 1.0);
        ConstraintIndex index(constraints);
        auto fractions = parallel_map(static_cast<std::size_t>(opt.replicates), opt.workers, [&](std::size_t r) {
            Rng rng(derive_seed(opt.seed, {0x51u, r}));
            std::vector<double> shift(nu);
            for (double& s : shift) s = rng.uniform();
            Frequency w(nu);
            std::size_t hits = 0;
            for (std::size_t k = 1; k <= P; ++k) {
                for (int i = 0; i < nu; ++i) {
                    double x = shift[i] + static_cast<double>(k) * alpha[i];
                    x -= std::floor(x);
                    w[i] = x == 0.0 ? 1.0 : x;
                }
                if (index.contains(w)) ++hits;
            }
            return static_cast<double>(hits) / static_cast<double>(P);
        });
        double m = mean(fractions), sd = sample_stddev(fractions);
        double half = student_t_quantile(0.9995, opt.replicates - 1) * sd / std::sqrt(opt.replicates);
        half = std::max(half, 1.0 / static_cast<double>(P));
        rep.excluded_measure = m;
        rep.ci = {std::max(0.0, m - half), std::min(1.0, m + half)};
        rep.exact = false;
        rep.component_count = constraints.size();
        rep.components_exact = false;
    }
    rep.constraints = std::move(constraints);
    return rep;
}

std::vector<double> j_box_spectrum(const OperatorSpec& spec, const DisorderSample& sample, const Site& j0, int r) {
    Region box = make_box({spec.dims.d, 0}, j0, r);
    const int n = static_cast<int>(box.size());
    Eigen::MatrixXd H = Eigen::MatrixXd::Zero(n, n);
    for (int a = 0; a < n; ++a) {
        H(a, a) = sample.value(box.site(a));
        for_each_neighbor(box.site(a), [&](const Site& y, int) {
            int c = box.index_of(y);
            if (c >= 0) H(a, c) = spec.eps;
        });
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H, Eigen::EigenvaluesOnly);
    return {es.eigenvalues().data(), es.eigenvalues().data() + n};
}

std::vector<JBoxSpectrum> j_box_spectra(const OperatorSpec& spec, const DisorderSample& sample, int N0, int N) {
    require(N0 >= 0 && N >= N0, "need 0 <= N0 <= N");
    const int d = spec.dims.d;
    std::vector<JBoxSpectrum> out;
    Region centres = make_box({d, 0}, Site(d), N - N0);
    for (const Site& j0 : centres.sites()) out.push_back({j0, j_box_spectrum(spec, sample, j0, N0)});
    return out;
}

std::vector<std::vector<double>> spectra_of(const std::vector<JBoxSpectrum>& boxes) {
    std::vector<std::vector<double>> out;
    for (const auto& b : boxes) out.push_back(b.mu);
    return out;
}

ExclusionReport melnikov_pair_constraints(const std::vector<std::vector<double>>& spectra, int nu, int N, int N0,
                                          double sigma, const MeasureOptions& opt) {
    require(nu >= 1 && N >= 1 && N0 >= 1, "invalid scales");
    const double eta = pair_threshold(N0, sigma);
    std::vector<double> u = pooled_sorted(spectra);
    std::vector<double> lambdas;
    for (double a : u)
        for (double b : u) lambdas.push_back(a - b);
    std::sort(lambdas.begin(), lambdas.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    std::vector<Constraint> cs;
    for_each_vector(nu, 2 * N, [&](const std::vector<int>& m) {
        if (!upper_half(m)) return;
        // range of m.w over the unit cube
        double lo = 0, hi = 0;
        for (int x : m) (x < 0 ? lo : hi) += x;
        for (double lam : lambdas) {
            if (-lam < lo - eta || -lam > hi + eta) continue;
            Constraint c{m, {}, lam, 0.0, eta};
            if (nu == 1 && constraint_intervals(c).empty()) continue;
            cs.push_back(std::move(c));
        }
    });
    return measure_constraints(std::move(cs), nu, opt);
}

ExclusionReport melnikov_triple_constraints(const std::vector<std::vector<double>>& spectra, int nu, int N, int N0,
                                            double sigma, const MeasureOptions& opt, std::size_t max_constraints) {
    require(nu >= 1 && N >= 1 && N0 >= 1, "invalid scales");
    const double eta = triple_threshold(N0, sigma);
    std::vector<double> u = pooled_sorted(spectra);
    u.erase(std::unique(u.begin(), u.end()), u.end());
    std::vector<std::vector<int>> ms;
    for_each_vector(nu, 2 * N, [&](const std::vector<int>& m) {
        if (!is_zero(m)) ms.push_back(m);
    });
    std::vector<Constraint> cs;
    for (const auto& m : ms)
        for (const auto& m2 : ms) {
            if (m == m2 || !canonical_triple(m, m2)) continue;
            for (double mu1 : u)
                for (double mu2 : u)
                    for (double mu3 : u) {
                        Constraint c{m, m2, mu2 - mu1, mu3 - mu1, eta};
                        if (nu == 1 && constraint_intervals(c).empty()) continue;
                        if (cs.size() >= max_constraints)
                            fail(ErrorCode::CapExceeded, "triple constraint list exceeds " +
                                                             std::to_string(max_constraints) + " entries");
                        cs.push_back(std::move(c));
                    }
        }
    return measure_constraints(std::move(cs), nu, opt);
}

bool pair_excluded(const Frequency& w, const std::vector<std::vector<double>>& spectra, int N, double eta) {
    const int nu = static_cast<int>(w.size());
    std::vector<double> u = pooled_sorted(spectra);
    bool hit = false;
    for_each_vector(nu, 2 * N, [&](const std::vector<int>& m) {
        if (hit || !upper_half(m)) return;
        double s = dot(m, w);
        // mu_a - mu_b in [-s-eta, -s+eta]
        for (double mb : u)
            if (any_in(u, mb - s - eta, mb - s + eta)) {
                hit = true;
                return;
            }
    });
    return hit;
}

bool triple_excluded(const Frequency& w, const std::vector<std::vector<double>>& spectra, int N, double eta) {
    const int nu = static_cast<int>(w.size());
    std::vector<double> u = pooled_sorted(spectra);
    u.erase(std::unique(u.begin(), u.end()), u.end());
    std::vector<std::vector<int>> ms;
    for_each_vector(nu, 2 * N, [&](const std::vector<int>& m) {
        if (!is_zero(m)) ms.push_back(m);
    });
    for (const auto& m : ms)
        for (const auto& m2 : ms) {
            if (m == m2 || !canonical_triple(m, m2)) continue;
            double X = dot(m, w), Y = dot(m2, w);
            double P = X * Y * (X - Y);
            for (double mu1 : u)
                for (double mu2 : u) {
                    // |P - (mu2-mu1) Y + (mu3-mu1) X| <= eta, solved for mu3
                    double base = P - (mu2 - mu1) * Y - mu1 * X;
                    if (X == 0.0) {
                        if (std::abs(base + mu1 * X) <= eta) return true;
                        continue;
                    }
                    double a = (-base - eta) / X, b = (-base + eta) / X;
                    if (a > b) std::swap(a, b);
                    if (any_in(u, a, b)) return true;
                }
        }
    return false;
}

nlohmann::json CensusResult::to_json() const {
    nlohmann::json fam = nlohmann::json::array();
    for (const Site& s : family) fam.push_back(std::vector<int>(s.coords().begin(), s.coords().end()));
    return {{"count", count}, {"exact", exact}, {"resonant_boxes", resonant_boxes}, {"witnesses", witnesses},
            {"family", fam}};
}

CensusResult max_disjoint_boxes(const std::vector<Site>& centres, int radius, std::size_t budget) {
    const int n = static_cast<int>(centres.size());
    auto apart = [&](int a, int b) {
        for (int k = 0; k < centres[a].dim(); ++k)
            if (std::abs(centres[a][k] - centres[b][k]) > 2 * radius) return true;
        return false;
    };
    CensusResult res;
    res.resonant_boxes = centres.size();
    if (n == 0) return res;
    // greedy lower bound
    std::vector<int> greedy;
    for (int a = 0; a < n; ++a)
        if (std::all_of(greedy.begin(), greedy.end(), [&](int b) { return apart(a, b); })) greedy.push_back(a);
    // volume bound: the boxes are disjoint cubes of side 2r+1 inside the hull of all boxes
    double packing = 1.0;
    for (int k = 0; k < centres[0].dim(); ++k) {
        int lo = centres[0][k], hi = lo;
        for (const Site& c : centres) lo = std::min(lo, c[k]), hi = std::max(hi, c[k]);
        packing *= std::floor(static_cast<double>(hi - lo + 2 * radius + 1) / (2 * radius + 1));
    }
    std::vector<int> best = greedy, cur;
    std::size_t work = 0;
    bool out_of_budget = false;
    std::function<void(const std::vector<int>&)> dfs = [&](const std::vector<int>& cand) {
        if (cur.size() > best.size()) best = cur;
        if (static_cast<double>(best.size()) >= packing) return;
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (cur.size() + (cand.size() - i) <= best.size()) return;
            work += cand.size() - i;
            if (work > budget) {
                out_of_budget = true;
                return;
            }
            std::vector<int> next;
            for (std::size_t k = i + 1; k < cand.size(); ++k)
                if (apart(cand[i], cand[k])) next.push_back(cand[k]);
            cur.push_back(cand[i]);
            dfs(next);
            cur.pop_back();
            if (out_of_budget || static_cast<double>(best.size()) >= packing) return;
        }
    };
    if (static_cast<double>(best.size()) < packing) {
        std::vector<int> all(n);
        std::iota(all.begin(), all.end(), 0);
        dfs(all);
    }
    res.exact = !out_of_budget;
    res.count = best.size();
    for (int a : best) res.family.push_back(centres[a]);
    return res;
}

CensusResult census_bad_boxes(const OperatorSpec& spec, const std::vector<JBoxSpectrum>& boxes,
                              const Frequency& omega, double theta, double E, int N0, int N, double sigma,
                              std::size_t budget) {
    const int d = spec.dims.d, nu = spec.dims.nu;
    validate_frequency(omega, nu);
    require(N >= N0 && N0 >= 0, "need 0 <= N0 <= N");
    const double thr = resonance_threshold(N0, sigma);
    Region ncentres = make_box({nu, 0}, Site(nu), N - N0);
    std::vector<Site> resonant;
    std::size_t witnesses = 0;
    for (const auto& jb : boxes) {
        require(jb.j0.dim() == d, "j-box has wrong dimension");
        std::vector<Site> wn;
        for_each_vector(nu, N, [&](const std::vector<int>& nv) {
            Site n{std::span<const int>(nv)};
            double x = mode_energy(spec.model, omega, n, theta);
            for (double mu : jb.mu)
                if (std::abs(x + mu - E) < thr) {
                    wn.push_back(n);
                    ++witnesses;
                    break;
                }
        });
        if (wn.empty()) continue;
        for (const Site& n0 : ncentres.sites()) {
            bool hit = std::any_of(wn.begin(), wn.end(), [&](const Site& n) {
                for (int k = 0; k < nu; ++k)
                    if (std::abs(n[k] - n0[k]) > N0) return false;
                return true;
            });
            if (hit) resonant.push_back(concat(jb.j0, n0));
        }
    }
    std::sort(resonant.begin(), resonant.end());
    CensusResult res = max_disjoint_boxes(resonant, N0, budget);
    res.witnesses = witnesses;
    return res;
}

CensusResult census_bad_boxes(const OperatorSpec& spec, const DisorderSample& sample, const Frequency& omega,
                              double theta, double E, int N0, int N, double sigma) {
    return census_bad_boxes(spec, j_box_spectra(spec, sample, N0, N), omega, theta, E, N0, N, sigma);
}

}  // namespace qploc
