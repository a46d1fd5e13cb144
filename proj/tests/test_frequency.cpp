#include <doctest.h>

#include <cmath>
#include <set>

#include "common.hpp"
#include "frequency.hpp"
#include "rng.hpp"

using namespace qploc;

namespace {

const double kGold = 0.61803398874989485;

std::vector<Constraint> random_pairs(Rng& rng, int count, double eta) {
    std::vector<Constraint> cs;
    for (int k = 0; k < count; ++k) {
        int m = 1 + static_cast<int>(rng.uniform(0, 12));
        cs.push_back({{m}, {}, -rng.uniform(0, m), 0.0, eta});
    }
    return cs;
}

}  // namespace

TEST_SUITE("frequency") {

TEST_CASE("Diophantine check") {
    CHECK(diophantine_check({kGold}, {2.0, 0.1, 50}));
    CHECK_FALSE(diophantine_check({0.5}, {2.0, 0.1, 10}));
    CHECK_FALSE(diophantine_check({0.5, 0.5}, {2.0, 0.1, 5}));
    // monotone in the cutoff
    Rng rng(4);
    for (int t = 0; t < 40; ++t) {
        Frequency w{rng.uniform()};
        DiophantineParams p{1.5, 0.2, 5};
        if (!diophantine_check(w, p)) {
            for (int M : {6, 10, 30}) {
                p.M = M;
                CHECK_FALSE(diophantine_check(w, p));
            }
        }
    }
    auto qs = quadratic_frequencies(2, 3);
    REQUIRE(qs.size() == 3);
    CHECK(qs[0][0] == doctest::Approx(kGold));
    CHECK(qs[0][1] == doctest::Approx(std::sqrt(2.0) - 1.0));
    for (const auto& w : quadratic_frequencies(1, 5)) CHECK(diophantine_check(w, {2.0, 0.05, 40}));
}

TEST_CASE("single pair constraints") {
    Constraint c{{2}, {}, -1.0, 0.0, 0.01};
    auto iv = constraint_intervals(c);
    REQUIRE(iv.size() == 1);
    CHECK(iv[0].lo == doctest::Approx(0.495));
    CHECK(iv[0].hi == doctest::Approx(0.505));
    auto rep = measure_constraints({c}, 1);
    CHECK(rep.exact);
    CHECK(rep.excluded_measure == doctest::Approx(0.01));
    CHECK(rep.component_count == 1);
    // |lambda| beyond anything m.w can reach
    Constraint far{{3}, {}, 3.0 * 1.0 + 0.5, 0.0, 0.01};
    CHECK(constraint_intervals(far).empty());
    CHECK(measure_constraints({far}, 1).excluded_measure == 0.0);
}

TEST_CASE("QMC agrees with the interval union") {
    Rng rng(21);
    for (int set = 0; set < 4; ++set) {
        auto cs = random_pairs(rng, 30, 2e-3);
        auto exact = measure_constraints(cs, 1);
        MeasureOptions opt;
        opt.method = MeasureMethod::Qmc;
        opt.points = 200000;
        opt.seed = 100 + set;
        auto qmc = measure_constraints(cs, 1, opt);
        CHECK(qmc.ci.lo <= exact.excluded_measure);
        CHECK(exact.excluded_measure <= qmc.ci.hi);
        CHECK(qmc.ci.hi - qmc.ci.lo < 0.01);
    }
}

TEST_CASE("rejection frequency of uniform frequencies") {
    Rng rng(5);
    auto cs = random_pairs(rng, 40, 3e-3);
    double mu = measure_constraints(cs, 1).excluded_measure;
    REQUIRE(mu > 0.0);
    int rejected = 0;
    for (int t = 0; t < 10000; ++t) {
        Frequency w{1.0 - rng.uniform()};
        bool hit = false;
        for (const auto& c : cs) hit = hit || c.excludes(w);
        rejected += hit;
    }
    CHECK(std::abs(rejected / 1e4 - mu) <= 3.0 * std::sqrt(mu / 1e4));
}

TEST_CASE("triple constraints") {
    // m.w = 0 exactly on a rational frequency
    Constraint z{{1, -1}, {1, 0}, 0.0, 0.0, 1e-12};
    CHECK(z.excludes({0.5, 0.5}));
    CHECK(z.value({0.5, 0.5}) == 0.0);

    Constraint c{{1}, {2}, 0.3, 0.1, 1e-4};
    auto rep = measure_constraints({c}, 1);
    // dense-grid root bracketing oracle
    const int G = 2000000;
    int inside = 0;
    for (int k = 1; k <= G; ++k) inside += c.excludes({static_cast<double>(k) / G});
    CHECK(rep.excluded_measure == doctest::Approx(static_cast<double>(inside) / G).epsilon(1e-3));
    CHECK(rep.excluded_measure <= std::cbrt(1e-4));

    Constraint wide{{1}, {3}, 0.2, -0.4, 10.0};
    auto r2 = measure_constraints({wide, c}, 1);
    CHECK(r2.excluded_measure == 1.0);
}

TEST_CASE("spectra-based exclusion agrees with its constraint list") {
    OperatorSpec spec;
    spec.eps = 0.05;
    auto smp = sample_disorder(spec.g, 1, 6, 9);
    auto boxes = j_box_spectra(spec, smp, 1, 3);
    CHECK(boxes.size() == 5);
    for (const auto& b : boxes) CHECK(b.mu.size() == 3);
    auto spectra = spectra_of(boxes);
    const int N = 3, N0 = 2;
    const double sigma = 3.0;
    auto rep = melnikov_pair_constraints(spectra, 1, N, N0, sigma);
    CHECK(rep.exact);
    CHECK(rep.excluded_measure > 0.0);
    CHECK(rep.excluded_measure < 1.0);
    Rng rng(8);
    double eta = pair_threshold(N0, sigma);
    for (int t = 0; t < 300; ++t) {
        Frequency w{1.0 - rng.uniform()};
        bool listed = false;
        for (const auto& c : rep.constraints) listed = listed || c.excludes(w);
        CHECK(listed == pair_excluded(w, spectra, N, eta));
    }
    // the excluded fraction of uniform draws matches the measure
    int hits = 0;
    for (int t = 0; t < 10000; ++t) hits += pair_excluded({1.0 - rng.uniform()}, spectra, N, eta);
    double mu = rep.excluded_measure;
    CHECK(std::abs(hits / 1e4 - mu) <= 3.0 * std::sqrt(mu / 1e4) + 1e-4);

    auto small = spectra_of(j_box_spectra(spec, smp, 0, 1));
    auto trip = melnikov_triple_constraints(small, 1, 1, 3, 1.0);
    double teta = triple_threshold(3, 1.0);
    for (int t = 0; t < 300; ++t) {
        Frequency w{1.0 - rng.uniform()};
        bool listed = false;
        for (const auto& c : trip.constraints) listed = listed || c.excludes(w);
        CHECK(listed == triple_excluded(w, small, 1, teta));
    }
    CHECK_THROWS_AS(melnikov_triple_constraints(spectra, 1, N, N0, sigma, {}, 10), Error);
}

TEST_CASE("maximal disjoint families") {
    Rng rng(13);
    for (int t = 0; t < 30; ++t) {
        int n = 1 + static_cast<int>(rng.uniform(0, 9));
        std::vector<Site> cs;
        for (int k = 0; k < n; ++k)
            cs.push_back(Site{static_cast<int>(rng.uniform(-8, 8)), static_cast<int>(rng.uniform(-8, 8))});
        int r = 1 + static_cast<int>(rng.uniform(0, 3));
        // brute force over subsets
        std::size_t best = 0;
        for (int mask = 0; mask < (1 << n); ++mask) {
            bool ok = true;
            for (int a = 0; a < n && ok; ++a)
                for (int b = a + 1; b < n && ok; ++b)
                    if ((mask >> a & 1) && (mask >> b & 1))
                        ok = std::abs(cs[a][0] - cs[b][0]) > 2 * r || std::abs(cs[a][1] - cs[b][1]) > 2 * r;
            if (ok) best = std::max<std::size_t>(best, __builtin_popcount(mask));
        }
        auto res = max_disjoint_boxes(cs, r);
        CHECK(res.exact);
        CHECK(res.count == best);
    }
}

TEST_CASE("census of resonant boxes") {
    OperatorSpec spec;
    spec.eps = spec.delta = 0;
    const int N = 6, N0 = 2;
    std::vector<double> v(2 * N + 1, 0.5);
    v[N] = 0.0;  // j = 0
    DisorderSample smp(Distribution{}, Site{-N}, Site{N}, v, 0);
    Frequency w{kGold};
    auto far = census_bad_boxes(spec, smp, w, 0.2, 100.0, N0, N, 2.0);
    CHECK(far.count == 0);
    CHECK(far.witnesses == 0);
    auto one = census_bad_boxes(spec, smp, w, 0.2, 0.2, N0, N, 2.0);
    // one witness per j-box that holds the site j = 0
    CHECK(one.witnesses == 5);
    CHECK(one.count == 1);
    CHECK(one.exact);
    // boxes of radius 2 inside [-6,6]^2 that contain (0,0)
    CHECK(one.resonant_boxes == 25);

    // at an accepted frequency no two disjoint boxes resonate
    spec.eps = 0.05;
    spec.delta = 0.05;
    auto rnd = sample_disorder(spec.g, 1, 9, 77);
    const int NN = 9, M0 = 3;
    const double sigma = 2.0;
    auto boxes = j_box_spectra(spec, rnd, M0, NN);
    auto spectra = spectra_of(boxes);
    Frequency accepted;
    for (const auto& cand : quadratic_frequencies(1, 20))
        if (diophantine_check(cand, {2.0, 0.05, 40}) && !pair_excluded(cand, spectra, NN, pair_threshold(M0, sigma))) {
            accepted = cand;
            break;
        }
    REQUIRE_FALSE(accepted.empty());
    Rng rng(99);
    for (int t = 0; t < 30; ++t) {
        double theta = rng.uniform();
        const auto& jb = boxes[static_cast<std::size_t>(rng.uniform(0, boxes.size()))];
        int n = static_cast<int>(rng.uniform(-NN, NN + 1));
        double E = n * accepted[0] + theta + jb.mu[static_cast<std::size_t>(rng.uniform(0, jb.mu.size()))];
        auto res = census_bad_boxes(spec, boxes, accepted, theta, E, M0, NN, sigma);
        CHECK(res.count >= 1);
        CHECK(res.count <= 1);
    }
}

}  // TEST_SUITE
