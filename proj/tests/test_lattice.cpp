#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <set>

#include "common.hpp"
#include "lattice.hpp"
#include "rng.hpp"

using namespace qploc;

namespace {

// brute-force enumeration of prod [lo_i, hi_i]
std::set<Site> brute_rect(std::vector<int> lo, std::vector<int> hi) {
    std::set<Site> out;
    int D = static_cast<int>(lo.size());
    std::vector<int> c = lo;
    for (;;) {
        out.insert(Site(std::span<const int>(c)));
        int k = D - 1;
        while (k >= 0 && c[k] == hi[k]) c[k] = lo[k], --k;
        if (k < 0) break;
        ++c[k];
    }
    return out;
}

std::set<Site> as_set(const std::vector<Site>& v) { return {v.begin(), v.end()}; }

}  // namespace

TEST_SUITE("lattice") {

TEST_CASE("box sizes and ordering") {
    Region b = make_box({1, 1}, Site{0, 0}, 1);
    CHECK(b.size() == 9);
    CHECK(std::is_sorted(b.sites().begin(), b.sites().end()));
    Region single = make_box({2, 1}, Site{0, 0, 0}, 0);
    REQUIRE(single.size() == 1);
    CHECK(single.site(0) == Site{0, 0, 0});
    Region off = make_box({1, 1}, Site{3, -2}, 2);
    CHECK(off.size() == 25);
    CHECK(as_set(off.sites()) == brute_rect({1, -4}, {5, 0}));
    for (const Site& s : off.sites()) CHECK(std::max(std::abs(s[0] - 3), std::abs(s[1] + 2)) <= 2);
    CHECK(make_box({2, 1}, Site{0, 0, 0}, 2).size() == 125);
    CHECK_THROWS(make_box({1, 1}, Site{0, 0}, -1));
}

TEST_CASE("elementary regions equal brute-force set differences") {
    Dims dims{1, 1};
    Region far = make_elementary_region(dims, Site{-2, -2}, Site{2, 2}, Site{10, 10});
    CHECK(far.size() == 25);
    Region L = make_elementary_region(dims, Site{-2, -2}, Site{2, 2}, Site{2, 2});
    CHECK(L.size() == 16);
    std::set<Site> R = brute_rect({-2, -2}, {2, 2}), expect;
    for (const Site& s : R)
        if (!R.count(s - Site{2, 2})) expect.insert(s);
    CHECK(as_set(L.sites()) == expect);
    CHECK_THROWS(make_elementary_region(dims, Site{-1, -1}, Site{1, 1}, Site{0, 0}));

    Rng rng(7);
    for (int t = 0; t < 30; ++t) {
        std::vector<int> lo(3), hi(3), m(3);
        for (int i = 0; i < 3; ++i) {
            lo[i] = static_cast<int>(rng.uniform(-3, 1));
            hi[i] = lo[i] + static_cast<int>(rng.uniform(0, 4));
            m[i] = static_cast<int>(rng.uniform(-4, 4));
        }
        if (m == std::vector<int>{0, 0, 0}) m[0] = 1;
        Site slo{std::span<const int>(lo)}, shi{std::span<const int>(hi)}, sm{std::span<const int>(m)};
        std::set<Site> rect = brute_rect(lo, hi), diff;
        for (const Site& s : rect)
            if (!rect.count(s - sm)) diff.insert(s);
        if (diff.empty()) {
            CHECK_THROWS(make_elementary_region({2, 1}, slo, shi, sm));
        } else {
            CHECK(as_set(make_elementary_region({2, 1}, slo, shi, sm).sites()) == diff);
        }
    }
}

TEST_CASE("boundaries") {
    Region a3 = make_box({1, 1}, Site{0, 0}, 3);
    auto same = boundaries(a3, a3);
    CHECK(same.interior.empty());
    CHECK(same.exterior.empty());

    Region line = Region::from_sites({1, 0}, {Site{-3}, Site{-2}, Site{-1}, Site{0}, Site{1}, Site{2}, Site{3}});
    Region mid = Region::from_sites({1, 0}, {Site{-1}, Site{0}, Site{1}});
    auto b1 = boundaries(line, mid);
    CHECK(as_set(b1.interior) == std::set<Site>{Site{-1}, Site{1}});
    CHECK(as_set(b1.exterior) == std::set<Site>{Site{-2}, Site{2}});

    auto b2 = boundaries(make_box({1, 1}, Site{0, 0}, 5), make_box({1, 1}, Site{0, 0}, 2));
    CHECK(b2.interior.size() == 16);
    CHECK(b2.exterior.size() == 20);

    CHECK_THROWS(boundaries(make_box({1, 1}, Site{0, 0}, 1), make_box({1, 1}, Site{0, 0}, 2)));
}

TEST_CASE("boundary invariants on random regions") {
    Rng rng(11);
    for (int t = 0; t < 12; ++t) {
        Dims dims{1 + t % 2, 1};
        int D = dims.total();
        int R = 3 + t % 4;
        Site c(D);
        Region amb = make_box(dims, c, R);
        std::vector<Site> pick;
        for (const Site& s : amb.sites())
            if (rng.uniform() < 0.5) pick.push_back(s);
        Region sub = Region::from_sites(dims, pick);
        auto bs = boundaries(amb, sub);
        for (const Site& z : bs.interior) {
            CHECK(sub.contains(z));
            bool ok = false;
            for_each_neighbor(z, [&](const Site& y, int) { ok = ok || (amb.contains(y) && !sub.contains(y)); });
            CHECK(ok);
        }
        std::set<Site> interior = as_set(bs.interior);
        for (const Site& z : bs.exterior) {
            CHECK(!sub.contains(z));
            bool adj = false;
            for_each_neighbor(z, [&](const Site& y, int) { adj = adj || interior.count(y); });
            CHECK(adj);
        }
        // independent scan for completeness
        std::size_t n_int = 0, n_ext = 0;
        for (const Site& z : amb.sites()) {
            bool out_nb = false, in_nb = false;
            for_each_neighbor(z, [&](const Site& y, int) {
                if (amb.contains(y) && !sub.contains(y)) out_nb = true;
                if (sub.contains(y)) in_nb = true;
            });
            if (sub.contains(z) && out_nb) ++n_int;
            if (!sub.contains(z) && in_nb) ++n_ext;
        }
        CHECK(n_int == bs.interior.size());
        CHECK(n_ext == bs.exterior.size());
    }
    for (int N = 0; N <= 4; ++N) {
        Dims dims{2, 1};
        auto bs = boundaries(make_box(dims, Site{0, 0, 0}, N + 2), make_box(dims, Site{0, 0, 0}, N));
        double bound = 2.0 * 3 * std::pow(2 * N + 1, 2);
        CHECK(bs.interior.size() <= bound);
    }
}

TEST_CASE("exhaustion") {
    Region amb = make_box({1, 1}, Site{0, 0}, 2);
    auto ex = exhaustion(amb, Site{0, 0}, 2);
    REQUIRE(ex.size() == 1);
    CHECK(ex[0].size() == 25);

    std::vector<Site> line;
    for (int x = -9; x <= 9; ++x) line.push_back(Site{x});
    Region L = Region::from_sites({1, 0}, line);
    auto e1 = exhaustion(L, Site{0}, 2);
    REQUIRE(e1.size() == 4);
    for (int k = 0; k < 4; ++k) {
        int r = 2 * (k + 1);
        CHECK(e1[k].size() == static_cast<std::size_t>(2 * r + 1));
        CHECK(e1[k].contains(Site{-r}));
        CHECK(e1[k].contains(Site{r}));
    }

    Rng rng(3);
    for (int t = 0; t < 20; ++t) {
        Dims dims{1, 1};
        int R = 4 + static_cast<int>(rng.uniform(0, 6));
        Region a = make_box(dims, Site{0, 0}, R);
        Site c{static_cast<int>(rng.uniform(-R, R)), static_cast<int>(rng.uniform(-R, R))};
        int w = 1 + static_cast<int>(rng.uniform(0, 3));
        auto seq = exhaustion(a, c, w);
        for (std::size_t k = 1; k < seq.size(); ++k) {
            CHECK(seq[k].contains(seq[k - 1]));
            CHECK(seq[k].size() > seq[k - 1].size());
        }
        CHECK(seq.back().size() <= a.size());
    }
}

TEST_CASE("disjointness") {
    Dims dims{1, 1};
    CHECK(disjoint(make_box(dims, Site{0, 0}, 1), make_box(dims, Site{3, 3}, 1)));
    CHECK_FALSE(disjoint(make_box(dims, Site{0, 0}, 1), make_box(dims, Site{2, 2}, 1)));
    // L made of the bottom row and left column of [0,4]^2: its hull is the
    // triangle x+y <= 4, which swallows the square {1,2}^2
    Region L = make_elementary_region(dims, Site{0, 0}, Site{4, 4}, Site{1, 1});
    Region sq = make_elementary_region(dims, Site{1, 1}, Site{2, 2}, Site{5, 5});
    bool sites_disjoint = true;
    for (const Site& s : sq.sites()) sites_disjoint = sites_disjoint && !L.contains(s);
    CHECK(sites_disjoint);
    CHECK_FALSE(disjoint(L, sq));
    CHECK_FALSE(disjoint(sq, L));
    Region far = make_elementary_region(dims, Site{5, 5}, Site{6, 6}, Site{9, 9});
    CHECK(disjoint(L, far));
    CHECK(disjoint(far, L));
    CHECK_FALSE(disjoint(L, L));
    // 3-D
    Dims d3{2, 1};
    Region L3 = make_elementary_region(d3, Site{0, 0, 0}, Site{3, 3, 3}, Site{1, 1, 1});
    // L3 keeps the sites of [0,3]^3 with a zero coordinate; its hull is the
    // cube cut by x+y+z <= 6, which touches {2,3}^3 at (2,2,2)
    Region in3 = make_elementary_region(d3, Site{2, 2, 2}, Site{3, 3, 3}, Site{5, 5, 5});
    CHECK(in3.size() == 8);
    for (const Site& s : in3.sites()) CHECK_FALSE(L3.contains(s));
    CHECK_FALSE(disjoint(L3, in3));
    Region corner = make_elementary_region(d3, Site{3, 3, 3}, Site{3, 3, 3}, Site{5, 5, 5});
    CHECK(disjoint(L3, corner));
    Region out3 = make_elementary_region(d3, Site{5, 5, 5}, Site{6, 6, 6}, Site{9, 9, 9});
    CHECK(disjoint(L3, out3));
    CHECK_FALSE(disjoint(L3, L3));
}

TEST_CASE("projection") {
    Region b = make_box({1, 1}, Site{2, -1}, 2);
    auto pj = project(b, Axis::J);
    REQUIRE(pj.size() == 5);
    CHECK(pj.front() == Site{0});
    CHECK(pj.back() == Site{4});
    Region one = Region::from_sites({2, 1}, {Site{4, 5, 6}});
    CHECK(project(one, Axis::J) == std::vector<Site>{Site{4, 5}});
    CHECK(project(one, Axis::N) == std::vector<Site>{Site{6}});
    Region L = make_elementary_region({1, 1}, Site{-2, -2}, Site{2, 2}, Site{2, 2});
    std::set<Site> pn;
    for (const Site& s : L.sites()) pn.insert(Site{s[1]});
    CHECK(as_set(project(L, Axis::N)) == pn);
}

TEST_CASE("json round trip and diameter") {
    Region b = make_box({1, 1}, Site{1, 2}, 3);
    Region b2 = Region::from_json(b.to_json());
    CHECK(b2.same_sites(b));
    CHECK(b.diameter() == 12);
    Region L = make_elementary_region({1, 1}, Site{-2, -2}, Site{2, 2}, Site{2, 2});
    CHECK(Region::from_json(L.to_json()).same_sites(L));
    CHECK_THROWS(unite(b, L).to_json());
}

}  // TEST_SUITE
