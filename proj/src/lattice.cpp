#include "lattice.hpp"

#include <algorithm>
#include <cstdlib>
#include <set>
#include <sstream>

#include "common.hpp"

namespace qploc {

Site::Site(int dim) : dim_(dim) { require(dim >= 0 && dim <= kMaxDim, "site dimension out of range"); }

Site::Site(std::initializer_list<int> c) : Site(std::span<const int>(c.begin(), c.size())) {}

Site::Site(std::span<const int> c) : dim_(static_cast<int>(c.size())) {
    require(dim_ <= kMaxDim, "site dimension out of range");
    std::copy(c.begin(), c.end(), x_.begin());
}

int Site::l1() const {
    int s = 0;
    for (int i = 0; i < dim_; ++i) s += std::abs(x_[i]);
    return s;
}

Site Site::operator+(const Site& o) const {
    require(o.dim_ == dim_, "site dimension mismatch");
    Site r = *this;
    for (int i = 0; i < dim_; ++i) r.x_[i] += o.x_[i];
    return r;
}

Site Site::operator-(const Site& o) const {
    require(o.dim_ == dim_, "site dimension mismatch");
    Site r = *this;
    for (int i = 0; i < dim_; ++i) r.x_[i] -= o.x_[i];
    return r;
}

Site Site::head(int k) const { return Site(coords().subspan(0, k)); }
Site Site::tail(int k) const { return Site(coords().subspan(dim_ - k, k)); }

std::string Site::str() const {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < dim_; ++i) os << (i ? "," : "") << x_[i];
    os << ')';
    return os.str();
}

int l1_distance(const Site& a, const Site& b) { return (a - b).l1(); }

Site concat(const Site& j, const Site& n) {
    Site s(j.dim() + n.dim());
    for (int i = 0; i < j.dim(); ++i) s[i] = j[i];
    for (int i = 0; i < n.dim(); ++i) s[j.dim() + i] = n[i];
    return s;
}

std::size_t SiteHash::operator()(const Site& s) const noexcept {
    std::size_t h = 1469598103934665603ULL ^ static_cast<std::size_t>(s.dim());
    for (int v : s.coords()) {
        h ^= static_cast<std::size_t>(static_cast<unsigned>(v));
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

Site site_json(const nlohmann::json& j) {
    std::vector<int> v = j.get<std::vector<int>>();
    return Site(std::span<const int>(v));
}

nlohmann::json json_site(const Site& s) { return std::vector<int>(s.coords().begin(), s.coords().end()); }

// all integer points of prod [lo_i, hi_i], lexicographic
std::vector<Site> rectangle_points(const Site& lo, const Site& hi) {
    int D = lo.dim();
    std::vector<Site> out;
    for (int i = 0; i < D; ++i)
        if (hi[i] < lo[i]) return out;
    std::size_t count = 1;
    for (int i = 0; i < D; ++i) count *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
    out.reserve(count);
    Site cur = lo;
    for (;;) {
        out.push_back(cur);
        int k = D - 1;
        while (k >= 0 && cur[k] == hi[k]) {
            cur[k] = lo[k];
            --k;
        }
        if (k < 0) break;
        ++cur[k];
    }
    return out;
}

}  // namespace

void Region::build_index() {
    index_.clear();
    index_.reserve(sites_.size() * 2);
    for (std::size_t i = 0; i < sites_.size(); ++i) index_.emplace(sites_[i], static_cast<int>(i));
}

Region Region::box(Dims dims, const Site& center, int radius) {
    require(radius >= 0, "box radius must be non-negative");
    require(center.dim() == dims.total(), "box center has wrong dimension");
    Region r;
    r.dims_ = dims;
    r.kind_ = RegionKind::Box;
    r.desc_ = BoxDescriptor{center, radius};
    Site lo = center, hi = center;
    for (int i = 0; i < center.dim(); ++i) {
        lo[i] -= radius;
        hi[i] += radius;
    }
    r.sites_ = rectangle_points(lo, hi);
    r.build_index();
    return r;
}

Region Region::elementary(Dims dims, const Site& lo, const Site& hi, const Site& translate) {
    int D = dims.total();
    require(lo.dim() == D && hi.dim() == D && translate.dim() == D, "elementary region has wrong dimension");
    for (int i = 0; i < D; ++i) require(lo[i] <= hi[i], "elementary region rectangle is empty");
    Region r;
    r.dims_ = dims;
    r.kind_ = RegionKind::Elementary;
    r.desc_ = ElementaryDescriptor{lo, hi, translate};
    for (const Site& s : rectangle_points(lo, hi)) {
        Site t = s - translate;  // s in R + m  iff  s - m in R
        bool in_shift = true;
        for (int i = 0; i < D; ++i)
            if (t[i] < lo[i] || t[i] > hi[i]) in_shift = false;
        if (!in_shift) r.sites_.push_back(s);
    }
    require(!r.sites_.empty(), "elementary region is empty (translate is zero)");
    r.build_index();
    return r;
}

Region Region::from_sites(Dims dims, std::vector<Site> sites) {
    Region r;
    r.dims_ = dims;
    r.kind_ = RegionKind::Set;
    for (const Site& s : sites) require(s.dim() == dims.total(), "site has wrong dimension");
    std::sort(sites.begin(), sites.end());
    sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
    r.sites_ = std::move(sites);
    r.build_index();
    return r;
}

const BoxDescriptor& Region::box_descriptor() const {
    require(kind_ == RegionKind::Box, "region is not a box");
    return std::get<BoxDescriptor>(desc_);
}

const ElementaryDescriptor& Region::elementary_descriptor() const {
    require(kind_ == RegionKind::Elementary, "region is not an elementary region");
    return std::get<ElementaryDescriptor>(desc_);
}

int Region::index_of(const Site& s) const {
    auto it = index_.find(s);
    return it == index_.end() ? -1 : it->second;
}

bool Region::contains(const Region& other) const {
    for (const Site& s : other.sites_)
        if (!contains(s)) return false;
    return true;
}

int Region::diameter() const {
    if (sites_.empty()) return 0;
    int D = dims_.total();
    int best = 0;
    // max l1 distance = max over sign patterns of (max - min) of the signed sum
    for (int mask = 0; mask < (1 << D); ++mask) {
        int lo = 0, hi = 0;
        bool first = true;
        for (const Site& s : sites_) {
            int v = 0;
            for (int i = 0; i < D; ++i) v += (mask >> i & 1) ? -s[i] : s[i];
            if (first) {
                lo = hi = v;
                first = false;
            } else {
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        }
        best = std::max(best, hi - lo);
    }
    return best;
}

std::string Region::descriptor() const {
    std::ostringstream os;
    switch (kind_) {
        case RegionKind::Box: {
            auto& b = std::get<BoxDescriptor>(desc_);
            os << "box c=" << b.center.str() << " r=" << b.radius;
            break;
        }
        case RegionKind::Elementary: {
            auto& e = std::get<ElementaryDescriptor>(desc_);
            os << "elementary lo=" << e.lo.str() << " hi=" << e.hi.str() << " m=" << e.translate.str();
            break;
        }
        case RegionKind::Set:
            os << "set n=" << sites_.size();
            break;
    }
    return os.str();
}

nlohmann::json Region::to_json() const {
    nlohmann::json j;
    j["d"] = dims_.d;
    j["nu"] = dims_.nu;
    switch (kind_) {
        case RegionKind::Box: {
            auto& b = std::get<BoxDescriptor>(desc_);
            j["kind"] = "box";
            j["descriptor"] = {{"center", json_site(b.center)}, {"radius", b.radius}};
            break;
        }
        case RegionKind::Elementary: {
            auto& e = std::get<ElementaryDescriptor>(desc_);
            j["kind"] = "elementary";
            j["descriptor"] = {{"lo", json_site(e.lo)}, {"hi", json_site(e.hi)}, {"translate", json_site(e.translate)}};
            break;
        }
        case RegionKind::Set:
            fail(ErrorCode::InvalidArgument, "derived site sets have no descriptor to serialize");
    }
    return j;
}

Region Region::from_json(const nlohmann::json& j) {
    Dims dims{j.at("d").get<int>(), j.at("nu").get<int>()};
    std::string kind = j.at("kind").get<std::string>();
    const auto& desc = j.at("descriptor");
    if (kind == "box") return box(dims, site_json(desc.at("center")), desc.at("radius").get<int>());
    if (kind == "elementary")
        return elementary(dims, site_json(desc.at("lo")), site_json(desc.at("hi")), site_json(desc.at("translate")));
    fail(ErrorCode::InvalidArgument, "unknown region kind '" + kind + "'");
}

Region make_box(Dims dims, const Site& center, int radius) { return Region::box(dims, center, radius); }

Region make_elementary_region(Dims dims, const Site& lo, const Site& hi, const Site& translate) {
    return Region::elementary(dims, lo, hi, translate);
}

Region intersect(const Region& a, const Region& b) {
    require(a.dims() == b.dims(), "region dimension mismatch");
    std::vector<Site> out;
    for (const Site& s : a.sites())
        if (b.contains(s)) out.push_back(s);
    return Region::from_sites(a.dims(), std::move(out));
}

Region unite(const Region& a, const Region& b) {
    require(a.dims() == b.dims(), "region dimension mismatch");
    std::vector<Site> out = a.sites();
    out.insert(out.end(), b.sites().begin(), b.sites().end());
    return Region::from_sites(a.dims(), std::move(out));
}

Region difference(const Region& a, const Region& b) {
    require(a.dims() == b.dims(), "region dimension mismatch");
    std::vector<Site> out;
    for (const Site& s : a.sites())
        if (!b.contains(s)) out.push_back(s);
    return Region::from_sites(a.dims(), std::move(out));
}

BoundarySet boundaries(const Region& ambient, const Region& sub) {
    require(ambient.dims() == sub.dims(), "region dimension mismatch");
    require(ambient.contains(sub), "subregion is not contained in the ambient region");
    BoundarySet bs;
    for (const Site& z : sub.sites()) {
        bool hit = false;
        for_each_neighbor(z, [&](const Site& t, int) {
            if (!hit && ambient.contains(t) && !sub.contains(t)) hit = true;
        });
        if (hit) bs.interior.push_back(z);
    }
    for (const Site& z : ambient.sites()) {
        if (sub.contains(z)) continue;
        bool hit = false;
        for_each_neighbor(z, [&](const Site& t, int) {
            if (!hit && sub.contains(t)) hit = true;
        });
        if (hit) bs.exterior.push_back(z);
    }
    return bs;
}

std::vector<Region> exhaustion(const Region& ambient, const Site& center, int width) {
    require(width >= 1, "exhaustion width must be positive");
    require(ambient.contains(center), "exhaustion center is outside the ambient region");
    Dims dims = ambient.dims();
    std::vector<Region> out;
    Region cur = intersect(Region::box(dims, center, width), ambient);
    out.push_back(cur);
    while (cur.size() < ambient.size()) {
        BoundarySet bs = boundaries(ambient, cur);
        std::vector<Site> grown = cur.sites();
        for (const Site& z : bs.interior) {
            Region b = Region::box(dims, z, width);
            for (const Site& s : b.sites())
                if (ambient.contains(s)) grown.push_back(s);
        }
        Region next = Region::from_sites(dims, std::move(grown));
        if (next.size() == ambient.size()) break;
        out.push_back(next);
        cur = std::move(next);
    }
    return out;
}

namespace {

using P3 = std::array<long long, 3>;

P3 to_p3(const Site& s) {
    P3 p{0, 0, 0};
    for (int i = 0; i < s.dim(); ++i) p[i] = s[i];
    return p;
}

P3 sub3(const P3& a, const P3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
P3 cross3(const P3& a, const P3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
long long dot3(const P3& a, const P3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
bool is_zero(const P3& a) { return a[0] == 0 && a[1] == 0 && a[2] == 0; }

bool separates(const P3& axis, const std::vector<P3>& a, const std::vector<P3>& b) {
    if (is_zero(axis)) return false;
    long long amin = dot3(axis, a[0]), amax = amin, bmin = dot3(axis, b[0]), bmax = bmin;
    for (const auto& p : a) {
        long long v = dot3(axis, p);
        amin = std::min(amin, v);
        amax = std::max(amax, v);
    }
    for (const auto& p : b) {
        long long v = dot3(axis, p);
        bmin = std::min(bmin, v);
        bmax = std::max(bmax, v);
    }
    return amax < bmin || bmax < amin;
}

std::vector<P3> differences(const std::vector<P3>& a) {
    std::set<P3> out;
    for (std::size_t i = 0; i < a.size(); ++i)
        for (std::size_t k = i + 1; k < a.size(); ++k) out.insert(sub3(a[k], a[i]));
    return {out.begin(), out.end()};
}

bool intersect_2d(const std::vector<P3>& a, const std::vector<P3>& b) {
    std::vector<P3> all = a;
    all.insert(all.end(), b.begin(), b.end());
    auto diffs = differences(all);
    for (const auto& d : diffs) {
        if (separates(d, a, b)) return false;
        if (separates(P3{-d[1], d[0], 0}, a, b)) return false;
    }
    return true;
}

bool intersect_3d(const std::vector<P3>& a, const std::vector<P3>& b) {
    std::vector<P3> all = a;
    all.insert(all.end(), b.begin(), b.end());
    auto diffs = differences(all);
    // all points coplanar: drop the dominant normal axis and solve in 2-D
    P3 normal{0, 0, 0};
    for (std::size_t i = 0; i < diffs.size() && is_zero(normal); ++i)
        for (std::size_t k = i + 1; k < diffs.size(); ++k) {
            P3 c = cross3(diffs[i], diffs[k]);
            if (!is_zero(c)) {
                normal = c;
                break;
            }
        }
    bool coplanar = true;
    if (!is_zero(normal))
        for (const auto& p : all)
            if (dot3(normal, sub3(p, all[0])) != 0) coplanar = false;
    if (coplanar) {
        int drop = 2;
        if (!is_zero(normal)) {
            long long best = -1;
            for (int i = 0; i < 3; ++i)
                if (std::llabs(normal[i]) > best) {
                    best = std::llabs(normal[i]);
                    drop = i;
                }
        }
        auto flat = [&](const std::vector<P3>& v) {
            std::vector<P3> o;
            for (const auto& p : v) {
                P3 q{0, 0, 0};
                int k = 0;
                for (int i = 0; i < 3; ++i)
                    if (i != drop) q[k++] = p[i];
                o.push_back(q);
            }
            return o;
        };
        return intersect_2d(flat(a), flat(b));
    }
    for (const auto& d : diffs)
        if (separates(d, a, b)) return false;
    for (std::size_t i = 0; i < diffs.size(); ++i)
        for (std::size_t k = i + 1; k < diffs.size(); ++k)
            if (separates(cross3(diffs[i], diffs[k]), a, b)) return false;
    return true;
}

// sites that can be hull vertices: on each axis at least one neighbour missing
std::vector<Site> hull_candidates(const Region& r) {
    std::vector<Site> out;
    for (const Site& s : r.sites()) {
        bool ok = true;
        Site t = s;
        for (int k = 0; k < s.dim() && ok; ++k) {
            t[k] = s[k] + 1;
            bool plus = r.contains(t);
            t[k] = s[k] - 1;
            bool minus = r.contains(t);
            t[k] = s[k];
            if (plus && minus) ok = false;
        }
        if (ok) out.push_back(s);
    }
    return out;
}

}  // namespace

bool hulls_intersect(const std::vector<Site>& a, const std::vector<Site>& b) {
    if (a.empty() || b.empty()) return false;
    int D = a[0].dim();
    require(D <= 3, "convex envelope test supports at most three dimensions");
    std::vector<P3> pa, pb;
    for (const Site& s : a) pa.push_back(to_p3(s));
    for (const Site& s : b) pb.push_back(to_p3(s));
    // bounding boxes first
    for (int i = 0; i < D; ++i) {
        long long alo = pa[0][i], ahi = alo, blo = pb[0][i], bhi = blo;
        for (auto& p : pa) alo = std::min(alo, p[i]), ahi = std::max(ahi, p[i]);
        for (auto& p : pb) blo = std::min(blo, p[i]), bhi = std::max(bhi, p[i]);
        if (ahi < blo || bhi < alo) return false;
    }
    if (D == 1) return true;
    if (D == 2) return intersect_2d(pa, pb);
    return intersect_3d(pa, pb);
}

bool disjoint(const Region& a, const Region& b) {
    if (a.empty() || b.empty()) return true;
    require(a.dims() == b.dims(), "region dimension mismatch");
    if (a.kind() == RegionKind::Box && b.kind() == RegionKind::Box) {
        auto& x = a.box_descriptor();
        auto& y = b.box_descriptor();
        for (int i = 0; i < x.center.dim(); ++i)
            if (std::abs(x.center[i] - y.center[i]) > x.radius + y.radius) return true;
        return false;
    }
    return !hulls_intersect(hull_candidates(a), hull_candidates(b));
}

std::vector<Site> project(const Region& r, Axis axis) {
    int d = r.dims().d, nu = r.dims().nu;
    std::vector<Site> out;
    out.reserve(r.size());
    for (const Site& s : r.sites()) out.push_back(axis == Axis::J ? s.head(d) : s.tail(nu));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace qploc
