#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include <json.hpp>

namespace qploc {

inline constexpr int kMaxDim = 6;

struct Dims {
    int d = 1;
    int nu = 1;
    int total() const { return d + nu; }
    bool operator==(const Dims&) const = default;
};

// Integer point of Z^D with D <= kMaxDim. For a site of Z^{d+nu} the first d
// coordinates are j and the last nu are n.
class Site {
public:
    Site() = default;
    explicit Site(int dim);
    Site(std::initializer_list<int> c);
    explicit Site(std::span<const int> c);

    int dim() const { return dim_; }
    int operator[](int i) const { return x_[i]; }
    int& operator[](int i) { return x_[i]; }
    std::span<const int> coords() const { return {x_.data(), static_cast<std::size_t>(dim_)}; }

    int l1() const;
    Site operator+(const Site& o) const;
    Site operator-(const Site& o) const;
    Site head(int k) const;
    Site tail(int k) const;
    std::string str() const;

    auto operator<=>(const Site&) const = default;

private:
    std::array<int, kMaxDim> x_{};
    int dim_ = 0;
};

int l1_distance(const Site& a, const Site& b);
Site concat(const Site& j, const Site& n);

struct SiteHash {
    std::size_t operator()(const Site& s) const noexcept;
};

enum class RegionKind { Box, Elementary, Set };

struct BoxDescriptor {
    Site center;
    int radius = 0;
};

// rectangle prod [lo_i, hi_i] minus its translate by `translate`
struct ElementaryDescriptor {
    Site lo, hi, translate;
};

class Region {
public:
    Region() = default;
    static Region box(Dims dims, const Site& center, int radius);
    static Region elementary(Dims dims, const Site& lo, const Site& hi, const Site& translate);
    static Region from_sites(Dims dims, std::vector<Site> sites);

    Dims dims() const { return dims_; }
    RegionKind kind() const { return kind_; }
    const BoxDescriptor& box_descriptor() const;
    const ElementaryDescriptor& elementary_descriptor() const;

    std::size_t size() const { return sites_.size(); }
    bool empty() const { return sites_.empty(); }
    const std::vector<Site>& sites() const { return sites_; }
    const Site& site(std::size_t i) const { return sites_[i]; }
    // -1 when absent
    int index_of(const Site& s) const;
    bool contains(const Site& s) const { return index_of(s) >= 0; }
    bool contains(const Region& other) const;

    int diameter() const;
    std::string descriptor() const;
    nlohmann::json to_json() const;
    static Region from_json(const nlohmann::json& j);

    bool same_sites(const Region& o) const { return sites_ == o.sites_; }

private:
    void build_index();

    Dims dims_;
    RegionKind kind_ = RegionKind::Set;
    std::variant<std::monostate, BoxDescriptor, ElementaryDescriptor> desc_;
    std::vector<Site> sites_;
    std::unordered_map<Site, int, SiteHash> index_;
};

Region make_box(Dims dims, const Site& center, int radius);
Region make_elementary_region(Dims dims, const Site& lo, const Site& hi, const Site& translate);

Region intersect(const Region& a, const Region& b);
Region unite(const Region& a, const Region& b);
Region difference(const Region& a, const Region& b);

struct BoundarySet {
    std::vector<Site> interior;
    std::vector<Site> exterior;
};

BoundarySet boundaries(const Region& ambient, const Region& sub);

std::vector<Region> exhaustion(const Region& ambient, const Site& center, int width);

bool disjoint(const Region& a, const Region& b);

// exact test for intersecting convex hulls of two integer point sets, D <= 3
bool hulls_intersect(const std::vector<Site>& a, const std::vector<Site>& b);

enum class Axis { J, N };
std::vector<Site> project(const Region& r, Axis axis);

// visit every ±e_k neighbour of s, k < dim
template <class F>
void for_each_neighbor(const Site& s, F&& f) {
    Site t = s;
    for (int k = 0; k < s.dim(); ++k) {
        t[k] = s[k] + 1;
        f(t, k);
        t[k] = s[k] - 1;
        f(t, k);
        t[k] = s[k];
    }
}

}  // namespace qploc
