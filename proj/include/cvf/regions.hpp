#ifndef CVF_REGIONS_HPP
#define CVF_REGIONS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <json.hpp>

#include "cvf/grid.hpp"
#include "cvf/io.hpp"
#include "cvf/operators.hpp"

namespace cvf {

using NodeMask = std::vector<std::uint8_t>;

// ---------------------------------------------------------------------------
// Mask construction (balls, boxes and unions in the torus metric)
// ---------------------------------------------------------------------------

inline NodeMask ball_mask(const GridSpec& spec, const std::array<double, 3>& center,
                          double radius) {
    NodeMask m(spec.nodes(), 0);
    for (std::size_t i = 0; i < m.size(); ++i)
        if (torus_distance(spec.position(i), center, spec.dim) <= radius) m[i] = 1;
    return m;
}

/// Axis-aligned box given by center and half-widths, wrapped on the torus.
inline NodeMask box_mask(const GridSpec& spec, const std::array<double, 3>& center,
                         const std::array<double, 3>& half) {
    NodeMask m(spec.nodes(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        auto p = spec.position(i);
        bool inside = true;
        for (int ax = 0; ax < spec.dim; ++ax)
            inside = inside && std::abs(torus_delta(p[ax], center[ax])) <= half[ax];
        if (inside) m[i] = 1;
    }
    return m;
}

inline NodeMask mask_union(const NodeMask& a, const NodeMask& b) {
    NodeMask m(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) m[i] = a[i] || b[i];
    return m;
}

inline std::size_t mask_count(const NodeMask& m) {
    std::size_t c = 0;
    for (auto x : m) c += x ? 1 : 0;
    return c;
}

inline bool mask_subset(const NodeMask& inner, const NodeMask& outer) {
    for (std::size_t i = 0; i < inner.size(); ++i)
        if (inner[i] && !outer[i]) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Exact periodic Euclidean distance transform (per-axis lower envelopes on
// the tripled axis, so wraps are handled exactly).
// ---------------------------------------------------------------------------

namespace detail {

inline void envelope_1d_periodic(std::vector<double>& sq, int n, double h) {
    const double INF = std::numeric_limits<double>::max() / 4;
    const int m = 3 * n;
    std::vector<double> f(m);
    for (int t = 0; t < m; ++t) f[t] = sq[(t % n + n) % n];
    std::vector<int> v(m);
    std::vector<double> z(m + 1);
    int k = 0;
    v[0] = 0;
    z[0] = -INF;
    z[1] = INF;
    const double h2 = h * h;
    auto para = [&](int q, int p) {
        return ((f[q] + h2 * q * q) - (f[p] + h2 * p * p)) / (2.0 * h2 * (q - p));
    };
    for (int q = 1; q < m; ++q) {
        if (f[q] >= INF / 2 && f[v[k]] >= INF / 2) {
            // both empty; keep a single placeholder parabola
            continue;
        }
        double s = para(q, v[k]);
        while (k > 0 && s <= z[k]) {
            --k;
            s = para(q, v[k]);
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = INF;
    }
    int j = 0;
    for (int q = n; q < 2 * n; ++q) {
        while (z[j + 1] < double(q)) ++j;
        sq[q - n] = f[v[j]] + h2 * double(q - v[j]) * double(q - v[j]);
    }
}

}  // namespace detail

/// Exact torus-metric distance from every node to the mask (0 on the mask).
inline ScalarField distance_to_mask(const GridSpec& spec, const NodeMask& mask) {
    require(mask.size() == spec.nodes(), errc::spec_mismatch, "distance_to_mask: size");
    require(mask_count(mask) > 0, errc::invalid_region, "distance_to_mask: empty mask");
    const double INF = std::numeric_limits<double>::max() / 4;
    ScalarField sq(spec);
    for (std::size_t i = 0; i < sq.v.size(); ++i) sq.v[i] = mask[i] ? 0.0 : INF;

    // Sweep axis by axis; after all axes sq holds squared distances.
    std::vector<double> line;
    for (int ax = 0; ax < spec.dim; ++ax) {
        const int n = spec.n[ax];
        line.assign(n, 0.0);
        const std::size_t N = spec.nodes();
        std::vector<std::size_t> base_nodes;
        base_nodes.reserve(N / n);
        for (std::size_t i = 0; i < N; ++i) {
            if (spec.coords(i)[ax] == 0) base_nodes.push_back(i);
        }
        for (std::size_t b : base_nodes) {
            std::size_t idx = b;
            for (int t = 0; t < n; ++t) {
                line[t] = sq.v[idx];
                idx = spec.neighbor(idx, ax, +1);
            }
            detail::envelope_1d_periodic(line, n, spec.h(ax));
            idx = b;
            for (int t = 0; t < n; ++t) {
                sq.v[idx] = line[t];
                idx = spec.neighbor(idx, ax, +1);
            }
        }
    }
    for (double& x : sq.v) x = std::sqrt(x);
    return sq;
}

// ---------------------------------------------------------------------------
// Region systems
// ---------------------------------------------------------------------------

enum : std::uint8_t { kLabelV = 0, kLabelOmega = 1, kLabelW = 2 };

/// Nested node masks V, Omega, W partitioning the grid, with the correction
/// annulus Omega sitting between the inner plateau V (new system) and the far
/// plateau W (old system). dist_k holds the torus distance to the seed set K.
struct RegionSet {
    GridSpec spec;
    NodeMask label;      // kLabelV / kLabelOmega / kLabelW per node
    double delta = 0.0;  // support margin; every Omega node is within delta of K
    double r_inner = 0.0;
    double r_outer = 0.0;
    ScalarField dist_k;
    NodeMask k_mask;
    nlohmann::json k_descriptor;  // optional provenance for serialization

    NodeMask mask_of(std::uint8_t value) const {
        NodeMask m(label.size(), 0);
        for (std::size_t i = 0; i < label.size(); ++i) m[i] = (label[i] == value);
        return m;
    }
    NodeMask v_mask() const { return mask_of(kLabelV); }
    NodeMask omega_mask() const { return mask_of(kLabelOmega); }
    NodeMask w_mask() const { return mask_of(kLabelW); }

    bool in_omega(std::size_t i) const { return label[i] == kLabelOmega; }

    /// Nodes of Omega all of whose axis neighbors are in Omega.
    NodeMask omega_interior() const {
        NodeMask m(label.size(), 0);
        for (std::size_t i = 0; i < label.size(); ++i) {
            if (label[i] != kLabelOmega) continue;
            bool interior = true;
            for (int ax = 0; ax < spec.dim && interior; ++ax)
                interior = label[spec.neighbor(i, ax, +1)] == kLabelOmega &&
                           label[spec.neighbor(i, ax, -1)] == kLabelOmega;
            m[i] = interior;
        }
        return m;
    }
};

/// Support set of the forward-difference divergence of any field supported on
/// `support`: the set itself plus its backward shift along each axis.
inline NodeMask divergence_reach(const GridSpec& spec, const NodeMask& support) {
    NodeMask m = support;
    for (int ax = 0; ax < spec.dim; ++ax)
        for (std::size_t i = 0; i < support.size(); ++i)
            if (support[i]) m[spec.neighbor(i, ax, -1)] = 1;
    return m;
}

namespace detail {

inline RegionSet regions_from_distance(const GridSpec& spec, ScalarField dist, NodeMask k_mask,
                                       double r_inner, double r_outer, double delta,
                                       nlohmann::json k_desc) {
    RegionSet rs;
    rs.spec = spec;
    rs.delta = delta;
    rs.r_inner = r_inner;
    rs.r_outer = r_outer;
    rs.dist_k = std::move(dist);
    rs.k_mask = std::move(k_mask);
    rs.k_descriptor = std::move(k_desc);
    rs.label.assign(spec.nodes(), kLabelW);
    for (std::size_t i = 0; i < rs.label.size(); ++i) {
        const double d = rs.dist_k.v[i];
        if (d <= r_inner)
            rs.label[i] = kLabelV;
        else if (d <= r_outer)
            rs.label[i] = kLabelOmega;
    }
    require(mask_count(rs.omega_interior()) > 0, errc::region_too_tight,
            "annulus has no interior nodes");
    return rs;
}

}  // namespace detail

/// Build V = (delta/3)-dilation of K, Omega = annulus out to the
/// delta-dilation clipped inside U, W = the rest.
inline RegionSet nested_regions(const GridSpec& spec, const NodeMask& k_mask,
                                const NodeMask& u_mask, double delta,
                                nlohmann::json k_desc = {}) {
    require(delta > 0.0, errc::invalid_parameter, "nested_regions: delta must be > 0");
    require(mask_count(k_mask) > 0, errc::invalid_region, "nested_regions: empty K");
    require(mask_subset(k_mask, u_mask), errc::invalid_region, "nested_regions: K not inside U");
    ScalarField dist = distance_to_mask(spec, k_mask);

    // Clip the outer dilation so it stays strictly inside U.
    double margin = std::numeric_limits<double>::max();
    for (std::size_t i = 0; i < u_mask.size(); ++i)
        if (!u_mask[i]) margin = std::min(margin, dist.v[i]);
    const double hmax = spec.hmax();
    require(margin >= 3.0 * hmax, errc::region_too_tight,
            "U does not contain a 3-node-wide neighborhood of K");

    const double r_inner = delta / 3.0;
    const double r_outer = std::min(delta, margin - 1e-9);
    require(r_outer - r_inner >= 3.1 * hmax, errc::region_too_tight,
            "no room for the annulus between V and U");
    return detail::regions_from_distance(spec, std::move(dist), k_mask, r_inner, r_outer, delta,
                                         std::move(k_desc));
}

/// Annulus region r_inner < dist(x, center) <= r_outer with V the closed
/// inner ball. Used where the correction domain is a metric annulus.
inline RegionSet annulus_region(const GridSpec& spec, const std::array<double, 3>& center,
                                double r_inner, double r_outer) {
    require(r_outer > r_inner && r_inner > 0.0, errc::invalid_parameter,
            "annulus_region: need 0 < r_inner < r_outer");
    require(r_outer - r_inner >= 3.1 * spec.hmax(), errc::region_too_tight,
            "annulus too thin for the grid");
    NodeMask k = ball_mask(spec, center, r_inner);
    require(mask_count(k) > 0, errc::invalid_region, "annulus_region: inner ball misses grid");
    ScalarField dist(spec);
    for (std::size_t i = 0; i < dist.v.size(); ++i)
        dist.v[i] = std::max(0.0, torus_distance(spec.position(i), center, spec.dim) - r_inner);
    nlohmann::json desc;
    desc["ball"] = {{"center", {center[0], center[1], center[2]}}, {"radius", r_inner}};
    return detail::regions_from_distance(spec, std::move(dist), std::move(k), 0.0,
                                         r_outer - r_inner, r_outer - r_inner, std::move(desc));
}

// ---------------------------------------------------------------------------
// Smoothstep profiles and cutoffs
// ---------------------------------------------------------------------------

/// Odd polynomial with k vanishing derivatives at 0 and 1: s(0)=0, s(1)=1.
/// k=2 is the classic quintic 6t^5-15t^4+10t^3.
inline double smoothstep(int k, double t) {
    if (t <= 0.0) return 0.0;
    if (t >= 1.0) return 1.0;
    // integral of u^k (1-u)^k, binomially expanded, over the beta normalizer
    double num = 0.0;
    double binom = 1.0;
    double sign = 1.0;
    for (int j = 0; j <= k; ++j) {
        num += sign * binom * std::pow(t, k + j + 1) / double(k + j + 1);
        sign = -sign;
        binom = binom * double(k - j) / double(j + 1);
    }
    double beta = 1.0;  // B(k+1,k+1) = (k!)^2/(2k+1)!
    for (int j = 1; j <= k; ++j) beta = beta * double(j) / double(k + j);
    beta /= double(2 * k + 1);
    return num / beta;
}

namespace detail {
inline double smoothstep_beta(int k) {
    double beta = 1.0;  // B(k+1,k+1) = (k!)^2/(2k+1)!
    for (int j = 1; j <= k; ++j) beta = beta * double(j) / double(k + j);
    return beta / double(2 * k + 1);
}
}  // namespace detail

/// Peak slope of smoothstep(k, .): s'(1/2) = (1/4)^k / B(k+1,k+1).
inline double smoothstep_peak_slope(int k) {
    return std::pow(0.25, k) / detail::smoothstep_beta(k);
}

inline double smoothstep_deriv(int k, double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return std::pow(t, k) * std::pow(1.0 - t, k) / detail::smoothstep_beta(k);
}

inline double smoothstep_deriv2(int k, double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    return k *
           (std::pow(t, k - 1) * std::pow(1.0 - t, k) - std::pow(t, k) * std::pow(1.0 - t, k - 1)) /
           detail::smoothstep_beta(k);
}

/// Partition of unity over a RegionSet: xi1 = 1 exactly on V, 0 exactly on W,
/// xi1 + xi2 = 1 everywhere.
struct Cutoff {
    ScalarField xi1;
    ScalarField xi2;
};

/// xi1 is a smoothstep in the distance to K. Its transition band is inset one
/// node from both Omega boundaries, so every node where 0 < xi1 < 1 lies in
/// the interior of Omega and products against xi1 have their divergence reach
/// inside Omega.
inline Cutoff partition_of_unity(const RegionSet& rs, int smoothness = 2) {
    require(smoothness >= 2, errc::invalid_parameter, "partition_of_unity: smoothness >= 2");
    const double pad = 1.01 * rs.spec.hmax();
    const double t_in = rs.r_inner + pad;
    const double t_out = rs.r_outer - pad;
    require(t_out > t_in, errc::region_too_tight, "annulus too thin for a padded cutoff");
    Cutoff c{ScalarField(rs.spec), ScalarField(rs.spec)};
    for (std::size_t i = 0; i < rs.label.size(); ++i) {
        const double d = rs.dist_k.v[i];
        double x;
        if (d <= t_in)
            x = 1.0;
        else if (d >= t_out)
            x = 0.0;
        else
            x = smoothstep(smoothness, (t_out - d) / (t_out - t_in));
        c.xi1.v[i] = x;
        c.xi2.v[i] = 1.0 - x;
    }
    return c;
}

/// Radial bump: 1 on B(x0, r_plateau), 0 outside B(x0, r_support).
inline ScalarField bump_profile(const GridSpec& spec, const std::array<double, 3>& x0,
                                double r_plateau, double r_support, int smoothness = 2) {
    require(r_support > r_plateau && r_plateau > 0.0, errc::invalid_parameter,
            "bump_profile: need 0 < r_plateau < r_support");
    ScalarField rho(spec);
    for (std::size_t i = 0; i < rho.v.size(); ++i) {
        const double d = torus_distance(spec.position(i), x0, spec.dim);
        if (d <= r_plateau)
            rho.v[i] = 1.0;
        else if (d >= r_support)
            rho.v[i] = 0.0;
        else
            rho.v[i] = smoothstep(smoothness, (r_support - d) / (r_support - r_plateau));
    }
    return rho;
}

/// rho = 1 on B(x0, r/2), 0 outside B(x0, r).
inline ScalarField radial_bump(const GridSpec& spec, const std::array<double, 3>& x0, double r,
                               int smoothness = 2) {
    require(r < 0.25, errc::invalid_parameter, "radial_bump: r must be < 0.25");
    require(r >= 4.0 * spec.hmax(), errc::grid_too_coarse, "radial_bump: r < 4h");
    return bump_profile(spec, x0, r / 2.0, r, smoothness);
}

// ---------------------------------------------------------------------------
// Serialization: labels as a CVF1 scalar payload plus region metadata.
// ---------------------------------------------------------------------------

inline void write_region(const std::string& path, const RegionSet& rs) {
    ScalarField labels(rs.spec);
    for (std::size_t i = 0; i < rs.label.size(); ++i) labels.v[i] = double(rs.label[i]);
    nlohmann::json extra;
    extra["region"] = {{"delta", rs.delta},
                       {"r_inner", rs.r_inner},
                       {"r_outer", rs.r_outer},
                       {"k", rs.k_descriptor}};
    write_field(path, labels, extra);
}

inline RegionSet read_region(const std::string& path) {
    CvfFile f = read_cvf(path);
    require(f.kind() == "scalar" && f.header.contains("region"), errc::format_error,
            "not a region file");
    GridSpec spec = f.spec();
    require(f.payload.size() == spec.nodes(), errc::format_error, "region payload mismatch");
    RegionSet rs;
    rs.spec = spec;
    rs.label.resize(spec.nodes());
    NodeMask k(spec.nodes(), 0);
    for (std::size_t i = 0; i < rs.label.size(); ++i) {
        const double x = f.payload[i];
        require(x == 0.0 || x == 1.0 || x == 2.0, errc::format_error, "bad region label");
        rs.label[i] = std::uint8_t(x);
    }
    const auto& meta = f.header.at("region");
    rs.delta = meta.at("delta").get<double>();
    rs.r_inner = meta.at("r_inner").get<double>();
    rs.r_outer = meta.at("r_outer").get<double>();
    rs.k_descriptor = meta.value("k", nlohmann::json());
    if (rs.k_descriptor.contains("ball")) {
        auto c = rs.k_descriptor["ball"]["center"].get<std::vector<double>>();
        std::array<double, 3> center = {c[0], c[1], c.size() > 2 ? c[2] : 0.0};
        rs.k_mask = ball_mask(spec, center, rs.k_descriptor["ball"]["radius"].get<double>());
    } else {
        rs.k_mask = rs.v_mask();  // fall back: V is a valid superset seed
    }
    rs.dist_k = distance_to_mask(spec, rs.k_mask);
    return rs;
}

}  // namespace cvf

#endif
