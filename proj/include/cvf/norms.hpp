#ifndef CVF_NORMS_HPP
#define CVF_NORMS_HPP

#include <algorithm>
#include <cmath>
#include <vector>

#include "cvf/operators.hpp"
#include "cvf/rng.hpp"

namespace cvf {

namespace detail {

/// Largest singular value of a per-node matrix (operator 2-norm).
inline double matrix_opnorm(const MatrixField& M, std::size_t node) {
    const int d = M.spec.dim;
    if (d == 2) {
        const double a = M.at(node, 0, 0), b = M.at(node, 0, 1);
        const double c = M.at(node, 1, 0), e = M.at(node, 1, 1);
        // Eigenvalues of M^T M via trace/determinant.
        const double t = a * a + b * b + c * c + e * e;
        const double det = a * e - b * c;
        const double disc = std::sqrt(std::max(0.0, t * t - 4.0 * det * det));
        return std::sqrt(0.5 * (t + disc));
    }
    // Symmetric 3x3 eigen-max of M^T M, trigonometric form.
    double g[3][3] = {};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            double s = 0.0;
            for (int k = 0; k < 3; ++k) s += M.at(node, k, i) * M.at(node, k, j);
            g[i][j] = s;
        }
    const double p1 = g[0][1] * g[0][1] + g[0][2] * g[0][2] + g[1][2] * g[1][2];
    const double q = (g[0][0] + g[1][1] + g[2][2]) / 3.0;
    if (p1 == 0.0) {
        double m = std::max({g[0][0], g[1][1], g[2][2]});
        return std::sqrt(std::max(0.0, m));
    }
    const double p2 = (g[0][0] - q) * (g[0][0] - q) + (g[1][1] - q) * (g[1][1] - q) +
                      (g[2][2] - q) * (g[2][2] - q) + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    double B[3][3];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) B[i][j] = (g[i][j] - (i == j ? q : 0.0)) / p;
    const double detB =
        B[0][0] * (B[1][1] * B[2][2] - B[1][2] * B[2][1]) -
        B[0][1] * (B[1][0] * B[2][2] - B[1][2] * B[2][0]) +
        B[0][2] * (B[1][0] * B[2][1] - B[1][1] * B[2][0]);
    const double r = std::clamp(detB / 2.0, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    const double eig = q + 2.0 * p * std::cos(phi);
    return std::sqrt(std::max(0.0, eig));
}

/// Axis offsets with L1 length <= reach, one representative per {d, -d} pair.
inline std::vector<std::array<int, 3>> holder_offsets(int dim, int reach) {
    std::vector<std::array<int, 3>> out;
    const int zmin = dim == 3 ? -reach : 0, zmax = dim == 3 ? reach : 0;
    for (int i = -reach; i <= reach; ++i)
        for (int j = -reach; j <= reach; ++j)
            for (int k = zmin; k <= zmax; ++k) {
                if (std::abs(i) + std::abs(j) + std::abs(k) > reach) continue;
                if (i == 0 && j == 0 && k == 0) continue;
                if (i < 0 || (i == 0 && (j < 0 || (j == 0 && k < 0)))) continue;
                out.push_back({i, j, k});
            }
    return out;
}

}  // namespace detail

/// Hoelder-alpha seminorm estimated over a deterministic pair sample: all
/// node pairs within graph distance 8 plus 1e4 seeded long-range pairs. This
/// is a reproducible lower bound for the true pair sup.
template <typename ValueDiff>
double holder_seminorm(const GridSpec& spec, double alpha, ValueDiff diff) {
    require(alpha > 0.0 && alpha < 1.0, errc::invalid_parameter, "holder: alpha outside (0,1)");
    const std::size_t N = spec.nodes();
    double best = 0.0;
    for (const auto& off : detail::holder_offsets(spec.dim, 8)) {
        double d2 = 0.0;
        for (int ax = 0; ax < spec.dim; ++ax) {
            int m = std::abs(off[ax]) % spec.n[ax];
            m = std::min(m, spec.n[ax] - m);
            const double d = m * spec.h(ax);
            d2 += d * d;
        }
        if (d2 == 0.0) continue;
        const double inv_pow = 1.0 / std::pow(std::sqrt(d2), alpha);
        for (std::size_t i = 0; i < N; ++i) {
            auto c = spec.coords(i);
            const std::size_t j = spec.index(spec.wrap(c[0] + off[0], 0),
                                             spec.wrap(c[1] + off[1], 1),
                                             spec.wrap(c[2] + off[2], 2));
            best = std::max(best, diff(i, j) * inv_pow);
        }
    }
    Rng rng(0x5eedULL);
    for (int s = 0; s < 10000; ++s) {
        const std::size_t i = rng.below(N), j = rng.below(N);
        if (i == j) continue;
        const double d = torus_distance(spec.position(i), spec.position(j), spec.dim);
        if (d == 0.0) continue;
        best = std::max(best, diff(i, j) / std::pow(d, alpha));
    }
    return best;
}

/// c0 = grid sup; c1 = max(c0, sup of the spectral derivative's pointwise
/// norm); holder = sampled alpha-seminorm in the torus metric.
inline NormReport norms(const ScalarField& f, double alpha) {
    check_finite(f, "norms");
    require(alpha > 0.0 && alpha < 1.0, errc::invalid_parameter, "norms: alpha outside (0,1)");
    NormReport r;
    r.alpha = alpha;
    r.c0 = sup_abs(f);
    r.c1 = std::max(r.c0, sup_vector_norm(gradient(f)));
    r.holder = holder_seminorm(f.spec, alpha, [&](std::size_t i, std::size_t j) {
        return std::abs(f.v[i] - f.v[j]);
    });
    return r;
}

inline NormReport norms(const VectorField& f, double alpha) {
    check_finite(f, "norms");
    require(alpha > 0.0 && alpha < 1.0, errc::invalid_parameter, "norms: alpha outside (0,1)");
    NormReport r;
    r.alpha = alpha;
    r.c0 = sup_vector_norm(f);
    MatrixField J = vector_jacobian(f);
    double dsup = 0.0;
    for (std::size_t i = 0; i < f.spec.nodes(); ++i)
        dsup = std::max(dsup, detail::matrix_opnorm(J, i));
    r.c1 = std::max(r.c0, dsup);
    r.holder = holder_seminorm(f.spec, alpha, [&](std::size_t i, std::size_t j) {
        double s = 0.0;
        for (int c = 0; c < f.spec.dim; ++c) {
            const double d = f.at(c, i) - f.at(c, j);
            s += d * d;
        }
        return std::sqrt(s);
    });
    return r;
}

/// sup |f| and sup |Df| only (skips the pair sampling).
inline double c1_norm(const VectorField& f) {
    double dsup = 0.0;
    MatrixField J = vector_jacobian(f);
    for (std::size_t i = 0; i < f.spec.nodes(); ++i)
        dsup = std::max(dsup, detail::matrix_opnorm(J, i));
    return std::max(sup_vector_norm(f), dsup);
}

}  // namespace cvf

#endif
