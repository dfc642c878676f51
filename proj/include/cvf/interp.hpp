#ifndef CVF_INTERP_HPP
#define CVF_INTERP_HPP

#include <cmath>

#include "cvf/operators.hpp"

namespace cvf {

namespace detail {

/// Catmull-Rom weights for a local coordinate t in [0,1).
inline std::array<double, 4> catmull_rom(double t) {
    const double t2 = t * t, t3 = t2 * t;
    return {-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0, -1.5 * t3 + 2.0 * t2 + 0.5 * t,
            0.5 * t3 - 0.5 * t2};
}

}  // namespace detail

/// Periodic cubic (Catmull-Rom) interpolation at an arbitrary torus point.
/// Reproduces nodal values exactly when x sits on a node.
inline double interp_cubic(const ScalarField& f, const std::array<double, 3>& x) {
    const GridSpec& spec = f.spec;
    int base[3] = {0, 0, 0};
    std::array<double, 4> w[3];
    for (int ax = 0; ax < spec.dim; ++ax) {
        double u = x[ax] * spec.n[ax];
        double fl = std::floor(u);
        double t = u - fl;
        base[ax] = spec.wrap(int(fl), ax);
        w[ax] = detail::catmull_rom(t);
    }
    if (spec.dim == 2) {
        double acc = 0.0;
        for (int di = 0; di < 4; ++di) {
            const int i = spec.wrap(base[0] + di - 1, 0);
            double row = 0.0;
            for (int dj = 0; dj < 4; ++dj) {
                const int j = spec.wrap(base[1] + dj - 1, 1);
                row += w[1][dj] * f.v[spec.index(i, j)];
            }
            acc += w[0][di] * row;
        }
        return acc;
    }
    double acc = 0.0;
    for (int di = 0; di < 4; ++di) {
        const int i = spec.wrap(base[0] + di - 1, 0);
        double plane = 0.0;
        for (int dj = 0; dj < 4; ++dj) {
            const int j = spec.wrap(base[1] + dj - 1, 1);
            double row = 0.0;
            for (int dk = 0; dk < 4; ++dk) {
                const int k = spec.wrap(base[2] + dk - 1, 2);
                row += w[2][dk] * f.v[spec.index(i, j, k)];
            }
            plane += w[1][dj] * row;
        }
        acc += w[0][di] * plane;
    }
    return acc;
}

/// Interpolate every component of a vector field at one point, reading the
/// planar storage in place.
inline std::array<double, 3> interp_cubic(const VectorField& f, const std::array<double, 3>& x) {
    const GridSpec& spec = f.spec;
    const std::size_t N = spec.nodes();
    int base[3] = {0, 0, 0};
    std::array<double, 4> w[3];
    for (int ax = 0; ax < spec.dim; ++ax) {
        double u = x[ax] * spec.n[ax];
        double fl = std::floor(u);
        base[ax] = spec.wrap(int(fl), ax);
        w[ax] = detail::catmull_rom(u - fl);
    }
    std::array<double, 3> out = {0.0, 0.0, 0.0};
    const int kmax = spec.dim == 3 ? 4 : 1;
    for (int c = 0; c < spec.dim; ++c) {
        const double* plane = f.v.data() + std::size_t(c) * N;
        double acc = 0.0;
        for (int di = 0; di < 4; ++di) {
            const int i = spec.wrap(base[0] + di - 1, 0);
            double acc_j = 0.0;
            for (int dj = 0; dj < 4; ++dj) {
                const int j = spec.wrap(base[1] + dj - 1, 1);
                if (spec.dim == 2) {
                    acc_j += w[1][dj] * plane[spec.index(i, j)];
                } else {
                    double row = 0.0;
                    for (int dk = 0; dk < kmax; ++dk) {
                        const int k = spec.wrap(base[2] + dk - 1, 2);
                        row += w[2][dk] * plane[spec.index(i, j, k)];
                    }
                    acc_j += w[1][dj] * row;
                }
            }
            acc += w[0][di] * acc_j;
        }
        out[c] = acc;
    }
    return out;
}

/// Evaluate the map x -> x + displacement(x) at an off-grid point (mod 1).
inline std::array<double, 3> map_eval(const GridMap& m, const std::array<double, 3>& x) {
    auto d = interp_cubic(m.displacement, x);
    std::array<double, 3> y = {0.0, 0.0, 0.0};
    for (int ax = 0; ax < m.spec().dim; ++ax) {
        y[ax] = x[ax] + d[ax];
        y[ax] -= std::floor(y[ax]);
    }
    return y;
}

/// Newton inversion of a grid map: find z with m(z) = y (torus metric),
/// seeded at `seed`. The Jacobian is refreshed from interpolated first
/// differences of the displacement.
inline std::array<double, 3> map_invert_newton(const GridMap& m, const std::array<double, 3>& y,
                                               const std::array<double, 3>& seed,
                                               double tol = 1e-12, int max_steps = 50) {
    const GridSpec& spec = m.spec();
    const int d = spec.dim;
    std::array<double, 3> z = seed;
    for (int step = 0; step < max_steps; ++step) {
        auto mz = map_eval(m, z);
        double err[3] = {0, 0, 0};
        double en = 0.0;
        for (int ax = 0; ax < d; ++ax) {
            err[ax] = torus_delta(mz[ax], y[ax]);
            en = std::max(en, std::abs(err[ax]));
        }
        if (en <= tol) return z;
        // Jacobian I + D disp by centered differences of the interpolant.
        const double eta = 1e-6;
        double J[3][3] = {};
        for (int ax = 0; ax < d; ++ax) {
            std::array<double, 3> zp = z, zm = z;
            zp[ax] += eta;
            zm[ax] -= eta;
            auto dp = interp_cubic(m.displacement, zp);
            auto dm = interp_cubic(m.displacement, zm);
            for (int c = 0; c < d; ++c) J[c][ax] = (c == ax ? 1.0 : 0.0) + (dp[c] - dm[c]) / (2 * eta);
        }
        // Solve J s = err.
        double s[3] = {0, 0, 0};
        if (d == 2) {
            const double det = J[0][0] * J[1][1] - J[0][1] * J[1][0];
            require(std::abs(det) > 1e-14, errc::newton_failure, "map inversion: singular Jacobian");
            s[0] = (err[0] * J[1][1] - err[1] * J[0][1]) / det;
            s[1] = (J[0][0] * err[1] - J[1][0] * err[0]) / det;
        } else {
            const double det = J[0][0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                               J[0][1] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                               J[0][2] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]);
            require(std::abs(det) > 1e-14, errc::newton_failure, "map inversion: singular Jacobian");
            const double inv = 1.0 / det;
            s[0] = inv * (err[0] * (J[1][1] * J[2][2] - J[1][2] * J[2][1]) -
                          J[0][1] * (err[1] * J[2][2] - J[1][2] * err[2]) +
                          J[0][2] * (err[1] * J[2][1] - J[1][1] * err[2]));
            s[1] = inv * (J[0][0] * (err[1] * J[2][2] - J[1][2] * err[2]) -
                          err[0] * (J[1][0] * J[2][2] - J[1][2] * J[2][0]) +
                          J[0][2] * (J[1][0] * err[2] - err[1] * J[2][0]));
            s[2] = inv * (J[0][0] * (J[1][1] * err[2] - err[1] * J[2][1]) -
                          J[0][1] * (J[1][0] * err[2] - err[1] * J[2][0]) +
                          err[0] * (J[1][0] * J[2][1] - J[1][1] * J[2][0]));
        }
        for (int ax = 0; ax < d; ++ax) {
            z[ax] -= s[ax];
            z[ax] -= std::floor(z[ax]);
        }
    }
    fail(errc::newton_failure, "map inversion did not converge");
}

/// Composition (outer o inner) as a grid map: displacement sampled at nodes
/// through cubic interpolation of the outer displacement. Where the inner map
/// fixes a node exactly, the result reproduces the outer displacement bitwise.
inline GridMap compose(const GridMap& outer, const GridMap& inner) {
    check_same_spec(outer.spec(), inner.spec(), "compose");
    const GridSpec& spec = outer.spec();
    GridMap out(spec);
    const std::size_t N = spec.nodes();
    const int d = spec.dim;
    for (std::size_t i = 0; i < N; ++i) {
        bool fixed = true;
        for (int c = 0; c < d; ++c) fixed = fixed && inner.displacement.at(c, i) == 0.0;
        if (fixed) {
            for (int c = 0; c < d; ++c) out.displacement.at(c, i) = outer.displacement.at(c, i);
            continue;
        }
        auto x = spec.position(i);
        std::array<double, 3> xi = x;
        for (int c = 0; c < d; ++c) {
            xi[c] = x[c] + inner.displacement.at(c, i);
            xi[c] -= std::floor(xi[c]);
        }
        auto douter = interp_cubic(outer.displacement, xi);
        for (int c = 0; c < d; ++c)
            out.displacement.at(c, i) = inner.displacement.at(c, i) + douter[c];
    }
    return out;
}

}  // namespace cvf

#endif
