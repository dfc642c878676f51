#ifndef CVF_OPERATORS_HPP
#define CVF_OPERATORS_HPP

#include <complex>
#include <vector>

#include "cvf/fft.hpp"
#include "cvf/grid.hpp"

namespace cvf {

// ---------------------------------------------------------------------------
// Spectral (trigonometric-interpolant) calculus. Derivatives are exact for
// band-limited fields. The Nyquist mode of even-sized axes is annihilated by
// first derivatives, and the Laplacian is defined as div(grad(.)) with the
// same convention, so the operator identity div o grad = laplacian holds for
// every input, not just band-limited ones.
// ---------------------------------------------------------------------------

namespace detail {

/// Angular frequency 2*pi*f for mode j on axis ax; 0 at the Nyquist mode.
inline double omega(const GridSpec& spec, int ax, int j) {
    const int n = spec.n[ax];
    if (2 * j == n) return 0.0;
    const int f = (j <= n / 2) ? j : j - n;
    return 2.0 * 3.14159265358979323846 * double(f);
}

/// Multiply spectrum in-place by (i*omega_ax)^power along one axis.
inline void apply_derivative_symbol(const GridSpec& spec, int ax,
                                    std::vector<std::complex<double>>& hat) {
    const std::size_t N = spec.nodes();
    for (std::size_t idx = 0; idx < N; ++idx) {
        auto c = spec.coords(idx);
        const double w = omega(spec, ax, c[ax]);
        hat[idx] *= std::complex<double>(0.0, w);
    }
}

inline std::vector<std::complex<double>> spectrum(const GridSpec& spec,
                                                  const std::vector<double>& values) {
    auto hat = to_complex(values);
    fft_forward(spec, hat);
    return hat;
}

inline std::vector<double> from_spectrum(const GridSpec& spec,
                                         std::vector<std::complex<double>> hat) {
    fft_inverse(spec, hat);
    return real_part(hat);
}

}  // namespace detail

/// Spectral partial derivative of nodal values along one axis.
inline std::vector<double> spectral_derivative(const GridSpec& spec,
                                               const std::vector<double>& values, int ax) {
    auto hat = detail::spectrum(spec, values);
    detail::apply_derivative_symbol(spec, ax, hat);
    return detail::from_spectrum(spec, std::move(hat));
}

inline ScalarField divergence(const VectorField& V) {
    check_finite(V, "divergence");
    ScalarField out(V.spec);
    const std::size_t N = V.spec.nodes();
    for (int ax = 0; ax < V.spec.dim; ++ax) {
        std::vector<double> comp(N);
        for (std::size_t i = 0; i < N; ++i) comp[i] = V.at(ax, i);
        auto d = spectral_derivative(V.spec, comp, ax);
        for (std::size_t i = 0; i < N; ++i) out.v[i] += d[i];
    }
    return out;
}

inline VectorField gradient(const ScalarField& s) {
    check_finite(s, "gradient");
    VectorField out(s.spec);
    const std::size_t N = s.spec.nodes();
    auto hat0 = detail::spectrum(s.spec, s.v);
    for (int ax = 0; ax < s.spec.dim; ++ax) {
        auto hat = hat0;
        detail::apply_derivative_symbol(s.spec, ax, hat);
        auto d = detail::from_spectrum(s.spec, std::move(hat));
        for (std::size_t i = 0; i < N; ++i) out.at(ax, i) = d[i];
    }
    return out;
}

inline ScalarField laplacian(const ScalarField& s) { return divergence(gradient(s)); }

/// Per-node dim x dim matrices, row-major entries: entry(a,b) = d? see users.
struct MatrixField {
    GridSpec spec;
    std::vector<double> v;  // node-major blocks of dim*dim entries

    MatrixField() = default;
    explicit MatrixField(const GridSpec& s) : spec(s), v(s.nodes() * s.dim * s.dim, 0.0) {}

    double& at(std::size_t node, int a, int b) {
        return v[(node * spec.dim + a) * spec.dim + b];
    }
    double at(std::size_t node, int a, int b) const {
        return v[(node * spec.dim + a) * spec.dim + b];
    }
};

inline double det2(double a00, double a01, double a10, double a11) {
    return a00 * a11 - a01 * a10;
}

inline double matrix_det(const MatrixField& M, std::size_t node) {
    if (M.spec.dim == 2) return det2(M.at(node, 0, 0), M.at(node, 0, 1), M.at(node, 1, 0),
                                     M.at(node, 1, 1));
    const double a = M.at(node, 0, 0), b = M.at(node, 0, 1), c = M.at(node, 0, 2);
    const double d = M.at(node, 1, 0), e = M.at(node, 1, 1), f = M.at(node, 1, 2);
    const double g = M.at(node, 2, 0), h = M.at(node, 2, 1), i = M.at(node, 2, 2);
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
}

inline ScalarField determinant(const MatrixField& M) {
    ScalarField out(M.spec);
    const std::size_t N = M.spec.nodes();
    for (std::size_t i = 0; i < N; ++i) out.v[i] = matrix_det(M, i);
    return out;
}

/// Jacobian of a vector field: entry(a,b) = d v_a / d x_b (spectral).
inline MatrixField vector_jacobian(const VectorField& V) {
    check_finite(V, "vector_jacobian");
    MatrixField J(V.spec);
    const std::size_t N = V.spec.nodes();
    for (int a = 0; a < V.spec.dim; ++a) {
        std::vector<double> comp(N);
        for (std::size_t i = 0; i < N; ++i) comp[i] = V.at(a, i);
        auto hat0 = detail::spectrum(V.spec, comp);
        for (int b = 0; b < V.spec.dim; ++b) {
            auto hat = hat0;
            detail::apply_derivative_symbol(V.spec, b, hat);
            auto d = detail::from_spectrum(V.spec, std::move(hat));
            for (std::size_t i = 0; i < N; ++i) J.at(i, a, b) = d[i];
        }
    }
    return J;
}

struct JacobianResult {
    MatrixField J;       // D(x + displacement) = I + D displacement
    ScalarField det;
};

/// Jacobian of the map x -> x + displacement(x), via spectral differentiation
/// of the displacement.
inline JacobianResult map_jacobian(const GridMap& m) {
    JacobianResult out{vector_jacobian(m.displacement), ScalarField(m.spec())};
    const std::size_t N = m.spec().nodes();
    for (std::size_t i = 0; i < N; ++i) {
        for (int a = 0; a < m.spec().dim; ++a) out.J.at(i, a, a) += 1.0;
        out.det.v[i] = matrix_det(out.J, i);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Compact-stencil first-order pair: forward-difference divergence D+ and
// backward-difference gradient D-. They satisfy exact summation by parts on
// the periodic grid, sum(phi * D+ v) = -sum(D- phi . v), so the discrete
// divergence theorem is exact and mean-zero data is exactly the solvability
// condition for the constrained solver. Fields supported on a node set S
// have D+ divergence supported on S union its backward shifts.
// ---------------------------------------------------------------------------

inline ScalarField divergence_compact(const VectorField& V) {
    check_finite(V, "divergence_compact");
    ScalarField out(V.spec);
    const std::size_t N = V.spec.nodes();
    for (int ax = 0; ax < V.spec.dim; ++ax) {
        const double inv_h = double(V.spec.n[ax]);
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t ip = V.spec.neighbor(i, ax, +1);
            out.v[i] += (V.at(ax, ip) - V.at(ax, i)) * inv_h;
        }
    }
    return out;
}

inline VectorField gradient_compact(const ScalarField& s) {
    check_finite(s, "gradient_compact");
    VectorField out(s.spec);
    const std::size_t N = s.spec.nodes();
    for (int ax = 0; ax < s.spec.dim; ++ax) {
        const double inv_h = double(s.spec.n[ax]);
        for (std::size_t i = 0; i < N; ++i) {
            const std::size_t im = s.spec.neighbor(i, ax, -1);
            out.at(ax, i) = (s.v[i] - s.v[im]) * inv_h;
        }
    }
    return out;
}

/// Forward-difference Jacobian of a vector field: entry(a,b) = D+_b v_a.
/// Its trace equals divergence_compact.
inline MatrixField vector_jacobian_compact(const VectorField& V) {
    const GridSpec& spec = V.spec;
    MatrixField J(spec);
    const std::size_t N = spec.nodes();
    for (int a = 0; a < spec.dim; ++a) {
        for (int b = 0; b < spec.dim; ++b) {
            const double inv_h = double(spec.n[b]);
            for (std::size_t i = 0; i < N; ++i) {
                const std::size_t ip = spec.neighbor(i, b, +1);
                J.at(i, a, b) = (V.at(a, ip) - V.at(a, i)) * inv_h;
            }
        }
    }
    return J;
}

/// Forward-difference Jacobian of x -> x + displacement.
inline MatrixField map_jacobian_compact(const GridMap& m) {
    MatrixField J = vector_jacobian_compact(m.displacement);
    const std::size_t N = m.spec().nodes();
    for (std::size_t i = 0; i < N; ++i)
        for (int a = 0; a < m.spec().dim; ++a) J.at(i, a, a) += 1.0;
    return J;
}

// ---------------------------------------------------------------------------
// Integration
// ---------------------------------------------------------------------------

/// h^n-weighted sum over the whole torus.
inline double integrate(const ScalarField& s) {
    check_finite(s, "integrate");
    double acc = 0.0;
    for (double x : s.v) acc += x;
    return acc * s.spec.cell_volume();
}

/// h^n-weighted sum over a node mask (mask value != 0 selects the node).
inline double integrate(const ScalarField& s, const std::vector<std::uint8_t>& mask) {
    check_finite(s, "integrate");
    require(mask.size() == s.v.size(), errc::spec_mismatch, "integrate: mask size mismatch");
    double acc = 0.0;
    bool any = false;
    for (std::size_t i = 0; i < s.v.size(); ++i) {
        if (mask[i]) {
            acc += s.v[i];
            any = true;
        }
    }
    require(any, errc::invalid_region, "integrate: empty mask");
    return acc * s.spec.cell_volume();
}

}  // namespace cvf

#endif
