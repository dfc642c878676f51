#ifndef CVF_MOLLIFY_HPP
#define CVF_MOLLIFY_HPP

#include <cmath>

#include "cvf/operators.hpp"

namespace cvf {

/// Friedrichs mollifier sampled on the grid: radial, nonnegative, supported
/// in the ball B(0, eps) around the origin node, renormalized to unit
/// discrete mass so h^n * sum(kernel) == 1 holds exactly at grid level.
struct MollifierKernel {
    double eps = 0.0;
    ScalarField kernel;
};

inline MollifierKernel make_mollifier(double eps, const GridSpec& spec) {
    require(eps < 0.25, errc::kernel_too_wide, "mollifier: eps must be < 0.25");
    require(eps >= 4.0 * spec.hmax(), errc::grid_too_coarse, "mollifier: eps < 4h");
    MollifierKernel k{eps, ScalarField(spec)};
    const std::array<double, 3> origin = {0.0, 0.0, 0.0};
    double mass = 0.0;
    for (std::size_t i = 0; i < k.kernel.v.size(); ++i) {
        const double rho = torus_distance(spec.position(i), origin, spec.dim) / eps;
        double val = 0.0;
        if (rho < 1.0) val = std::exp(-1.0 / (1.0 - rho * rho));
        k.kernel.v[i] = val;
        mass += val;
    }
    const double scale = 1.0 / (mass * spec.cell_volume());
    for (double& x : k.kernel.v) x *= scale;
    return k;
}

namespace detail {

inline std::vector<double> convolve_periodic(const GridSpec& spec,
                                             const std::vector<double>& f,
                                             const std::vector<std::complex<double>>& k_hat) {
    auto hat = spectrum(spec, f);
    for (std::size_t i = 0; i < hat.size(); ++i) hat[i] *= k_hat[i] * spec.cell_volume();
    return from_spectrum(spec, std::move(hat));
}

}  // namespace detail

/// Periodic convolution against the kernel, computed in frequency space so it
/// commutes exactly with the spectral derivative operators.
inline ScalarField mollify(const ScalarField& f, const MollifierKernel& k) {
    check_finite(f, "mollify");
    check_same_spec(f.spec, k.kernel.spec, "mollify");
    ScalarField out(f.spec);
    out.v = detail::convolve_periodic(f.spec, f.v, detail::spectrum(f.spec, k.kernel.v));
    return out;
}

inline VectorField mollify(const VectorField& f, const MollifierKernel& k) {
    check_finite(f, "mollify");
    check_same_spec(f.spec, k.kernel.spec, "mollify");
    VectorField out(f.spec);
    const std::size_t N = f.spec.nodes();
    const auto k_hat = detail::spectrum(f.spec, k.kernel.v);
    std::vector<double> comp(N);
    for (int c = 0; c < f.spec.dim; ++c) {
        for (std::size_t i = 0; i < N; ++i) comp[i] = f.at(c, i);
        auto conv = detail::convolve_periodic(f.spec, comp, k_hat);
        for (std::size_t i = 0; i < N; ++i) out.at(c, i) = conv[i];
    }
    return out;
}

}  // namespace cvf

#endif
