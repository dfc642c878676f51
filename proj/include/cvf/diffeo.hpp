#ifndef CVF_DIFFEO_HPP
#define CVF_DIFFEO_HPP

#include <cmath>

#include "cvf/interp.hpp"
#include "cvf/moser.hpp"
#include "cvf/norms.hpp"
#include "cvf/regions.hpp"
#include "cvf/rng.hpp"

namespace cvf {

/// Derivative of smoothstep(k, .): t^k (1-t)^k / B(k+1, k+1).
inline double smoothstep_deriv(int k, double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    double beta = 1.0;
    for (int j = 1; j <= k; ++j) beta = beta * double(j) / double(k + j);
    beta /= double(2 * k + 1);
    return std::pow(t, k) * std::pow(1.0 - t, k) / beta;
}

/// Blend of a map with its linearization at x0: affine on an inner plateau
/// covering B(x0, r/2), equal to f outside B(x0, r), bump-blended between.
/// The transition band is inset from both radii so the plateaus hold bitwise
/// at nodes and the volume defect is confined strictly inside the annulus.
struct LinearBlend {
    GridMap h;
    MatrixField jacobian;  // product-rule Jacobian (plateau-exact)
    ScalarField theta;     // det of the blended Jacobian
    std::array<double, 3> x0{};
    double r = 0.0;
    double r_plateau = 0.0;  // affine out to here
    double r_support = 0.0;  // f from here outward
    double a_matrix[3][3] = {};
};

inline LinearBlend linear_blend(const GridMap& f, std::array<double, 3> x0, double r,
                                int smoothness = 2) {
    const GridSpec& spec = f.spec();
    const int d = spec.dim;
    check_finite(f.displacement, "linear_blend");
    require(r < 0.2, errc::invalid_parameter, "linear_blend: r must be < 0.2");
    require(r >= 4.0 * spec.hmax(), errc::grid_too_coarse, "linear_blend: r < 4h");
    const double inset = 1.2 * spec.hmax();
    require(r / 2.0 - 2.0 * inset >= 0.8 * spec.hmax(), errc::grid_too_coarse,
            "linear_blend: annulus too thin for an inset transition band");

    // Snap the blend center to the nearest node; the derivative is taken there.
    std::array<int, 3> c0 = {0, 0, 0};
    for (int ax = 0; ax < d; ++ax) c0[ax] = spec.wrap(int(std::lround(x0[ax] * spec.n[ax])), ax);
    const std::size_t i0 = spec.index(c0[0], c0[1], c0[2]);
    x0 = spec.position(i0);

    JacobianResult jf = map_jacobian(f);
    for (std::size_t i = 0; i < spec.nodes(); ++i)
        require(jf.det.v[i] > 0.0, errc::not_diffeo, "linear_blend: f is not a diffeomorphism");

    LinearBlend out;
    out.x0 = x0;
    out.r = r;
    out.r_plateau = r / 2.0 + inset;
    out.r_support = r - inset;
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) out.a_matrix[a][b] = jf.J.at(i0, a, b);

    out.h = GridMap(spec);
    out.jacobian = MatrixField(spec);
    out.theta = ScalarField(spec);
    const double band = out.r_support - out.r_plateau;
    const std::size_t N = spec.nodes();
    for (std::size_t i = 0; i < N; ++i) {
        const auto pos = spec.position(i);
        double delta_p[3] = {0, 0, 0};
        double dist2 = 0.0;
        for (int ax = 0; ax < d; ++ax) {
            delta_p[ax] = torus_delta(pos[ax], x0[ax]);
            dist2 += delta_p[ax] * delta_p[ax];
        }
        const double dist = std::sqrt(dist2);
        if (dist >= out.r_support) {
            for (int a = 0; a < d; ++a) {
                out.h.displacement.at(a, i) = f.displacement.at(a, i);
                for (int b = 0; b < d; ++b) out.jacobian.at(i, a, b) = jf.J.at(i, a, b);
            }
            out.theta.v[i] = jf.det.v[i];
            continue;
        }
        // Affine displacement: w_f(x0) + (A - I) (p - x0).
        double aff[3] = {0, 0, 0};
        for (int a = 0; a < d; ++a) {
            aff[a] = f.displacement.at(a, i0);
            for (int b = 0; b < d; ++b)
                aff[a] += (out.a_matrix[a][b] - (a == b ? 1.0 : 0.0)) * delta_p[b];
        }
        if (dist <= out.r_plateau) {
            for (int a = 0; a < d; ++a) {
                out.h.displacement.at(a, i) = aff[a];
                for (int b = 0; b < d; ++b) out.jacobian.at(i, a, b) = out.a_matrix[a][b];
            }
            out.theta.v[i] = matrix_det(out.jacobian, i);
        } else {
            const double t = (out.r_support - dist) / band;
            const double rho = smoothstep(smoothness, t);
            const double drho_dd = -smoothstep_deriv(smoothness, t) / band;
            for (int a = 0; a < d; ++a) {
                const double wf = f.displacement.at(a, i);
                out.h.displacement.at(a, i) = wf + rho * (aff[a] - wf);
                for (int b = 0; b < d; ++b) {
                    const double grad_rho_b = drho_dd * delta_p[b] / dist;
                    out.jacobian.at(i, a, b) = jf.J.at(i, a, b) +
                                               rho * (out.a_matrix[a][b] - jf.J.at(i, a, b)) +
                                               (aff[a] - wf) * grad_rho_b;
                }
            }
            out.theta.v[i] = matrix_det(out.jacobian, i);
        }
        require(out.theta.v[i] > 0.0, errc::not_diffeo,
                "linear_blend: blend loses orientation (r too large)");
    }
    return out;
}

struct WeakPasteReport {
    double det_residual_sup = 0.0;  // sup |theta(phi) det Dphi - 1|, solve-aligned metric
    double lambda = 0.0;            // annulus mean of the blended density
    double lambda_effective = 0.0;
    double theta_c0 = 0.0;          // |theta - 1| sup
    double theta_holder = 0.0;      // |theta - 1| Hoelder-alpha
    double holder_ratio = 0.0;      // theta_holder / r^(1-alpha)
    double blend_c1 = 0.0;          // |h - f|_C1
    double alpha = 0.0;
    double r = 0.0;
    int iterations = 0;
    int calibration_passes = 0;
    double inverse_consistency = 0.0;  // diagnostic: sup |g(g^-1(y)) - y| on samples
};

struct WeakPasteResult {
    GridMap g;
    LinearBlend blend;
    MoserSolution correction;
    WeakPasteReport report;
};

/// Replace f near x0 by its linearization and repair the volume defect on the
/// annulus with a Jacobian-equation solve; g = h o phi with phi = id outside
/// the open annulus, so g is bitwise affine on the inner ball and bitwise f
/// outside B(x0, r).
inline WeakPasteResult weak_paste(const GridMap& f, const std::array<double, 3>& x0_in, double r,
                                  double alpha = 0.5, double tol = 1e-9, int max_iter = 120) {
    const GridSpec& spec = f.spec();
    {
        JacobianResult jf = map_jacobian(f);
        double dev = 0.0;
        for (double x : jf.det.v) dev = std::max(dev, std::abs(x - 1.0));
        require(dev <= 1e-9, errc::not_conservative_input,
                "weak_paste: f is not volume-preserving");
    }
    WeakPasteResult out;
    out.blend = linear_blend(f, x0_in, r);
    const auto x0 = out.blend.x0;

    RegionSet rs = annulus_region(spec, x0, r / 2.0, r);
    ScalarField ones(spec, 1.0);
    MoserProblem prob = make_moser_problem(std::move(ones), out.blend.theta, rs);
    MoserOptions mopts;
    mopts.tol = tol;
    mopts.max_iter = max_iter;
    mopts.lambda_target = 1.0;
    out.correction = solve_jacobian_eq(prob, mopts);

    out.g = compose(out.blend.h, out.correction.u);

    WeakPasteReport& rep = out.report;
    rep.alpha = alpha;
    rep.r = r;
    rep.lambda = prob.lambda;
    rep.lambda_effective = out.correction.trace.lambda_effective;
    rep.iterations = int(out.correction.trace.rows.size());
    rep.calibration_passes = out.correction.trace.calibration_passes;
    rep.det_residual_sup = sup_abs(det_residual(out.correction.u, prob, 1.0));

    ScalarField theta_dev = out.blend.theta;
    for (double& x : theta_dev.v) x -= 1.0;
    NormReport nt = norms(theta_dev, alpha);
    rep.theta_c0 = nt.c0;
    rep.theta_holder = nt.holder;
    rep.holder_ratio = nt.holder / std::pow(r, 1.0 - alpha);
    rep.blend_c1 = c1_norm(out.blend.h.displacement - f.displacement);

    // Round-trip inversion diagnostic at seeded sample points.
    Rng rng(0x1457ULL);
    double worst = 0.0;
    for (int s = 0; s < 32; ++s) {
        std::array<double, 3> y = {rng.uniform(), rng.uniform(),
                                   spec.dim == 3 ? rng.uniform() : 0.0};
        try {
            auto z = map_invert_newton(out.g, y, y, 1e-12, 50);
            auto gy = map_eval(out.g, z);
            for (int ax = 0; ax < spec.dim; ++ax)
                worst = std::max(worst, std::abs(torus_delta(gy[ax], y[ax])));
        } catch (const Error&) {
            worst = std::numeric_limits<double>::infinity();
        }
    }
    rep.inverse_consistency = worst;
    return out;
}

}  // namespace cvf

#endif
