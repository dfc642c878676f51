#ifndef CVF_MOSER_HPP
#define CVF_MOSER_HPP

#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cvf/divsolve.hpp"
#include "cvf/interp.hpp"
#include "cvf/norms.hpp"
#include "cvf/operators.hpp"

namespace cvf {

/// Q(zeta) = det(I + zeta) - 1 - tr(zeta): the degree >= 2 part of the
/// determinant expansion. In 2D this is just det(zeta).
inline double q_of(const double* zeta, int dim) {
    if (dim == 2) return zeta[0] * zeta[3] - zeta[1] * zeta[2];
    const double a = 1.0 + zeta[0], b = zeta[1], c = zeta[2];
    const double d = zeta[3], e = 1.0 + zeta[4], f = zeta[5];
    const double g = zeta[6], h = zeta[7], i = 1.0 + zeta[8];
    const double det = a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g);
    return det - 1.0 - (zeta[0] + zeta[4] + zeta[8]);
}

inline double q_of(const MatrixField& Z, std::size_t node) {
    return q_of(Z.v.data() + node * Z.spec.dim * Z.spec.dim, Z.spec.dim);
}

/// Data for g(phi(x)) det D phi(x) = lambda f(x), with lambda = int g / int f
/// over the solve domain (the annulus, or the whole torus when no region is
/// given).
struct MoserProblem {
    ScalarField f;
    ScalarField g;
    std::optional<RegionSet> region;
    double lambda = 1.0;
};

inline MoserProblem make_moser_problem(ScalarField f, ScalarField g,
                                       std::optional<RegionSet> region = std::nullopt) {
    check_same_spec(f.spec, g.spec, "moser problem");
    check_finite(f, "moser problem");
    check_finite(g, "moser problem");
    for (double x : f.v)
        require(x > 0.0, errc::invalid_parameter, "moser problem: f must be positive");
    for (double x : g.v)
        require(x > 0.0, errc::invalid_parameter, "moser problem: g must be positive");
    MoserProblem p{std::move(f), std::move(g), std::move(region), 1.0};
    if (p.region) {
        check_same_spec(p.region->spec, p.f.spec, "moser problem");
        const NodeMask omega = p.region->omega_mask();
        p.lambda = integrate(p.g, omega) / integrate(p.f, omega);
    } else {
        p.lambda = integrate(p.g) / integrate(p.f);
    }
    return p;
}

struct IterationTrace {
    struct Row {
        int iter = 0;
        double residual_c0 = 0.0;
        double ratio = 0.0;  // residual / previous residual (0 on the first row)
    };
    std::vector<Row> rows;
    std::string status;            // "converged" or an error name
    double lambda_effective = 0.0; // iteration constant after calibration
    int calibration_passes = 0;
};

inline std::string trace_csv(const IterationTrace& t) {
    std::ostringstream out;
    out.precision(12);
    out << "iter,residual_c0,ratio\n";
    for (const auto& r : t.rows) out << r.iter << ',' << r.residual_c0 << ',' << r.ratio << '\n';
    return out.str();
}

struct MoserOptions {
    double tol = 1e-9;
    int max_iter = 60;
    double smallness = 0.25;  // admissible sup |lambda f / g - 1|
    /// When set, the iteration constant is re-tuned after convergence until
    /// the composed determinant matches lambda_target within tolerance.
    std::optional<double> lambda_target;
};

struct MoserSolution {
    GridMap u;
    IterationTrace trace;
};

/// Pointwise g(u(x)) det Du(x) - lambda f(x); the Jacobian is spectral for
/// whole-torus problems and the compact forward stencil for annulus problems
/// (matching the operator the solve controls). Composition uses periodic
/// cubic interpolation.
inline ScalarField det_residual(const GridMap& u, const MoserProblem& p,
                                double lambda_override = -1.0) {
    check_same_spec(u.spec(), p.f.spec, "det_residual");
    const double lam = lambda_override > 0.0 ? lambda_override : p.lambda;
    const GridSpec& spec = u.spec();
    MatrixField J = p.region ? map_jacobian_compact(u) : map_jacobian(u).J;
    ScalarField out(spec);
    const std::size_t N = spec.nodes();
    for (std::size_t i = 0; i < N; ++i) {
        auto y = spec.position(i);
        for (int c = 0; c < spec.dim; ++c) {
            y[c] += u.displacement.at(c, i);
            y[c] -= std::floor(y[c]);
        }
        out.v[i] = interp_cubic(p.g, y) * matrix_det(J, i) - lam * p.f.v[i];
    }
    return out;
}

namespace detail {

struct MoserWorkspace {
    const MoserProblem& p;
    const GridSpec& spec;
    NodeMask domain;  // where the equation is enforced
    std::unique_ptr<ZeroBoundarySolver> annulus_solver;

    explicit MoserWorkspace(const MoserProblem& prob) : p(prob), spec(prob.f.spec) {
        if (p.region) {
            annulus_solver = std::make_unique<ZeroBoundarySolver>(*p.region);
            domain = annulus_solver->constraint_set();
        } else {
            domain.assign(spec.nodes(), 1);
        }
    }

    MatrixField jac(const VectorField& v) const {
        return p.region ? vector_jacobian_compact(v) : vector_jacobian(v);
    }

    VectorField apply_l(ScalarField rhs) const {
        if (!p.region) return solve_divergence_torus(de_mean(std::move(rhs), domain));
        for (std::size_t i = 0; i < rhs.v.size(); ++i)
            if (!domain[i]) rhs.v[i] = 0.0;
        return annulus_solver->solve(de_mean(std::move(rhs), domain));
    }

    /// g composed with id + v, by periodic cubic interpolation.
    ScalarField g_at(const VectorField& v) const {
        ScalarField out(spec);
        const std::size_t N = spec.nodes();
        for (std::size_t i = 0; i < N; ++i) {
            auto y = spec.position(i);
            bool moved = false;
            for (int c = 0; c < spec.dim; ++c) {
                if (v.at(c, i) != 0.0) moved = true;
                y[c] += v.at(c, i);
                y[c] -= std::floor(y[c]);
            }
            out.v[i] = moved ? interp_cubic(p.g, y) : p.g.v[i];
        }
        return out;
    }
};

}  // namespace detail

/// Fixed-point solve of g(u(x)) det Du(x) = lambda f(x), u = id + v, via
/// v <- L(lambda f / (g o u) - 1 - Q(grad v)) with L the right inverse of the
/// divergence (whole-torus spectral solve, or the zero-boundary annulus
/// solve, in which case v vanishes bitwise outside the annulus interior).
inline MoserSolution solve_jacobian_eq(const MoserProblem& p, const MoserOptions& opts = {},
                                       IterationTrace* trace_out = nullptr) {
    require(opts.tol >= 1e-12, errc::invalid_parameter, "moser: tol >= 1e-12");
    detail::MoserWorkspace ws(p);
    const GridSpec& spec = ws.spec;
    const std::size_t N = spec.nodes();

    MoserSolution sol;
    sol.u = GridMap(spec);
    IterationTrace& trace = sol.trace;
    double lambda_in = p.lambda;
    trace.lambda_effective = lambda_in;

    try {
        // Smallness hypothesis: the iteration is only attempted in the
        // contraction regime.
        double dev = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            if (ws.domain[i]) dev = std::max(dev, std::abs(p.lambda * p.f.v[i] / p.g.v[i] - 1.0));
        require(dev <= opts.smallness, errc::no_contraction,
                "moser: |lambda f/g - 1| = " + std::to_string(dev) +
                    " exceeds the contraction regime");

        VectorField v(spec);
        const int max_calibration = opts.lambda_target ? 4 : 1;
        double prev_res = 0.0;
        int iter = 0;

        for (int pass = 0; pass < max_calibration; ++pass) {
            bool inner_converged = false;
            const std::size_t pass_start = trace.rows.size();
            for (; iter <= opts.max_iter; ++iter) {
                MatrixField J = ws.jac(v);
                ScalarField det(spec);
                for (std::size_t i = 0; i < N; ++i) {
                    double tr = 0.0;
                    for (int a = 0; a < spec.dim; ++a) tr += J.at(i, a, a);
                    det.v[i] = 1.0 + tr + q_of(J, i);
                    require(det.v[i] > 0.0, errc::degenerate_map,
                            "moser: orientation lost mid-iteration");
                }
                ScalarField gu = ws.g_at(v);
                double res = 0.0;
                for (std::size_t i = 0; i < N; ++i)
                    if (ws.domain[i])
                        res = std::max(res, std::abs(gu.v[i] * det.v[i] - lambda_in * p.f.v[i]));
                IterationTrace::Row row;
                row.iter = int(trace.rows.size());
                row.residual_c0 = res;
                row.ratio = trace.rows.size() == pass_start
                                ? 0.0
                                : res / std::max(prev_res, 1e-300);
                trace.rows.push_back(row);
                prev_res = res;

                if (res <= 0.5 * opts.tol || (res <= opts.tol && !opts.lambda_target)) {
                    inner_converged = true;
                    break;
                }
                if (trace.rows.size() - pass_start >= 4) {
                    const double then = trace.rows[trace.rows.size() - 4].residual_c0;
                    require(res * 1.2 <= then, errc::no_contraction,
                            "moser: residual failed to contract over 3 iterations");
                }

                ScalarField rhs(spec);
                for (std::size_t i = 0; i < N; ++i)
                    rhs.v[i] = lambda_in * p.f.v[i] / gu.v[i] - 1.0 - q_of(J, i);
                v = ws.apply_l(std::move(rhs));
                require(sup_vector_norm(v) < 0.25, errc::degenerate_map,
                        "moser: displacement exceeds the injectivity margin");
            }
            require(inner_converged, errc::solver_failure, "moser: iteration budget exhausted");
            if (!opts.lambda_target) break;

            // Composed-determinant calibration: shift the iteration constant
            // until the mean of g(u) det Du matches the target over the solve
            // domain. The shift is the discretization's constant offset; it
            // settles in one or two passes.
            MatrixField J = ws.jac(v);
            ScalarField gu = ws.g_at(v);
            double acc = 0.0, accf = 0.0;
            for (std::size_t i = 0; i < N; ++i) {
                if (!ws.domain[i]) continue;
                double tr = 0.0;
                for (int a = 0; a < spec.dim; ++a) tr += J.at(i, a, a);
                acc += gu.v[i] * (1.0 + tr + q_of(J, i));
                accf += p.f.v[i];
            }
            const double mu = acc / accf;
            const double shift = *opts.lambda_target - mu;
            trace.calibration_passes = pass + 1;
            if (std::abs(shift) <= 0.3 * opts.tol) break;
            require(pass + 1 < max_calibration, errc::solver_failure,
                    "moser: calibration did not settle");
            lambda_in += shift;
            trace.lambda_effective = lambda_in;
        }
        sol.u = GridMap(std::move(v));
    } catch (const Error& e) {
        trace.status = errc_name(e.code());
        if (trace_out) *trace_out = trace;
        throw;
    }
    trace.status = "converged";
    if (trace_out) *trace_out = trace;
    return sol;
}

}  // namespace cvf

#endif
