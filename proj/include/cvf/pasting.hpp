#ifndef CVF_PASTING_HPP
#define CVF_PASTING_HPP

#include <cstddef>
#include <memory>

#include "cvf/divsolve.hpp"
#include "cvf/mollify.hpp"
#include "cvf/norms.hpp"
#include "cvf/regions.hpp"

namespace cvf {

// The paste pipeline measures conservativity with the same compact-stencil
// divergence the annulus solver constrains (divergence_compact); that is the
// operator whose residual the correction can actually drive to zero. The
// spectral divergence is carried in reports for reference.

struct PasteReport {
    double defect_integral = 0.0;          // integral of Div T over Omega, before correction
    double defect_sup = 0.0;               // sup |Div T|
    double divergence_residual_sup = 0.0;  // sup |Div Z| after correction (compact)
    double divergence_residual_spectral = 0.0;
    NormReport closeness;                  // norms of Z - X
    double support_radius = 0.0;           // max dist-to-K over nodes where Z != X
    double correction_c1 = 0.0;            // C1 size of the solved correction
    std::size_t cg_iterations = 0;
};

struct PasteResult {
    VectorField Z;
    PasteReport report;
};

/// Integral of the blended field's divergence defect over the annulus.
inline double compatibility_defect(const VectorField& T, const RegionSet& rs) {
    check_same_spec(T.spec, rs.spec, "compatibility_defect");
    return integrate(divergence_compact(T), rs.omega_mask());
}

namespace detail {

/// T = xi1 Y + xi2 X evaluated branchwise so the plateaus are bitwise copies
/// of Y (on xi1 == 1) and X (on xi1 == 0).
inline VectorField blend_fields(const VectorField& X, const VectorField& Y,
                                const ScalarField& xi1) {
    VectorField T(X.spec);
    const std::size_t N = X.spec.nodes();
    for (std::size_t i = 0; i < N; ++i) {
        const double w = xi1.v[i];
        for (int c = 0; c < X.spec.dim; ++c) {
            if (w == 1.0)
                T.at(c, i) = Y.at(c, i);
            else if (w == 0.0)
                T.at(c, i) = X.at(c, i);
            else
                T.at(c, i) = X.at(c, i) + w * (Y.at(c, i) - X.at(c, i));
        }
    }
    return T;
}

}  // namespace detail

/// Blend two conservative fields across the region system and repair the
/// divergence defect on the annulus. Z equals Y bitwise on V and X bitwise on
/// W; the correction vanishes bitwise outside the annulus interior.
inline PasteResult paste_vector_fields(const VectorField& X, const VectorField& Y,
                                       const RegionSet& rs, double alpha = 0.5,
                                       const Cutoff* cutoff = nullptr,
                                       const ZeroBoundarySolver* solver = nullptr) {
    check_same_spec(X.spec, rs.spec, "paste_vector_fields");
    check_same_spec(Y.spec, rs.spec, "paste_vector_fields");
    check_finite(X, "paste_vector_fields");
    check_finite(Y, "paste_vector_fields");
    require(sup_abs(divergence_compact(X)) <= 1e-9, errc::not_conservative_input,
            "paste: X is not divergence-free");
    require(sup_abs(divergence_compact(Y)) <= 1e-9, errc::not_conservative_input,
            "paste: Y is not divergence-free");

    Cutoff local_cutoff;
    if (!cutoff) {
        local_cutoff = partition_of_unity(rs);
        cutoff = &local_cutoff;
    }
    VectorField T = detail::blend_fields(X, Y, cutoff->xi1);

    ScalarField g = divergence_compact(T);
    PasteReport rep;
    rep.defect_integral = integrate(g, rs.omega_mask());
    rep.defect_sup = sup_abs(g);

    std::unique_ptr<ZeroBoundarySolver> owned;
    if (!solver) {
        owned = std::make_unique<ZeroBoundarySolver>(rs);
        solver = owned.get();
    }
    // Conservative inputs leave at most their own divergence budget outside
    // the solver's reach; that dust is dropped here and shows up honestly in
    // the reported residual.
    const NodeMask& C = solver->constraint_set();
    for (std::size_t i = 0; i < g.v.size(); ++i)
        if (!C[i]) g.v[i] = 0.0;
    g = de_mean(std::move(g), C);

    DivSolveStats stats;
    VectorField v = solver->solve(g, 1e-10, &stats);
    VectorField Z = T - v;

    rep.divergence_residual_sup = sup_abs(divergence_compact(Z));
    rep.divergence_residual_spectral = sup_abs(divergence(Z));
    rep.closeness = norms(Z - X, alpha);
    rep.correction_c1 = c1_norm(v);
    rep.cg_iterations = stats.cg_iterations;
    double radius = 0.0;
    const std::size_t N = rs.spec.nodes();
    for (std::size_t i = 0; i < N; ++i) {
        bool moved = false;
        for (int c = 0; c < rs.spec.dim && !moved; ++c) moved = Z.at(c, i) != X.at(c, i);
        if (moved) radius = std::max(radius, rs.dist_k.v[i]);
    }
    rep.support_radius = radius;
    return {std::move(Z), rep};
}

// ---------------------------------------------------------------------------
// Denseness pipeline: mollify, then cancel the (tiny) divergence defect with
// a whole-torus gradient correction. Everything here is spectral.
// ---------------------------------------------------------------------------

struct SmoothResult {
    VectorField Z;
    NormReport achieved;       // norms of Z - X
    double eps_used = 0.0;
    double divergence_residual_sup = 0.0;
};

/// Largest dyadic mollification width eps' = 2^-j (j >= 3) with
/// |Z - X|_C1 <= eps, Z = mollify(X, eps') minus its divergence correction.
inline SmoothResult smooth_conservative(const VectorField& X, double eps, double alpha = 0.5) {
    check_finite(X, "smooth_conservative");
    require(eps > 0.0, errc::invalid_parameter, "smooth_conservative: eps must be > 0");
    require(sup_abs(divergence(X)) <= 1e-9, errc::not_conservative_input,
            "smooth_conservative: X is not divergence-free");
    if (sup_abs(X) == 0.0) {
        SmoothResult r{X, NormReport{}, 0.0, 0.0};
        r.achieved.alpha = alpha;
        return r;
    }
    const double floor = 4.0 * X.spec.hmax();
    for (double width = 0.125; width >= floor; width *= 0.5) {
        MollifierKernel k = make_mollifier(width, X.spec);
        VectorField Xe = mollify(X, k);
        VectorField v = solve_divergence_torus(divergence(Xe));
        VectorField Z = Xe - v;
        if (c1_norm(Z - X) <= eps) {
            SmoothResult r;
            r.achieved = norms(Z - X, alpha);
            r.eps_used = width;
            r.divergence_residual_sup = sup_abs(divergence(Z));
            r.Z = std::move(Z);
            return r;
        }
    }
    fail(errc::target_unreachable,
         "smooth_conservative: no admissible mollifier width achieves the bound");
}

}  // namespace cvf

#endif
