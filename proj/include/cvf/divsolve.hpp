#ifndef CVF_DIVSOLVE_HPP
#define CVF_DIVSOLVE_HPP

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "cvf/norms.hpp"
#include "cvf/operators.hpp"
#include "cvf/regions.hpp"
#include "cvf/rng.hpp"

namespace cvf {

// ---------------------------------------------------------------------------
// Whole-torus divergence equation: div v = g with v a spectral gradient
// potential, v = grad a, laplacian a = g. Exact (to roundoff) on every mode
// the first-derivative symbol can represent.
// ---------------------------------------------------------------------------

inline VectorField solve_divergence_torus(const ScalarField& g) {
    check_finite(g, "solve_divergence_torus");
    const GridSpec& spec = g.spec;
    VectorField v(spec);
    const double gsup = sup_abs(g);
    if (gsup == 0.0) return v;
    require(std::abs(integrate(g)) <= 1e-10 * gsup, errc::not_compatible,
            "solve_divergence_torus: nonzero mean");

    auto ghat = detail::spectrum(spec, g.v);
    const std::size_t N = spec.nodes();
    std::vector<std::complex<double>> ahat(N);
    for (std::size_t idx = 0; idx < N; ++idx) {
        auto c = spec.coords(idx);
        double w2 = 0.0;
        for (int ax = 0; ax < spec.dim; ++ax) {
            const double w = detail::omega(spec, ax, c[ax]);
            w2 += w * w;
        }
        ahat[idx] = (w2 > 0.0) ? ghat[idx] / (-w2) : 0.0;
    }
    for (int ax = 0; ax < spec.dim; ++ax) {
        auto vhat = ahat;
        detail::apply_derivative_symbol(spec, ax, vhat);
        auto vals = detail::from_spectrum(spec, std::move(vhat));
        for (std::size_t i = 0; i < N; ++i) v.at(ax, i) = vals[i];
    }
    const double res = sup_abs(divergence(v) - g);
    require(res <= 1e-11 * gsup, errc::solver_failure,
            "solve_divergence_torus: residual above tolerance (data beyond the "
            "representable band)");
    return v;
}

/// Subtract the mean over the mask, on the mask.
inline ScalarField de_mean(ScalarField g, const NodeMask& mask) {
    require(mask.size() == g.v.size(), errc::spec_mismatch, "de_mean: mask size");
    double acc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < g.v.size(); ++i)
        if (mask[i]) {
            acc += g.v[i];
            ++cnt;
        }
    require(cnt > 0, errc::invalid_region, "de_mean: empty mask");
    const double mean = acc / double(cnt);
    for (std::size_t i = 0; i < g.v.size(); ++i)
        if (mask[i]) g.v[i] -= mean;
    return g;
}

// ---------------------------------------------------------------------------
// Zero-boundary divergence equation on the annulus. The velocity unknowns
// live on the open interior S of Omega (everything else is bitwise zero, so
// the returned field extends by zero); the forward-difference divergence
// constraint is enforced on the full reach C of S. The solution minimizes the
// discrete H1 seminorm |D+ v|^2 among feasible fields: the KKT system is
// reduced to the Schur complement B A^-1 B^T lambda = g with A the Dirichlet
// Laplacian on S (factored once per region) and B the constraint matrix, and
// the Schur system is solved by conjugate gradients.
// ---------------------------------------------------------------------------

struct DivSolveStats {
    double residual_sup = 0.0;      // max |D+ v - g| over the whole grid
    double residual_rel = 0.0;
    std::size_t cg_iterations = 0;
};

class ZeroBoundarySolver {
  public:
    explicit ZeroBoundarySolver(const RegionSet& rs)
        : spec_(rs.spec), support_(rs.omega_interior()), constraints_(divergence_reach(rs.spec, support_)) {
        const std::size_t N = spec_.nodes();
        require(mask_count(support_) > 0, errc::region_too_tight,
                "zero-boundary solve: annulus interior is empty");
        s_local_.assign(N, -1);
        c_local_.assign(N, -1);
        for (std::size_t i = 0; i < N; ++i) {
            if (support_[i]) {
                s_local_[i] = int(s_nodes_.size());
                s_nodes_.push_back(i);
            }
            if (constraints_[i]) {
                c_local_[i] = int(c_nodes_.size());
                c_nodes_.push_back(i);
            }
        }
        const int ns = int(s_nodes_.size());
        // Per-axis forward/backward neighbors of support nodes, local index or -1.
        fwd_.assign(std::size_t(ns) * spec_.dim, -1);
        bwd_.assign(std::size_t(ns) * spec_.dim, -1);
        for (int q = 0; q < ns; ++q)
            for (int ax = 0; ax < spec_.dim; ++ax) {
                fwd_[std::size_t(q) * spec_.dim + ax] = s_local_[spec_.neighbor(s_nodes_[q], ax, +1)];
                bwd_[std::size_t(q) * spec_.dim + ax] = s_local_[spec_.neighbor(s_nodes_[q], ax, -1)];
            }
        // Constraint rows: D+ v (c) = sum_ax (v_ax(c+e) - v_ax(c)) / h_ax.
        const int nc = int(c_nodes_.size());
        row_at_.assign(std::size_t(nc) * spec_.dim, -1);
        row_plus_.assign(std::size_t(nc) * spec_.dim, -1);
        for (int c = 0; c < nc; ++c)
            for (int ax = 0; ax < spec_.dim; ++ax) {
                row_at_[std::size_t(c) * spec_.dim + ax] = s_local_[c_nodes_[c]];
                row_plus_[std::size_t(c) * spec_.dim + ax] =
                    s_local_[spec_.neighbor(c_nodes_[c], ax, +1)];
            }
        inv_h_.resize(spec_.dim);
        for (int ax = 0; ax < spec_.dim; ++ax) inv_h_[ax] = double(spec_.n[ax]);

        // Dirichlet graph Laplacian on S (identical for every component).
        std::vector<Eigen::Triplet<double>> trip;
        trip.reserve(std::size_t(ns) * (2 * spec_.dim + 1));
        for (int q = 0; q < ns; ++q) {
            double diag = 0.0;
            for (int ax = 0; ax < spec_.dim; ++ax) {
                const double w = inv_h_[ax] * inv_h_[ax];
                diag += 2.0 * w;
                const int fp = fwd_[std::size_t(q) * spec_.dim + ax];
                const int bm = bwd_[std::size_t(q) * spec_.dim + ax];
                if (fp >= 0) trip.emplace_back(q, fp, -w);
                if (bm >= 0) trip.emplace_back(q, bm, -w);
            }
            trip.emplace_back(q, q, diag);
        }
        Eigen::SparseMatrix<double> A(ns, ns);
        A.setFromTriplets(trip.begin(), trip.end());
        llt_.compute(A);
        require(llt_.info() == Eigen::Success, errc::solver_failure,
                "zero-boundary solve: factorization failed");
    }

    const NodeMask& support() const { return support_; }
    const NodeMask& constraint_set() const { return constraints_; }
    std::size_t unknowns() const { return s_nodes_.size() * std::size_t(spec_.dim); }

    /// Minimum-seminorm v with D+ v = g on the constraint set and v == 0
    /// outside the annulus interior. Throws SolverFailure when the conjugate
    /// gradient iteration cannot reach the tolerance.
    VectorField solve(const ScalarField& g, double tol = 1e-10,
                      DivSolveStats* stats = nullptr) const {
        check_same_spec(g.spec, spec_, "zero-boundary solve");
        check_finite(g, "zero-boundary solve");
        const int nc = int(c_nodes_.size());
        const int ns = int(s_nodes_.size());
        const double gsup = sup_abs(g);
        VectorField v(spec_);
        if (gsup == 0.0) {
            if (stats) *stats = {};
            return v;
        }

        Eigen::VectorXd rhs(nc);
        for (int c = 0; c < nc; ++c) rhs[c] = g.v[c_nodes_[c]];
        rhs.array() -= rhs.mean();  // kernel of B^T contains the constants on C

        Eigen::VectorXd lam = Eigen::VectorXd::Zero(nc);
        Eigen::VectorXd r = rhs, p = rhs, q(nc);
        std::vector<Eigen::VectorXd> comp(spec_.dim, Eigen::VectorXd(ns));
        const double stop_inf = tol * gsup;
        double rr = r.squaredNorm();
        std::size_t it = 0;
        const std::size_t max_iter = 10 * unknowns() + 100;
        double best_inf = r.lpNorm<Eigen::Infinity>();
        std::size_t best_it = 0;
        while (best_inf > stop_inf && it < max_iter) {
            apply_schur(p, q, comp);
            const double pq = p.dot(q);
            if (pq <= 0.0) break;  // left the positive cone: rhs not in range
            const double alpha = rr / pq;
            lam += alpha * p;
            r -= alpha * q;
            if (it % 64 == 63) r.array() -= r.mean();
            const double rinf = r.lpNorm<Eigen::Infinity>();
            if (rinf < best_inf) {
                best_inf = rinf;
                best_it = it;
            } else if (it - best_it > 500) {
                break;  // stagnated
            }
            const double rr_new = r.squaredNorm();
            p = r + (rr_new / rr) * p;
            rr = rr_new;
            ++it;
        }

        // v = A^-1 B^T lambda, scattered back to the grid.
        apply_bt(lam, comp);
        for (int ax = 0; ax < spec_.dim; ++ax) {
            Eigen::VectorXd x = llt_.solve(comp[ax]);
            for (int qn = 0; qn < ns; ++qn) v.at(ax, s_nodes_[qn]) = x[qn];
        }

        const double res = sup_abs(divergence_compact(v) - g);
        const double rel = res / gsup;
        if (stats) {
            stats->residual_sup = res;
            stats->residual_rel = rel;
            stats->cg_iterations = it;
        }
        require(rel <= 10.0 * tol, errc::solver_failure,
                "zero-boundary solve: constraint residual " + std::to_string(rel) +
                    " above tolerance (data outside the solvable range?)");
        return v;
    }

  private:
    void apply_bt(const Eigen::VectorXd& lam, std::vector<Eigen::VectorXd>& y) const {
        const int nc = int(c_nodes_.size());
        for (int ax = 0; ax < spec_.dim; ++ax) y[ax].setZero();
        for (int c = 0; c < nc; ++c) {
            const double l = lam[c];
            if (l == 0.0) continue;
            for (int ax = 0; ax < spec_.dim; ++ax) {
                const int at = row_at_[std::size_t(c) * spec_.dim + ax];
                const int plus = row_plus_[std::size_t(c) * spec_.dim + ax];
                if (plus >= 0) y[ax][plus] += l * inv_h_[ax];
                if (at >= 0) y[ax][at] -= l * inv_h_[ax];
            }
        }
    }

    void apply_schur(const Eigen::VectorXd& lam, Eigen::VectorXd& out,
                     std::vector<Eigen::VectorXd>& scratch) const {
        apply_bt(lam, scratch);
        const int nc = int(c_nodes_.size());
        out.setZero(nc);
        for (int ax = 0; ax < spec_.dim; ++ax) {
            Eigen::VectorXd x = llt_.solve(scratch[ax]);
            for (int c = 0; c < nc; ++c) {
                const int at = row_at_[std::size_t(c) * spec_.dim + ax];
                const int plus = row_plus_[std::size_t(c) * spec_.dim + ax];
                double acc = 0.0;
                if (plus >= 0) acc += x[plus];
                if (at >= 0) acc -= x[at];
                out[c] += acc * inv_h_[ax];
            }
        }
    }

    GridSpec spec_;
    NodeMask support_, constraints_;
    std::vector<std::size_t> s_nodes_, c_nodes_;
    std::vector<int> s_local_, c_local_;
    std::vector<int> fwd_, bwd_, row_at_, row_plus_;
    std::vector<double> inv_h_;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> llt_;
};

/// One-shot wrapper with the data hypotheses checked: g supported on Omega
/// (to 1e-12 relative) and mean-zero over Omega (to 1e-10 relative).
inline VectorField solve_divergence_zero_boundary(const ScalarField& g, const RegionSet& rs,
                                                  double tol = 1e-10,
                                                  DivSolveStats* stats = nullptr) {
    check_same_spec(g.spec, rs.spec, "solve_divergence_zero_boundary");
    check_finite(g, "solve_divergence_zero_boundary");
    const double gsup = sup_abs(g);
    if (gsup > 0.0) {
        double off = 0.0;
        for (std::size_t i = 0; i < g.v.size(); ++i)
            if (!rs.in_omega(i)) off = std::max(off, std::abs(g.v[i]));
        require(off <= 1e-12 * gsup, errc::not_compatible,
                "zero-boundary solve: g not supported on Omega");
        require(std::abs(integrate(g, rs.omega_mask())) <= 1e-10 * gsup, errc::not_compatible,
                "zero-boundary solve: nonzero integral over Omega");
    }
    ZeroBoundarySolver solver(rs);
    return solver.solve(g, tol, stats);
}

// ---------------------------------------------------------------------------
// Empirical probe of the solve estimate: random mean-zero data of increasing
// frequency content, one solve per row.
// ---------------------------------------------------------------------------

struct SweepRow {
    int sample = 0;
    int freq_max = 0;
    double c0_g = 0.0;
    double holder_g = 0.0;
    double c1_v = 0.0;
    double ratio_c0 = 0.0;
    double ratio_holder = 0.0;
    std::string status = "ok";
};

/// Random trigonometric field with modes |k|_inf <= fmax, masked to the
/// support mask, de-meaned there, and normalized to unit sup.
inline ScalarField random_masked_field(const GridSpec& spec, const NodeMask& mask, int fmax,
                                       Rng& rng) {
    struct Mode {
        double k[3];
        double amp, phase;
    };
    std::vector<Mode> modes;
    const int kz = spec.dim == 3 ? fmax : 0;
    for (int ki = -fmax; ki <= fmax; ++ki)
        for (int kj = -fmax; kj <= fmax; ++kj)
            for (int kk = -kz; kk <= kz; ++kk) {
                if (ki == 0 && kj == 0 && kk == 0) continue;
                if (ki < 0 || (ki == 0 && (kj < 0 || (kj == 0 && kk < 0)))) continue;
                modes.push_back({{double(ki), double(kj), double(kk)}, rng.normal(),
                                 rng.uniform(0.0, 2.0 * 3.14159265358979323846)});
            }
    ScalarField g(spec);
    for (std::size_t i = 0; i < g.v.size(); ++i) {
        if (!mask[i]) continue;
        auto p = spec.position(i);
        double acc = 0.0;
        for (const auto& m : modes)
            acc += m.amp * std::cos(2.0 * 3.14159265358979323846 *
                                        (m.k[0] * p[0] + m.k[1] * p[1] + m.k[2] * p[2]) +
                                    m.phase);
        g.v[i] = acc;
    }
    g = de_mean(std::move(g), mask);
    const double s = sup_abs(g);
    if (s > 0.0)
        for (double& x : g.v) x /= s;
    return g;
}

inline std::vector<SweepRow> constant_sweep(const RegionSet& rs, int n_samples,
                                            std::uint64_t seed, double alpha, int octaves = 4,
                                            int base_freq = 2) {
    require(n_samples >= 1, errc::invalid_parameter, "constant_sweep: n_samples >= 1");
    require(alpha > 0.0 && alpha < 1.0, errc::invalid_parameter, "constant_sweep: alpha");
    ZeroBoundarySolver solver(rs);
    Rng rng(seed);
    std::vector<SweepRow> rows;
    int sample_id = 0;
    for (int o = 0; o < octaves; ++o) {
        const int fmax = base_freq << o;
        for (int s = 0; s < n_samples; ++s) {
            SweepRow row;
            row.sample = sample_id++;
            row.freq_max = fmax;
            ScalarField g = random_masked_field(rs.spec, solver.support(), fmax, rng);
            NormReport ng = norms(g, alpha);
            row.c0_g = ng.c0;
            row.holder_g = ng.holder;
            try {
                VectorField v = solver.solve(g);
                row.c1_v = c1_norm(v);
                row.ratio_c0 = row.c1_v / row.c0_g;
                row.ratio_holder = row.c1_v / row.holder_g;
            } catch (const Error& e) {
                row.status = errc_name(e.code());
            }
            rows.push_back(row);
        }
    }
    return rows;
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out.precision(12);
    out << "sample,freq_max,c0_g,holder_g,c1_v,ratio_c0,ratio_holder,status\n";
    for (const auto& r : rows)
        out << r.sample << ',' << r.freq_max << ',' << r.c0_g << ',' << r.holder_g << ','
            << r.c1_v << ',' << r.ratio_c0 << ',' << r.ratio_holder << ',' << r.status << '\n';
    return out.str();
}

}  // namespace cvf

#endif
