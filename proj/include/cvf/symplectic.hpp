#ifndef CVF_SYMPLECTIC_HPP
#define CVF_SYMPLECTIC_HPP

#include <cmath>
#include <memory>
#include <vector>

#include "cvf/chebyshev.hpp"
#include "cvf/errors.hpp"
#include "cvf/io.hpp"
#include "cvf/regions.hpp"

namespace cvf {

// 2D area-preserving maps on a local square chart, encoded by type-1
// generating functions S(x, X) with y = -dS/dx and Y = dS/dX under a twist
// condition (dX/dy bounded away from zero).

/// Local 2D map on the chart square [-delta, delta]^2, Chebyshev-backed.
struct PatchMap {
    Cheb2 X, Y;
    double delta = 0.0;

    template <typename F>
    static PatchMap fit(double delta, int degree, F&& f) {
        PatchMap m;
        m.delta = delta;
        m.X = Cheb2::fit(degree, degree, delta, [&](double x, double y) { return f(x, y).first; });
        m.Y = Cheb2::fit(degree, degree, delta, [&](double x, double y) { return f(x, y).second; });
        return m;
    }
};

class GeneratingFunction {
  public:
    virtual ~GeneratingFunction() = default;
    virtual double value(double x, double X) const = 0;
    virtual double d1(double x, double X) const = 0;   // dS/dx
    virtual double d2(double x, double X) const = 0;   // dS/dX
    virtual double d12(double x, double X) const = 0;  // twist derivative
    virtual double patch_delta() const = 0;

    /// min |d12| over a tensor sample; nonpositive values and sign changes
    /// both report as 0 (no twist).
    double twist_bound(int samples = 81) const {
        const double d = patch_delta();
        double lo = std::numeric_limits<double>::max();
        double sign = 0.0;
        for (int i = 0; i < samples; ++i)
            for (int j = 0; j < samples; ++j) {
                const double x = -d + 2.0 * d * i / (samples - 1);
                const double X = -d + 2.0 * d * j / (samples - 1);
                const double t = d12(x, X);
                if (sign == 0.0) sign = t > 0 ? 1.0 : -1.0;
                if (t * sign <= 0.0) return 0.0;
                lo = std::min(lo, std::abs(t));
            }
        return lo;
    }
};

class ChebGenerating final : public GeneratingFunction {
  public:
    ChebGenerating(Cheb2 s, double delta)
        : s_(std::move(s)), s1_(s_.derivative_x()), s2_(s_.derivative_y()),
          s12_(s1_.derivative_y()), delta_(delta) {}

    double value(double x, double X) const override { return s_(x, X); }
    double d1(double x, double X) const override { return s1_(x, X); }
    double d2(double x, double X) const override { return s2_(x, X); }
    double d12(double x, double X) const override { return s12_(x, X); }
    double patch_delta() const override { return delta_; }
    const Cheb2& surface() const { return s_; }

  private:
    Cheb2 s_, s1_, s2_, s12_;
    double delta_;
};

/// Blend of two generating functions through the radial bump
/// lambda(2 |(x,X)| / delta): inner function on |(x,X)| <= delta/4, outer
/// beyond delta/2, weights and derivatives assembled by the product rule so
/// the plateaus are exact branches.
class BlendedGenerating final : public GeneratingFunction {
  public:
    BlendedGenerating(std::shared_ptr<const GeneratingFunction> outer,
                      std::shared_ptr<const GeneratingFunction> inner, double delta,
                      int smoothness = 2)
        : outer_(std::move(outer)), inner_(std::move(inner)), delta_(delta), k_(smoothness) {}

    double value(double x, double X) const override {
        const double w = weight(x, X);
        if (w == 1.0) return inner_->value(x, X);
        if (w == 0.0) return outer_->value(x, X);
        return outer_->value(x, X) + w * (inner_->value(x, X) - outer_->value(x, X));
    }
    double d1(double x, double X) const override {
        const double w = weight(x, X);
        if (w == 1.0) return inner_->d1(x, X);
        if (w == 0.0) return outer_->d1(x, X);
        double wx, wX;
        weight_grad(x, X, wx, wX);
        return outer_->d1(x, X) + w * (inner_->d1(x, X) - outer_->d1(x, X)) +
               wx * (inner_->value(x, X) - outer_->value(x, X));
    }
    double d2(double x, double X) const override {
        const double w = weight(x, X);
        if (w == 1.0) return inner_->d2(x, X);
        if (w == 0.0) return outer_->d2(x, X);
        double wx, wX;
        weight_grad(x, X, wx, wX);
        return outer_->d2(x, X) + w * (inner_->d2(x, X) - outer_->d2(x, X)) +
               wX * (inner_->value(x, X) - outer_->value(x, X));
    }
    double d12(double x, double X) const override {
        const double w = weight(x, X);
        if (w == 1.0) return inner_->d12(x, X);
        if (w == 0.0) return outer_->d12(x, X);
        double wx, wX, wxX;
        weight_grad(x, X, wx, wX);
        wxX = weight_mixed(x, X);
        const double dv = inner_->value(x, X) - outer_->value(x, X);
        const double d1v = inner_->d1(x, X) - outer_->d1(x, X);
        const double d2v = inner_->d2(x, X) - outer_->d2(x, X);
        const double d12v = inner_->d12(x, X) - outer_->d12(x, X);
        return outer_->d12(x, X) + w * d12v + wx * d2v + wX * d1v + wxX * dv;
    }
    double patch_delta() const override { return delta_; }

  private:
    // lambda(z) with z = 2 rho / delta: 1 for z <= 1/2, 0 for z >= 1.
    double profile(double z) const {
        if (z <= 0.5) return 1.0;
        if (z >= 1.0) return 0.0;
        return smoothstep(k_, 2.0 * (1.0 - z));
    }
    double profile_d(double z) const {
        if (z <= 0.5 || z >= 1.0) return 0.0;
        return -2.0 * smoothstep_deriv_local(k_, 2.0 * (1.0 - z));
    }
    double profile_dd(double z) const {
        if (z <= 0.5 || z >= 1.0) return 0.0;
        return 4.0 * smoothstep_deriv2(k_, 2.0 * (1.0 - z));
    }
    static double smoothstep_deriv_local(int k, double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        double beta = 1.0;
        for (int j = 1; j <= k; ++j) beta = beta * double(j) / double(k + j);
        beta /= double(2 * k + 1);
        return std::pow(t, k) * std::pow(1.0 - t, k) / beta;
    }
    static double smoothstep_deriv2(int k, double t) {
        if (t <= 0.0 || t >= 1.0) return 0.0;
        double beta = 1.0;
        for (int j = 1; j <= k; ++j) beta = beta * double(j) / double(k + j);
        beta /= double(2 * k + 1);
        return k * (std::pow(t, k - 1) * std::pow(1.0 - t, k) -
                    std::pow(t, k) * std::pow(1.0 - t, k - 1)) /
               beta;
    }

    double weight(double x, double X) const {
        return profile(2.0 * std::sqrt(x * x + X * X) / delta_);
    }
    void weight_grad(double x, double X, double& wx, double& wX) const {
        const double rho = std::sqrt(x * x + X * X);
        const double z = 2.0 * rho / delta_;
        const double dz = profile_d(z) * 2.0 / delta_;
        if (rho == 0.0 || dz == 0.0) {
            wx = wX = 0.0;
            return;
        }
        wx = dz * x / rho;
        wX = dz * X / rho;
    }
    double weight_mixed(double x, double X) const {
        const double rho = std::sqrt(x * x + X * X);
        if (rho == 0.0) return 0.0;
        const double z = 2.0 * rho / delta_;
        const double pd = profile_d(z), pdd = profile_dd(z);
        if (pd == 0.0 && pdd == 0.0) return 0.0;
        const double zx = 2.0 * x / (delta_ * rho), zX = 2.0 * X / (delta_ * rho);
        const double rho_xX = -x * X / (rho * rho * rho);
        return pdd * zx * zX + pd * 2.0 * rho_xX / delta_;
    }

    std::shared_ptr<const GeneratingFunction> outer_, inner_;
    double delta_;
    int k_;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Construct the type-1 generating function of a twist map on a chart of
/// radius s_delta < f.delta: invert y -> X(x, y) at Chebyshev nodes, then
/// integrate the mixed-coordinate form -y dx + Y dX from the origin.
inline std::shared_ptr<GeneratingFunction> generating_from_map(const PatchMap& f, double s_delta,
                                                               int degree = 28) {
    require(s_delta > 0.0 && s_delta < f.delta, errc::invalid_parameter,
            "generating_from_map: need 0 < s_delta < patch delta");
    Cheb2 Xy = f.X.derivative_y();
    Cheb2 Xx = f.X.derivative_x();
    Cheb2 Yx = f.Y.derivative_x();
    Cheb2 Yy = f.Y.derivative_y();
    {
        const int m = 41;
        double tw = std::numeric_limits<double>::max(), sign = 0.0, det_dev = 0.0;
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) {
                const double x = -f.delta + 2.0 * f.delta * i / (m - 1);
                const double y = -f.delta + 2.0 * f.delta * j / (m - 1);
                const double t = Xy(x, y);
                if (sign == 0.0) sign = t > 0 ? 1.0 : -1.0;
                if (t * sign <= 0.0 || std::abs(t) < 1e-3)
                    fail(errc::no_twist, "generating_from_map: twist condition fails");
                tw = std::min(tw, std::abs(t));
                det_dev = std::max(det_dev,
                                   std::abs(Xx(x, y) * Yy(x, y) - Xy(x, y) * Yx(x, y) - 1.0));
            }
        require(det_dev <= 1e-9, errc::not_conservative_input,
                "generating_from_map: map is not symplectic on the patch");
    }

    // ybar(x, X): solve X(x, y) = X for y by safeguarded Newton on [-delta, delta].
    auto invert_y = [&](double x, double Xt) {
        double lo = -f.delta, hi = f.delta;
        double flo = f.X(x, lo) - Xt, fhi = f.X(x, hi) - Xt;
        require(flo * fhi <= 0.0, errc::newton_failure,
                "generating_from_map: target leaves the chart (shrink s_delta)");
        double y = 0.5 * (lo + hi);
        for (int it = 0; it < 80; ++it) {
            const double fy = f.X(x, y) - Xt;
            if (std::abs(fy) <= 1e-14 * std::max(1.0, std::abs(Xt))) return y;
            if (fy * flo < 0.0) {
                hi = y;
            } else {
                lo = y;
                flo = fy;
            }
            const double dy = fy / Xy(x, y);
            double ynew = y - dy;
            if (!(ynew > lo && ynew < hi)) ynew = 0.5 * (lo + hi);
            y = ynew;
        }
        return y;
    };

    Cheb2 ybar = Cheb2::fit(degree, degree, s_delta,
                            [&](double x, double X) { return invert_y(x, X); });
    Cheb2 Ybar = Cheb2::fit(degree, degree, s_delta, [&](double x, double X) {
        return f.Y(x, invert_y(x, X));
    });

    // S(x, X) = int_0^x -ybar(t, 0) dt + int_0^X Ybar(x, s) ds.
    Cheb2 ybar0 = Cheb2::fit(degree, degree, s_delta,
                             [&](double x, double) { return -ybar(x, 0.0); });
    Cheb2 S = Ybar.antiderivative_y();
    S += ybar0.antiderivative_x();
    S -= S(0.0, 0.0);
    auto gen = std::make_shared<ChebGenerating>(std::move(S), s_delta);
    require(gen->twist_bound() > 0.0, errc::no_twist,
            "generating_from_map: constructed surface lost the twist bound");
    return gen;
}

struct MapPoint {
    double X = 0.0;
    double Y = 0.0;
    bool ok = false;
};

/// Evaluate the implicit map at one (x, y): solve y = -d1 S(x, X) for X by
/// safeguarded Newton within the patch, then Y = d2 S(x, X). Points whose
/// root leaves the patch come back with ok = false.
inline MapPoint map_from_generating_at(const GeneratingFunction& S, double x, double y,
                                       double tol = 1e-13) {
    const double d = S.patch_delta();
    double lo = -d, hi = d;
    auto F = [&](double X) { return -S.d1(x, X) - y; };
    double flo = F(lo), fhi = F(hi);
    if (flo * fhi > 0.0) return {};
    double X = 0.5 * (lo + hi);
    for (int it = 0; it < 80; ++it) {
        const double fx = F(X);
        if (std::abs(fx) <= tol) return {X, S.d2(x, X), true};
        if (fx * flo < 0.0) {
            hi = X;
        } else {
            lo = X;
            flo = fx;
        }
        const double der = -S.d12(x, X);
        double Xn = (der != 0.0) ? X - fx / der : 0.5 * (lo + hi);
        if (!(Xn > lo && Xn < hi)) Xn = 0.5 * (lo + hi);
        X = Xn;
    }
    return {};
}

/// Sampled map on an n x n tensor grid of [-sample_delta, sample_delta]^2.
struct PatchMapSamples {
    int n = 0;
    double delta = 0.0;
    std::vector<MapPoint> pts;  // row-major, x fastest

    const MapPoint& at(int i, int j) const { return pts[std::size_t(i) * n + j]; }
    double xcoord(int i) const { return -delta + 2.0 * delta * i / (n - 1); }
};

inline PatchMapSamples map_from_generating(const GeneratingFunction& S, double sample_delta,
                                           int n) {
    require(n >= 3, errc::invalid_parameter, "map_from_generating: n >= 3");
    PatchMapSamples out;
    out.n = n;
    out.delta = sample_delta;
    out.pts.resize(std::size_t(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.pts[std::size_t(i) * n + j] =
                map_from_generating_at(S, out.xcoord(i), out.xcoord(j));
    return out;
}

/// Blend two generating surfaces: S1 (inner) within |(x,X)| <= delta/4, S0
/// (outer) beyond delta/2. Both must be normalized to S(0,0) = 0. Throws
/// TwistLost when the blend destroys the twist bound.
inline std::shared_ptr<GeneratingFunction> blend_generating(
    std::shared_ptr<const GeneratingFunction> S0, std::shared_ptr<const GeneratingFunction> S1,
    double delta, int smoothness = 2) {
    require(S0 && S1, errc::invalid_parameter, "blend_generating: null surface");
    require(delta > 0.0 && delta <= S0->patch_delta() && delta <= S1->patch_delta(),
            errc::invalid_parameter, "blend_generating: delta exceeds a patch");
    require(std::abs(S0->value(0.0, 0.0)) <= 1e-12 && std::abs(S1->value(0.0, 0.0)) <= 1e-12,
            errc::invalid_parameter, "blend_generating: surfaces must vanish at the origin");
    auto blend = std::make_shared<BlendedGenerating>(std::move(S0), std::move(S1), delta,
                                                     smoothness);
    require(blend->twist_bound() > 0.0, errc::twist_lost,
            "blend_generating: blend destroys the twist bound");
    return blend;
}

// CVF1 serialization of a generating surface: uniform tensor samples plus a
// patch header. Reading refits a Chebyshev surface through the samples.

inline void write_generating(const std::string& path, const GeneratingFunction& S, int n = 65) {
    const double d = S.patch_delta();
    GridSpec dummy = GridSpec::make2(std::max(8, n), std::max(8, n));
    ScalarField samples(dummy);
    for (int i = 0; i < dummy.n[0]; ++i)
        for (int j = 0; j < dummy.n[1]; ++j) {
            const double x = -d + 2.0 * d * i / (dummy.n[0] - 1);
            const double X = -d + 2.0 * d * j / (dummy.n[1] - 1);
            samples.v[dummy.index(i, j)] = S.value(x, X);
        }
    nlohmann::json extra;
    extra["patch"] = {{"delta", d}, {"grid", "uniform"}};
    write_field(path, samples, extra);
}

}  // namespace cvf

#endif
