#ifndef CVF_CHEBYSHEV_HPP
#define CVF_CHEBYSHEV_HPP

#include <cmath>
#include <vector>

#include "cvf/errors.hpp"

namespace cvf {

// Tensor Chebyshev interpolants on the square [-delta, delta]^2, fitted at
// Chebyshev-Gauss-Lobatto nodes. Evaluation is Clenshaw; differentiation and
// integration act on coefficients, so mixed partials commute exactly.

namespace detail {

/// 1D transform: values at x_j = cos(pi j / n) -> coefficients a_k with
/// p(x) = sum a_k T_k(x).
inline std::vector<double> cheb_coeffs_1d(const std::vector<double>& vals) {
    const int n = int(vals.size()) - 1;
    std::vector<double> a(n + 1, 0.0);
    const double pi = 3.14159265358979323846;
    for (int k = 0; k <= n; ++k) {
        double acc = 0.5 * (vals[0] + (k % 2 == 0 ? vals[n] : -vals[n]));
        for (int j = 1; j < n; ++j) acc += vals[j] * std::cos(pi * j * k / n);
        a[k] = 2.0 * acc / n;
    }
    a[0] *= 0.5;
    a[n] *= 0.5;
    return a;
}

inline double clenshaw(const double* a, int n, double t) {
    double b1 = 0.0, b2 = 0.0;
    for (int k = n; k >= 1; --k) {
        const double b = 2.0 * t * b1 - b2 + a[k];
        b2 = b1;
        b1 = b;
    }
    return t * b1 - b2 + a[0];
}

}  // namespace detail

class Cheb2 {
  public:
    Cheb2() = default;

    /// Fit f on the (nx+1) x (ny+1) CGL tensor grid of [-delta, delta]^2.
    template <typename F>
    static Cheb2 fit(int nx, int ny, double delta, F&& f) {
        require(nx >= 2 && ny >= 2 && delta > 0.0, errc::invalid_parameter, "Cheb2::fit");
        const double pi = 3.14159265358979323846;
        Cheb2 c;
        c.nx_ = nx;
        c.ny_ = ny;
        c.delta_ = delta;
        std::vector<std::vector<double>> vals(nx + 1, std::vector<double>(ny + 1));
        for (int i = 0; i <= nx; ++i) {
            const double x = delta * std::cos(pi * i / nx);
            for (int j = 0; j <= ny; ++j) vals[i][j] = f(x, delta * std::cos(pi * j / ny));
        }
        // Transform along y, then along x.
        std::vector<std::vector<double>> ycoef(nx + 1);
        for (int i = 0; i <= nx; ++i) ycoef[i] = detail::cheb_coeffs_1d(vals[i]);
        c.a_.assign(std::size_t(nx + 1) * (ny + 1), 0.0);
        std::vector<double> col(nx + 1);
        for (int j = 0; j <= ny; ++j) {
            for (int i = 0; i <= nx; ++i) col[i] = ycoef[i][j];
            auto ax = detail::cheb_coeffs_1d(col);
            for (int i = 0; i <= nx; ++i) c.a_[c.idx(i, j)] = ax[i];
        }
        return c;
    }

    double delta() const { return delta_; }
    int degree_x() const { return nx_; }
    int degree_y() const { return ny_; }

    double operator()(double x, double y) const {
        const double tx = x / delta_, ty = y / delta_;
        std::vector<double> row(nx_ + 1);
        for (int i = 0; i <= nx_; ++i) row[i] = detail::clenshaw(&a_[idx(i, 0)], ny_, ty);
        return detail::clenshaw(row.data(), nx_, tx);
    }

    Cheb2 derivative_x() const {
        Cheb2 d = *this;
        std::vector<double> col(nx_ + 1), out(nx_ + 1);
        for (int j = 0; j <= ny_; ++j) {
            for (int i = 0; i <= nx_; ++i) col[i] = a_[idx(i, j)];
            differentiate(col, out, nx_, delta_);
            for (int i = 0; i <= nx_; ++i) d.a_[idx(i, j)] = out[i];
        }
        return d;
    }

    Cheb2 derivative_y() const {
        Cheb2 d = *this;
        std::vector<double> row(ny_ + 1), out(ny_ + 1);
        for (int i = 0; i <= nx_; ++i) {
            for (int j = 0; j <= ny_; ++j) row[j] = a_[idx(i, j)];
            differentiate(row, out, ny_, delta_);
            for (int j = 0; j <= ny_; ++j) d.a_[idx(i, j)] = out[j];
        }
        return d;
    }

    /// Antiderivative along y, normalized to vanish at y = 0.
    Cheb2 antiderivative_y() const {
        Cheb2 d = *this;
        std::vector<double> row(ny_ + 1), out(ny_ + 1);
        for (int i = 0; i <= nx_; ++i) {
            for (int j = 0; j <= ny_; ++j) row[j] = a_[idx(i, j)];
            integrate_1d(row, out, ny_, delta_);
            for (int j = 0; j <= ny_; ++j) d.a_[idx(i, j)] = out[j];
        }
        return d;
    }

    /// Antiderivative along x, normalized to vanish at x = 0.
    Cheb2 antiderivative_x() const {
        Cheb2 d = *this;
        std::vector<double> col(nx_ + 1), out(nx_ + 1);
        for (int j = 0; j <= ny_; ++j) {
            for (int i = 0; i <= nx_; ++i) col[i] = a_[idx(i, j)];
            integrate_1d(col, out, nx_, delta_);
            for (int i = 0; i <= nx_; ++i) d.a_[idx(i, j)] = out[i];
        }
        return d;
    }

    Cheb2& operator+=(const Cheb2& o) {
        require(nx_ == o.nx_ && ny_ == o.ny_ && delta_ == o.delta_, errc::spec_mismatch,
                "Cheb2: mismatched grids");
        for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
        return *this;
    }
    Cheb2& operator-=(double c) {
        a_[0] -= c;
        return *this;
    }

  private:
    std::size_t idx(int i, int j) const { return std::size_t(i) * (ny_ + 1) + j; }

    static void differentiate(const std::vector<double>& a, std::vector<double>& b, int n,
                              double delta) {
        b.assign(n + 1, 0.0);
        double next1 = 0.0, next2 = 0.0;  // b_{k+1}, b_{k+2}
        for (int k = n; k >= 1; --k) {
            const double bk = next2 + 2.0 * k * a[k];
            b[k - 1] = bk;
            next2 = next1;
            next1 = bk;
        }
        b[0] *= 0.5;
        for (double& x : b) x /= delta;
    }

    static void integrate_1d(const std::vector<double>& a, std::vector<double>& b, int n,
                             double delta) {
        b.assign(n + 1, 0.0);
        auto at = [&](int k) { return k <= n ? a[k] : 0.0; };
        for (int k = 1; k <= n; ++k) b[k] = (at(k - 1) * (k == 1 ? 2.0 : 1.0) - at(k + 1)) / (2.0 * k);
        // fix the constant so the antiderivative vanishes at t = 0
        double p0 = 0.0;
        for (int k = 1; k <= n; ++k) {
            if (k % 2 == 0) p0 += (k % 4 == 0 ? 1.0 : -1.0) * b[k];
        }
        b[0] = -p0;
        for (double& x : b) x *= delta;
    }

    int nx_ = 0, ny_ = 0;
    double delta_ = 0.0;
    std::vector<double> a_;
};

}  // namespace cvf

#endif
