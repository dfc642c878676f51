#ifndef CVF_GRID_HPP
#define CVF_GRID_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "cvf/errors.hpp"

namespace cvf {

/// Uniform periodic grid on the flat torus [0,1)^dim, dim in {2,3}.
/// Axis `ax` carries n[ax] nodes at positions j/n[ax]; spacing h(ax) = 1/n[ax].
struct GridSpec {
    int dim = 2;
    std::array<int, 3> n = {0, 0, 1};  // n[2] stays 1 in 2D

    static GridSpec make2(int nx, int ny) { return validated({2, {nx, ny, 1}}); }
    static GridSpec make3(int nx, int ny, int nz) { return validated({3, {nx, ny, nz}}); }
    static GridSpec square(int dim, int nper) {
        return dim == 2 ? make2(nper, nper) : make3(nper, nper, nper);
    }

    std::size_t nodes() const {
        return std::size_t(n[0]) * std::size_t(n[1]) * std::size_t(n[2]);
    }
    double h(int ax) const { return 1.0 / n[ax]; }
    double hmax() const {
        double hm = h(0);
        for (int a = 1; a < dim; ++a) hm = std::max(hm, h(a));
        return hm;
    }
    /// Cell volume h0*h1(*h2).
    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim; ++a) v *= h(a);
        return v;
    }

    // Row-major indexing: i0 slowest, i_last fastest.
    std::size_t index(int i, int j, int k = 0) const {
        return (std::size_t(i) * n[1] + j) * n[2] + k;
    }
    std::array<int, 3> coords(std::size_t idx) const {
        int k = int(idx % n[2]);
        idx /= n[2];
        int j = int(idx % n[1]);
        int i = int(idx / n[1]);
        return {i, j, k};
    }
    int wrap(int i, int ax) const {
        int m = i % n[ax];
        return m < 0 ? m + n[ax] : m;
    }
    std::size_t neighbor(std::size_t idx, int ax, int step) const {
        auto c = coords(idx);
        c[ax] = wrap(c[ax] + step, ax);
        return index(c[0], c[1], c[2]);
    }
    /// Node position in [0,1)^dim.
    std::array<double, 3> position(std::size_t idx) const {
        auto c = coords(idx);
        return {c[0] * h(0), c[1] * h(1), dim == 3 ? c[2] * h(2) : 0.0};
    }

    bool operator==(const GridSpec& o) const { return dim == o.dim && n == o.n; }
    bool operator!=(const GridSpec& o) const { return !(*this == o); }

  private:
    static GridSpec validated(GridSpec s) {
        require(s.dim == 2 || s.dim == 3, errc::invalid_parameter, "grid dim must be 2 or 3");
        for (int a = 0; a < s.dim; ++a)
            require(s.n[a] >= 8, errc::invalid_parameter, "grid sizes must be >= 8");
        if (s.dim == 2) s.n[2] = 1;
        return s;
    }
};

/// Shortest signed displacement a-b on the unit circle, in (-0.5, 0.5].
inline double torus_delta(double a, double b) {
    double d = a - b;
    d -= std::round(d);
    return d;
}

inline double torus_distance(const std::array<double, 3>& a, const std::array<double, 3>& b,
                             int dim) {
    double s = 0.0;
    for (int ax = 0; ax < dim; ++ax) {
        double d = torus_delta(a[ax], b[ax]);
        s += d * d;
    }
    return std::sqrt(s);
}

struct ScalarField {
    GridSpec spec;
    std::vector<double> v;

    ScalarField() = default;
    explicit ScalarField(const GridSpec& s, double fill = 0.0) : spec(s), v(s.nodes(), fill) {}

    double& operator[](std::size_t i) { return v[i]; }
    double operator[](std::size_t i) const { return v[i]; }
    std::size_t size() const { return v.size(); }
};

/// dim components stored planar: component c occupies [c*N, (c+1)*N).
struct VectorField {
    GridSpec spec;
    std::vector<double> v;

    VectorField() = default;
    explicit VectorField(const GridSpec& s, double fill = 0.0)
        : spec(s), v(std::size_t(s.dim) * s.nodes(), fill) {}

    double& at(int comp, std::size_t node) { return v[std::size_t(comp) * spec.nodes() + node]; }
    double at(int comp, std::size_t node) const {
        return v[std::size_t(comp) * spec.nodes() + node];
    }
    /// View of one component as a ScalarField (copy).
    ScalarField component(int comp) const {
        ScalarField s(spec);
        const std::size_t N = spec.nodes();
        for (std::size_t i = 0; i < N; ++i) s.v[i] = v[std::size_t(comp) * N + i];
        return s;
    }
};

/// Self-map of the torus stored as identity-plus-displacement:
/// x -> x + displacement(x) mod 1.
struct GridMap {
    VectorField displacement;

    GridMap() = default;
    explicit GridMap(const GridSpec& s) : displacement(s) {}
    explicit GridMap(VectorField d) : displacement(std::move(d)) {}

    const GridSpec& spec() const { return displacement.spec; }
};

/// Discrete C0, C1 and Hoelder-alpha norms of a field.
struct NormReport {
    double c0 = 0.0;
    double c1 = 0.0;
    double holder = 0.0;
    double alpha = 0.0;
};

inline bool all_finite(const std::vector<double>& v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

inline void check_finite(const ScalarField& f, const char* who) {
    require(all_finite(f.v), errc::invalid_field, std::string(who) + ": non-finite values");
}
inline void check_finite(const VectorField& f, const char* who) {
    require(all_finite(f.v), errc::invalid_field, std::string(who) + ": non-finite values");
}
inline void check_same_spec(const GridSpec& a, const GridSpec& b, const char* who) {
    require(a == b, errc::spec_mismatch, std::string(who) + ": grid specs differ");
}

// Small field algebra; all binary ops require matching specs.

inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
    check_same_spec(a.spec, b.spec, "scalar +");
    ScalarField r = a;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += b.v[i];
    return r;
}
inline ScalarField operator-(const ScalarField& a, const ScalarField& b) {
    check_same_spec(a.spec, b.spec, "scalar -");
    ScalarField r = a;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] -= b.v[i];
    return r;
}
inline ScalarField operator*(double c, const ScalarField& a) {
    ScalarField r = a;
    for (double& x : r.v) x *= c;
    return r;
}
inline VectorField operator+(const VectorField& a, const VectorField& b) {
    check_same_spec(a.spec, b.spec, "vector +");
    VectorField r = a;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] += b.v[i];
    return r;
}
inline VectorField operator-(const VectorField& a, const VectorField& b) {
    check_same_spec(a.spec, b.spec, "vector -");
    VectorField r = a;
    for (std::size_t i = 0; i < r.v.size(); ++i) r.v[i] -= b.v[i];
    return r;
}
inline VectorField operator*(double c, const VectorField& a) {
    VectorField r = a;
    for (double& x : r.v) x *= c;
    return r;
}

inline double sup_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}
inline double sup_abs(const ScalarField& f) { return sup_abs(f.v); }
inline double sup_abs(const VectorField& f) { return sup_abs(f.v); }

/// Pointwise Euclidean norm of the per-node component vector, as a field sup.
inline double sup_vector_norm(const VectorField& f) {
    const std::size_t N = f.spec.nodes();
    double m = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        double s = 0.0;
        for (int c = 0; c < f.spec.dim; ++c) {
            double x = f.at(c, i);
            s += x * x;
        }
        m = std::max(m, s);
    }
    return std::sqrt(m);
}

}  // namespace cvf

#endif
