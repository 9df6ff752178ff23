// Uniform periodic 3D grid, real/complex field storage, and quadrature.
//
// Coordinates are centered on zero: x_i = (i - n/2) * dx. Wavenumbers use
// FFT ordering, k_m = 2*pi*m/(n*dx) with m in the signed half-range, so
// max |k| = pi/dx on each axis.
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "bfmix/common.hpp"

namespace bfmix {

struct Grid3D {
    int nx = 0, ny = 0, nz = 0;
    double dx = 0.0;
    std::vector<double> x, y, z;     // coordinates per axis
    std::vector<double> kx, ky, kz;  // wavenumbers per axis, FFT ordering

    std::size_t size() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    double cell_volume() const { return dx * dx * dx; }
    std::size_t index(int i, int j, int k) const {
        return (static_cast<std::size_t>(i) * static_cast<std::size_t>(ny) +
                static_cast<std::size_t>(j)) *
                   static_cast<std::size_t>(nz) +
               static_cast<std::size_t>(k);
    }
    bool same_shape(const Grid3D& o) const {
        return nx == o.nx && ny == o.ny && nz == o.nz && dx == o.dx;
    }
};

namespace detail {
inline std::vector<double> axis_coords(int n, double dx) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = (i - n / 2) * dx;
    return v;
}
inline std::vector<double> axis_wavenumbers(int n, double dx) {
    std::vector<double> v(static_cast<std::size_t>(n));
    const double dk = 2.0 * std::numbers::pi / (n * dx);
    for (int i = 0; i < n; ++i) {
        const int m = (i <= n / 2) ? i : i - n;
        v[static_cast<std::size_t>(i)] = m * dk;
    }
    return v;
}
inline void check_axis(int n) {
    if (n < 4) throw std::invalid_argument("grid axis must have at least 4 points");
    if (n % 2 != 0) throw std::invalid_argument("grid axis must be even");
}
}  // namespace detail

inline Grid3D make_grid(int nx, int ny, int nz, double dx) {
    detail::check_axis(nx);
    detail::check_axis(ny);
    detail::check_axis(nz);
    if (!(dx > 0.0)) throw std::invalid_argument("grid spacing must be positive");
    Grid3D g;
    g.nx = nx;
    g.ny = ny;
    g.nz = nz;
    g.dx = dx;
    g.x = detail::axis_coords(nx, dx);
    g.y = detail::axis_coords(ny, dx);
    g.z = detail::axis_coords(nz, dx);
    g.kx = detail::axis_wavenumbers(nx, dx);
    g.ky = detail::axis_wavenumbers(ny, dx);
    g.kz = detail::axis_wavenumbers(nz, dx);
    return g;
}

inline Grid3D make_grid(int n, double dx) { return make_grid(n, n, n, dx); }

// Densities and potentials are stored as plain doubles to halve memory;
// spectral transforms operate only on complex fields.
template <class T>
class Field3D {
  public:
    Field3D() = default;
    explicit Field3D(const Grid3D& g)
        : grid_(&g),
          values_(g.size(), T{}),
          tracked_(g.size() * sizeof(T)) {}

    const Grid3D& grid() const { return *grid_; }
    bool has_grid() const { return grid_ != nullptr; }
    std::size_t size() const { return values_.size(); }
    T* data() { return values_.data(); }
    const T* data() const { return values_.data(); }
    T& operator[](std::size_t i) { return values_[i]; }
    const T& operator[](std::size_t i) const { return values_[i]; }
    T& at(int i, int j, int k) { return values_[grid_->index(i, j, k)]; }
    const T& at(int i, int j, int k) const { return values_[grid_->index(i, j, k)]; }

  private:
    const Grid3D* grid_ = nullptr;
    std::vector<T> values_;
    TrackedBytes tracked_;
};

using RealField3D = Field3D<double>;
using ComplexField3D = Field3D<cplx>;

inline void require_same_grid(const Grid3D& a, const Grid3D& b) {
    if (&a != &b && !a.same_shape(b))
        throw std::invalid_argument("fields live on different grids");
}

// Riemann-sum quadrature with weight dx^3.
inline double integrate(const RealField3D& f) {
    const double dv = f.grid().cell_volume();
    return dv * parallel_sum(f.size(), [&](std::size_t i) { return f[i]; });
}

inline cplx integrate(const ComplexField3D& f) {
    const double dv = f.grid().cell_volume();
    const double re =
        parallel_sum(f.size(), [&](std::size_t i) { return f[i].real(); });
    const double im =
        parallel_sum(f.size(), [&](std::size_t i) { return f[i].imag(); });
    return {dv * re, dv * im};
}

inline double norm_squared(const ComplexField3D& f) {
    const double dv = f.grid().cell_volume();
    return dv * parallel_sum(f.size(), [&](std::size_t i) { return std::norm(f[i]); });
}

// Pointwise weight * |psi|^2; weight carries the particle-number convention
// (n_B = N_B |psi_B|^2 for a unit-norm condensate, weight 1 per orbital).
inline RealField3D density(const ComplexField3D& psi, double weight) {
    if (weight < 0.0) throw std::invalid_argument("density weight must be >= 0");
    RealField3D n(psi.grid());
    const std::size_t sz = psi.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i)
        n[static_cast<std::size_t>(i)] = weight * std::norm(psi[static_cast<std::size_t>(i)]);
    return n;
}

inline void add_density(RealField3D& n, const ComplexField3D& psi, double weight) {
    require_same_grid(n.grid(), psi.grid());
    const std::size_t sz = psi.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i)
        n[static_cast<std::size_t>(i)] += weight * std::norm(psi[static_cast<std::size_t>(i)]);
}

inline bool all_finite(const RealField3D& f) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i])) return false;
    return true;
}

inline bool all_finite(const ComplexField3D& f) {
    for (std::size_t i = 0; i < f.size(); ++i)
        if (!std::isfinite(f[i].real()) || !std::isfinite(f[i].imag())) return false;
    return true;
}

}  // namespace bfmix
