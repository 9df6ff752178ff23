// Modified Gram-Schmidt orthonormalization of the fermionic orbital set.
#pragma once

#include <sstream>

#include "bfmix/grid.hpp"

namespace bfmix {

// Condensate plus the ordered fermionic orbitals; orbital index j is stable
// across steps.
struct OrbitalSet {
    ComplexField3D psi_b;
    std::vector<ComplexField3D> fermions;
    bool orthonormal_flag = false;
};

inline cplx inner_product(const ComplexField3D& a, const ComplexField3D& b) {
    require_same_grid(a.grid(), b.grid());
    const double dv = a.grid().cell_volume();
    const double re = parallel_sum(a.size(), [&](std::size_t i) {
        return a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    });
    const double im = parallel_sum(a.size(), [&](std::size_t i) {
        return a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
    });
    return {dv * re, dv * im};
}

namespace detail {
inline void axpy(ComplexField3D& y, cplx a, const ComplexField3D& x) {
    const std::size_t sz = y.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i)
        y[static_cast<std::size_t>(i)] += a * x[static_cast<std::size_t>(i)];
}
inline void scale(ComplexField3D& y, double a) {
    const std::size_t sz = y.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i)
        y[static_cast<std::size_t>(i)] *= a;
}
}  // namespace detail

// Modified Gram-Schmidt: each orbital is re-projected sequentially against
// the already-orthonormalized ones, which is stable at 1e-12 tolerances.
// The first orbital changes only by normalization. Throws when an orbital
// collapses below 1e-10 of its pre-projection norm (linear dependence).
inline void gram_schmidt_inplace(std::vector<ComplexField3D>& fields) {
    if (fields.empty()) throw std::invalid_argument("gram_schmidt: empty set");
    for (std::size_t j = 0; j < fields.size(); ++j) {
        const double pre = std::sqrt(norm_squared(fields[j]));
        if (!(pre > 0.0)) throw std::invalid_argument("gram_schmidt: zero-norm input");
        for (std::size_t i = 0; i < j; ++i) {
            const cplx overlap = inner_product(fields[i], fields[j]);
            detail::axpy(fields[j], -overlap, fields[i]);
        }
        const double post = std::sqrt(norm_squared(fields[j]));
        if (post < 1e-10 * pre) {
            std::ostringstream msg;
            msg << "gram_schmidt: linear dependence at orbital index " << j + 1
                << " (norm ratio " << post / pre << ")";
            throw std::runtime_error(msg.str());
        }
        detail::scale(fields[j], 1.0 / post);
    }
}

inline std::vector<ComplexField3D> gram_schmidt(const std::vector<ComplexField3D>& fields) {
    std::vector<ComplexField3D> out = fields;
    gram_schmidt_inplace(out);
    return out;
}

}  // namespace bfmix
