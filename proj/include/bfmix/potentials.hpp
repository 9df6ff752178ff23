// Effective potentials and the total-energy functional.
//
// The boson equation bracket (minus the kinetic term) is
//   V_B = V_ext^B + g_B n_B + (5/2) C_LHY n_B^{3/2} + g_BF n_F
//         + C_BF n_F^{4/3} [ A(alpha) + alpha A'(alpha) ]
// using dalpha/dn_B = alpha/n_B. The fermion bracket is
//   V_F = V_ext^F + g_BF n_B + C_BF n_B n_F^{1/3} [ (4/3) A(alpha) - (2/3) alpha A'(alpha) ]
// using dalpha/dn_F = -(2/3) alpha/n_F. Both follow from
//   alpha = 16 pi n_B / (6 pi^2 n_F)^{2/3}      (code units, a_B = 1).
#pragma once

#include <numbers>

#include "bfmix/afun.hpp"
#include "bfmix/fft.hpp"
#include "bfmix/grid.hpp"
#include "bfmix/params.hpp"

namespace bfmix {

inline double alpha_point(double n_b, double n_f) {
    const double nf = std::max(n_f, kDensityFloor);
    return 16.0 * std::numbers::pi * n_b /
           std::pow(6.0 * std::numbers::pi * std::numbers::pi * nf, 2.0 / 3.0);
}

// Pointwise alpha; n_F is floored at kDensityFloor inside the 2/3 power.
inline RealField3D alpha_of_densities(const RealField3D& n_b, const RealField3D& n_f) {
    require_same_grid(n_b.grid(), n_f.grid());
    RealField3D alpha(n_b.grid());
    const std::size_t sz = alpha.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        alpha[ii] = alpha_point(n_b[ii], n_f[ii]);
    }
    return alpha;
}

namespace detail {
// r^2 at a grid point.
inline double radius_squared(const Grid3D& g, std::size_t idx) {
    const std::size_t k = idx % static_cast<std::size_t>(g.nz);
    const std::size_t j = (idx / static_cast<std::size_t>(g.nz)) % static_cast<std::size_t>(g.ny);
    const std::size_t i = idx / (static_cast<std::size_t>(g.nz) * static_cast<std::size_t>(g.ny));
    return g.x[i] * g.x[i] + g.y[j] * g.y[j] + g.z[k] * g.z[k];
}
}  // namespace detail

inline RealField3D effective_potential_boson(const RealField3D& n_b,
                                             const RealField3D& n_f,
                                             const MixtureParams& p,
                                             const AFunctionTable& table) {
    require_same_grid(n_b.grid(), n_f.grid());
    const Grid3D& g = n_b.grid();
    RealField3D v(g);
    const std::size_t sz = v.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double nb = std::max(n_b[ii], 0.0);
        const double nf = std::max(n_f[ii], 0.0);
        const double nf_fl = std::max(nf, kDensityFloor);
        const double alpha = alpha_point(nb, nf);
        double val = p.trap_boson(detail::radius_squared(g, ii));
        val += p.g_B * nb + 2.5 * p.c_lhy * nb * std::sqrt(nb);
        val += p.g_BF * nf;
        if (p.c_bf != 0.0) {
            const double nf43 = std::pow(nf_fl, 4.0 / 3.0);
            val += p.c_bf * nf43 * (table.value(alpha) + alpha * table.derivative(alpha));
        }
        v[ii] = val;
    }
    return v;
}

inline RealField3D effective_potential_fermion(const RealField3D& n_b,
                                               const RealField3D& n_f,
                                               const MixtureParams& p,
                                               const AFunctionTable& table) {
    require_same_grid(n_b.grid(), n_f.grid());
    const Grid3D& g = n_b.grid();
    RealField3D v(g);
    const std::size_t sz = v.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        const double nb = std::max(n_b[ii], 0.0);
        const double nf = std::max(n_f[ii], 0.0);
        const double nf_fl = std::max(nf, kDensityFloor);
        const double alpha = alpha_point(nb, nf);
        double val = p.trap_fermion(detail::radius_squared(g, ii));
        val += p.g_BF * nb;
        if (p.c_bf != 0.0 && nb > 0.0) {
            const double nf13 = std::cbrt(nf_fl);
            val += p.c_bf * nb * nf13 *
                   ((4.0 / 3.0) * table.value(alpha) -
                    (2.0 / 3.0) * alpha * table.derivative(alpha));
        }
        v[ii] = val;
    }
    return v;
}

// Energies in units of hbar^2/(m_B a_B^2).
struct EnergyBreakdown {
    double kinetic_B = 0.0;
    double kinetic_F = 0.0;
    double trap_B = 0.0;
    double trap_F = 0.0;
    double mean_field_BB = 0.0;
    double lhy = 0.0;
    double mean_field_BF = 0.0;
    double higher_order_BF = 0.0;
    double total = 0.0;

    double sum_components() const {
        return kinetic_B + kinetic_F + trap_B + trap_F + mean_field_BB + lhy +
               mean_field_BF + higher_order_BF;
    }
};

// Interaction + trap part of the energy as a functional of the densities
// alone; shared by total_energy and by the functional-derivative checks.
inline EnergyBreakdown potential_energy_terms(const RealField3D& n_b,
                                              const RealField3D& n_f,
                                              const MixtureParams& p,
                                              const AFunctionTable& table) {
    require_same_grid(n_b.grid(), n_f.grid());
    const Grid3D& g = n_b.grid();
    const double dv = g.cell_volume();
    EnergyBreakdown e;
    e.trap_B = dv * parallel_sum(g.size(), [&](std::size_t i) {
        return p.trap_boson(detail::radius_squared(g, i)) * n_b[i];
    });
    e.trap_F = dv * parallel_sum(g.size(), [&](std::size_t i) {
        return p.trap_fermion(detail::radius_squared(g, i)) * n_f[i];
    });
    e.mean_field_BB = dv * parallel_sum(g.size(), [&](std::size_t i) {
        return 0.5 * p.g_B * n_b[i] * n_b[i];
    });
    e.lhy = dv * parallel_sum(g.size(), [&](std::size_t i) {
        const double nb = std::max(n_b[i], 0.0);
        return p.c_lhy * nb * nb * std::sqrt(nb);
    });
    e.mean_field_BF = dv * parallel_sum(g.size(), [&](std::size_t i) {
        return p.g_BF * n_b[i] * n_f[i];
    });
    if (p.c_bf != 0.0) {
        e.higher_order_BF = dv * parallel_sum(g.size(), [&](std::size_t i) {
            const double nb = std::max(n_b[i], 0.0);
            const double nf = std::max(n_f[i], kDensityFloor);
            if (nb == 0.0) return 0.0;
            return p.c_bf * nb * std::pow(nf, 4.0 / 3.0) *
                   table.value(alpha_point(nb, nf));
        });
    }
    return e;
}

inline double kinetic_energy(const ComplexField3D& psi, double mass, double weight) {
    if (!all_finite(psi)) throw std::invalid_argument("kinetic_energy: non-finite field");
    return weight *
           spectral_quadratic_form(psi, [mass](double k2) { return k2 / (2.0 * mass); });
}

// Full energy functional; psi_b and each orbital must be unit-normalized.
inline EnergyBreakdown total_energy(const ComplexField3D& psi_b,
                                    const std::vector<ComplexField3D>& orbitals,
                                    const MixtureParams& p,
                                    const AFunctionTable& table) {
    RealField3D n_b = density(psi_b, p.n_bosons);
    RealField3D n_f(psi_b.grid());
    for (const auto& orb : orbitals) add_density(n_f, orb, 1.0);
    EnergyBreakdown e = potential_energy_terms(n_b, n_f, p, table);
    e.kinetic_B = kinetic_energy(psi_b, 1.0, p.n_bosons);
    for (const auto& orb : orbitals) e.kinetic_F += kinetic_energy(orb, p.m_F, 1.0);
    e.total = e.sum_components();
    return e;
}

}  // namespace bfmix
