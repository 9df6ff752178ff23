// Lie-Trotter split-step propagation in real or imaginary time, the
// sine-squared coupling ramp, and renormalization.
#pragma once

#include "bfmix/fft.hpp"
#include "bfmix/orthonorm.hpp"
#include "bfmix/potentials.hpp"

namespace bfmix {

enum class TimeMode { real, imaginary };

struct StepConfig {
    double dt = 0.05;          // units m_B a_B^2 / hbar
    TimeMode mode = TimeMode::real;
    double mass = 1.0;         // 1 for bosons, 1/w for fermions

    StepConfig() = default;
    StepConfig(double dt_, TimeMode mode_, double mass_)
        : dt(dt_), mode(mode_), mass(mass_) {
        if (!(dt > 0.0)) throw std::invalid_argument("time step must be positive");
        if (!(mass > 0.0)) throw std::invalid_argument("mass must be positive");
    }
};

struct RampSchedule {
    double g_final = 0.0;  // target coupling
    double t_f = 1.0;      // ramp duration

    RampSchedule() = default;
    RampSchedule(double g_final_, double t_f_) : g_final(g_final_), t_f(t_f_) {
        if (!(t_f > 0.0)) throw std::invalid_argument("ramp duration must be positive");
    }
};

// g(t) = g_final * sin^2(pi t / (2 t_f)) for t <= t_f, g_final afterwards.
inline double ramp_value(double t, const RampSchedule& sched) {
    if (t < 0.0) throw std::invalid_argument("ramp time must be >= 0");
    if (t >= sched.t_f) return sched.g_final;
    const double s = std::sin(0.5 * std::numbers::pi * t / sched.t_f);
    return sched.g_final * s * s;
}

// One Lie-Trotter step: multiply by the potential factor in coordinate
// space, transform, multiply by the kinetic factor, transform back. In
// imaginary mode the unitary phases become real decay factors.
inline void split_step_inplace(ComplexField3D& psi, const RealField3D& v_eff,
                               const StepConfig& cfg) {
    require_same_grid(psi.grid(), v_eff.grid());
    if (!all_finite(v_eff)) throw std::invalid_argument("split_step: non-finite potential");
    const Grid3D& g = psi.grid();
    const std::size_t sz = psi.size();
    const bool imag = cfg.mode == TimeMode::imaginary;
    const double dt = cfg.dt;
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        if (imag)
            psi[ii] *= std::exp(-v_eff[ii] * dt);
        else
            psi[ii] *= std::polar(1.0, -v_eff[ii] * dt);
    }
    forward_transform_inplace(psi);
    const double kin = dt / (2.0 * cfg.mass);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t idx = 0; idx < static_cast<std::ptrdiff_t>(sz); ++idx) {
        const std::size_t ii = static_cast<std::size_t>(idx);
        const std::size_t k = ii % static_cast<std::size_t>(g.nz);
        const std::size_t j = (ii / static_cast<std::size_t>(g.nz)) % static_cast<std::size_t>(g.ny);
        const std::size_t i = ii / (static_cast<std::size_t>(g.nz) * static_cast<std::size_t>(g.ny));
        const double k2 = g.kx[i] * g.kx[i] + g.ky[j] * g.ky[j] + g.kz[k] * g.kz[k];
        if (imag)
            psi[ii] *= std::exp(-k2 * kin);
        else
            psi[ii] *= std::polar(1.0, -k2 * kin);
    }
    inverse_transform_inplace(psi);
}

inline ComplexField3D split_step(const ComplexField3D& psi, const RealField3D& v_eff,
                                 const StepConfig& cfg) {
    ComplexField3D out = psi;
    split_step_inplace(out, v_eff, cfg);
    return out;
}

inline void renormalize(ComplexField3D& psi, double target_norm = 1.0) {
    const double nrm = std::sqrt(norm_squared(psi));
    if (!(nrm > 0.0)) throw std::invalid_argument("renormalize: zero-norm field");
    const double scale = target_norm / nrm;
    const std::size_t sz = psi.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(sz); ++i)
        psi[static_cast<std::size_t>(i)] *= scale;
}

// Advances the full mixture by one step. Densities are frozen at their
// pre-step values so the per-step effective Hamiltonians are
// time-independent, as required by the diagonal split. In imaginary mode the
// condensate is renormalized and the orbitals are re-orthonormalized after
// the step.
inline void evolve_mixture_step(OrbitalSet& state, const MixtureParams& params,
                                const AFunctionTable& table, double dt, TimeMode mode) {
    RealField3D n_b = density(state.psi_b, params.n_bosons);
    RealField3D n_f(state.psi_b.grid());
    for (const auto& orb : state.fermions) add_density(n_f, orb, 1.0);
    const RealField3D v_b = effective_potential_boson(n_b, n_f, params, table);
    const RealField3D v_f = effective_potential_fermion(n_b, n_f, params, table);

    const StepConfig cfg_b(dt, mode, 1.0);
    const StepConfig cfg_f(dt, mode, params.m_F);
    split_step_inplace(state.psi_b, v_b, cfg_b);
    // The N_F orbital advances are independent; grid-level parallelism
    // lives inside split_step, which matters more on wide grids.
    for (auto& orb : state.fermions) split_step_inplace(orb, v_f, cfg_f);

    if (mode == TimeMode::imaginary) {
        renormalize(state.psi_b, 1.0);
        gram_schmidt_inplace(state.fermions);
        state.orthonormal_flag = true;
    } else {
        state.orthonormal_flag = false;
    }
}

}  // namespace bfmix
