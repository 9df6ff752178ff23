// Ground-state orchestrations (imaginary time + Gram-Schmidt, adiabatic
// real-time ramp, and the two oscillator-basis iterative eigensolvers),
// shared convergence machinery, and the trap-release evolution.
#pragma once

#include <chrono>
#include <functional>
#include <memory>

#include "bfmix/hobasis.hpp"
#include "bfmix/propagator.hpp"

namespace bfmix {

struct ConvergenceCriteria {
    double energy_tol = 1e-7;   // hbar^2/(m_B a_B^2)
    double density_tol = 1e-8;  // 1/a_B^3, max over the grid
    long window = 2000;         // time steps between checkpoints

    void validate() const {
        if (!(energy_tol > 0.0) || !(density_tol > 0.0) || window < 1)
            throw std::invalid_argument("invalid convergence criteria");
    }
};

enum class MethodKind { itp_itp_gs, a_rtp, itp_iev_1d, itp_iev_3d };

inline const char* method_name(MethodKind k) {
    switch (k) {
        case MethodKind::itp_itp_gs: return "ITP-ITP-GS";
        case MethodKind::a_rtp: return "A-RTP";
        case MethodKind::itp_iev_1d: return "ITP-IEV-1D";
        case MethodKind::itp_iev_3d: return "ITP-IEV-3D";
    }
    return "?";
}

struct TracePoint {
    long step = 0;
    double time = 0.0;
    EnergyBreakdown energy;
};

struct RunReport {
    MethodKind method = MethodKind::itp_itp_gs;
    EnergyBreakdown final_energy;
    long steps = 0;
    double wall_seconds = 0.0;
    std::size_t peak_memory_bytes = 0;
    std::vector<TracePoint> trace;
    OrbitalSet state;
    bool converged = false;
    // Fields reference a caller-owned grid; the runner parks its grid here so
    // the state outlives the call.
    std::shared_ptr<const Grid3D> grid_holder;
};

// Copies a field onto an equivalent grid owned by someone else.
inline ComplexField3D rebind_field(const ComplexField3D& f, const Grid3D& g) {
    if (!g.same_shape(f.grid()) || g.dx != f.grid().dx)
        throw std::invalid_argument("rebind_field: grid mismatch");
    ComplexField3D out(g);
    for (std::size_t i = 0; i < f.size(); ++i) out[i] = f[i];
    return out;
}

inline OrbitalSet rebind_state(const OrbitalSet& s, const Grid3D& g) {
    OrbitalSet out;
    out.psi_b = rebind_field(s.psi_b, g);
    out.fermions.reserve(s.fermions.size());
    for (const auto& orb : s.fermions) out.fermions.push_back(rebind_field(orb, g));
    out.orthonormal_flag = s.orthonormal_flag;
    return out;
}

// Hook invoked at every checkpoint window; used by the runner for trace
// CSV emission and checkpoint files.
using CheckpointHook = std::function<void(long step, const OrbitalSet&, const EnergyBreakdown&)>;

struct RunOptions {
    double dt = 0.05;
    long step_cap = 1'000'000;
    double t_f = 2e4;                       // A-RTP ramp duration
    int n_shell = 7;                        // IEV basis cutoff
    std::size_t memory_cap_bytes = 0;       // cached3d cap; 0 = no cap
    int iev_max_iter = 500;
    int outer_max_iter = 200;
    CheckpointHook on_checkpoint;
    const OrbitalSet* initial_state = nullptr;  // resume support
    long start_step = 0;
};

// --- shared helpers ---------------------------------------------------

inline ComplexField3D gaussian_seed(const Grid3D& g, double sigma) {
    ComplexField3D psi(g);
    const std::size_t sz = psi.size();
    for (std::size_t i = 0; i < sz; ++i)
        psi[i] = std::exp(-0.5 * detail::radius_squared(g, i) / (sigma * sigma));
    renormalize(psi, 1.0);
    return psi;
}

// Lowest N_F oscillator-shell orbitals of the fermionic trap, orthonormalized
// on the grid.
inline std::vector<ComplexField3D> oscillator_shell_orbitals(const Grid3D& g,
                                                             const MixtureParams& p) {
    int n_shell = 0;
    while (ShellBasis3D::shell_size(n_shell) < static_cast<std::size_t>(p.n_fermions))
        ++n_shell;
    const ShellBasis3D basis =
        build_basis(g, p.omega_F, p.m_F, n_shell, BasisStorage::onthefly1d);
    std::vector<ComplexField3D> orbitals;
    orbitals.reserve(static_cast<std::size_t>(p.n_fermions));
    for (int j = 0; j < p.n_fermions; ++j) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(basis.size()));
        c(j) = 1.0;
        orbitals.push_back(basis.synthesize(c));
    }
    gram_schmidt_inplace(orbitals);
    return orbitals;
}

inline double max_abs_difference(const RealField3D& a, const RealField3D& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Largest boundary-face density relative to the peak; used to detect a box
// that is too small.
inline double boundary_to_peak_ratio(const RealField3D& n) {
    const Grid3D& g = n.grid();
    double peak = 0.0;
    for (std::size_t i = 0; i < n.size(); ++i) peak = std::max(peak, n[i]);
    if (peak <= 0.0) return 0.0;
    double edge = 0.0;
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.nz; ++k) {
                if (i != 0 && j != 0 && k != 0) continue;
                edge = std::max(edge, n[g.index(i, j, k)]);
            }
    return edge / peak;
}

inline void warn_if_box_small(const OrbitalSet& state, const MixtureParams& p) {
    RealField3D n_b = density(state.psi_b, p.n_bosons);
    RealField3D n_f(state.psi_b.grid());
    for (const auto& orb : state.fermions) add_density(n_f, orb, 1.0);
    const double rb = boundary_to_peak_ratio(n_b);
    const double rf = boundary_to_peak_ratio(n_f);
    if (rb > 1e-12 || rf > 1e-12)
        std::fprintf(stderr,
                     "bfmix: boundary density is %.2e (bosons) / %.2e (fermions) of the "
                     "peak; the box may be too small\n",
                     rb, rf);
}

// Boson-only imaginary-time relaxation from a Gaussian seed (the common
// initial condensate for every method).
inline ComplexField3D boson_ground_state(const Grid3D& g, const MixtureParams& params,
                                         const AFunctionTable& table,
                                         const ConvergenceCriteria& criteria, double dt,
                                         long step_cap = 1'000'000) {
    const MixtureParams p0 = params.with_g_bf(0.0);
    ComplexField3D psi = gaussian_seed(g, 1.0 / std::sqrt(params.omega_B));
    const RealField3D n_zero(g);
    const StepConfig cfg(dt, TimeMode::imaginary, 1.0);
    double prev = 0.0;
    bool have_prev = false;
    for (long step = 0; step < step_cap; step += criteria.window) {
        for (long s = 0; s < criteria.window; ++s) {
            const RealField3D n_b = density(psi, p0.n_bosons);
            const RealField3D v = effective_potential_boson(n_b, n_zero, p0, table);
            split_step_inplace(psi, v, cfg);
            renormalize(psi, 1.0);
        }
        const EnergyBreakdown e = total_energy(psi, {}, p0, table);
        if (have_prev && std::abs(e.total - prev) < criteria.energy_tol) return psi;
        prev = e.total;
        have_prev = true;
    }
    throw std::runtime_error("boson_ground_state: step cap exceeded");
}

namespace detail {

class StopWatch {
  public:
    StopWatch() : start_(std::chrono::steady_clock::now()) {}
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

inline void fill_report_footer(RunReport& rep, const StopWatch& watch,
                               std::size_t peak_before) {
    rep.wall_seconds = watch.seconds();
    const std::size_t peak = MemoryAccountant::instance().peak();
    rep.peak_memory_bytes = peak > peak_before ? peak : peak_before;
}

}  // namespace detail

// --- ITP-ITP-GS --------------------------------------------------------

inline RunReport run_itp_itp_gs(const Grid3D& g, const MixtureParams& params,
                                const AFunctionTable& table,
                                const ConvergenceCriteria& criteria,
                                const RunOptions& opts = {}) {
    criteria.validate();
    detail::StopWatch watch;
    const std::size_t peak0 = MemoryAccountant::instance().peak();
    RunReport rep;
    rep.method = MethodKind::itp_itp_gs;

    OrbitalSet state;
    if (opts.initial_state) {
        state = *opts.initial_state;
    } else {
        state.psi_b = boson_ground_state(g, params, table, criteria, opts.dt, opts.step_cap);
        state.fermions = oscillator_shell_orbitals(g, params);
    }
    warn_if_box_small(state, params);

    RealField3D n_b_prev = density(state.psi_b, params.n_bosons);
    RealField3D n_f_prev(g);
    for (const auto& orb : state.fermions) add_density(n_f_prev, orb, 1.0);
    double prev_energy = total_energy(state.psi_b, state.fermions, params, table).total;

    for (long step = opts.start_step; step < opts.step_cap; step += criteria.window) {
        for (long s = 0; s < criteria.window; ++s)
            evolve_mixture_step(state, params, table, opts.dt, TimeMode::imaginary);
        const long done = step + criteria.window;
        const EnergyBreakdown e = total_energy(state.psi_b, state.fermions, params, table);
        RealField3D n_b = density(state.psi_b, params.n_bosons);
        RealField3D n_f(g);
        for (const auto& orb : state.fermions) add_density(n_f, orb, 1.0);
        const double dn = std::max(max_abs_difference(n_b, n_b_prev),
                                   max_abs_difference(n_f, n_f_prev));
        rep.trace.push_back({done, done * opts.dt, e});
        if (opts.on_checkpoint) opts.on_checkpoint(done, state, e);
        if (std::abs(e.total - prev_energy) < criteria.energy_tol &&
            dn < criteria.density_tol) {
            rep.final_energy = e;
            rep.steps = done;
            rep.converged = true;
            rep.state = std::move(state);
            detail::fill_report_footer(rep, watch, peak0);
            return rep;
        }
        prev_energy = e.total;
        n_b_prev = std::move(n_b);
        n_f_prev = std::move(n_f);
    }
    throw std::runtime_error("run_itp_itp_gs: step cap exceeded before convergence");
}

// --- A-RTP --------------------------------------------------------------

inline RunReport run_a_rtp(const Grid3D& g, const MixtureParams& params,
                           const AFunctionTable& table,
                           const ConvergenceCriteria& criteria,
                           const RunOptions& opts = {}) {
    criteria.validate();
    if (!(opts.t_f > 0.0)) throw std::invalid_argument("a_rtp: ramp duration must be positive");
    detail::StopWatch watch;
    const std::size_t peak0 = MemoryAccountant::instance().peak();
    RunReport rep;
    rep.method = MethodKind::a_rtp;

    OrbitalSet state;
    if (opts.initial_state) {
        state = *opts.initial_state;
    } else {
        state.psi_b = boson_ground_state(g, params, table, criteria, 0.05, opts.step_cap);
        state.fermions = oscillator_shell_orbitals(g, params);
        gram_schmidt_inplace(state.fermions);
    }
    warn_if_box_small(state, params);

    const RampSchedule sched(params.g_BF, opts.t_f);
    double prev_energy = 0.0;
    bool post_ramp_baseline_set = false;
    double post_ramp_baseline = 0.0;
    bool have_prev = false;

    for (long step = opts.start_step; step < opts.step_cap; step += criteria.window) {
        for (long s = 0; s < criteria.window; ++s) {
            const double t = (step + s) * opts.dt;
            const MixtureParams p_t = params.with_g_bf(ramp_value(t, sched));
            evolve_mixture_step(state, p_t, table, opts.dt, TimeMode::real);
        }
        const long done = step + criteria.window;
        const double t_now = done * opts.dt;
        const MixtureParams p_now = params.with_g_bf(ramp_value(t_now, sched));
        const EnergyBreakdown e = total_energy(state.psi_b, state.fermions, p_now, table);
        rep.trace.push_back({done, t_now, e});
        if (opts.on_checkpoint) opts.on_checkpoint(done, state, e);
        if (t_now >= sched.t_f) {
            if (!post_ramp_baseline_set) {
                post_ramp_baseline = e.total;
                post_ramp_baseline_set = true;
            } else if (e.total > post_ramp_baseline + 0.1 * std::abs(post_ramp_baseline)) {
                throw std::runtime_error(
                    "run_a_rtp: instability detected (energy grew >10% after the ramp)");
            }
            if (have_prev && std::abs(e.total - prev_energy) < criteria.energy_tol) {
                rep.final_energy = e;
                rep.steps = done;
                rep.converged = true;
                rep.state = std::move(state);
                detail::fill_report_footer(rep, watch, peak0);
                return rep;
            }
            prev_energy = e.total;
            have_prev = true;
        }
    }
    throw std::runtime_error("run_a_rtp: step cap exceeded before convergence");
}

// --- ITP-IEV ------------------------------------------------------------

// Bosonic imaginary-time relaxation at frozen fermionic density; converges
// on the boson-sector energy (kinetic + trap + Bose-Bose + LHY + coupling
// to the frozen n_F) with the same window rule as the global criterion.
inline double bosonic_itp_block(ComplexField3D& psi_b, const RealField3D& n_f,
                                const MixtureParams& params, const AFunctionTable& table,
                                const ConvergenceCriteria& criteria, double dt,
                                long step_cap, long* steps_done) {
    const StepConfig cfg(dt, TimeMode::imaginary, 1.0);
    double prev = 0.0;
    bool have_prev = false;
    for (long step = 0; step < step_cap; step += criteria.window) {
        for (long s = 0; s < criteria.window; ++s) {
            const RealField3D n_b = density(psi_b, params.n_bosons);
            const RealField3D v = effective_potential_boson(n_b, n_f, params, table);
            split_step_inplace(psi_b, v, cfg);
            renormalize(psi_b, 1.0);
        }
        if (steps_done) *steps_done += criteria.window;
        const RealField3D n_b = density(psi_b, params.n_bosons);
        EnergyBreakdown pot = potential_energy_terms(n_b, n_f, params, table);
        const double e = kinetic_energy(psi_b, 1.0, params.n_bosons) + pot.trap_B +
                         pot.mean_field_BB + pot.lhy + pot.mean_field_BF +
                         pot.higher_order_BF;
        if (have_prev && std::abs(e - prev) < criteria.energy_tol) return e;
        prev = e;
        have_prev = true;
    }
    throw std::runtime_error("bosonic_itp_block: step cap exceeded");
}

inline RunReport run_itp_iev(const Grid3D& g, const MixtureParams& params,
                             const AFunctionTable& table,
                             const ConvergenceCriteria& criteria, BasisStorage storage,
                             const RunOptions& opts = {}) {
    criteria.validate();
    detail::StopWatch watch;
    const std::size_t peak0 = MemoryAccountant::instance().peak();
    RunReport rep;
    rep.method = storage == BasisStorage::cached3d ? MethodKind::itp_iev_3d
                                                   : MethodKind::itp_iev_1d;

    const ShellBasis3D basis =
        build_basis(g, params.omega_F, params.m_F, opts.n_shell, storage,
                    opts.memory_cap_bytes);

    OrbitalSet state;
    if (opts.initial_state) {
        state = *opts.initial_state;
    } else {
        state.psi_b = boson_ground_state(g, params, table, criteria, opts.dt, opts.step_cap);
        state.fermions = oscillator_shell_orbitals(g, params);
    }

    long steps = 0;
    double prev_total = total_energy(state.psi_b, state.fermions, params, table).total;
    for (int outer = 1; outer <= opts.outer_max_iter; ++outer) {
        // (a) IEV for fermions at frozen n_B
        const RealField3D n_b = density(state.psi_b, params.n_bosons);
        IevResult iev = iev_fermion_loop(n_b, params, table, basis, criteria.energy_tol,
                                         opts.iev_max_iter);
        state.fermions = std::move(iev.orbitals);
        // (b) bosonic ITP at the frozen degeneracy-averaged n_F
        bosonic_itp_block(state.psi_b, iev.density, params, table, criteria, opts.dt,
                          opts.step_cap, &steps);
        // (c) outer total-energy check, bookkept with the same averaged n_F
        const RealField3D n_b_new = density(state.psi_b, params.n_bosons);
        EnergyBreakdown e = potential_energy_terms(n_b_new, iev.density, params, table);
        e.kinetic_B = kinetic_energy(state.psi_b, 1.0, params.n_bosons);
        e.kinetic_F = iev.kinetic;
        e.total = e.sum_components();
        rep.trace.push_back({steps, steps * opts.dt, e});
        if (opts.on_checkpoint) opts.on_checkpoint(steps, state, e);
        if (outer > 1 && std::abs(e.total - prev_total) < criteria.energy_tol) {
            rep.final_energy = e;
            rep.steps = steps;
            rep.converged = true;
            rep.state = std::move(state);
            detail::fill_report_footer(rep, watch, peak0);
            return rep;
        }
        prev_total = e.total;
    }
    throw std::runtime_error("run_itp_iev: outer iteration cap exceeded");
}

inline RunReport run_method(MethodKind kind, const Grid3D& g, const MixtureParams& params,
                            const AFunctionTable& table, const ConvergenceCriteria& criteria,
                            const RunOptions& opts = {}) {
    switch (kind) {
        case MethodKind::itp_itp_gs: return run_itp_itp_gs(g, params, table, criteria, opts);
        case MethodKind::a_rtp: return run_a_rtp(g, params, table, criteria, opts);
        case MethodKind::itp_iev_1d:
            return run_itp_iev(g, params, table, criteria, BasisStorage::onthefly1d, opts);
        case MethodKind::itp_iev_3d:
            return run_itp_iev(g, params, table, criteria, BasisStorage::cached3d, opts);
    }
    throw std::invalid_argument("unknown method");
}

// --- observables and trap release ----------------------------------------

struct RadialProfile {
    std::vector<double> r;        // bin centers, width dx
    std::vector<double> value;    // shell-averaged density
};

struct Observables {
    double rms_radius_B = 0.0;
    double rms_radius_F = 0.0;
    double peak_density_B = 0.0;
    double peak_density_F = 0.0;
    RadialProfile profile_B;
    RadialProfile profile_F;
};

inline double rms_radius(const RealField3D& n) {
    const Grid3D& g = n.grid();
    const double num = parallel_sum(g.size(), [&](std::size_t i) {
        return detail::radius_squared(g, i) * n[i];
    });
    const double den = parallel_sum(g.size(), [&](std::size_t i) { return n[i]; });
    return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

inline RadialProfile radial_profile(const RealField3D& n) {
    const Grid3D& g = n.grid();
    const double rmax = std::sqrt(detail::radius_squared(g, 0));
    const std::size_t bins = static_cast<std::size_t>(rmax / g.dx) + 1;
    RadialProfile prof;
    prof.r.resize(bins);
    prof.value.assign(bins, 0.0);
    std::vector<std::size_t> counts(bins, 0);
    for (std::size_t i = 0; i < n.size(); ++i) {
        const double r = std::sqrt(detail::radius_squared(g, i));
        const std::size_t b = std::min(static_cast<std::size_t>(r / g.dx), bins - 1);
        prof.value[b] += n[i];
        counts[b] += 1;
    }
    for (std::size_t b = 0; b < bins; ++b) {
        prof.r[b] = (b + 0.5) * g.dx;
        if (counts[b]) prof.value[b] /= static_cast<double>(counts[b]);
    }
    return prof;
}

inline Observables observables(const OrbitalSet& state, const MixtureParams& params) {
    Observables obs;
    RealField3D n_b = density(state.psi_b, params.n_bosons);
    RealField3D n_f(state.psi_b.grid());
    for (const auto& orb : state.fermions) add_density(n_f, orb, 1.0);
    obs.rms_radius_B = rms_radius(n_b);
    obs.rms_radius_F = rms_radius(n_f);
    for (std::size_t i = 0; i < n_b.size(); ++i) {
        obs.peak_density_B = std::max(obs.peak_density_B, n_b[i]);
        obs.peak_density_F = std::max(obs.peak_density_F, n_f[i]);
    }
    obs.profile_B = radial_profile(n_b);
    obs.profile_F = radial_profile(n_f);
    return obs;
}

struct ReleaseSnapshot {
    long step = 0;
    double time = 0.0;
    Observables obs;
};

using SnapshotHook = std::function<void(const ReleaseSnapshot&, const OrbitalSet&)>;

// Switches the trap off and evolves in real time, recording observables at
// the given cadence. Aborts when densities reach the box boundary.
inline std::vector<ReleaseSnapshot> release_trap_and_evolve(
    OrbitalSet state, const MixtureParams& params, const AFunctionTable& table,
    double duration, double dt, long snapshot_every = 200,
    const SnapshotHook& hook = {}, double boundary_abort_ratio = 1e-6) {
    MixtureParams p = params;
    p.trap_on = false;
    const long nsteps = static_cast<long>(std::llround(duration / dt));
    std::vector<ReleaseSnapshot> series;
    ReleaseSnapshot first{0, 0.0, observables(state, p)};
    if (hook) hook(first, state);
    series.push_back(std::move(first));
    for (long step = 1; step <= nsteps; ++step) {
        evolve_mixture_step(state, p, table, dt, TimeMode::real);
        if (step % snapshot_every == 0 || step == nsteps) {
            ReleaseSnapshot snap{step, step * dt, observables(state, p)};
            RealField3D n_b = density(state.psi_b, p.n_bosons);
            RealField3D n_f(state.psi_b.grid());
            for (const auto& orb : state.fermions) add_density(n_f, orb, 1.0);
            const double ratio = std::max(boundary_to_peak_ratio(n_b),
                                          boundary_to_peak_ratio(n_f));
            if (ratio > boundary_abort_ratio) {
                std::ostringstream msg;
                msg << "release_trap_and_evolve: boundary density reached " << ratio
                    << " of the peak at t=" << step * dt << "; the box is too small "
                    << "for the expansion";
                throw std::runtime_error(msg.str());
            }
            if (hook) hook(snap, state);
            series.push_back(std::move(snap));
        }
    }
    return series;
}

}  // namespace bfmix
