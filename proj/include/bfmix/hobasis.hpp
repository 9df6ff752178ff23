// Harmonic-oscillator eigenbasis, Hamiltonian assembly in that basis, dense
// symmetric eigensolve, and the self-consistent iterative eigenvalue loop
// for the fermionic sector.
//
// Two storage strategies: cached3d keeps every 3D basis function on the grid
// (fast, memory-hungry); onthefly1d stores only the three 1D tables and
// multiplies them per grid point when needed. Both evaluate the same
// floating-point expression in the same order, so they produce identical
// Hamiltonians.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "bfmix/potentials.hpp"

namespace bfmix {

// Normalized oscillator eigenfunctions sampled on one grid axis, generated
// by the stable three-term recurrence (never raw Hermite polynomials, so
// there is no overflow up to n_max ~ 64 and beyond).
class HermiteBasis1D {
  public:
    HermiteBasis1D() = default;
    HermiteBasis1D(double omega, double mass, int n_max, const std::vector<double>& axis)
        : omega_(omega), mass_(mass), n_max_(n_max), npts_(axis.size()) {
        if (n_max < 0) throw std::invalid_argument("n_max must be >= 0");
        values_.resize(static_cast<std::size_t>(n_max + 1) * npts_);
        const double mw = mass * omega;
        const double norm0 = std::pow(mw / std::numbers::pi, 0.25);
        for (std::size_t i = 0; i < npts_; ++i) {
            const double u = std::sqrt(mw) * axis[i];
            double prev = 0.0;
            double cur = norm0 * std::exp(-0.5 * u * u);
            value(0, i) = cur;
            for (int n = 0; n < n_max; ++n) {
                const double next = std::sqrt(2.0 / (n + 1)) * u * cur -
                                    std::sqrt(static_cast<double>(n) / (n + 1)) * prev;
                prev = cur;
                cur = next;
                value(n + 1, i) = cur;
            }
        }
    }

    double omega() const { return omega_; }
    double mass() const { return mass_; }
    int n_max() const { return n_max_; }
    double& value(int n, std::size_t i) {
        return values_[static_cast<std::size_t>(n) * npts_ + i];
    }
    double value(int n, std::size_t i) const {
        return values_[static_cast<std::size_t>(n) * npts_ + i];
    }

  private:
    double omega_ = 1.0, mass_ = 1.0;
    int n_max_ = 0;
    std::size_t npts_ = 0;
    std::vector<double> values_;
};

enum class BasisStorage { cached3d, onthefly1d };

struct ShellState {
    int nx, ny, nz;
};

// Shell-truncated 3D basis: all (n_x, n_y, n_z) with n_x+n_y+n_z <= N_shell,
// ordered by nondecreasing shell, then lexicographically. The size is the
// tetrahedral number (N+1)(N+2)(N+3)/6.
class ShellBasis3D {
  public:
    static std::size_t shell_size(int n_shell) {
        const std::size_t n = static_cast<std::size_t>(n_shell);
        return (n + 1) * (n + 2) * (n + 3) / 6;
    }

    ShellBasis3D() = default;

    int n_shell() const { return n_shell_; }
    std::size_t size() const { return states_.size(); }
    BasisStorage storage() const { return storage_; }
    const std::vector<ShellState>& states() const { return states_; }
    double oscillator_energy(std::size_t a) const {
        const auto& s = states_[a];
        return omega_ * (s.nx + s.ny + s.nz + 1.5);
    }
    const Grid3D& grid() const { return *grid_; }
    std::size_t cached_bytes() const {
        return storage_ == BasisStorage::cached3d
                   ? size() * grid_->size() * sizeof(double)
                   : 0;
    }

    // Basis function value at a grid point; identical expression for both
    // storage strategies.
    double value(std::size_t a, std::size_t idx) const {
        if (storage_ == BasisStorage::cached3d) return cached_[a][idx];
        return value_otf(a, idx);
    }

    ComplexField3D synthesize(const Eigen::VectorXd& coeffs) const {
        ComplexField3D out(*grid_);
        const std::size_t npts = grid_->size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(npts); ++i) {
            const std::size_t ii = static_cast<std::size_t>(i);
            double s = 0.0;
            for (std::size_t a = 0; a < size(); ++a) s += coeffs[static_cast<Eigen::Index>(a)] * value(a, ii);
            out[ii] = s;
        }
        return out;
    }

    friend ShellBasis3D build_basis(const Grid3D&, double, double, int, BasisStorage,
                                    std::size_t);

  private:
    double value_otf(std::size_t a, std::size_t idx) const {
        const Grid3D& g = *grid_;
        const std::size_t k = idx % static_cast<std::size_t>(g.nz);
        const std::size_t j = (idx / static_cast<std::size_t>(g.nz)) % static_cast<std::size_t>(g.ny);
        const std::size_t i = idx / (static_cast<std::size_t>(g.nz) * static_cast<std::size_t>(g.ny));
        const auto& s = states_[a];
        return bx_.value(s.nx, i) * (by_.value(s.ny, j) * bz_.value(s.nz, k));
    }

    const Grid3D* grid_ = nullptr;
    int n_shell_ = 0;
    double omega_ = 1.0;
    BasisStorage storage_ = BasisStorage::onthefly1d;
    std::vector<ShellState> states_;
    HermiteBasis1D bx_, by_, bz_;
    std::vector<RealField3D> cached_;
};

inline ShellBasis3D build_basis(const Grid3D& grid, double omega_f, double mass,
                                int n_shell, BasisStorage storage,
                                std::size_t memory_cap_bytes = 0) {
    if (n_shell < 0) throw std::invalid_argument("N_shell must be >= 0");
    ShellBasis3D b;
    b.grid_ = &grid;
    b.n_shell_ = n_shell;
    b.omega_ = omega_f;
    b.storage_ = storage;
    for (int shell = 0; shell <= n_shell; ++shell)
        for (int nx = 0; nx <= shell; ++nx)
            for (int ny = 0; ny <= shell - nx; ++ny)
                b.states_.push_back({nx, ny, shell - nx - ny});
    b.bx_ = HermiteBasis1D(omega_f, mass, n_shell, grid.x);
    b.by_ = HermiteBasis1D(omega_f, mass, n_shell, grid.y);
    b.bz_ = HermiteBasis1D(omega_f, mass, n_shell, grid.z);

    // The highest state oscillates with local wavelength 2*pi*l/sqrt(2n+3);
    // warn when the grid cannot put ~4 points on a lobe.
    const double osc_len = 1.0 / std::sqrt(mass * omega_f);
    const double lobe = std::numbers::pi * osc_len / std::sqrt(2.0 * n_shell + 3.0);
    if (grid.dx > lobe)
        std::fprintf(stderr,
                     "bfmix: grid spacing %g coarser than half-lobe %g of the highest "
                     "oscillator state (N_shell=%d); basis may be under-resolved\n",
                     grid.dx, lobe, n_shell);

    if (storage == BasisStorage::cached3d) {
        const std::size_t bytes = b.states_.size() * grid.size() * sizeof(double);
        if (memory_cap_bytes > 0 && bytes > memory_cap_bytes) {
            std::ostringstream msg;
            msg << "cached3d basis needs " << bytes << " bytes (" << b.states_.size()
                << " states on " << grid.nx << "x" << grid.ny << "x" << grid.nz
                << "), above the memory cap of " << memory_cap_bytes
                << " bytes; use the onthefly1d strategy instead";
            throw std::runtime_error(msg.str());
        }
        b.cached_.reserve(b.states_.size());
        for (std::size_t a = 0; a < b.states_.size(); ++a) {
            RealField3D f(grid);
            const std::size_t npts = grid.size();
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
            for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(npts); ++i)
                f[static_cast<std::size_t>(i)] = b.value_otf(a, static_cast<std::size_t>(i));
            b.cached_.push_back(std::move(f));
        }
    }
    return b;
}

// H_ab = E_a^HO delta_ab + <a| (V_eff_F - V_ext^F) |b> by grid quadrature,
// then symmetrized. v_eff_f must include V_ext^F, as produced by
// effective_potential_fermion.
inline Eigen::MatrixXd assemble_hamiltonian(const RealField3D& v_eff_f,
                                            const ShellBasis3D& basis,
                                            const MixtureParams& params) {
    if (!all_finite(v_eff_f))
        throw std::invalid_argument("assemble_hamiltonian: non-finite potential");
    const Grid3D& g = basis.grid();
    require_same_grid(g, v_eff_f.grid());
    const std::size_t npts = g.size();
    RealField3D dv_field(g);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(npts); ++i) {
        const std::size_t ii = static_cast<std::size_t>(i);
        dv_field[ii] = v_eff_f[ii] - params.trap_fermion(detail::radius_squared(g, ii));
    }

    const Eigen::Index dim = static_cast<Eigen::Index>(basis.size());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    const double dvol = g.cell_volume();
    // Pairs are independent and each pair is summed sequentially over the
    // grid, so the result does not depend on the thread count.
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (std::ptrdiff_t a = 0; a < static_cast<std::ptrdiff_t>(dim); ++a) {
        for (Eigen::Index bcol = static_cast<Eigen::Index>(a); bcol < dim; ++bcol) {
            const std::size_t ua = static_cast<std::size_t>(a);
            const std::size_t ub = static_cast<std::size_t>(bcol);
            double s = 0.0;
            for (std::size_t i = 0; i < npts; ++i)
                s += (basis.value(ua, i) * dv_field[i]) * basis.value(ub, i);
            h(static_cast<Eigen::Index>(a), bcol) = s * dvol;
        }
    }
    for (Eigen::Index a = 0; a < dim; ++a) {
        h(a, a) += basis.oscillator_energy(static_cast<std::size_t>(a));
        for (Eigen::Index bcol = a + 1; bcol < dim; ++bcol) h(bcol, a) = h(a, bcol);
    }
    return h;
}

struct EigenResult {
    std::vector<double> eigenvalues;          // ascending
    Eigen::MatrixXd coefficients;             // basis x states
    std::vector<ComplexField3D> orbitals;     // lowest `count` states on the grid
};

// Lowest eigenpairs of the symmetric Hamiltonian, with a deterministic
// post-pass: ascending eigenvalues, ties broken by lexicographic coefficient
// comparison, and a sign convention (largest-magnitude coefficient positive)
// so results are reproducible across runs and thread counts.
inline EigenResult solve_lowest(const Eigen::MatrixXd& h, std::size_t count,
                                const ShellBasis3D& basis) {
    const Eigen::Index dim = h.rows();
    if (count > static_cast<std::size_t>(dim))
        throw std::invalid_argument("solve_lowest: count exceeds basis dimension");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("solve_lowest: eigensolver did not converge");

    std::vector<Eigen::Index> order(static_cast<std::size_t>(dim));
    for (Eigen::Index i = 0; i < dim; ++i) order[static_cast<std::size_t>(i)] = i;
    const double scale = std::max(std::abs(solver.eigenvalues()(0)),
                                  std::abs(solver.eigenvalues()(dim - 1)));
    const double tie_tol = 1e-12 * std::max(scale, 1.0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        const double la = solver.eigenvalues()(a), lb = solver.eigenvalues()(b);
        if (la < lb - tie_tol) return true;
        if (lb < la - tie_tol) return false;
        for (Eigen::Index r = 0; r < dim; ++r) {
            const double ca = solver.eigenvectors()(r, a), cb = solver.eigenvectors()(r, b);
            if (std::abs(ca - cb) > tie_tol) return ca < cb;
        }
        return false;
    });

    EigenResult res;
    res.eigenvalues.resize(count);
    res.coefficients.resize(dim, static_cast<Eigen::Index>(count));
    for (std::size_t s = 0; s < count; ++s) {
        const Eigen::Index src = order[s];
        res.eigenvalues[s] = solver.eigenvalues()(src);
        Eigen::VectorXd v = solver.eigenvectors().col(src);
        Eigen::Index imax = 0;
        v.cwiseAbs().maxCoeff(&imax);
        if (v(imax) < 0.0) v = -v;
        res.coefficients.col(static_cast<Eigen::Index>(s)) = v;
    }
    res.orbitals.reserve(count);
    for (std::size_t s = 0; s < count; ++s)
        res.orbitals.push_back(basis.synthesize(res.coefficients.col(static_cast<Eigen::Index>(s))));
    return res;
}

// Fermionic energy at fixed n_B: kinetic + trap + boson-fermion interaction.
inline double fermionic_energy(const std::vector<ComplexField3D>& orbitals,
                               const RealField3D& n_b, const MixtureParams& params,
                               const AFunctionTable& table) {
    RealField3D n_f(n_b.grid());
    for (const auto& orb : orbitals) add_density(n_f, orb, 1.0);
    const EnergyBreakdown pot = potential_energy_terms(n_b, n_f, params, table);
    double e = pot.trap_F + pot.mean_field_BF + pot.higher_order_BF;
    for (const auto& orb : orbitals) e += kinetic_energy(orb, params.m_F, 1.0);
    return e;
}

struct IevResult {
    std::vector<ComplexField3D> orbitals;     // lowest N_F, unit occupation
    std::vector<double> orbital_energies;
    RealField3D density;                      // degeneracy-averaged n_F
    double fermionic_energy = 0.0;
    double kinetic = 0.0;                     // occupation-weighted kinetic part
    int iterations = 0;
};

// Occupation numbers for `n` particles over ascending single-particle
// energies: levels below the Fermi block are filled, and a block degenerate
// with the highest occupied level shares the remainder equally. Fractional
// filling of an open shell keeps the self-consistent density symmetric, which
// the discrete lowest-n choice is not.
inline std::vector<double> shell_occupations(const std::vector<double>& energies,
                                             std::size_t n) {
    if (n == 0 || n > energies.size())
        throw std::invalid_argument("shell_occupations: bad particle count");
    const double e_fermi = energies[n - 1];
    const double deg_tol = 1e-3 * std::max(1.0, std::abs(e_fermi));
    std::vector<double> occ(energies.size(), 0.0);
    std::size_t filled = 0;
    for (std::size_t i = 0; i < energies.size(); ++i)
        if (energies[i] < e_fermi - deg_tol) {
            occ[i] = 1.0;
            ++filled;
        }
    std::size_t block = 0;
    for (std::size_t i = 0; i < energies.size(); ++i)
        if (std::abs(energies[i] - e_fermi) <= deg_tol) ++block;
    const double share = static_cast<double>(n - filled) / static_cast<double>(block);
    for (std::size_t i = 0; i < energies.size(); ++i)
        if (std::abs(energies[i] - e_fermi) <= deg_tol) occ[i] = share;
    return occ;
}

// Self-consistent loop at frozen n_B: build the fermionic effective
// potential, assemble, solve, rebuild n_F, repeat until the fermionic energy
// is stable to `tol`. Starts from n_F = 0, so the first pass solves the
// boson-background-coupled trap problem.
inline IevResult iev_fermion_loop(const RealField3D& n_b, const MixtureParams& params,
                                  const AFunctionTable& table, const ShellBasis3D& basis,
                                  double tol, int max_iter = 500) {
    if (!(tol > 0.0)) throw std::invalid_argument("iev: tolerance must be positive");
    if (!params.trap_on) throw std::invalid_argument("iev requires the trap");
    RealField3D n_f(n_b.grid());
    IevResult res;
    const std::size_t n_part = static_cast<std::size_t>(params.n_fermions);
    const std::size_t solve_count = std::min(basis.size(), n_part + 8);
    double prev_energy = 0.0;
    std::vector<double> trace;
    for (int it = 1; it <= max_iter; ++it) {
        const RealField3D v_f = effective_potential_fermion(n_b, n_f, params, table);
        const Eigen::MatrixXd h = assemble_hamiltonian(v_f, basis, params);
        EigenResult eig = solve_lowest(h, solve_count, basis);
        const std::vector<double> occ = shell_occupations(eig.eigenvalues, n_part);
        RealField3D n_new(n_b.grid());
        for (std::size_t i = 0; i < eig.orbitals.size(); ++i)
            if (occ[i] > 0.0) add_density(n_new, eig.orbitals[i], occ[i]);
        if (it == 1) {
            n_f = std::move(n_new);
        } else {
            // linear density mixing damps the oscillation the bare update
            // falls into at strong coupling without moving the fixed point
            for (std::size_t i = 0; i < n_f.size(); ++i)
                n_f[i] = 0.5 * n_f[i] + 0.5 * n_new[i];
        }
        double energy = 0.0;
        {
            RealField3D n_occ(n_b.grid());
            for (std::size_t i = 0; i < eig.orbitals.size(); ++i)
                if (occ[i] > 0.0) add_density(n_occ, eig.orbitals[i], occ[i]);
            const EnergyBreakdown pot = potential_energy_terms(n_b, n_occ, params, table);
            double kin = 0.0;
            for (std::size_t i = 0; i < eig.orbitals.size(); ++i)
                if (occ[i] > 0.0)
                    kin += occ[i] * kinetic_energy(eig.orbitals[i], params.m_F, 1.0);
            energy = kin + pot.trap_F + pot.mean_field_BF + pot.higher_order_BF;
            res.kinetic = kin;
            res.density = std::move(n_occ);
        }
        trace.push_back(energy);
        eig.orbitals.resize(n_part);
        eig.eigenvalues.resize(n_part);
        res.orbitals = std::move(eig.orbitals);
        res.orbital_energies = std::move(eig.eigenvalues);
        res.fermionic_energy = energy;
        res.iterations = it;
        if (it > 1 && std::abs(energy - prev_energy) < tol) return res;
        prev_energy = energy;
    }
    std::ostringstream msg;
    msg << "iev_fermion_loop: no convergence after " << max_iter << " iterations; energies:";
    for (std::size_t i = trace.size() > 8 ? trace.size() - 8 : 0; i < trace.size(); ++i)
        msg << " " << trace[i];
    throw std::runtime_error(msg.str());
}

}  // namespace bfmix
