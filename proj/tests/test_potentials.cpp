#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"

using namespace bfmix;

TEST_CASE("derived coupling constants") {
    const double g_b = 4.0 * std::numbers::pi;
    const MixtureParams p = MixtureParams::make(100.0, 4, 133.0 / 6.0, 1.0, 1.0, -1.0);
    REQUIRE(p.g_B == Catch::Approx(g_b));
    REQUIRE(p.g_BF == Catch::Approx(-g_b));
    REQUIRE(p.m_F == Catch::Approx(6.0 / 133.0));
    REQUIRE(p.mu == Catch::Approx(1.0 / (1.0 + 133.0 / 6.0)));
    REQUIRE(p.a_BF == Catch::Approx(p.g_BF * p.mu / (2.0 * std::numbers::pi)));
    REQUIRE(p.c_lhy ==
            Catch::Approx(64.0 / (15.0 * std::sqrt(std::numbers::pi)) * g_b));
    REQUIRE(p.c_bf ==
            Catch::Approx(std::pow(6.0 * std::numbers::pi * std::numbers::pi, 2.0 / 3.0) *
                          p.a_BF * p.a_BF / (2.0 * p.m_F)));
    REQUIRE_THROWS_AS(MixtureParams::make(1.0, 0, 1.0, 1.0, 1.0, 0.0),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(MixtureParams::make(1.0, 1, -1.0, 1.0, 1.0, 0.0),
                      std::invalid_argument);
}

TEST_CASE("alpha is floored where the fermionic density vanishes") {
    REQUIRE(alpha_point(1.0, 0.0) == alpha_point(1.0, kDensityFloor));
    REQUIRE(std::isfinite(alpha_point(1.0, 0.0)));
    REQUIRE(alpha_point(1.0, 1.0) ==
            Catch::Approx(16.0 * std::numbers::pi /
                          std::pow(6.0 * std::numbers::pi * std::numbers::pi, 2.0 / 3.0)));
}

// dE/dn at one grid point, by symmetric difference of the density functional.
namespace {
double fd_derivative(const RealField3D& n_b, const RealField3D& n_f,
                     const MixtureParams& p, const AFunctionTable& tab, std::size_t idx,
                     bool wrt_boson) {
    const double dv = n_b.grid().cell_volume();
    RealField3D bp = n_b, bm = n_b, fp = n_f, fm = n_f;
    const double base = wrt_boson ? n_b[idx] : n_f[idx];
    const double h = std::max(1e-6, 1e-4 * base);
    (wrt_boson ? bp : fp)[idx] += h;
    (wrt_boson ? bm : fm)[idx] -= h;
    const double ep = potential_energy_terms(bp, fp, p, tab).sum_components();
    const double em = potential_energy_terms(bm, fm, p, tab).sum_components();
    return (ep - em) / (2.0 * h * dv);
}
}  // namespace

TEST_CASE("effective potentials are the functional derivatives of the energy") {
    const Grid3D g = make_grid(12, 12, 12, 0.5);
    const AFunctionTable& tab = testing_support::test_table(1.0);
    const MixtureParams p =
        MixtureParams::make(50.0, 4, 1.0, 1.0, 1.0, -0.5);
    std::mt19937 rng(17);
    for (int trial = 0; trial < 3; ++trial) {
        const RealField3D n_b = testing_support::random_smooth_density(g, 2.0, rng);
        const RealField3D n_f = testing_support::random_smooth_density(g, 1.0, rng);
        const RealField3D v_b = effective_potential_boson(n_b, n_f, p, tab);
        const RealField3D v_f = effective_potential_fermion(n_b, n_f, p, tab);
        std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
        for (int s = 0; s < 4; ++s) {
            const std::size_t idx = pick(rng);
            const double fd_b = fd_derivative(n_b, n_f, p, tab, idx, true);
            const double fd_f = fd_derivative(n_b, n_f, p, tab, idx, false);
            REQUIRE(v_b[idx] == Catch::Approx(fd_b).epsilon(1e-4));
            REQUIRE(v_f[idx] == Catch::Approx(fd_f).epsilon(1e-4));
        }
    }
}

TEST_CASE("energy breakdown total equals the sum of its components") {
    const Grid3D g = make_grid(12, 12, 12, 0.5);
    const AFunctionTable& tab = testing_support::test_table(1.0);
    const MixtureParams p =
        MixtureParams::make(10.0, 2, 1.0, 1.0, 1.0, -0.25);
    ComplexField3D psi = gaussian_seed(g, 1.0);
    std::vector<ComplexField3D> orbs = oscillator_shell_orbitals(g, p);
    const EnergyBreakdown e = total_energy(psi, orbs, p, tab);
    REQUIRE(e.total == e.sum_components());
    REQUIRE(e.kinetic_B > 0.0);
    REQUIRE(e.kinetic_F > 0.0);
    REQUIRE(e.lhy > 0.0);
    REQUIRE(e.mean_field_BF < 0.0);  // attractive coupling
}

TEST_CASE("trap can be switched off") {
    MixtureParams p = MixtureParams::make(1.0, 1, 1.0, 2.0, 3.0, 0.0);
    REQUIRE(p.trap_boson(1.0) == Catch::Approx(2.0));        // omega^2 r^2 / 2
    REQUIRE(p.trap_fermion(1.0) == Catch::Approx(4.5 * p.m_F));
    p.trap_on = false;
    REQUIRE(p.trap_boson(1.0) == 0.0);
    REQUIRE(p.trap_fermion(1.0) == 0.0);
}
