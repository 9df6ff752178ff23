#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace bfmix;

namespace {
std::vector<ComplexField3D> random_orbitals(const Grid3D& g, int count, unsigned seed) {
    std::mt19937 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<ComplexField3D> v;
    for (int j = 0; j < count; ++j) {
        ComplexField3D f(g);
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = {u(rng), u(rng)};
        v.push_back(std::move(f));
    }
    return v;
}

double overlap_deviation(const std::vector<ComplexField3D>& v) {
    double dev = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        for (std::size_t j = 0; j < v.size(); ++j) {
            const cplx o = inner_product(v[i], v[j]);
            dev = std::max(dev, std::abs(o - (i == j ? cplx(1.0) : cplx(0.0))));
        }
    return dev;
}
}  // namespace

TEST_CASE("gram-schmidt orthonormalizes and is idempotent") {
    const Grid3D g = make_grid(12, 12, 12, 0.5);
    auto v = random_orbitals(g, 5, 23);
    gram_schmidt_inplace(v);
    REQUIRE(overlap_deviation(v) < 1e-12);
    auto w = v;
    gram_schmidt_inplace(w);
    double change = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j)
        for (std::size_t i = 0; i < v[j].size(); ++i)
            change = std::max(change, std::abs(w[j][i] - v[j][i]));
    REQUIRE(change < 1e-12);
}

TEST_CASE("gram-schmidt keeps the span and the orbital order") {
    const Grid3D g = make_grid(12, 12, 12, 0.5);
    auto v = random_orbitals(g, 3, 29);
    const auto orig = v;
    gram_schmidt_inplace(v);
    // first orbital only rescaled
    const cplx o0 = inner_product(v[0], orig[0]);
    REQUIRE(std::abs(o0) == Catch::Approx(std::sqrt(norm_squared(orig[0]))).epsilon(1e-12));
    // each original vector lies in the span of the produced set
    for (const auto& u : orig) {
        double captured = 0.0;
        for (const auto& q : v) captured += std::norm(inner_product(q, u));
        REQUIRE(captured == Catch::Approx(norm_squared(u)).epsilon(1e-10));
    }
}

TEST_CASE("gram-schmidt reports linear dependence with a 1-based index") {
    const Grid3D g = make_grid(8, 8, 8, 0.5);
    auto v = random_orbitals(g, 2, 31);
    v.push_back(v[0]);  // exact duplicate of the first
    REQUIRE_THROWS_WITH(gram_schmidt_inplace(v),
                        Catch::Matchers::ContainsSubstring("index 3"));
    REQUIRE_THROWS_AS(gram_schmidt(std::vector<ComplexField3D>{}), std::invalid_argument);
}

TEST_CASE("ramp follows sin^2 and saturates at t_f") {
    const RampSchedule s(-2.0, 100.0);
    REQUIRE(ramp_value(0.0, s) == 0.0);
    REQUIRE(ramp_value(50.0, s) == Catch::Approx(-1.0));
    REQUIRE(ramp_value(100.0, s) == -2.0);
    REQUIRE(ramp_value(1e6, s) == -2.0);
    REQUIRE_THROWS_AS(ramp_value(-1.0, s), std::invalid_argument);
    REQUIRE_THROWS_AS(RampSchedule(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("free plane wave picks up the exact kinetic phase") {
    const Grid3D g = make_grid(16, 16, 16, 0.5);
    const double k = g.kx[2];
    ComplexField3D psi(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int l = 0; l < g.nz; ++l)
                psi[g.index(i, j, l)] =
                    std::polar(1.0, k * g.x[static_cast<std::size_t>(i)]);
    const RealField3D zero(g);
    const double dt = 0.05;
    const ComplexField3D out = split_step(psi, zero, StepConfig(dt, TimeMode::real, 1.0));
    const cplx expected_phase = std::polar(1.0, -k * k / 2.0 * dt);
    for (std::size_t i = 0; i < psi.size(); ++i)
        REQUIRE(std::abs(out[i] - psi[i] * expected_phase) < 1e-13);
}

TEST_CASE("real-time mixture evolution conserves every norm") {
    const Grid3D g = make_grid(12, 12, 12, 0.6);
    const AFunctionTable& tab = testing_support::test_table(1.0);
    const MixtureParams p = MixtureParams::make(20.0, 2, 1.0, 1.0, 1.0, -0.5);
    OrbitalSet state;
    state.psi_b = gaussian_seed(g, 1.0);
    state.fermions = oscillator_shell_orbitals(g, p);
    for (int s = 0; s < 200; ++s)
        evolve_mixture_step(state, p, tab, 0.01, TimeMode::real);
    REQUIRE(norm_squared(state.psi_b) == Catch::Approx(1.0).margin(1e-12));
    for (const auto& orb : state.fermions)
        REQUIRE(norm_squared(orb) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE_FALSE(state.orthonormal_flag);
}

TEST_CASE("imaginary-time steps renormalize and re-orthonormalize") {
    const Grid3D g = make_grid(12, 12, 12, 0.6);
    const AFunctionTable& tab = testing_support::test_table(1.0);
    const MixtureParams p = MixtureParams::make(20.0, 3, 1.0, 1.0, 1.0, -0.5);
    OrbitalSet state;
    state.psi_b = gaussian_seed(g, 1.3);
    state.fermions = oscillator_shell_orbitals(g, p);
    for (int s = 0; s < 50; ++s) {
        evolve_mixture_step(state, p, tab, 0.05, TimeMode::imaginary);
        REQUIRE(state.orthonormal_flag);
    }
    REQUIRE(norm_squared(state.psi_b) == Catch::Approx(1.0).margin(1e-12));
    double dev = 0.0;
    for (std::size_t i = 0; i < state.fermions.size(); ++i)
        for (std::size_t j = 0; j < state.fermions.size(); ++j) {
            const cplx o = inner_product(state.fermions[i], state.fermions[j]);
            dev = std::max(dev, std::abs(o - (i == j ? cplx(1.0) : cplx(0.0))));
        }
    REQUIRE(dev < 1e-12);
}

TEST_CASE("boson-only itp relaxes to the oscillator ground state") {
    // interaction-free: N_B so small the nonlinearity is negligible
    const Grid3D g = make_grid(24, 24, 24, 1.0 / 3.0);  // 8 oscillator lengths
    const AFunctionTable& tab = testing_support::test_table(1.0);
    const MixtureParams p = MixtureParams::make(1e-10, 1, 1.0, 1.0, 1.0, 0.0);
    ConvergenceCriteria crit;
    crit.window = 500;
    const ComplexField3D psi = boson_ground_state(g, p, tab, crit, 0.01);
    const EnergyBreakdown e = total_energy(psi, {}, p, tab);
    const double per_particle = (e.kinetic_B + e.trap_B) / p.n_bosons;
    REQUIRE(per_particle == Catch::Approx(1.5).epsilon(2e-5));
}
