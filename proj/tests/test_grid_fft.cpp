#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "helpers.hpp"

using namespace bfmix;

TEST_CASE("grid construction and validation") {
    const Grid3D g = make_grid(8, 8, 8, 0.5);
    REQUIRE(g.size() == 512);
    REQUIRE(g.cell_volume() == Catch::Approx(0.125));
    // coordinates centered, spacing dx
    REQUIRE(g.x[0] == Catch::Approx(-2.0));
    REQUIRE(g.x[4] == Catch::Approx(0.0));
    REQUIRE(g.x[7] == Catch::Approx(1.5));
    // FFT-ordered wavenumbers
    REQUIRE(g.kx[0] == Catch::Approx(0.0));
    REQUIRE(g.kx[1] == Catch::Approx(2.0 * std::numbers::pi / 4.0));
    // the Nyquist mode carries the positive sign by convention
    REQUIRE(g.kx[4] == Catch::Approx(8.0 * std::numbers::pi / 4.0));
    REQUIRE(g.kx[5] == Catch::Approx(-6.0 * std::numbers::pi / 4.0));

    REQUIRE_THROWS_AS(make_grid(7, 8, 8, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(make_grid(2, 8, 8, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(make_grid(8, 8, 8, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(make_grid(8, 8, 8, -1.0), std::invalid_argument);
}

TEST_CASE("integrate matches the analytic gaussian volume") {
    const Grid3D g = make_grid(32, 32, 32, 0.4);
    RealField3D f(g);
    for (std::size_t i = 0; i < f.size(); ++i)
        f[i] = std::exp(-detail::radius_squared(g, i));
    const double analytic = std::pow(std::numbers::pi, 1.5);
    REQUIRE(integrate(f) == Catch::Approx(analytic).epsilon(1e-10));
}

TEST_CASE("fft round trip is the identity") {
    const Grid3D g = make_grid(16, 16, 16, 0.3);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ComplexField3D psi(g);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = {u(rng), u(rng)};
    ComplexField3D back = psi;
    forward_transform_inplace(back);
    inverse_transform_inplace(back);
    double err = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i)
        err = std::max(err, std::abs(back[i] - psi[i]));
    REQUIRE(err < 1e-12);
}

TEST_CASE("parseval: spectral quadratic form with unit weight is the norm") {
    const Grid3D g = make_grid(16, 16, 16, 0.3);
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ComplexField3D psi(g);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = {u(rng), u(rng)};
    const double n2 = norm_squared(psi);
    const double spec = spectral_quadratic_form(psi, [](double) { return 1.0; });
    REQUIRE(spec == Catch::Approx(n2).epsilon(1e-12));
}

TEST_CASE("plane wave kinetic energy is exact on the grid") {
    const Grid3D g = make_grid(16, 16, 16, 0.5);
    const double k = g.kx[2];
    ComplexField3D psi(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int l = 0; l < g.nz; ++l)
                psi[g.index(i, j, l)] =
                    std::polar(1.0, k * g.x[static_cast<std::size_t>(i)]);
    renormalize(psi, 1.0);
    const double e = kinetic_energy(psi, 1.0, 1.0);
    REQUIRE(e == Catch::Approx(k * k / 2.0).epsilon(1e-12));
}

TEST_CASE("bfx1 field files round trip and validate") {
    const Grid3D g = make_grid(8, 8, 8, 0.25);
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    ComplexField3D psi(g);
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = {u(rng), u(rng)};
    RealField3D rho(g);
    for (std::size_t i = 0; i < rho.size(); ++i) rho[i] = u(rng);

    std::filesystem::create_directories("io_tmp");
    save_field("io_tmp/psi.bfx", psi);
    save_field("io_tmp/rho.bfx", rho);
    const auto psi2 = load_field<ComplexField3D>("io_tmp/psi.bfx", g);
    const auto rho2 = load_field<RealField3D>("io_tmp/rho.bfx", g);
    for (std::size_t i = 0; i < psi.size(); ++i) {
        REQUIRE(psi2[i] == psi[i]);
        REQUIRE(rho2[i] == rho[i]);
    }

    const Grid3D g2 = make_grid(10, 8, 8, 0.25);
    REQUIRE_THROWS_WITH(load_field<ComplexField3D>("io_tmp/psi.bfx", g2),
                        Catch::Matchers::ContainsSubstring("dims mismatch"));
    {
        std::ofstream os("io_tmp/bad.bfx", std::ios::binary);
        os << "not a field";
    }
    REQUIRE_THROWS_WITH(load_field<RealField3D>("io_tmp/bad.bfx", g),
                        Catch::Matchers::ContainsSubstring("BFX1"));
}

TEST_CASE("parallel_sum is independent of thread count") {
    std::vector<double> v(100003);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& x : v) x = u(rng);
    set_threads(1);
    const double s1 = parallel_sum(v.size(), [&](std::size_t i) { return v[i]; });
    set_threads(4);
    const double s4 = parallel_sum(v.size(), [&](std::size_t i) { return v[i]; });
    set_threads(1);
    REQUIRE(s1 == s4);
}
