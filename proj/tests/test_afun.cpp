#include <catch2/catch_amalgamated.hpp>

#include "helpers.hpp"
#include "oracles.hpp"

using namespace bfmix;

TEST_CASE("quadrature agrees with the adaptive oracle (smoke subset)") {
    // the full 20-point sweep per mass ratio runs in the acceptance gate
    const double alphas[] = {1e-3, 1.0, 1e3};
    for (double w : {1.0, 133.0 / 6.0})
        for (double a : alphas) {
            const double prod = afun_quadrature(w, a);
            const double ref = oracle::afun(w, a, 1e-8);
            REQUIRE(prod == Catch::Approx(ref).epsilon(1e-6));
        }
}

TEST_CASE("quadrature domain errors") {
    REQUIRE_THROWS_AS(afun_quadrature(0.0, 1.0), std::invalid_argument);
    REQUIRE_THROWS_AS(afun_quadrature(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("A is positive, increasing in alpha, and grows like sqrt(alpha)") {
    const double w = 1.0;
    double prev = 0.0;
    for (double a : {1e-3, 1e-1, 1.0, 1e1, 1e3}) {
        const double v = afun_quadrature(w, a);
        REQUIRE(v > prev);
        prev = v;
    }
    const double a1 = afun_quadrature(w, 1e4);
    const double a2 = afun_quadrature(w, 4e4);
    REQUIRE(a2 / a1 == Catch::Approx(2.0).epsilon(0.02));
}

TEST_CASE("table interpolation error stays within 1e-6 of direct quadrature") {
    const AFunctionTable& tab = testing_support::test_table(1.0);
    // off-node points across the tabulated range
    for (double a : {2.7e-4, 3.3e-2, 0.77, 41.0, 9.1e3, 4.2e5}) {
        const double direct = afun_quadrature(1.0, a);
        REQUIRE(tab.value(a) == Catch::Approx(direct).epsilon(1e-6));
    }
}

TEST_CASE("table derivative matches a finite difference of the quadrature") {
    const AFunctionTable& tab = testing_support::test_table(1.0);
    for (double a : {1e-2, 1.0, 1e2}) {
        const double h = 1e-3 * a;
        const double fd =
            (afun_quadrature(1.0, a + h) - afun_quadrature(1.0, a - h)) / (2.0 * h);
        REQUIRE(tab.derivative(a) == Catch::Approx(fd).epsilon(1e-4));
    }
}

TEST_CASE("table save/load round trip preserves values") {
    const AFunctionTable& tab = testing_support::test_table(1.0);
    std::filesystem::create_directories("io_tmp");
    tab.save("io_tmp/atab.bin");
    AFunctionTable loaded;
    REQUIRE(AFunctionTable::try_load("io_tmp/atab.bin", tab.w(), tab.alpha_min(),
                                     tab.alpha_max(), tab.nodes(), &loaded));
    for (double a : {1e-3, 0.37, 12.0, 8e4})
        REQUIRE(loaded.value(a) == tab.value(a));
    // wrong key is rejected
    AFunctionTable other;
    REQUIRE_FALSE(AFunctionTable::try_load("io_tmp/atab.bin", 2.0, tab.alpha_min(),
                                           tab.alpha_max(), tab.nodes(), &other));
}

TEST_CASE("queries outside the tabulated range clamp instead of extrapolating") {
    const AFunctionTable& tab = testing_support::test_table(1.0);
    REQUIRE(tab.value(1e-9) == tab.value(tab.alpha_min()));
    REQUIRE(tab.value(1e9) == tab.value(tab.alpha_max()));
}
