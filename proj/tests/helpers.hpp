// Shared test fixtures: cached A-tables (built once per mass ratio across
// the whole suite) and a deterministic RNG for smooth random densities.
#pragma once

#include <random>

#include "bfmix/bfmix.hpp"

namespace testing_support {

// On-disk cache in the working directory so repeated ctest invocations and
// the different test binaries share one table build per w.
inline const bfmix::AFunctionTable& test_table(double w) {
    static std::map<double, bfmix::AFunctionTable> tables;
    auto it = tables.find(w);
    if (it == tables.end()) {
        std::filesystem::create_directories("afun_cache");
        it = tables.emplace(w, bfmix::load_or_build_table("afun_cache", w)).first;
    }
    return it->second;
}

// Smooth, strictly positive random density: a Gaussian envelope modulated by
// a few low-frequency cosines. Period-matched so it stays smooth under the
// spectral derivative.
inline bfmix::RealField3D random_smooth_density(const bfmix::Grid3D& g, double scale,
                                                std::mt19937& rng) {
    std::uniform_real_distribution<double> amp(0.1, 0.5);
    std::uniform_int_distribution<int> mode(1, 2);
    const double a1 = amp(rng), a2 = amp(rng), a3 = amp(rng);
    const int m1 = mode(rng), m2 = mode(rng), m3 = mode(rng);
    const double L = g.nx * g.dx;
    const double sigma = 0.18 * L;
    bfmix::RealField3D n(g);
    for (int i = 0; i < g.nx; ++i)
        for (int j = 0; j < g.ny; ++j)
            for (int k = 0; k < g.nz; ++k) {
                const double x = g.x[static_cast<std::size_t>(i)];
                const double y = g.y[static_cast<std::size_t>(j)];
                const double z = g.z[static_cast<std::size_t>(k)];
                const double env = std::exp(-(x * x + y * y + z * z) / (2 * sigma * sigma));
                const double mod = 1.0 + a1 * std::cos(2 * std::numbers::pi * m1 * x / L) +
                                   a2 * std::cos(2 * std::numbers::pi * m2 * y / L) +
                                   a3 * std::cos(2 * std::numbers::pi * m3 * z / L);
                n[g.index(i, j, k)] = scale * env * mod;
            }
    return n;
}

}  // namespace testing_support
