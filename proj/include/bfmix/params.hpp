// Physical parameters of the trapped Bose-Fermi mixture in code units
// hbar = m_B = a_B = 1, so g_B = 4*pi and all energies are in units of
// hbar^2/(m_B a_B^2).
//
// Derived chain (code units):
//   m_F   = 1/w                      (w = m_B/m_F)
//   mu    = m_B m_F/(m_B+m_F) = 1/(1+w)
//   a_BF  = g_BF * mu / (2*pi)
//   C_LHY = 64/(15*sqrt(pi)) * g_B
//   C_BF  = (6*pi^2)^(2/3) * a_BF^2 / (2*m_F) = (6*pi^2)^(2/3) * a_BF^2 * w / 2
#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace bfmix {

struct MixtureParams {
    // Inputs.
    double n_bosons = 0.0;   // N_B
    int n_fermions = 0;      // N_F
    double w = 1.0;          // mass ratio m_B/m_F
    double omega_B = 1.0;    // dimensionless trap frequencies
    double omega_F = 1.0;
    double g_B = 4.0 * std::numbers::pi;
    double g_BF = 0.0;       // absolute mutual coupling (often given in units of g_B)
    bool trap_on = true;

    // Derived.
    double m_F = 1.0;
    double mu = 0.5;
    double a_BF = 0.0;
    double c_lhy = 0.0;
    double c_bf = 0.0;

    static MixtureParams make(double N_B, int N_F, double w, double omega_B,
                              double omega_F, double g_BF_over_gB,
                              double g_B = 4.0 * std::numbers::pi) {
        if (!(g_B > 0.0)) throw std::invalid_argument("g_B must be positive (repulsive bosons)");
        if (N_F < 1) throw std::invalid_argument("N_F must be >= 1");
        if (!(w > 0.0)) throw std::invalid_argument("mass ratio w must be positive");
        if (!(N_B >= 0.0)) throw std::invalid_argument("N_B must be >= 0");
        if (!(omega_B > 0.0) || !(omega_F > 0.0))
            throw std::invalid_argument("trap frequencies must be positive");
        MixtureParams p;
        p.n_bosons = N_B;
        p.n_fermions = N_F;
        p.w = w;
        p.omega_B = omega_B;
        p.omega_F = omega_F;
        p.g_B = g_B;
        p.set_g_bf(g_BF_over_gB * g_B);
        return p;
    }

    // Updates g_BF and everything derived from it (the ramp drives this).
    void set_g_bf(double g) {
        g_BF = g;
        m_F = 1.0 / w;
        mu = 1.0 / (1.0 + w);
        a_BF = g_BF * mu / (2.0 * std::numbers::pi);
        c_lhy = 64.0 / (15.0 * std::sqrt(std::numbers::pi)) * g_B;
        const double c = std::pow(6.0 * std::numbers::pi * std::numbers::pi, 2.0 / 3.0);
        c_bf = c * a_BF * a_BF / (2.0 * m_F);
    }

    MixtureParams with_g_bf(double g) const {
        MixtureParams p = *this;
        p.set_g_bf(g);
        return p;
    }

    double trap_boson(double r2) const {
        return trap_on ? 0.5 * omega_B * omega_B * r2 : 0.0;
    }
    double trap_fermion(double r2) const {
        return trap_on ? 0.5 * m_F * omega_F * omega_F * r2 : 0.0;
    }
};

// Density floor used inside alpha and fractional powers of n_F; the regions
// it touches contribute below quadrature tolerance.
inline constexpr double kDensityFloor = 1e-12;

}  // namespace bfmix
