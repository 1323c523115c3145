#pragma once

// Fluid and rock property models plus point sources (rate wells, Peaceman
// bottom-hole-pressure wells, heaters). Heavy-oil viscosity follows the
// Bennison correlation in cP against degrees Fahrenheit; density is
// exponential in pressure and temperature around standard conditions.
// All derivatives are analytic and match the residual assembly exactly.

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace thermoflow {

inline double api_gravity(double gamma_sg) {
    if (!(gamma_sg > 0.0))
        throw std::invalid_argument("api_gravity: specific gravity must be positive");
    return 141.5 / gamma_sg - 131.5;
}

struct FluidModel {
    double gamma_sg = 1.0;
    // Bennison coefficients: log10(mu_cP) = (a1*api + a2) + (a3*api + a4)*log10(T_F)
    double a1 = -0.8021;
    double a2 = 23.8765;
    double a3 = 0.31458;
    double a4 = -9.21592;
    double rho0 = 999.0;          // gamma_sg * 999 kg/m^3
    double p_ref = 1.01325e5;     // Pa
    double T_ref = 288.7056;      // K
    double c = 5.5e-10;           // 1/Pa (5.5e-5 per bar)
    double beta = 2.5e-4;         // 1/K
    double beta_sign = -1.0;      // -1: density falls with T; +1: as printed in some sources
    double c_v = 2093.4;          // J/(kg K)
    double k_tf = 0.15;           // W/(m K)
    std::optional<double> mu_constant;   // bypasses the correlation when set (Pa s)

    double api() const { return api_gravity(gamma_sg); }

    // Pa*s; domain requires T above 0 degrees Fahrenheit.
    double viscosity(double T) const {
        if (mu_constant) return *mu_constant;
        const double tf = fahrenheit(T);
        if (!(tf > 0.0))
            throw std::domain_error("viscosity: T_F = " + std::to_string(tf) +
                                    " outside correlation domain (T_F > 0)");
        const double g = api();
        const double mu_cp = std::pow(10.0, a1 * g + a2) * std::pow(tf, a3 * g + a4);
        return mu_cp * 1.0e-3;
    }

    double viscosity_dT(double T) const {
        if (mu_constant) return 0.0;
        const double tf = fahrenheit(T);
        if (!(tf > 0.0))
            throw std::domain_error("viscosity_dT: T_F outside correlation domain");
        // d(mu)/dT = mu * (a3*api + a4) / T_F * dT_F/dT, dT_F/dT = 1.8
        return viscosity(T) * (a3 * api() + a4) / tf * 1.8;
    }

    double density(double p, double T) const {
        return rho0 * std::exp(c * (p - p_ref)) * std::exp(beta_sign * beta * (T - T_ref));
    }
    double density_dp(double p, double T) const { return density(p, T) * c; }
    double density_dT(double p, double T) const { return density(p, T) * beta_sign * beta; }

    static double fahrenheit(double T_kelvin) { return (T_kelvin - 273.15) * 1.8 + 32.0; }
};

struct RockModel {
    double rho_r = 2650.0;        // kg/m^3
    double c_r = 920.0;           // J/(kg K)
    double k_tr = 1.7295772056;   // W/(m K)
    std::vector<double> porosity;              // per cell
    std::vector<std::array<double, 3>> perm;   // per cell, diagonal tensor (m^2)

    static RockModel uniform(int ncells, double phi, double kx, double ky, double kz) {
        RockModel r;
        r.porosity.assign(ncells, phi);
        r.perm.assign(ncells, {kx, ky, kz});
        return r;
    }

    // Bulk conductivity, porosity-weighted rock term.
    double bulk_conductivity(int cell, const FluidModel& f) const {
        const double phi = porosity[cell];
        return phi * k_tr + (1.0 - phi) * f.k_tf;
    }
};

// Peaceman equivalent radius of a well block with fixed model lengths dx, dy.
inline double equivalent_radius(double kx, double ky, double dx, double dy) {
    if (!(kx > 0.0) || !(ky > 0.0))
        throw std::invalid_argument("equivalent_radius: permeabilities must be positive");
    const double rxy = ky / kx;
    const double num = std::sqrt(std::sqrt(rxy) * dx * dx + std::sqrt(1.0 / rxy) * dy * dy);
    const double den = 0.5 * (std::pow(rxy, 0.25) + std::pow(1.0 / rxy, 0.25));
    return 0.14 * num / den;
}

// Signed volumetric rate, positive when p_bh exceeds the cell pressure.
inline double peaceman_rate(double k_e, double mu, double p_bh, double p, double h,
                            double r_e, double r_w) {
    if (!(r_e > r_w))
        throw std::invalid_argument("peaceman_rate: r_e = " + std::to_string(r_e) +
                                    " must exceed r_w = " + std::to_string(r_w));
    return 2.0 * M_PI * h * k_e / (mu * std::log(r_e / r_w)) * (p_bh - p);
}

enum class SourceKind { injector, producer, heater };
enum class RateMode { fixed, peaceman };

struct SourceTerm {
    SourceKind kind = SourceKind::heater;
    int cell = -1;
    RateMode rate_mode = RateMode::fixed;
    double q = 0.0;               // fixed rate, or rate cap in peaceman mode (m^3/s)
    double p_bh = 0.0;            // Pa (peaceman)
    double T_inj = 422.039;       // K (injector)
    double U = 5.44409e-6;        // J/(s K) (heater)
    double T_heater = 422.039;    // K (heater)
    double r_w = 0.1;             // m
    double h = 5.0;               // m
    double d_x = 5.0;             // m (fixed well-model lengths, not grid spacing)
    double d_y = 5.0;
    double well_index = 0.0;      // 2*pi*h*K_e/ln(r_e/r_w); cached by the system setup
};

struct SourceEval {
    double f = 0.0;       // mass source density (kg/m^3/s)
    double f_T = 0.0;     // energy source density (W/m^3)
    double df_dp = 0.0;
    double df_dT = 0.0;
    double dfT_dp = 0.0;
    double dfT_dT = 0.0;
    double q = 0.0;       // realized volumetric rate (m^3/s), >= 0
};

// Evaluate one source in its host cell. Peaceman rates are clamped to
// [0, q]; derivatives vanish on the clamped branches.
inline SourceEval source_contributions(const SourceTerm& s, double p, double T,
                                       const FluidModel& fluid, double volume) {
    SourceEval e;
    const double vinv = 1.0 / volume;
    switch (s.kind) {
    case SourceKind::heater: {
        e.f_T = s.U * (s.T_heater - T) * vinv;
        e.dfT_dT = -s.U * vinv;
        return e;
    }
    case SourceKind::injector: {
        double q = s.q, dq_dp = 0.0;
        if (s.rate_mode == RateMode::peaceman) {
            const double mu = fluid.viscosity(s.T_inj);
            const double raw = s.well_index / mu * (s.p_bh - p);
            if (raw <= 0.0) {
                q = 0.0;
            } else if (raw >= s.q) {
                q = s.q;
            } else {
                q = raw;
                dq_dp = -s.well_index / mu;
            }
        }
        const double rho = fluid.density(p, s.T_inj);
        const double drho_dp = fluid.density_dp(p, s.T_inj);
        e.q = q;
        e.f = q * rho * vinv;
        e.df_dp = (dq_dp * rho + q * drho_dp) * vinv;
        e.f_T = e.f * fluid.c_v * s.T_inj;
        e.dfT_dp = e.df_dp * fluid.c_v * s.T_inj;
        return e;
    }
    case SourceKind::producer: {
        double q = s.q, dq_dp = 0.0, dq_dT = 0.0;
        if (s.rate_mode == RateMode::peaceman) {
            const double mu = fluid.viscosity(T);
            const double raw = s.well_index / mu * (p - s.p_bh);
            if (raw <= 0.0) {
                q = 0.0;
            } else if (raw >= s.q) {
                q = s.q;
            } else {
                q = raw;
                dq_dp = s.well_index / mu;
                dq_dT = -raw * fluid.viscosity_dT(T) / mu;
            }
        }
        const double rho = fluid.density(p, T);
        const double drho_dp = fluid.density_dp(p, T);
        const double drho_dT = fluid.density_dT(p, T);
        e.q = q;
        e.f = -q * rho * vinv;
        e.df_dp = -(dq_dp * rho + q * drho_dp) * vinv;
        e.df_dT = -(dq_dT * rho + q * drho_dT) * vinv;
        e.f_T = e.f * fluid.c_v * T;
        e.dfT_dp = e.df_dp * fluid.c_v * T;
        e.dfT_dT = e.df_dT * fluid.c_v * T + e.f * fluid.c_v;
        return e;
    }
    }
    return e;
}

} // namespace thermoflow
