#pragma once

// Deterministic references for resonance fluorescence of the driven two-level
// atom: Bloch-equation evolution of the reduced state, the steady state, the
// incoherent emission spectrum from the two-time correlation (quantum
// regression over the Bloch generator), and ensemble averaging of trajectory
// traces.
//
// Conventions follow atom.hpp: basis {|g>, |e>}, sigma_z = |e><e| - |g><g|,
// sigma_y = i(sigma^dag - sigma). In this ordering [sigma_x, sigma_y] =
// -2i sigma_z, so the Bloch equations for H = (Omega/2) sigma_x with decay
// gamma D[sigma] read
//   d<sx>/dt = -(gamma/2) sx
//   d<sy>/dt = -(gamma/2) sy + Omega sz
//   d<sz>/dt = -Omega sy - gamma (sz + 1)

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "nmqt/atom.hpp"
#include "nmqt/ode.hpp"

namespace nmqt {

struct BlochState {
    double sx = 0.0, sy = 0.0, sz = -1.0;
};

inline BlochState bloch_evolve(const BlochState& initial, const AtomParams& p, double t,
                               double tol = 1e-10) {
    if (t < 0.0) throw std::domain_error("bloch_evolve: t must be >= 0");
    p.validate();
    const double g = p.gamma, om = p.omega_rabi;
    using V = std::array<double, 3>;
    auto rhs = [g, om](const V& v) -> V {
        return {-0.5 * g * v[0], -0.5 * g * v[1] + om * v[2], -om * v[1] - g * (v[2] + 1.0)};
    };
    V v = integrate_adaptive<V>({initial.sx, initial.sy, initial.sz}, t, rhs, tol);
    return {v[0], v[1], v[2]};
}

inline BlochState bloch_steady_state(const AtomParams& p) {
    const double g = p.gamma, om = p.omega_rabi;
    const double d = 2.0 * om * om + g * g;
    return {0.0, -2.0 * om * g / d, -g * g / d};
}

inline double steady_excited_population(const AtomParams& p) {
    return 0.5 * (1.0 + bloch_steady_state(p).sz);
}

// Steady-state emission rate gamma <sigma^dag sigma>_ss.
inline double steady_emission_rate(const AtomParams& p) {
    return p.gamma * steady_excited_population(p);
}

// ---------------------------------------------------------------------------
// Emission spectrum.
//
// g(tau) = <sigma^dag(t + tau) sigma(t)>_ss evolves under the same Bloch
// generator (quantum regression): writing X(tau) = e^{L tau}[sigma rho_ss] in
// the Pauli basis, the trace component is conserved and the vector part obeys
// the affine Bloch equation with the inhomogeneity scaled by that trace.
// The spectrum is normalized so its total integral is the emission rate:
//   S_inc(w) = (gamma/pi) Re Int_0^inf (g(tau) - g_inf) e^{i w tau} dtau,
// plus a coherent delta of weight gamma |<sigma>_ss|^2 at w = 0.

struct SpectrumResult {
    std::vector<double> omega;
    std::vector<double> s_inc;     // incoherent spectral density
    double coherent_weight = 0.0;  // elastic delta component at omega = 0
    double total_rate = 0.0;       // gamma <sigma^dag sigma>_ss
};

namespace oracle_detail {

// g(tau) on a uniform grid via fixed-step RK4 of the complex regression ODE.
inline std::vector<cplx> regression_correlation(const AtomParams& p, double dtau,
                                                std::size_t n_steps) {
    const double g = p.gamma, om = p.omega_rabi;
    const BlochState ss = bloch_steady_state(p);
    const double rho_ee = 0.5 * (1.0 + ss.sz);
    const cplx sigma_ss{0.5 * ss.sx, 0.5 * ss.sy};  // <sigma>_ss = (sx + i sy)/2

    // Pauli components of X(0) = sigma rho_ss:
    //   Tr(sigma_x sigma rho) = rho_ee, Tr(sigma_y sigma rho) = i rho_ee,
    //   Tr(sigma_z sigma rho) = -<sigma>_ss, Tr(sigma rho) = <sigma>_ss.
    using V = std::array<cplx, 3>;
    V v{cplx{rho_ee, 0.0}, I_UNIT * rho_ee, -sigma_ss};
    const cplx w = sigma_ss;  // conserved trace component

    auto rhs = [g, om, w](const V& x) -> V {
        return {-0.5 * g * x[0], -0.5 * g * x[1] + om * x[2], -om * x[1] - g * (x[2] + w)};
    };

    std::vector<cplx> corr(n_steps + 1);
    auto record = [&](std::size_t i) { corr[i] = 0.5 * (v[0] - I_UNIT * v[1]); };
    record(0);
    for (std::size_t i = 1; i <= n_steps; ++i) {
        V k1 = rhs(v);
        V y2, y3, y4;
        for (int c = 0; c < 3; ++c) y2[c] = v[c] + 0.5 * dtau * k1[c];
        V k2 = rhs(y2);
        for (int c = 0; c < 3; ++c) y3[c] = v[c] + 0.5 * dtau * k2[c];
        V k3 = rhs(y3);
        for (int c = 0; c < 3; ++c) y4[c] = v[c] + dtau * k3[c];
        V k4 = rhs(y4);
        for (int c = 0; c < 3; ++c)
            v[c] += dtau / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        record(i);
    }
    return corr;
}

} // namespace oracle_detail

inline SpectrumResult mollow_spectrum(const AtomParams& p, const std::vector<double>& omega_grid) {
    p.validate();
    const BlochState ss = bloch_steady_state(p);
    const cplx sigma_ss{0.5 * ss.sx, 0.5 * ss.sy};
    const double coherent = p.gamma * std::norm(sigma_ss);

    // Correlation decays on ~ 4/gamma; integrate far past that.
    const double t_max = 40.0 / p.gamma;
    const double dtau = 5e-4 / p.gamma;
    const auto n_steps = std::size_t(std::llround(t_max / dtau));
    const auto corr = oracle_detail::regression_correlation(p, dtau, n_steps);
    const cplx g_inf = corr.back();  // coherent plateau |<sigma>_ss|^2 (real)

    SpectrumResult out;
    out.omega = omega_grid;
    out.s_inc.resize(omega_grid.size());
    out.coherent_weight = coherent;
    out.total_rate = steady_emission_rate(p);

    // trapezoid in tau for each omega
    for (std::size_t k = 0; k < omega_grid.size(); ++k) {
        const double w = omega_grid[k];
        cplx acc{0.0, 0.0};
        for (std::size_t i = 0; i <= n_steps; ++i) {
            const double weight = (i == 0 || i == n_steps) ? 0.5 : 1.0;
            const double phase = w * dtau * double(i);
            acc += weight * (corr[i] - g_inf) * std::exp(cplx{0.0, phase});
        }
        out.s_inc[k] = p.gamma / std::numbers::pi * (acc * dtau).real();
    }
    return out;
}

inline std::vector<double> default_spectrum_grid(const AtomParams& p) {
    const double w_max = 3.0 * std::max(p.omega_rabi, p.gamma);
    const double dw = p.gamma / 10.0;
    std::vector<double> grid;
    for (double w = -w_max; w <= w_max + 0.5 * dw; w += dw) grid.push_back(w);
    return grid;
}

// Band weight Integral_band S(omega) weight(omega) domega by trapezoid on the
// spectrum grid, with the coherent delta added where the band covers omega=0.
inline double band_weight(const SpectrumResult& sp, double lo, double hi,
                          const std::function<double(double)>& weight = nullptr) {
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < sp.omega.size(); ++k) {
        const double w0 = sp.omega[k], w1 = sp.omega[k + 1];
        if (w1 < lo || w0 > hi) continue;
        auto f = [&](std::size_t i) {
            return sp.s_inc[i] * (weight ? weight(sp.omega[i]) : 1.0);
        };
        acc += 0.5 * (f(k) + f(k + 1)) * (w1 - w0);
    }
    if (lo <= 0.0 && 0.0 < hi) acc += sp.coherent_weight * (weight ? weight(0.0) : 1.0);
    return acc;
}

// ---------------------------------------------------------------------------

struct EnsembleAverage {
    std::vector<double> t;
    std::vector<BlochState> mean;
    std::vector<BlochState> stderr_;  // sigma / sqrt(N), componentwise
};

// Pointwise mean and standard error over trajectory Bloch traces sharing a
// common time grid.
inline EnsembleAverage ensemble_average(const std::vector<std::vector<BlochState>>& traces,
                                        const std::vector<double>& time_grid) {
    if (traces.size() < 2) throw std::domain_error("ensemble_average: need >= 2 trajectories");
    for (const auto& tr : traces)
        if (tr.size() != time_grid.size())
            throw std::domain_error("ensemble_average: trace/grid length mismatch");
    const double n = double(traces.size());
    EnsembleAverage out;
    out.t = time_grid;
    out.mean.resize(time_grid.size());
    out.stderr_.resize(time_grid.size());
    for (std::size_t i = 0; i < time_grid.size(); ++i) {
        double mx = 0, my = 0, mz = 0;
        for (const auto& tr : traces) { mx += tr[i].sx; my += tr[i].sy; mz += tr[i].sz; }
        mx /= n; my /= n; mz /= n;
        double vx = 0, vy = 0, vz = 0;
        for (const auto& tr : traces) {
            vx += (tr[i].sx - mx) * (tr[i].sx - mx);
            vy += (tr[i].sy - my) * (tr[i].sy - my);
            vz += (tr[i].sz - mz) * (tr[i].sz - mz);
        }
        const double denom = n * std::max(n - 1.0, 1.0);
        out.mean[i] = {mx, my, mz};
        out.stderr_[i] = {std::sqrt(vx / denom), std::sqrt(vy / denom), std::sqrt(vz / denom)};
    }
    return out;
}

} // namespace nmqt
