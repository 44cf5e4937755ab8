#pragma once

// Driven two-level atom in the {|g>, |e>} basis, on resonance, in the frame
// rotating with the drive:
//
//   H_atom = (Omega/2) (sigma^dag + sigma),   sigma = |g><e|
//
// The no-jump propagator U_eff(tau) = exp{[-i H_atom - (gamma/2) sigma^dag
// sigma] tau} is evaluated in closed form (it sits in the innermost loop of
// the trajectory engine).

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "nmqt/algebra.hpp"

namespace nmqt {

struct AtomParams {
    double gamma = 1.0;       // decay rate, sets the unit of time
    double omega_rabi = 0.0;  // classical drive strength

    void validate() const {
        if (!(gamma > 0.0)) throw std::domain_error("AtomParams: gamma must be > 0");
        if (omega_rabi < 0.0) throw std::domain_error("AtomParams: omega_rabi must be >= 0");
    }
};

// Possibly unnormalized amplitude pair; branch amplitudes carry probability
// weight, so no normalization is enforced here.
struct AtomState {
    cplx amp_g{0.0, 0.0};
    cplx amp_e{0.0, 0.0};

    AtomState() = default;
    AtomState(cplx g, cplx e) : amp_g(g), amp_e(e) {}
    AtomState(const cvec2& v) : amp_g(v.g), amp_e(v.e) {}
    operator cvec2() const { return {amp_g, amp_e}; }

    double norm2() const { return std::norm(amp_g) + std::norm(amp_e); }

    static AtomState ground() { return {1.0, 0.0}; }
    static AtomState excited() { return {0.0, 1.0}; }
};

inline cmat2 sigma_minus() { return {0.0, 1.0, 0.0, 0.0}; }
inline cmat2 sigma_plus() { return {0.0, 0.0, 1.0, 0.0}; }
inline cmat2 sigma_x() { return {0.0, 1.0, 1.0, 0.0}; }
inline cmat2 sigma_y() { return {0.0, -I_UNIT, I_UNIT, 0.0}; }
inline cmat2 sigma_z() { return {-1.0, 0.0, 0.0, 1.0}; }

// sigma |psi>: (g, e) -> (e, 0). Applying twice gives the zero state.
inline AtomState apply_lowering(const AtomState& s) { return {s.amp_e, 0.0}; }

// U_eff(tau) for the generator A = -i(Omega/2) sigma_x - (gamma/2)|e><e|.
// With mu = tr(A)/2 and B = A - mu I (traceless, B^2 = s^2 I),
//   exp(A tau) = e^{mu tau} [cosh(s tau) I + sinh(s tau)/s B].
inline cmat2 u_eff(double tau, const AtomParams& p) {
    if (tau < 0.0) throw std::domain_error("u_eff: tau must be >= 0");
    const double gamma = p.gamma, omega = p.omega_rabi;
    const cplx mu{-gamma / 4.0, 0.0};
    // B = [[gamma/4, -i Omega/2], [-i Omega/2, -gamma/4]]
    const cplx b00{gamma / 4.0, 0.0};
    const cplx b01 = -I_UNIT * (omega / 2.0);
    const cplx s2 = cplx{gamma * gamma / 16.0 - omega * omega / 4.0, 0.0};
    const cplx s = std::sqrt(s2);

    cplx ch, sh_over_s;
    const cplx st = s * tau;
    if (std::abs(st) > 1e-4) {
        ch = std::cosh(st);
        sh_over_s = std::sinh(st) / s;
    } else {
        // Series around s*tau = 0 covers the critically damped point.
        const cplx st2 = st * st;
        ch = 1.0 + st2 * (0.5 + st2 / 24.0);
        sh_over_s = tau * (1.0 + st2 * (1.0 / 6.0 + st2 / 120.0));
    }
    const cplx pref = std::exp(mu * tau);
    return {pref * (ch + sh_over_s * b00), pref * (sh_over_s * b01),
            pref * (sh_over_s * b01), pref * (ch - sh_over_s * b00)};
}

// Pauli expectation values of a weighted mixture of (possibly unnormalized)
// states, jointly normalized. Weights must be nonnegative and the mixture
// must carry nonzero total weight.
struct BlochVector {
    double sx = 0.0, sy = 0.0, sz = 0.0;
};

inline BlochVector pauli_expectations(const std::vector<std::pair<double, AtomState>>& mixture) {
    double total = 0.0;
    double sx = 0.0, sy = 0.0, sz = 0.0;
    for (const auto& [w, s] : mixture) {
        if (w < 0.0) throw std::domain_error("pauli_expectations: negative weight");
        const cplx ge = std::conj(s.amp_g) * s.amp_e;
        total += w * s.norm2();
        sx += w * 2.0 * ge.real();
        sy += w * 2.0 * ge.imag();
        sz += w * (std::norm(s.amp_e) - std::norm(s.amp_g));
    }
    if (!(total > 0.0))
        throw std::domain_error("pauli_expectations: mixture has zero total weight");
    return {sx / total, sy / total, sz / total};
}

} // namespace nmqt
