#pragma once

// Adaptive Cash-Karp RK45 for small fixed-size state vectors. Used for the
// master-equation oracles and as an independent check on the closed-form
// atom propagator.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>

namespace nmqt {

namespace ode_detail {

template <class State>
State axpy(const State& y, double a, const State& dy) {
    State r = y;
    for (std::size_t i = 0; i < r.size(); ++i) r[i] += a * dy[i];
    return r;
}

} // namespace ode_detail

// Integrates dy/dt = rhs(y) from t=0 to t=t_end with local error control.
// State must be array-like with value_type double or complex<double>.
template <class State, class Rhs>
State integrate_adaptive(State y, double t_end, Rhs rhs, double tol = 1e-10) {
    using ode_detail::axpy;
    if (t_end == 0.0) return y;

    constexpr double a2 = 1.0 / 5, a3 = 3.0 / 10, a4 = 3.0 / 5, a5 = 1.0, a6 = 7.0 / 8;
    (void)a2; (void)a3; (void)a4; (void)a5; (void)a6;
    constexpr double b21 = 1.0 / 5;
    constexpr double b31 = 3.0 / 40, b32 = 9.0 / 40;
    constexpr double b41 = 3.0 / 10, b42 = -9.0 / 10, b43 = 6.0 / 5;
    constexpr double b51 = -11.0 / 54, b52 = 5.0 / 2, b53 = -70.0 / 27, b54 = 35.0 / 27;
    constexpr double b61 = 1631.0 / 55296, b62 = 175.0 / 512, b63 = 575.0 / 13824,
                     b64 = 44275.0 / 110592, b65 = 253.0 / 4096;
    constexpr double c1 = 37.0 / 378, c3 = 250.0 / 621, c4 = 125.0 / 594, c6 = 512.0 / 1771;
    constexpr double d1 = 2825.0 / 27648, d3 = 18575.0 / 48384, d4 = 13525.0 / 55296,
                     d5 = 277.0 / 14336, d6 = 1.0 / 4;

    double t = 0.0;
    double h = t_end / 64.0;
    const double h_min = t_end * 1e-14;

    while (t < t_end) {
        h = std::min(h, t_end - t);
        State k1 = rhs(y);
        State k2 = rhs(axpy(y, h * b21, k1));
        State y3 = axpy(axpy(y, h * b31, k1), h * b32, k2);
        State k3 = rhs(y3);
        State y4 = axpy(axpy(axpy(y, h * b41, k1), h * b42, k2), h * b43, k3);
        State k4 = rhs(y4);
        State y5 = axpy(axpy(axpy(axpy(y, h * b51, k1), h * b52, k2), h * b53, k3), h * b54, k4);
        State k5 = rhs(y5);
        State y6 = axpy(axpy(axpy(axpy(axpy(y, h * b61, k1), h * b62, k2), h * b63, k3), h * b64, k4),
                        h * b65, k5);
        State k6 = rhs(y6);

        State y_next = y;
        State y_embedded = y;
        double err = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            auto hi5 = h * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
            auto hi4 = h * (d1 * k1[i] + d3 * k3[i] + d4 * k4[i] + d5 * k5[i] + d6 * k6[i]);
            y_next[i] += hi5;
            y_embedded[i] += hi4;
            err = std::max(err, std::abs(hi5 - hi4));
        }

        if (err <= tol || h <= h_min) {
            t += h;
            y = y_next;
        }
        double grow = (err > 0.0) ? 0.9 * std::pow(tol / err, 0.2) : 5.0;
        h *= std::clamp(grow, 0.1, 5.0);
        if (h < h_min) h = h_min;
    }
    return y;
}

} // namespace nmqt
