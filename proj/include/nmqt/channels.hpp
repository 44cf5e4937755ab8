#pragma once

// Measurement-channel impulse responses. A channel is an optional direct
// delta term plus a sampled complex kernel h[j] on the engine grid; its
// spectral response is
//
//   S(omega) = delta_coeff + sum_j dt h[j] e^{i omega tau_j},
//
// with the convention S(omega) = Integral h(tau) e^{+i omega tau} dtau, so a
// unit-flat channel (S == 1) is the on-grid delta kernel of the Markov limit
// and a complete channel set satisfies sum_n |S_n|^2 = 1.
//
// Smooth kernels are sampled at cell midpoints tau = (j + 1/2) dt; delta
// terms are kept symbolic (a sampled delta would be grid-dependent).

#include <cmath>
#include <complex>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "nmqt/algebra.hpp"
#include "nmqt/errors.hpp"

namespace nmqt {

struct ChannelResponse {
    std::string label;
    cplx delta_coeff{0.0, 0.0};
    std::vector<cplx> kernel;  // h[j], units 1/time, causal storage
    double latency = 0.0;      // shift applied to make storage causal
    double dt = 0.0;
    double t_m = 0.0;          // kernel support length = kernel.size() * dt

    std::size_t size() const { return kernel.size(); }
};

// ---------------------------------------------------------------------------
// Analytic kernel closures (retained for tests and quadrature cross-checks).

// Fabry-Perot transmission: h_T(tau) = u(tau) kappa e^{-i nu tau} e^{-kappa tau}.
inline std::function<cplx(double)> filter_transmit_kernel(double kappa, double nu) {
    return [kappa, nu](double tau) -> cplx {
        if (tau < 0.0) return {0.0, 0.0};
        return kappa * std::exp(cplx{-kappa * tau, -nu * tau});
    };
}

// Top-hat band [center - width/2, center + width/2):
// h(tau) = e^{-i center tau} sin(width tau / 2) / (pi tau),  h(0) = width/(2 pi).
inline std::function<cplx(double)> prism_band_kernel(double center, double width) {
    return [center, width](double tau) -> cplx {
        double env = (std::abs(tau) < 1e-12) ? width / (2.0 * std::numbers::pi)
                                             : std::sin(0.5 * width * tau) / (std::numbers::pi * tau);
        return env * std::exp(cplx{0.0, -center * tau});
    };
}

// Analytic filter responses, for oracle checks: S_T = kappa / (kappa - i(w - nu)),
// S_R = i(w - nu) / (kappa - i(w - nu)); |S_T|^2 + |S_R|^2 == 1 identically.
inline cplx filter_transmit_response(double kappa, double nu, double omega) {
    return kappa / cplx{kappa, -(omega - nu)};
}
inline cplx filter_reflect_response(double kappa, double nu, double omega) {
    return cplx{0.0, omega - nu} / cplx{kappa, -(omega - nu)};
}

// ---------------------------------------------------------------------------

namespace channel_detail {

inline std::size_t kernel_length(double dt, double t_m, const char* who) {
    if (!(dt > 0.0) || !(t_m > 0.0))
        throw config_error(std::string(who) + ": dt and t_m must be positive");
    double ratio = t_m / dt;
    auto n = std::size_t(std::llround(ratio));
    if (n == 0 || std::abs(ratio - double(n)) > 1e-9 * ratio)
        throw config_error(std::string(who) + ": t_m must be an integer multiple of dt");
    return n;
}

} // namespace channel_detail

struct FilterOptions {
    double truncation_tol = 1e-3;  // max allowed tail fraction of |h|^2 beyond t_m
};

// Filter pair: transmit (pure kernel) and reflect (delta interference term
// plus the same smooth kernel, h_R = -delta + h_T).
inline std::pair<ChannelResponse, ChannelResponse> filter_responses(
    double kappa, double nu, double dt, double t_m, FilterOptions opts = {}) {
    if (!(kappa > 0.0)) throw config_error("filter_responses: kappa must be > 0");
    std::size_t n = channel_detail::kernel_length(dt, t_m, "filter_responses");
    if (dt > 1.0 / (20.0 * kappa))
        throw config_error("filter_responses: dt too coarse, need dt <= 1/(20 kappa)");
    // tail / head ratio of |h_T|^2 for the exponential kernel
    double tail = std::exp(-2.0 * kappa * t_m);
    if (tail / (1.0 - tail) > opts.truncation_tol)
        throw config_error("filter_responses: t_m too short for the truncation tolerance");

    auto h = filter_transmit_kernel(kappa, nu);
    ChannelResponse transmit{"T", {0.0, 0.0}, {}, 0.0, dt, double(n) * dt};
    transmit.kernel.resize(n);
    for (std::size_t j = 0; j < n; ++j) transmit.kernel[j] = h((double(j) + 0.5) * dt);

    ChannelResponse reflect = transmit;
    reflect.label = "R";
    reflect.delta_coeff = {-1.0, 0.0};
    return {transmit, reflect};
}

struct PrismOptions {
    double taper_fraction = 0.5;  // raised-cosine taper on the outer part of each half-support
    // Optional cosine-amplitude band flanks of this half-width. Zero keeps
    // the sharp top-hat. Adjacent bands tiled at spacing = width are then
    // power complementary through the crossovers (|S|^2 flanks crossfade as
    // cos^2/sin^2), which a sharp-edged design cannot achieve; useful when
    // t_m resolves the flank (t_m * flank >> 1).
    double transition_half_width = 0.0;
};

// Prism band channel: inverse Fourier transform of the band shape, windowed
// with a raised-cosine taper, truncated to [-t_m/2, t_m/2) and shifted by
// latency = t_m/2 so the stored kernel is causal.
inline ChannelResponse prism_response(double center, double width, double dt, double t_m,
                                      PrismOptions opts = {}, std::string label = "") {
    if (!(width > 0.0)) throw config_error("prism_response: width must be > 0");
    if (width * dt > std::numbers::pi || (std::abs(center) + 0.5 * width) * dt > std::numbers::pi)
        throw config_error("prism_response: band is aliased on this grid (width*dt > pi)");
    if (t_m * width < 2.0 * std::numbers::pi)
        throw config_error("prism_response: band unresolvable, need t_m * width >> 1");
    const double w_tr = opts.transition_half_width;
    if (w_tr < 0.0 || w_tr > 0.5 * width)
        throw config_error("prism_response: transition_half_width out of range");
    std::size_t n = channel_detail::kernel_length(dt, t_m, "prism_response");

    const double half = 0.5 * double(n) * dt;
    const double flat = (1.0 - opts.taper_fraction) * half;
    auto taper = [&](double tau) {
        double a = std::abs(tau);
        if (a <= flat) return 1.0;
        double x = (a - flat) / (half - flat);
        double c = std::cos(0.5 * std::numbers::pi * std::min(x, 1.0));
        return c * c;
    };

    std::function<cplx(double)> h;
    if (w_tr == 0.0) {
        h = prism_band_kernel(center, width);
    } else {
        // band amplitude 1 on |v| <= width/2 - w, cosine roll to 0 at width/2 + w
        const double a = 0.5 * width - w_tr;
        auto amp = [a, w_tr](double v) {
            double x = std::abs(v);
            if (x <= a) return 1.0;
            if (x >= a + 2.0 * w_tr) return 0.0;
            return std::cos(0.25 * std::numbers::pi * (x - a) / w_tr);
        };
        h = [center, a, w_tr, amp](double tau) -> cplx {
            const double lo = -(a + 2.0 * w_tr), hi = a + 2.0 * w_tr;
            const int steps = 1200;
            const double dv = (hi - lo) / steps;
            cplx acc{0.0, 0.0};
            for (int q = 0; q <= steps; ++q) {
                const double v = lo + q * dv;
                const double wq = (q == 0 || q == steps) ? 0.5 : 1.0;
                acc += wq * amp(v) * std::exp(cplx{0.0, -(center + v) * tau});
            }
            return acc * (dv / (2.0 * std::numbers::pi));
        };
    }

    ChannelResponse ch{std::move(label), {0.0, 0.0}, {}, half, dt, double(n) * dt};
    ch.kernel.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double tau = (double(j) + 0.5) * dt - half;  // design lag, symmetric about 0
        ch.kernel[j] = taper(tau) * h(tau);
    }
    return ch;
}

// Estimated truncation tail fraction for the ideal (untapered, unshifted)
// sinc kernel: integral of |h|^2 beyond +-t_m/2 over the part within.
inline double prism_truncation_estimate(double width, double t_m) {
    double total = width / (2.0 * std::numbers::pi);             // Parseval
    double tail = 2.0 / (std::numbers::pi * std::numbers::pi * t_m);
    return tail / (total - tail);
}

inline double filter_truncation_ratio(double kappa, double t_m) {
    double tail = std::exp(-2.0 * kappa * t_m);
    return tail / (1.0 - tail);
}

// Discrete-time frequency response of the stored channel. With
// design_lags = true the latency shift is removed, giving the symmetric
// design response; the modulus is identical either way (pure phase).
inline cplx frequency_response(const ChannelResponse& ch, double omega, bool design_lags = false) {
    cplx s = ch.delta_coeff;
    const double shift = design_lags ? ch.latency : 0.0;
    for (std::size_t j = 0; j < ch.kernel.size(); ++j) {
        double tau = (double(j) + 0.5) * ch.dt - shift;
        s += ch.dt * ch.kernel[j] * std::exp(cplx{0.0, omega * tau});
    }
    return s;
}

// max over the grid of |sum_n |S_n(omega)|^2 - 1|.
inline double completeness_deviation(const std::vector<ChannelResponse>& channels,
                                     const std::vector<double>& omega_grid) {
    if (channels.empty()) throw std::domain_error("completeness_deviation: empty channel set");
    for (const auto& ch : channels)
        if (std::abs(ch.dt - channels.front().dt) > 1e-12 * channels.front().dt)
            throw std::domain_error("completeness_deviation: channels must share dt");
    double dev = 0.0;
    for (double w : omega_grid) {
        double total = 0.0;
        for (const auto& ch : channels) total += std::norm(frequency_response(ch, w));
        dev = std::max(dev, std::abs(total - 1.0));
    }
    return dev;
}

// Rescale a channel bank by a common factor so that max over the grid of
// sum_n |S_n|^2 does not exceed 1 (designed kernels can overshoot unity; a
// detection bank must stay a valid sub-decomposition of the output field).
// Returns the applied amplitude factor (1 when nothing had to change).
inline double normalize_channel_bank(std::vector<ChannelResponse>& channels,
                                     const std::vector<double>& omega_grid) {
    double max_total = 0.0;
    for (double w : omega_grid) {
        double total = 0.0;
        for (const auto& ch : channels) total += std::norm(frequency_response(ch, w));
        max_total = std::max(max_total, total);
    }
    if (max_total <= 1.0) return 1.0;
    const double factor = 1.0 / std::sqrt(max_total);
    for (auto& ch : channels) {
        if (ch.delta_coeff != cplx{0.0, 0.0})
            throw config_error("normalize_channel_bank: cannot rescale a delta channel");
        for (auto& h : ch.kernel) h *= factor;
    }
    return factor;
}

// Markov-limit channel: on-grid delta kernel, S(omega) == 1. Used for the
// engine's defining regression against the standard quantum-jump method.
inline ChannelResponse markov_limit_channel(double dt, double t_m, std::string label = "M") {
    std::size_t n = channel_detail::kernel_length(dt, t_m, "markov_limit_channel");
    ChannelResponse ch{std::move(label), {0.0, 0.0}, std::vector<cplx>(n, cplx{0.0, 0.0}),
                       0.0, dt, double(n) * dt};
    ch.kernel[0] = {1.0 / dt, 0.0};
    return ch;
}

// ---------------------------------------------------------------------------
// CSV export/import (columns: tau, re, im; metadata in # header lines).

inline void write_kernel_csv(const ChannelResponse& ch, std::ostream& os) {
    os << "# label=" << ch.label << "\n";
    os << "# delta_re=" << ch.delta_coeff.real() << " delta_im=" << ch.delta_coeff.imag() << "\n";
    os << "# latency=" << ch.latency << " dt=" << ch.dt << " t_m=" << ch.t_m << "\n";
    os << "tau,re,im\n";
    os.precision(17);
    for (std::size_t j = 0; j < ch.kernel.size(); ++j)
        os << (double(j) + 0.5) * ch.dt << "," << ch.kernel[j].real() << ","
           << ch.kernel[j].imag() << "\n";
}

inline void write_kernel_csv(const ChannelResponse& ch, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw config_error("write_kernel_csv: cannot open " + path);
    write_kernel_csv(ch, f);
}

inline ChannelResponse read_kernel_csv(std::istream& is) {
    ChannelResponse ch;
    double delta_re = 0.0, delta_im = 0.0;
    std::string line;
    std::vector<cplx> samples;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            std::istringstream ss(line.substr(1));
            std::string tok;
            while (ss >> tok) {
                auto eq = tok.find('=');
                if (eq == std::string::npos) continue;
                std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
                if (key == "label") ch.label = val;
                else if (key == "delta_re") delta_re = std::stod(val);
                else if (key == "delta_im") delta_im = std::stod(val);
                else if (key == "latency") ch.latency = std::stod(val);
                else if (key == "dt") ch.dt = std::stod(val);
                else if (key == "t_m") ch.t_m = std::stod(val);
            }
            continue;
        }
        if (line.rfind("tau,", 0) == 0) continue;  // column header
        std::istringstream ss(line);
        std::string cell;
        double v[3] = {0, 0, 0};
        for (int i = 0; i < 3 && std::getline(ss, cell, ','); ++i) v[i] = std::stod(cell);
        samples.emplace_back(v[1], v[2]);
    }
    ch.delta_coeff = {delta_re, delta_im};
    ch.kernel = std::move(samples);
    if (ch.dt <= 0.0 || ch.kernel.empty())
        throw config_error("read_kernel_csv: malformed kernel file");
    return ch;
}

inline ChannelResponse read_kernel_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("read_kernel_csv: cannot open " + path);
    return read_kernel_csv(f);
}

} // namespace nmqt
