#pragma once

// Direct-quadrature evaluation of the engine's window-layer amplitudes, used
// as the independent oracle for the incremental caches. Everything here is
// recomputed from the amplitude-chain branch states and the in-window
// detection record by explicit nested sums over emission grid points, with
// propagator powers evaluated fresh from the closed-form u_eff. No engine
// tables, no incremental updates.
//
// Conventions mirrored from the engine:
//  - the chain amplitude of a branch at past index e is reconstructed from
//    its current value beta by inverse propagation, A(e) = u_eff((k-e)dt)^-1 beta;
//  - an emission at index e applies sigma at e, weighted by
//    w(e) = dt h[d - e] plus the symbolic delta at e = d;
//  - for two emissions the later sigma stands to the left and both kernel
//    assignments are summed (symmetrized kernels); equal times vanish;
//  - with two detections in the amplitude window, probe amplitudes use the
//    shortened form: new emission ordered last, kernel cut to half support.

#include <vector>

#include "nmqt/algebra.hpp"
#include "nmqt/engine.hpp"

namespace nmqt {

class DirectWindowEvaluator {
  public:
    explicit DirectWindowEvaluator(const Engine& eng)
        : eng_(eng), setup_(eng.tables().setup()) {
        dt_ = setup_.dt;
        m_ = eng.tables().window_steps();
        k_ = eng.step_index();
        b_ = eng.boundary_index();
        sqrt_g_ = std::sqrt(setup_.atom.gamma);

        const auto span = std::size_t(k_ - b_);
        u_.resize(span + 1);
        u_back_.resize(span + 1);
        for (std::size_t j = 0; j <= span; ++j) {
            u_[j] = u_eff(double(j) * dt_, setup_.atom);
            u_back_[j] = u_[j].inverse();
        }

        // per-branch chain states at past indices: line[e-b] = U^-(k-e) beta
        for (const auto& br : eng.amp_branches()) {
            std::vector<cvec2> line(span + 1);
            for (std::size_t j = 0; j <= span; ++j) line[j] = u_back_[span - j] * br.beta;
            lines_.push_back(std::move(line));
        }
    }

    cplx weight(std::size_t i, std::int64_t e) const {
        const auto& det = eng_.amp_window()[i];
        const auto lag = std::size_t(det.d - e);
        const auto& ch = setup_.channels[det.channel];
        cplx w{0.0, 0.0};
        if (lag < m_ && lag < ch.kernel.size()) w = dt_ * ch.kernel[lag];
        if (lag == 0) w += ch.delta_coeff;
        return w;
    }

    // Pending-resolved amplitude of branch ib by explicit summation.
    cvec2 branch_amplitude(std::size_t ib) const {
        const auto& br = eng_.amp_branches()[ib];
        const auto& dets = eng_.amp_window();
        const auto& line = lines_[ib];
        std::vector<std::size_t> pend;
        for (std::size_t i = 0; i < dets.size(); ++i)
            if (!(br.mask >> i & 1u)) pend.push_back(i);

        if (pend.empty()) return br.beta;

        if (pend.size() == 1) {
            const std::size_t i = pend[0];
            cvec2 acc;
            for (std::int64_t e = b_ + 1; e <= dets[i].d; ++e) {
                const cplx w = weight(i, e);
                if (w == cplx{0.0, 0.0}) continue;
                acc += (sqrt_g_ * w) * (u_[std::size_t(k_ - e)] * lower(line[std::size_t(e - b_)]));
            }
            return acc;
        }

        const std::size_t i0 = pend[0], i1 = pend[1];
        cvec2 acc;
        for (std::int64_t ea = b_ + 1; ea <= dets[i0].d; ++ea) {
            const cplx wa = weight(i0, ea);
            if (wa == cplx{0.0, 0.0}) continue;
            for (std::int64_t eb = b_ + 1; eb <= dets[i1].d; ++eb) {
                if (eb == ea) continue;
                const cplx wb = weight(i1, eb);
                if (wb == cplx{0.0, 0.0}) continue;
                const std::int64_t early = std::min(ea, eb), late = std::max(ea, eb);
                cvec2 v = lower(line[std::size_t(early - b_)]);
                v = u_[std::size_t(late - early)] * v;
                v = lower(v);
                v = u_[std::size_t(k_ - late)] * v;
                acc += (sqrt_g_ * sqrt_g_ * wa * wb) * v;
            }
        }
        return acc;
    }

    cvec2 survival_state() const {
        cvec2 chi;
        for (std::size_t ib = 0; ib < eng_.amp_branches().size(); ++ib)
            chi += branch_amplitude(ib);
        return chi;
    }

    cvec2 detection_amplitude(std::size_t n) const {
        const auto& ch = setup_.channels[n];
        const auto& dets = eng_.amp_window();
        const auto span = std::size_t(k_ - b_);

        cvec2 phi;
        for (std::size_t ib = 0; ib < eng_.amp_branches().size(); ++ib) {
            const auto& br = eng_.amp_branches()[ib];
            const auto& line = lines_[ib];
            std::vector<std::size_t> pend;
            for (std::size_t i = 0; i < dets.size(); ++i)
                if (!(br.mask >> i & 1u)) pend.push_back(i);

            if (pend.size() >= 2) {
                // shortened probe on the two-pending branch: new emission
                // ordered last, kernel cut to half support
                const cvec2 pair_state = branch_amplitude(ib);
                const std::size_t cap = std::min(span, m_ / 2);
                for (std::size_t lag = 0; lag < cap && lag < ch.kernel.size(); ++lag)
                    phi += (sqrt_g_ * dt_ * ch.kernel[lag]) *
                           (u_[lag] * lower(u_back_[lag] * pair_state));
                phi += (ch.delta_coeff * sqrt_g_) * lower(pair_state);
                continue;
            }

            if (pend.empty()) {
                for (std::int64_t e = b_ + 1; e <= k_; ++e) {
                    const auto lag = std::size_t(k_ - e);
                    if (lag >= ch.kernel.size()) continue;
                    phi += (sqrt_g_ * dt_ * ch.kernel[lag]) *
                           (u_[lag] * lower(line[std::size_t(e - b_)]));
                }
            } else {
                const std::size_t i = pend[0];
                for (std::int64_t en = b_ + 1; en <= k_; ++en) {
                    const auto lag_n = std::size_t(k_ - en);
                    if (lag_n >= ch.kernel.size()) continue;
                    const cplx wn = dt_ * ch.kernel[lag_n];
                    for (std::int64_t e1 = b_ + 1; e1 <= dets[i].d; ++e1) {
                        if (e1 == en) continue;
                        const cplx w1 = weight(i, e1);
                        if (w1 == cplx{0.0, 0.0}) continue;
                        const std::int64_t early = std::min(en, e1), late = std::max(en, e1);
                        cvec2 v = lower(line[std::size_t(early - b_)]);
                        v = u_[std::size_t(late - early)] * v;
                        v = lower(v);
                        v = u_[std::size_t(k_ - late)] * v;
                        phi += (sqrt_g_ * sqrt_g_ * wn * w1) * v;
                    }
                }
            }
            phi += (ch.delta_coeff * sqrt_g_) * lower(branch_amplitude(ib));
        }
        return phi;
    }

  private:
    static cvec2 lower(const cvec2& v) { return {v.e, cplx{0.0, 0.0}}; }

    const Engine& eng_;
    const EngineSetup& setup_;
    double dt_ = 0.0, sqrt_g_ = 0.0;
    std::size_t m_ = 0;
    std::int64_t k_ = 0, b_ = 0;
    std::vector<cmat2> u_, u_back_;
    std::vector<std::vector<cvec2>> lines_;
};

// Max mismatch between the engine's cached amplitudes and the direct
// evaluation, relative to the survival norm.
inline double engine_consistency_error(const Engine& eng) {
    DirectWindowEvaluator direct(eng);
    const double scale = std::max(direct.survival_state().norm(), 1e-30);
    double err = vec_distance(direct.survival_state(), eng.survival_state()) / scale;
    for (std::size_t ib = 0; ib < eng.amp_branches().size(); ++ib) {
        err = std::max(err, vec_distance(direct.branch_amplitude(ib),
                                         eng.branch_amplitude(eng.amp_branches()[ib])) /
                                scale);
    }
    for (std::size_t n = 0; n < eng.tables().n_channels(); ++n) {
        err = std::max(err, vec_distance(direct.detection_amplitude(n),
                                         eng.detection_amplitude(n)) /
                                scale);
    }

    // While no forced resolution has occurred the report and amplitude
    // systems describe the same branches: beta must equal U^(k-b) psi.
    if (eng.counters().forced_resolutions == 0 && eng.counters().report_folds == 0 &&
        eng.amp_branches().size() == eng.report_branches().size()) {
        const auto span = double(eng.step_index() - eng.boundary_index());
        const cmat2 u_span = u_eff(span * eng.tables().dt(), eng.tables().setup().atom);
        for (std::size_t ib = 0; ib < eng.amp_branches().size(); ++ib) {
            const auto& ab = eng.amp_branches()[ib];
            const auto& rb = eng.report_branches()[ib];
            if (ab.mask != rb.mask) continue;
            err = std::max(err, vec_distance(ab.beta, u_span * rb.psi) / scale);
        }
    }
    return err;
}

} // namespace nmqt
