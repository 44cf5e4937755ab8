#pragma once

// Non-Markovian trajectory engine for spectral photodetection of a driven
// two-level atom.
//
// Grid and window. Time lives on a grid t_k = k dt with a sliding memory
// window of M = t_m/dt steps; the window boundary sits at b = max(0, k - M).
// A detection's emission time is uncertain over the window, so each
// in-window detection splits the description into branches labeled by
// whether its emission is attributed to times at or before the boundary
// ("absorbed") or after it ("pending"). Branch amplitudes recombine
// coherently in every probability; the mixture {P_A, psi_b^A} of boundary
// branch states is the conditioned state at the boundary time.
//
// The engine carries two parallel recursions over the same detection record:
//
// 1. Amplitude system: per-branch chain states beta_A(k) plus 2x2 "weave"
//    matrices in the shifted picture sig_t[j] = U^j sigma U^-j, where
//    U = u_eff(dt):
//      pending none: amplitude = beta
//      pending {i}:  amplitude = sqrt(g) G_i beta,
//                    G_i = sum_{e in (b, d_i]} w_i(e) sig_t[k-e]
//      pending {i,j}: amplitude = g Z beta, Z the ordered, kernel-
//                    symmetrized double emission sum
//    with w_i(e) = dt h_i[d_i - e] plus the symbolic delta of reflect-type
//    channels at e = d_i. Every cache updates per step by conjugation with U
//    plus O(1) boundary-slice terms; detection probes reduce to small matrix
//    sums. This system feeds all probabilities and collapse amplitudes, and
//    must match the direct-quadrature evaluator (engine_direct.hpp) to near
//    machine precision.
//
// 2. Report system: boundary branch states psi^A(b) updated only by the
//    one-step propagator and by absorption slices sigma U psi as the
//    boundary sweeps emission times; this is what conditioned_state()
//    exposes. It is exact for any number of in-window detections (branches
//    are cheap vectors), so the reported mixture stays correct even when the
//    amplitude system has to approximate.
//
// Third detections. While two detections sit in the amplitude window, the
// probe amplitude of the branch with both emissions pending would need
// triple integrals; it is computed instead with a shortened response: the
// new emission is ordered after both pending ones and its kernel is
// truncated to half support. Branches with at most one pending emission keep
// exact probes. If a third detection fires, the amplitude branches are
// coherently merged into a single chain before it is recorded (the report
// system is untouched). Events are counted; the strict policy raises
// window_overflow for clustered triples instead.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmqt/algebra.hpp"
#include "nmqt/atom.hpp"
#include "nmqt/channels.hpp"
#include "nmqt/errors.hpp"
#include "nmqt/rng.hpp"

namespace nmqt {

struct DetectionRecord {
    double t = 0.0;
    std::string channel;
};

struct EngineSetup {
    AtomParams atom;
    double dt = 0.0;
    double t_m = 0.0;
    std::vector<ChannelResponse> channels;
    bool strict_window = false;

    void validate() const {
        atom.validate();
        if (!(dt > 0.0) || !(t_m > 0.0)) throw config_error("EngineSetup: dt, t_m must be > 0");
        if (channels.empty()) throw config_error("EngineSetup: need at least one channel");
        for (const auto& ch : channels) {
            if (std::abs(ch.dt - dt) > 1e-12 * dt)
                throw config_error("EngineSetup: channel grid spacing differs from engine dt");
            if (ch.kernel.size() * 2 < std::size_t(std::llround(t_m / dt)))
                throw config_error("EngineSetup: channel kernel shorter than the memory window");
        }
    }
};

// Immutable per-configuration tables, shareable across trajectory workers.
class EngineTables {
  public:
    EngineTables(const EngineSetup& setup) : setup_(setup) {
        setup_.validate();
        dt_ = setup.dt;
        m_ = std::size_t(std::llround(setup.t_m / setup.dt));
        if (m_ < 2) throw config_error("EngineTables: window must span at least 2 steps");
        gamma_ = setup.atom.gamma;
        sqrt_gamma_ = std::sqrt(gamma_);

        u1_ = u_eff(dt_, setup.atom);
        u1_inv_ = u1_.inverse();

        u_pow_.resize(m_ + 1);
        u_inv_pow_.resize(m_ + 1);
        sig_t_.resize(m_ + 1);
        u_pow_[0] = cmat2::identity();
        u_inv_pow_[0] = cmat2::identity();
        sig_t_[0] = sigma_minus();
        for (std::size_t j = 1; j <= m_; ++j) {
            u_pow_[j] = u1_ * u_pow_[j - 1];
            u_inv_pow_[j] = u1_inv_ * u_inv_pow_[j - 1];
            sig_t_[j] = u_pow_[j] * sigma_minus() * u_inv_pow_[j];
        }

        const std::size_t nch = setup.channels.size();
        kern_.resize(nch);
        delta_.resize(nch);
        labels_.resize(nch);
        k_pre_.resize(nch);
        pair_c_.resize(nch);
        for (std::size_t n = 0; n < nch; ++n) {
            const auto& ch = setup.channels[n];
            labels_[n] = ch.label.empty() ? ("ch" + std::to_string(n)) : ch.label;
            delta_[n] = ch.delta_coeff;
            kern_[n].assign(m_, cplx{0.0, 0.0});
            for (std::size_t j = 0; j < m_ && j < ch.kernel.size(); ++j)
                kern_[n][j] = ch.kernel[j];

            k_pre_[n].resize(m_ + 1);
            k_pre_[n][0] = cmat2::zero();
            for (std::size_t j = 0; j < m_; ++j)
                k_pre_[n][j + 1] = k_pre_[n][j] + (dt_ * kern_[n][j]) * sig_t_[j];

            // pair_c[n][l]: full-window probe-pair sum against a pending
            // emission at lag l, covering both time orderings of the new
            // emission: K_pre[n][l] sig_t[l] + sig_t[l] (K_pre[n][M] - K_pre[n][l+1]).
            pair_c_[n].resize(m_);
            for (std::size_t l = 0; l < m_; ++l)
                pair_c_[n][l] = k_pre_[n][l] * sig_t_[l] +
                                sig_t_[l] * (k_pre_[n][m_] - k_pre_[n][l + 1]);
        }
    }

    const EngineSetup& setup() const { return setup_; }
    double dt() const { return dt_; }
    std::size_t window_steps() const { return m_; }
    std::size_t half_window() const { return m_ / 2; }
    std::size_t n_channels() const { return kern_.size(); }
    const std::string& label(std::size_t n) const { return labels_[n]; }
    double gamma() const { return gamma_; }
    double sqrt_gamma() const { return sqrt_gamma_; }

    const cmat2& u1() const { return u1_; }
    const cmat2& u1_inv() const { return u1_inv_; }
    const cmat2& u_pow(std::size_t j) const { return u_pow_[j]; }
    const cmat2& u_inv_pow(std::size_t j) const { return u_inv_pow_[j]; }
    const cmat2& sig_t(std::size_t j) const { return sig_t_[j]; }
    const cmat2& k_pre(std::size_t n, std::size_t m) const { return k_pre_[n][m]; }
    const cmat2& pair_c(std::size_t n, std::size_t l) const { return pair_c_[n][l]; }
    cplx delta(std::size_t n) const { return delta_[n]; }
    const std::vector<cplx>& kernel(std::size_t n) const { return kern_[n]; }

    // Emission weight at lag `lag` behind a detection: the sampled kernel
    // mass dt h[lag] plus the symbolic delta at lag 0.
    cplx weight(std::size_t n, std::size_t lag) const {
        cplx w{0.0, 0.0};
        if (lag < m_) w = dt_ * kern_[n][lag];
        if (lag == 0) w += delta_[n];
        return w;
    }

  private:
    EngineSetup setup_;
    double dt_ = 0.0, gamma_ = 0.0, sqrt_gamma_ = 0.0;
    std::size_t m_ = 0;
    cmat2 u1_, u1_inv_;
    std::vector<cmat2> u_pow_, u_inv_pow_, sig_t_;
    std::vector<std::vector<cplx>> kern_;
    std::vector<cplx> delta_;
    std::vector<std::string> labels_;
    std::vector<std::vector<cmat2>> k_pre_;
    std::vector<std::vector<cmat2>> pair_c_;
};

struct WindowDetection {
    std::int64_t d = 0;  // grid index of the detection
    std::size_t channel = 0;
};

struct AmpBranch {
    unsigned mask = 0;  // bit i set: amplitude-window detection i absorbed
    cvec2 beta;         // chain amplitude at the current step
};

struct ReportBranch {
    unsigned mask = 0;  // bit i set: report-window detection i absorbed
    cvec2 psi;          // boundary state
};

struct EngineCounters {
    std::uint64_t shortened_probe_steps = 0;
    std::uint64_t forced_resolutions = 0;
    std::uint64_t report_folds = 0;
    std::uint64_t renormalizations = 0;
};

class Engine {
  public:
    static constexpr std::size_t report_window_cap = 6;

    Engine(const EngineTables& tables, AtomState initial = AtomState::ground())
        : t_(tables) {
        amp_.push_back(AmpBranch{0u, cvec2(initial)});
        rep_.push_back(ReportBranch{0u, cvec2(initial)});
        probs_.assign(t_.n_channels(), 0.0);
    }

    std::int64_t step_index() const { return k_; }
    std::int64_t boundary_index() const { return b_; }
    double time() const { return double(k_) * t_.dt(); }
    double boundary_time() const { return double(b_) * t_.dt(); }
    const EngineCounters& counters() const { return counters_; }
    const std::vector<AmpBranch>& amp_branches() const { return amp_; }
    const std::vector<ReportBranch>& report_branches() const { return rep_; }
    const std::vector<WindowDetection>& amp_window() const { return amp_window_; }
    const std::vector<WindowDetection>& report_window() const { return rep_window_; }
    const EngineTables& tables() const { return t_; }

    std::size_t pending_count(const AmpBranch& br) const {
        std::size_t cnt = 0;
        for (std::size_t i = 0; i < amp_window_.size(); ++i)
            if (!(br.mask >> i & 1u)) ++cnt;
        return cnt;
    }

    // Pending-resolved amplitude of one chain branch at the current step.
    cvec2 branch_amplitude(const AmpBranch& br) const {
        switch (pending_count(br)) {
            case 0: return br.beta;
            case 1: {
                std::size_t i = first_pending(br);
                return t_.sqrt_gamma() * (g_[i] * br.beta);
            }
            default: return t_.gamma() * (z_ * br.beta);
        }
    }

    // Coherent survival amplitude psi-tilde^0(t).
    cvec2 survival_state() const {
        cvec2 chi;
        for (const auto& br : amp_) chi += branch_amplitude(br);
        return chi;
    }

    // <psi-tilde^0|psi-tilde^0> in the current scaling; the per-step
    // probability denominator.
    double window_normalization() const { return survival_state().norm2(); }

    // log of the true survival norm^2, including renormalization factors.
    double log_survival_norm2() const {
        return 2.0 * log_scale_ + std::log(window_normalization());
    }

    // Unnormalized new-detection amplitude for channel n (current scaling).
    // Branches with at most one pending emission are exact; the two-pending
    // branch uses the shortened response (new emission ordered last, kernel
    // cut to half support).
    cvec2 detection_amplitude(std::size_t n) const {
        const auto fill = std::size_t(k_ - b_);
        cvec2 phi;
        for (const auto& br : amp_) {
            switch (pending_count(br)) {
                case 0:
                    phi += t_.sqrt_gamma() * (t_.k_pre(n, fill) * br.beta);
                    phi += (t_.delta(n) * t_.sqrt_gamma()) * lower(br.beta);
                    break;
                case 1: {
                    const std::size_t i = first_pending(br);
                    phi += t_.gamma() * (pair_probe(n, i) * br.beta);
                    phi += (t_.delta(n) * t_.gamma()) * lower(g_[i] * br.beta);
                    break;
                }
                default: {
                    const cvec2 pair_state = t_.gamma() * (z_ * br.beta);
                    const std::size_t cap = std::min(fill, t_.half_window());
                    phi += t_.sqrt_gamma() * (t_.k_pre(n, cap) * pair_state);
                    phi += (t_.delta(n) * t_.sqrt_gamma()) * lower(pair_state);
                    break;
                }
            }
        }
        return phi;
    }

    const std::vector<double>& last_probabilities() const { return probs_; }

    // Conditioned state at the boundary time: normalized boundary branch
    // states with attribution weights summing to 1. Each branch is weighted
    // by the squared norm of its current pending-resolved amplitude, which
    // carries the kernel factors of the record between the boundary and now;
    // weighting by the bare boundary norms instead demonstrably biases the
    // trajectory ensemble away from the reduced density matrix (see the
    // ensemble acceptance test). When a forced resolution has desynchronized
    // the two branch systems, the boundary norms are used until the window
    // clears.
    std::vector<std::pair<double, AtomState>> conditioned_state() const {
        std::vector<double> weights(rep_.size(), 0.0);
        bool aligned = amp_.size() == rep_.size();
        if (aligned)
            for (std::size_t i = 0; i < amp_.size(); ++i)
                aligned = aligned && amp_[i].mask == rep_[i].mask;
        double total = 0.0;
        for (std::size_t i = 0; i < rep_.size(); ++i) {
            weights[i] = aligned ? branch_amplitude(amp_[i]).norm2() : rep_[i].psi.norm2();
            total += weights[i];
        }
        std::vector<std::pair<double, AtomState>> mix;
        mix.reserve(rep_.size());
        for (std::size_t i = 0; i < rep_.size(); ++i) {
            const double n2 = rep_[i].psi.norm2();
            if (total > 0.0 && weights[i] > 0.0 && n2 > 0.0) {
                const double inv = 1.0 / std::sqrt(n2);
                mix.emplace_back(weights[i] / total,
                                 AtomState{rep_[i].psi.g * inv, rep_[i].psi.e * inv});
            }
        }
        if (mix.empty()) mix.emplace_back(1.0, AtomState::ground());
        return mix;
    }

    BlochVector conditioned_bloch() const {
        auto mix = conditioned_state();
        return pauli_expectations(mix);
    }

    // One step: compute probabilities, compare against the uniform draw
    // u in [0,1], record at most one detection, then advance the grid.
    std::optional<DetectionRecord> step(double u) {
        maybe_renormalize();

        const double norm2 = window_normalization();
        if (!(norm2 > 0.0))
            throw numerical_error(numerical_error::kind::underflow,
                                  "engine: survival amplitude vanished at t=" +
                                      std::to_string(time()));

        if (amp_window_.size() >= 2) ++counters_.shortened_probe_steps;
        double total_p = 0.0;
        for (std::size_t n = 0; n < t_.n_channels(); ++n) {
            const cvec2 phi = detection_amplitude(n);
            probs_[n] = t_.dt() * phi.norm2() / norm2;
            total_p += probs_[n];
        }
        if (total_p > 1.0)
            throw numerical_error(numerical_error::kind::step_size,
                                  "engine: per-step detection probability " +
                                      std::to_string(total_p) + " exceeds 1 at t=" +
                                      std::to_string(time()) + "; decrease dt");

        std::optional<DetectionRecord> rec;
        double cum = 0.0;
        for (std::size_t n = 0; n < t_.n_channels(); ++n) {
            cum += probs_[n];
            if (u < cum) {
                apply_detection(n);
                rec = DetectionRecord{time(), t_.label(n)};
                break;
            }
        }

        advance();
        return rec;
    }

    std::optional<DetectionRecord> step(Rng& rng) { return step(rng.uniform()); }

    // No-jump extension: advance one step conditioned on no detection.
    void step_no_jump() { (void)step(1.0); }

  private:
    static cvec2 lower(const cvec2& v) { return {v.e, cplx{0.0, 0.0}}; }

    std::size_t first_pending(const AmpBranch& br) const {
        for (std::size_t i = 0; i < amp_window_.size(); ++i)
            if (!(br.mask >> i & 1u)) return i;
        return amp_window_.size();
    }

    cplx det_weight(const WindowDetection& det, std::int64_t e) const {
        return t_.weight(det.channel, std::size_t(det.d - e));
    }

    // Probe-pair weave for channel n against pending amplitude-window
    // detection i: sum over the pending emission time e1 of w_i(e1) times the
    // new-emission sum over both orderings relative to e1.
    cmat2 pair_probe(std::size_t n, std::size_t i) const {
        const auto& det = amp_window_[i];
        const auto fill = std::size_t(k_ - b_);
        cmat2 acc = cmat2::zero();
        const bool full_window = (fill == t_.window_steps());
        for (std::int64_t e1 = b_ + 1; e1 <= det.d; ++e1) {
            const auto lag_k = std::size_t(k_ - e1);
            const cplx w = det_weight(det, e1);
            if (w == cplx{0.0, 0.0}) continue;
            if (full_window) {
                acc += w * t_.pair_c(n, lag_k);
            } else {
                acc += w * (t_.k_pre(n, lag_k) * t_.sig_t(lag_k) +
                            t_.sig_t(lag_k) * (t_.k_pre(n, fill) - t_.k_pre(n, lag_k + 1)));
            }
        }
        return acc;
    }

    void maybe_renormalize() {
        const double n2 = window_normalization();
        if (n2 >= 0.25 || n2 <= 0.0) return;
        const double s = std::sqrt(n2);
        const double inv = 1.0 / s;
        for (auto& br : amp_) br.beta *= inv;
        for (auto& br : rep_) br.psi *= inv;
        log_scale_ += std::log(s);
        ++counters_.renormalizations;
    }

    void apply_detection(std::size_t n) {
        const auto fill = std::size_t(k_ - b_);
        if (fill == 0) {
            // Detection at the boundary itself: only the delta term can fire
            // and its emission is already boundary-attributed.
            for (auto& br : amp_) br.beta = (t_.delta(n) * t_.sqrt_gamma()) * lower(br.beta);
            for (auto& br : rep_) br.psi = (t_.delta(n) * t_.sqrt_gamma()) * lower(br.psi);
            return;
        }

        // --- amplitude system ---
        if (amp_window_.size() >= 2) {
            if (t_.setup().strict_window &&
                std::size_t(k_ - amp_window_.front().d) < t_.half_window())
                throw numerical_error(
                    numerical_error::kind::window_overflow,
                    "engine: three detections within half a memory window at t=" +
                        std::to_string(time()) + "; decrease t_m or dt");
            force_resolve_amp();
        }

        const std::size_t slot = amp_window_.size();
        if (slot == 0) {
            cmat2 g_new = t_.k_pre(n, fill);
            g_new += t_.delta(n) * sigma_minus();
            g_.assign(1, g_new);
        } else {
            cmat2 g_new = t_.k_pre(n, fill) + t_.delta(n) * sigma_minus();
            z_ = pair_probe(n, 0) + t_.delta(n) * (sigma_minus() * g_[0]);
            g_.push_back(g_new);
        }
        amp_window_.push_back(WindowDetection{k_, n});
        const std::size_t n_amp = amp_.size();
        amp_.reserve(2 * n_amp);
        for (std::size_t ib = 0; ib < n_amp; ++ib) {
            AmpBranch twin = amp_[ib];
            twin.mask |= (1u << slot);
            twin.beta = {};
            amp_.push_back(twin);
        }

        // --- report system ---
        if (rep_window_.size() >= report_window_cap) fold_oldest_report();
        const std::size_t rslot = rep_window_.size();
        rep_window_.push_back(WindowDetection{k_, n});
        const std::size_t n_rep = rep_.size();
        rep_.reserve(2 * n_rep);
        for (std::size_t ib = 0; ib < n_rep; ++ib) {
            ReportBranch twin = rep_[ib];
            twin.mask |= (1u << rslot);
            twin.psi = {};
            rep_.push_back(twin);
        }
    }

    // Coherently merge the amplitude branches into a single chain; applied
    // before a third detection enters the amplitude window. The report
    // system keeps its full bookkeeping.
    void force_resolve_amp() {
        const cvec2 chi = survival_state();
        amp_.assign(1, AmpBranch{0u, chi});
        amp_window_.clear();
        g_.clear();
        z_ = cmat2::zero();
        ++counters_.forced_resolutions;
    }

    // Rarely-needed cap on the report branch count: coherently fold the
    // oldest report detection's attribution.
    void fold_oldest_report() {
        std::vector<ReportBranch> folded;
        folded.reserve(rep_.size() / 2 + 1);
        for (const auto& br : rep_) {
            if (!(br.mask & 1u)) continue;
            folded.push_back(br);
        }
        for (const auto& br : rep_) {
            if (br.mask & 1u) continue;
            bool merged = false;
            for (auto& dst : folded)
                if (dst.mask == (br.mask | 1u)) {
                    dst.psi += br.psi;
                    merged = true;
                    break;
                }
            if (!merged) {
                ReportBranch nb = br;
                nb.mask |= 1u;
                folded.push_back(nb);
            }
        }
        for (auto& br : folded) br.mask >>= 1;
        rep_ = std::move(folded);
        rep_window_.erase(rep_window_.begin());
        ++counters_.report_folds;
    }

    void advance() {
        const std::int64_t old_b = b_;
        const auto m = std::int64_t(t_.window_steps());
        const std::int64_t new_b = std::max<std::int64_t>(0, k_ + 1 - m);
        const bool advancing = new_b > old_b;
        const std::int64_t e = old_b + 1;  // emission index crossing the boundary

        // --- amplitude system: weaves, then chains ---
        for (auto& g : g_) g = t_.u1() * g * t_.u1_inv();
        if (amp_window_.size() == 2) z_ = t_.u1() * z_ * t_.u1_inv();
        if (advancing && !amp_window_.empty()) {
            std::vector<cplx> w(amp_window_.size());
            for (std::size_t i = 0; i < amp_window_.size(); ++i) w[i] = det_weight(amp_window_[i], e);
            for (std::size_t i = 0; i < amp_window_.size(); ++i)
                g_[i] -= w[i] * t_.sig_t(t_.window_steps());
            if (amp_window_.size() == 2) {
                z_ -= w[0] * (g_[1] * t_.sig_t(t_.window_steps()));
                z_ -= w[1] * (g_[0] * t_.sig_t(t_.window_steps()));
            }

            std::vector<cvec2> old_beta;
            old_beta.reserve(amp_.size());
            for (const auto& br : amp_) old_beta.push_back(br.beta);
            for (auto& br : amp_) br.beta = t_.u1() * br.beta;
            for (std::size_t i = 0; i < amp_window_.size(); ++i) {
                if (w[i] == cplx{0.0, 0.0}) continue;
                for (std::size_t ib = 0; ib < old_beta.size(); ++ib) {
                    if (amp_[ib].mask >> i & 1u) continue;
                    const std::size_t target = find_amp(amp_[ib].mask | (1u << i));
                    amp_[target].beta += (t_.sqrt_gamma() * w[i]) *
                                         (t_.sig_t(t_.window_steps()) * (t_.u1() * old_beta[ib]));
                }
            }
        } else {
            for (auto& br : amp_) br.beta = t_.u1() * br.beta;
        }

        // --- report system ---
        if (advancing) {
            std::vector<cvec2> old_psi;
            old_psi.reserve(rep_.size());
            for (const auto& br : rep_) old_psi.push_back(br.psi);
            for (auto& br : rep_) br.psi = t_.u1() * br.psi;
            for (std::size_t i = 0; i < rep_window_.size(); ++i) {
                const cplx w = det_weight(rep_window_[i], e);
                if (w == cplx{0.0, 0.0}) continue;
                for (std::size_t ib = 0; ib < old_psi.size(); ++ib) {
                    if (rep_[ib].mask >> i & 1u) continue;
                    const std::size_t target = find_rep(rep_[ib].mask | (1u << i));
                    rep_[target].psi += (t_.sqrt_gamma() * w) * lower(t_.u1() * old_psi[ib]);
                }
            }
        }

        ++k_;
        b_ = new_b;

        while (!amp_window_.empty() && amp_window_.front().d <= b_) retire_oldest_amp();
        while (!rep_window_.empty() && rep_window_.front().d <= b_) retire_oldest_report();
    }

    std::size_t find_amp(unsigned mask) const {
        for (std::size_t ib = 0; ib < amp_.size(); ++ib)
            if (amp_[ib].mask == mask) return ib;
        throw numerical_error(numerical_error::kind::other, "engine: amplitude branch table corrupted");
    }
    std::size_t find_rep(unsigned mask) const {
        for (std::size_t ib = 0; ib < rep_.size(); ++ib)
            if (rep_[ib].mask == mask) return ib;
        throw numerical_error(numerical_error::kind::other, "engine: report branch table corrupted");
    }

    void retire_oldest_amp() {
        std::vector<AmpBranch> kept;
        kept.reserve(amp_.size() / 2 + 1);
        for (auto& br : amp_) {
            if (!(br.mask & 1u)) continue;  // pending-side branch dies with empty support
            br.mask >>= 1;
            kept.push_back(br);
        }
        amp_ = std::move(kept);
        amp_window_.erase(amp_window_.begin());
        g_.erase(g_.begin());
        z_ = cmat2::zero();
    }

    void retire_oldest_report() {
        std::vector<ReportBranch> kept;
        kept.reserve(rep_.size() / 2 + 1);
        for (auto& br : rep_) {
            if (!(br.mask & 1u)) continue;
            br.mask >>= 1;
            kept.push_back(br);
        }
        rep_ = std::move(kept);
        rep_window_.erase(rep_window_.begin());
    }

    const EngineTables& t_;
    std::int64_t k_ = 0;
    std::int64_t b_ = 0;
    std::vector<AmpBranch> amp_;
    std::vector<WindowDetection> amp_window_;
    std::vector<cmat2> g_;     // one weave per amplitude-window detection
    cmat2 z_ = cmat2::zero();  // pair weave, used when two detections are pending
    std::vector<ReportBranch> rep_;
    std::vector<WindowDetection> rep_window_;
    std::vector<double> probs_;
    double log_scale_ = 0.0;
    EngineCounters counters_;
};

} // namespace nmqt
