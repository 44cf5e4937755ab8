#pragma once

// Markovian quantum-jump reference for the filter experiment: the atom
// cascaded into the filter cavity, evolved as one extended system in the
// product basis |atom> x |Fock m>, m <= n_max. Unidirectional coupling:
//
//   H_eff = H_atom + (nu - i kappa) a^dag a
//           - i (gamma/2 sigma^dag sigma + sqrt(gamma kappa) sigma a^dag)
//
// with collapse operators C_T = sqrt(kappa) a (transmitted photon) and
// C_R = sqrt(kappa) a + sqrt(gamma) sigma (reflected; the interference of
// the direct mirror reflection with the intracavity field). The norm-decay
// bookkeeping ||C_T psi||^2 + ||C_R psi||^2 equals the anti-Hermitian part
// of H_eff, cross term included.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nmqt/algebra.hpp"
#include "nmqt/atom.hpp"
#include "nmqt/engine.hpp"  // DetectionRecord
#include "nmqt/errors.hpp"
#include "nmqt/rng.hpp"

namespace nmqt {

struct CascadedSetup {
    AtomParams atom;
    double kappa = 5.0;
    double nu = 0.0;
    std::size_t n_max = 4;
    double dt = 0.005;

    void validate() const {
        atom.validate();
        if (!(kappa > 0.0)) throw config_error("CascadedSetup: kappa must be > 0");
        if (n_max < 2) throw config_error("CascadedSetup: n_max must be >= 2");
        if (!(dt > 0.0)) throw config_error("CascadedSetup: dt must be > 0");
    }

    std::size_t dim() const { return 2 * (n_max + 1); }
    std::size_t index(int excited, std::size_t m) const {
        return std::size_t(excited) * (n_max + 1) + m;
    }
};

// H_eff of the cascaded atom+cavity in the product basis (non-Hermitian).
// Accepts zero rates so limits are testable; the stepping engine validates.
inline cmat build_heff(const CascadedSetup& s) {
    if (s.n_max < 2) throw config_error("build_heff: n_max must be >= 2");
    const std::size_t d = s.dim();
    cmat h(d);
    const double om = s.atom.omega_rabi, g = s.atom.gamma, k = s.kappa, nu = s.nu;
    for (std::size_t m = 0; m <= s.n_max; ++m) {
        // drive (Omega/2)(|e><g| + |g><e|)
        h(s.index(1, m), s.index(0, m)) += om / 2.0;
        h(s.index(0, m), s.index(1, m)) += om / 2.0;
        // cavity detuning and decay
        h(s.index(0, m), s.index(0, m)) += cplx{nu, -k} * double(m);
        h(s.index(1, m), s.index(1, m)) += cplx{nu, -k} * double(m);
        // atom decay
        h(s.index(1, m), s.index(1, m)) += cplx{0.0, -g / 2.0};
        // unidirectional coupling -i sqrt(gamma kappa) sigma a^dag : |e,m> -> |g,m+1>
        if (m + 1 <= s.n_max)
            h(s.index(0, m + 1), s.index(1, m)) += cplx{0.0, -std::sqrt(g * k) * std::sqrt(double(m + 1))};
    }
    return h;
}

inline cvec apply_cavity_lowering(const CascadedSetup& s, const cvec& psi) {
    cvec out(psi.size(), cplx{0.0, 0.0});
    for (int e = 0; e < 2; ++e)
        for (std::size_t m = 1; m <= s.n_max; ++m)
            out[s.index(e, m - 1)] = std::sqrt(double(m)) * psi[s.index(e, m)];
    return out;
}

inline cvec apply_atom_lowering(const CascadedSetup& s, const cvec& psi) {
    cvec out(psi.size(), cplx{0.0, 0.0});
    for (std::size_t m = 0; m <= s.n_max; ++m) out[s.index(0, m)] = psi[s.index(1, m)];
    return out;
}

inline cvec apply_collapse_t(const CascadedSetup& s, const cvec& psi) {
    cvec out = apply_cavity_lowering(s, psi);
    const double sk = std::sqrt(s.kappa);
    for (auto& x : out) x *= sk;
    return out;
}

inline cvec apply_collapse_r(const CascadedSetup& s, const cvec& psi) {
    cvec a = apply_cavity_lowering(s, psi);
    cvec sg = apply_atom_lowering(s, psi);
    const double sk = std::sqrt(s.kappa), sgam = std::sqrt(s.atom.gamma);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = sk * a[i] + sgam * sg[i];
    return a;
}

class CascadedEngine {
  public:
    explicit CascadedEngine(const CascadedSetup& setup, AtomState atom_initial = AtomState::ground())
        : s_(setup) {
        s_.validate();
        cmat h = build_heff(s_);
        cmat gen(h.n);
        for (std::size_t i = 0; i < h.a.size(); ++i) gen.a[i] = -I_UNIT * h.a[i] * s_.dt;
        u_step_ = expm(gen);
        psi_.assign(s_.dim(), cplx{0.0, 0.0});
        psi_[s_.index(0, 0)] = atom_initial.amp_g;  // atom state, cavity vacuum
        psi_[s_.index(1, 0)] = atom_initial.amp_e;
    }

    std::int64_t step_index() const { return k_; }
    double time() const { return double(k_) * s_.dt; }
    const cvec& state() const { return psi_; }
    const CascadedSetup& setup() const { return s_; }

    double jump_probability_t() const { return s_.dt * vnorm2(apply_collapse_t(s_, psi_)) / vnorm2(psi_); }
    double jump_probability_r() const { return s_.dt * vnorm2(apply_collapse_r(s_, psi_)) / vnorm2(psi_); }

    // Population of the truncation level n_max, time-averaged over the run.
    double truncation_occupancy() const {
        return occupancy_steps_ > 0 ? occupancy_sum_ / double(occupancy_steps_) : 0.0;
    }

    BlochVector atom_bloch() const {
        cplx ge{0.0, 0.0};
        double pg = 0.0, pe = 0.0;
        for (std::size_t m = 0; m <= s_.n_max; ++m) {
            const cplx g = psi_[s_.index(0, m)], e = psi_[s_.index(1, m)];
            ge += std::conj(g) * e;
            pg += std::norm(g);
            pe += std::norm(e);
        }
        const double n2 = pg + pe;
        return {2.0 * ge.real() / n2, 2.0 * ge.imag() / n2, (pe - pg) / n2};
    }

    double mean_photon_number() const {
        double acc = 0.0, n2 = 0.0;
        for (int e = 0; e < 2; ++e)
            for (std::size_t m = 0; m <= s_.n_max; ++m) {
                const double w = std::norm(psi_[s_.index(e, m)]);
                acc += double(m) * w;
                n2 += w;
            }
        return acc / n2;
    }

    std::vector<double> last_probabilities() const { return {p_t_, p_r_}; }

    std::optional<DetectionRecord> step(double u) {
        const double n2 = vnorm2(psi_);
        const cvec jump_t = apply_collapse_t(s_, psi_);
        const cvec jump_r = apply_collapse_r(s_, psi_);
        p_t_ = s_.dt * vnorm2(jump_t) / n2;
        p_r_ = s_.dt * vnorm2(jump_r) / n2;
        if (p_t_ + p_r_ > 0.1)
            throw numerical_error(numerical_error::kind::step_size,
                                  "cascaded: jump probability per step exceeds 0.1; decrease dt");

        // truncation monitor
        double top = 0.0;
        for (int e = 0; e < 2; ++e) top += std::norm(psi_[s_.index(e, s_.n_max)]);
        occupancy_sum_ += top / n2;
        ++occupancy_steps_;

        std::optional<DetectionRecord> rec;
        if (u < p_t_) {
            psi_ = jump_t;
            rec = DetectionRecord{time(), "T"};
        } else if (u < p_t_ + p_r_) {
            psi_ = jump_r;
            rec = DetectionRecord{time(), "R"};
        } else {
            psi_ = u_step_ * psi_;
        }
        const double nn = vnorm2(psi_);
        if (nn < 0.25 && nn > 0.0) {
            const double inv = 1.0 / std::sqrt(nn);
            for (auto& x : psi_) x *= inv;
        }
        ++k_;
        return rec;
    }

    std::optional<DetectionRecord> step(Rng& rng) { return step(rng.uniform()); }

  private:
    CascadedSetup s_;
    cmat u_step_;
    cvec psi_;
    std::int64_t k_ = 0;
    double p_t_ = 0.0, p_r_ = 0.0;
    double occupancy_sum_ = 0.0;
    std::uint64_t occupancy_steps_ = 0;
};

} // namespace nmqt
