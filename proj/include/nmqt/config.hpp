#pragma once

// Experiment configuration: a single JSON document (nested key/value) plus
// flag overrides from the CLI. Every run echoes its resolved configuration
// into the output directory so each result is reproducible from its
// artifacts alone.
//
// Rates may be given in any unit system; everything is rescaled to gamma = 1
// internally and times in output files are scaled back.

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "nmqt/cascaded.hpp"
#include "nmqt/channels.hpp"
#include "nmqt/engine.hpp"
#include "nmqt/errors.hpp"
#include "nmqt/trajectory.hpp"

namespace nmqt {

enum class Mode {
    nm_filter,
    nm_prism,
    cascaded_filter,
    oracle_bloch,
    oracle_spectrum,
    analyze,
    compare,
};

inline std::string to_string(Mode m) {
    switch (m) {
        case Mode::nm_filter: return "nm-filter";
        case Mode::nm_prism: return "nm-prism";
        case Mode::cascaded_filter: return "cascaded-filter";
        case Mode::oracle_bloch: return "oracle-bloch";
        case Mode::oracle_spectrum: return "oracle-spectrum";
        case Mode::analyze: return "analyze";
        case Mode::compare: return "compare";
    }
    return "?";
}

inline Mode mode_from_string(const std::string& s) {
    for (Mode m : {Mode::nm_filter, Mode::nm_prism, Mode::cascaded_filter, Mode::oracle_bloch,
                   Mode::oracle_spectrum, Mode::analyze, Mode::compare})
        if (to_string(m) == s) return m;
    throw config_error("unknown mode '" + s + "'");
}

struct PhysicsConfig {
    double gamma = 1.0;
    double omega_rabi = 10.0;
    double kappa = 5.0;   // filter line width
    double nu = 0.0;      // filter center
    double band_half_width = 5.0;               // prism: half of each band width
    std::vector<double> band_centers = {};      // prism: defaults to {-Omega, 0, +Omega}
    double t_m = -1.0;                          // memory time; <0: 1/gamma
    double dt = -1.0;                           // grid step; <0: t_m/200
    std::size_t n_max = 4;                      // cascaded Fock truncation
    double prism_taper = 0.5;
    double prism_transition = 0.0;
};

struct RunConfig {
    double duration = 0.0;
    std::uint64_t target_detections = 0;
    std::size_t n_trajectories = 1;
    std::optional<std::uint64_t> seed;  // mandatory: no wall-clock default
    std::size_t trace_stride = 10;
    std::size_t n_workers = 0;  // 0: hardware default
    double burn_in = -1.0;
    bool strict_window = false;
};

struct IoConfig {
    std::string out_dir = "out";
    std::vector<std::string> inputs;  // analyze/compare input files
    std::vector<std::string> calib;   // compare: extra files for the noise floor
    std::size_t histogram_bins = 100;
    double histogram_t_max = -1.0;  // <0: 5/gamma
};

struct ExperimentConfig {
    Mode mode = Mode::nm_filter;
    PhysicsConfig physics;
    RunConfig run;
    IoConfig io;

    bool needs_seed() const {
        return mode == Mode::nm_filter || mode == Mode::nm_prism || mode == Mode::cascaded_filter;
    }

    void validate() const {
        if (!(physics.gamma > 0.0)) throw config_error("physics.gamma must be > 0");
        if (physics.omega_rabi < 0.0) throw config_error("physics.omega_rabi must be >= 0");
        if (!(physics.kappa > 0.0)) throw config_error("physics.kappa must be > 0");
        if (!(physics.band_half_width > 0.0))
            throw config_error("physics.band_half_width must be > 0");
        if (physics.n_max < 2) throw config_error("physics.n_max must be >= 2");
        if (needs_seed()) {
            if (!run.seed.has_value())
                throw config_error("run.seed is required (runs are seeded, never wall-clock)");
            if (run.n_trajectories < 1) throw config_error("run.n_trajectories must be >= 1");
            if (!(run.duration > 0.0)) throw config_error("run.duration must be > 0");
        }
        if (mode == Mode::analyze && io.inputs.size() != 1)
            throw config_error("analyze needs exactly one input detections file (io.inputs)");
        if (mode == Mode::compare && io.inputs.size() != 2)
            throw config_error("compare needs exactly two input detections files (io.inputs)");
    }

    // --- derived, in internal units (gamma = 1) ---
    double time_scale() const { return 1.0 / physics.gamma; }  // internal -> user time
    double omega_internal() const { return physics.omega_rabi / physics.gamma; }
    double kappa_internal() const { return physics.kappa / physics.gamma; }
    double nu_internal() const { return physics.nu / physics.gamma; }
    double t_m_internal() const {
        return physics.t_m > 0.0 ? physics.t_m * physics.gamma : 1.0;
    }
    double dt_internal() const {
        return physics.dt > 0.0 ? physics.dt * physics.gamma : t_m_internal() / 200.0;
    }
    double duration_internal() const { return run.duration * physics.gamma; }
    double burn_in_internal() const {
        return run.burn_in < 0.0 ? t_m_internal() : run.burn_in * physics.gamma;
    }
    double histogram_t_max_internal() const {
        return io.histogram_t_max > 0.0 ? io.histogram_t_max * physics.gamma : 5.0;
    }
    std::vector<double> band_centers_internal() const {
        if (!physics.band_centers.empty()) {
            std::vector<double> c;
            for (double v : physics.band_centers) c.push_back(v / physics.gamma);
            return c;
        }
        const double om = omega_internal();
        return {-om, 0.0, om};
    }

    AtomParams atom_internal() const { return {1.0, omega_internal()}; }

    EngineSetup engine_setup() const {
        EngineSetup s;
        s.atom = atom_internal();
        s.dt = dt_internal();
        s.t_m = t_m_internal();
        s.strict_window = run.strict_window;
        if (mode == Mode::nm_prism) {
            const auto centers = band_centers_internal();
            if (centers.size() != 3)
                throw config_error("physics.band_centers must list 3 centers (L, C, R)");
            const char* labels[3] = {"L", "C", "R"};
            PrismOptions opt{physics.prism_taper, physics.prism_transition / physics.gamma};
            for (std::size_t i = 0; i < 3; ++i)
                s.channels.push_back(
                    prism_response(centers[i], 2.0 * physics.band_half_width / physics.gamma,
                                   s.dt, s.t_m, opt, labels[i]));
            std::vector<double> grid;
            const double hi = std::abs(centers.back()) + 2.0 * physics.band_half_width / physics.gamma;
            for (double w = -hi; w <= hi; w += 0.05) grid.push_back(w);
            normalize_channel_bank(s.channels, grid);
        } else {
            auto [tr, re] = filter_responses(kappa_internal(), nu_internal(), s.dt, s.t_m);
            s.channels = {tr, re};
        }
        return s;
    }

    CascadedSetup cascaded_setup() const {
        CascadedSetup s;
        s.atom = atom_internal();
        s.kappa = kappa_internal();
        s.nu = nu_internal();
        s.n_max = physics.n_max;
        s.dt = dt_internal();
        return s;
    }

    RunSpec run_spec(std::uint64_t seed) const {
        RunSpec r;
        r.duration = duration_internal();
        r.target_detections = run.target_detections;
        r.burn_in = burn_in_internal();
        r.trace_stride = run.trace_stride;
        r.seed = seed;
        return r;
    }
};

// --- JSON (de)serialization ------------------------------------------------

inline nlohmann::json to_json(const ExperimentConfig& c) {
    nlohmann::json j;
    j["mode"] = to_string(c.mode);
    j["physics"] = {{"gamma", c.physics.gamma},
                    {"omega_rabi", c.physics.omega_rabi},
                    {"kappa", c.physics.kappa},
                    {"nu", c.physics.nu},
                    {"band_half_width", c.physics.band_half_width},
                    {"band_centers", c.physics.band_centers},
                    {"t_m", c.physics.t_m},
                    {"dt", c.physics.dt},
                    {"n_max", c.physics.n_max},
                    {"prism_taper", c.physics.prism_taper},
                    {"prism_transition", c.physics.prism_transition}};
    j["run"] = {{"duration", c.run.duration},
                {"target_detections", c.run.target_detections},
                {"n_trajectories", c.run.n_trajectories},
                {"trace_stride", c.run.trace_stride},
                {"n_workers", c.run.n_workers},
                {"burn_in", c.run.burn_in},
                {"strict_window", c.run.strict_window}};
    if (c.run.seed) j["run"]["seed"] = *c.run.seed;
    j["io"] = {{"out_dir", c.io.out_dir},
               {"inputs", c.io.inputs},
               {"calib", c.io.calib},
               {"histogram_bins", c.io.histogram_bins},
               {"histogram_t_max", c.io.histogram_t_max}};
    return j;
}

namespace config_detail {

template <class T>
void fetch(const nlohmann::json& j, const char* section, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string(section) + "." + key + ": " + e.what());
    }
}

} // namespace config_detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    using config_detail::fetch;
    ExperimentConfig c;
    if (j.contains("mode")) c.mode = mode_from_string(j.at("mode").get<std::string>());
    if (j.contains("physics")) {
        const auto& p = j.at("physics");
        fetch(p, "physics", "gamma", c.physics.gamma);
        fetch(p, "physics", "omega_rabi", c.physics.omega_rabi);
        fetch(p, "physics", "kappa", c.physics.kappa);
        fetch(p, "physics", "nu", c.physics.nu);
        fetch(p, "physics", "band_half_width", c.physics.band_half_width);
        fetch(p, "physics", "band_centers", c.physics.band_centers);
        fetch(p, "physics", "t_m", c.physics.t_m);
        fetch(p, "physics", "dt", c.physics.dt);
        fetch(p, "physics", "n_max", c.physics.n_max);
        fetch(p, "physics", "prism_taper", c.physics.prism_taper);
        fetch(p, "physics", "prism_transition", c.physics.prism_transition);
    }
    if (j.contains("run")) {
        const auto& r = j.at("run");
        fetch(r, "run", "duration", c.run.duration);
        fetch(r, "run", "target_detections", c.run.target_detections);
        fetch(r, "run", "n_trajectories", c.run.n_trajectories);
        if (r.contains("seed")) c.run.seed = r.at("seed").get<std::uint64_t>();
        fetch(r, "run", "trace_stride", c.run.trace_stride);
        fetch(r, "run", "n_workers", c.run.n_workers);
        fetch(r, "run", "burn_in", c.run.burn_in);
        fetch(r, "run", "strict_window", c.run.strict_window);
    }
    if (j.contains("io")) {
        const auto& o = j.at("io");
        fetch(o, "io", "out_dir", c.io.out_dir);
        fetch(o, "io", "inputs", c.io.inputs);
        fetch(o, "io", "calib", c.io.calib);
        fetch(o, "io", "histogram_bins", c.io.histogram_bins);
        fetch(o, "io", "histogram_t_max", c.io.histogram_t_max);
    }
    return c;
}

inline ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open config file " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::parse_error& e) {
        throw config_error("config parse error in " + path + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace nmqt
