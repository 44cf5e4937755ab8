#pragma once

// Whole-trajectory runs for both simulation methods, sharing one output
// schema: an ordered detection record, sampled conditioned Bloch traces, and
// per-step channel probabilities at the trace stride.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "nmqt/cascaded.hpp"
#include "nmqt/engine.hpp"
#include "nmqt/errors.hpp"
#include "nmqt/rng.hpp"

namespace nmqt {

struct TraceSample {
    double t = 0.0;           // probe time of the sampled step
    double t_boundary = 0.0;  // time the Bloch values refer to (t - t_m for the
                              // non-Markovian engine, t for the cascaded reference)
    BlochVector bloch;
    std::vector<double> probs;  // per-channel detection probabilities at t
};

struct RunSpec {
    double duration = 0.0;               // time horizon (hard cap in target mode)
    std::uint64_t target_detections = 0; // 0: run to duration
    double burn_in = -1.0;               // detections before this are dropped; <0: t_m
    std::size_t trace_stride = 10;       // 0: no trace
    std::uint64_t seed = 1;
    AtomState initial = AtomState::ground();

    void validate() const {
        if (duration < 0.0) throw config_error("RunSpec: duration must be >= 0");
        if (target_detections > 0 && duration == 0.0)
            throw config_error("RunSpec: target_detections needs a duration cap");
    }
};

struct TrajectoryOutput {
    std::vector<DetectionRecord> detections;  // post burn-in
    std::vector<TraceSample> trace;
    std::vector<std::string> channel_labels;
    double dt = 0.0;
    double t_m = 0.0;
    double burn_in = 0.0;
    double duration = 0.0;  // simulated probe time
    std::uint64_t seed = 0;
    std::uint64_t total_steps = 0;
    std::uint64_t detections_total = 0;  // including burn-in
    EngineCounters counters;
    double truncation_occupancy = 0.0;  // cascaded only
};

inline TrajectoryOutput run_nm_trajectory(const EngineTables& tables, const RunSpec& spec) {
    spec.validate();
    Engine eng(tables, spec.initial);
    Rng rng(spec.seed);

    TrajectoryOutput out;
    out.dt = tables.dt();
    out.t_m = double(tables.window_steps()) * tables.dt();
    out.burn_in = spec.burn_in < 0.0 ? out.t_m : spec.burn_in;
    out.seed = spec.seed;
    for (std::size_t n = 0; n < tables.n_channels(); ++n)
        out.channel_labels.push_back(tables.label(n));

    const auto cap = std::uint64_t(std::llround(spec.duration / tables.dt()));
    std::uint64_t kept = 0;
    for (std::uint64_t k = 0; k < cap; ++k) {
        auto rec = eng.step(rng);
        if (rec) {
            ++out.detections_total;
            if (rec->t >= out.burn_in) {
                out.detections.push_back(*rec);
                ++kept;
            }
        }
        if (spec.trace_stride > 0 && (k + 1) % spec.trace_stride == 0) {
            out.trace.push_back(TraceSample{eng.time(), eng.boundary_time(),
                                            eng.conditioned_bloch(), eng.last_probabilities()});
        }
        if (spec.target_detections > 0 && kept >= spec.target_detections) {
            out.total_steps = k + 1;
            break;
        }
    }
    if (out.total_steps == 0) out.total_steps = cap;
    out.duration = double(out.total_steps) * tables.dt();
    out.counters = eng.counters();
    return out;
}

inline TrajectoryOutput run_cascaded_trajectory(const CascadedSetup& setup, const RunSpec& spec) {
    spec.validate();
    CascadedEngine eng(setup, spec.initial);
    Rng rng(spec.seed);

    TrajectoryOutput out;
    out.dt = setup.dt;
    out.t_m = 0.0;
    out.burn_in = spec.burn_in < 0.0 ? 1.0 / setup.atom.gamma : spec.burn_in;
    out.seed = spec.seed;
    out.channel_labels = {"T", "R"};

    const auto cap = std::uint64_t(std::llround(spec.duration / setup.dt));
    std::uint64_t kept = 0;
    for (std::uint64_t k = 0; k < cap; ++k) {
        auto rec = eng.step(rng);
        if (rec) {
            ++out.detections_total;
            if (rec->t >= out.burn_in) {
                out.detections.push_back(*rec);
                ++kept;
            }
        }
        if (spec.trace_stride > 0 && (k + 1) % spec.trace_stride == 0) {
            out.trace.push_back(
                TraceSample{eng.time(), eng.time(), eng.atom_bloch(), eng.last_probabilities()});
        }
        if (spec.target_detections > 0 && kept >= spec.target_detections) {
            out.total_steps = k + 1;
            break;
        }
    }
    if (out.total_steps == 0) out.total_steps = cap;
    out.duration = double(out.total_steps) * setup.dt;
    out.truncation_occupancy = eng.truncation_occupancy();
    return out;
}

// ---------------------------------------------------------------------------
// Serialization. Detections as JSONL ({"t": ..., "channel": "..."} per line),
// traces as CSV. Times are written in the caller's unit system via
// time_scale (engine-internal time * time_scale = user time).

inline void write_detections_jsonl(const std::vector<DetectionRecord>& records, std::ostream& os,
                                   double time_scale = 1.0, int trajectory_index = -1) {
    os.precision(17);
    for (const auto& r : records) {
        os << "{";
        if (trajectory_index >= 0) os << "\"traj\":" << trajectory_index << ",";
        os << "\"t\":" << r.t * time_scale << ",\"channel\":\"" << r.channel << "\"}\n";
    }
}

inline void write_trace_csv(const TrajectoryOutput& out, std::ostream& os,
                            double time_scale = 1.0) {
    os << "t,t_boundary,sx,sy,sz";
    for (const auto& l : out.channel_labels) os << ",p_" << l;
    os << "\n";
    os.precision(12);
    for (const auto& s : out.trace) {
        os << s.t * time_scale << "," << s.t_boundary * time_scale << "," << s.bloch.sx << ","
           << s.bloch.sy << "," << s.bloch.sz;
        for (double p : s.probs) os << "," << p;
        os << "\n";
    }
}

} // namespace nmqt
