#pragma once

// Experiment orchestration: dispatch a resolved configuration to the right
// engine or oracle, run trajectory batches on a worker pool, and write the
// output artifacts. Batches derive one seed per trajectory from the master
// seed, and aggregation is an index-ordered reduce, so results do not depend
// on worker count or scheduling.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "nmqt/analysis.hpp"
#include "nmqt/config.hpp"
#include "nmqt/oracles.hpp"
#include "nmqt/trajectory.hpp"

namespace nmqt {

struct BatchResult {
    std::vector<TrajectoryOutput> trajectories;  // index-ordered
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> worker_errors;  // empty on success
};

// Run n_trajectories of `work` on a pool; work(i, seed_i) -> TrajectoryOutput.
template <class Work>
BatchResult run_batch_generic(std::size_t n_trajectories, std::uint64_t master_seed,
                              std::size_t n_workers, Work work) {
    BatchResult result;
    result.trajectories.resize(n_trajectories);
    result.seeds.resize(n_trajectories);
    for (std::size_t i = 0; i < n_trajectories; ++i)
        result.seeds[i] = derive_seed(master_seed, i);

    if (n_workers == 0)
        n_workers = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    n_workers = std::min(n_workers, n_trajectories);

    std::atomic<std::size_t> next{0};
    std::vector<std::string> errors(n_trajectories);
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_trajectories) return;
            try {
                result.trajectories[i] = work(i, result.seeds[i]);
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    for (std::size_t i = 0; i < n_trajectories; ++i)
        if (!errors[i].empty())
            result.worker_errors.push_back("trajectory " + std::to_string(i) + ": " + errors[i]);
    return result;
}

inline BatchResult run_batch(const ExperimentConfig& cfg) {
    cfg.validate();
    const std::uint64_t master = *cfg.run.seed;
    if (cfg.mode == Mode::cascaded_filter) {
        const CascadedSetup setup = cfg.cascaded_setup();
        return run_batch_generic(cfg.run.n_trajectories, master, cfg.run.n_workers,
                                 [&](std::size_t, std::uint64_t seed) {
                                     return run_cascaded_trajectory(setup, cfg.run_spec(seed));
                                 });
    }
    const EngineTables tables(cfg.engine_setup());
    return run_batch_generic(cfg.run.n_trajectories, master, cfg.run.n_workers,
                             [&](std::size_t, std::uint64_t seed) {
                                 return run_nm_trajectory(tables, cfg.run_spec(seed));
                             });
}

// ---------------------------------------------------------------------------
// Artifact writing

namespace runner_detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw config_error("cannot write " + path.string());
    f << text;
}

inline nlohmann::json summary_json(const ExperimentConfig& cfg, const BatchResult& batch) {
    const double ts = cfg.time_scale();
    nlohmann::json j;
    j["mode"] = to_string(cfg.mode);
    j["n_trajectories"] = batch.trajectories.size();
    j["seeds"] = batch.seeds;

    std::uint64_t steps = 0, total_dets = 0;
    double duration = 0.0;
    ChannelCounts counts;
    EngineCounters counters;
    double trunc = 0.0;
    for (const auto& tr : batch.trajectories) {
        steps += tr.total_steps;
        total_dets += tr.detections_total;
        duration += tr.duration;
        for (const auto& r : tr.detections) {
            ++counts.counts[r.channel];
            ++counts.total;
        }
        counters.shortened_probe_steps += tr.counters.shortened_probe_steps;
        counters.forced_resolutions += tr.counters.forced_resolutions;
        counters.report_folds += tr.counters.report_folds;
        counters.renormalizations += tr.counters.renormalizations;
        trunc = std::max(trunc, tr.truncation_occupancy);
    }
    j["total_steps"] = steps;
    j["simulated_time"] = duration * ts;
    j["detections_total"] = total_dets;
    j["detections_kept"] = counts.total;
    nlohmann::json per_channel = nlohmann::json::object();
    for (const auto& [ch, n] : counts.counts) {
        per_channel[ch] = {{"count", n},
                           {"fraction", counts.fraction(ch)},
                           {"fraction_stderr", counts.fraction_stderr(ch)}};
    }
    j["channels"] = per_channel;
    if (counts.total > 0 && duration > 0.0) {
        double counted_time = 0.0;
        for (const auto& tr : batch.trajectories)
            counted_time += std::max(tr.duration - tr.burn_in, 0.0) * ts;
        if (counted_time > 0.0) j["detection_rate"] = double(counts.total) / counted_time;
    }
    j["engine"] = {{"shortened_probe_steps", counters.shortened_probe_steps},
                   {"forced_resolutions", counters.forced_resolutions},
                   {"report_folds", counters.report_folds},
                   {"renormalizations", counters.renormalizations}};
    if (cfg.mode == Mode::cascaded_filter) j["truncation_occupancy_max"] = trunc;
    return j;
}

} // namespace runner_detail

// Write the standard artifact set for a trajectory batch into out_dir:
// config.json (resolved echo), detections.jsonl, trace.csv (first
// trajectory), ensemble_bloch.csv (batches), channels/*.csv, summary.json.
inline void write_batch_artifacts(const ExperimentConfig& cfg, const BatchResult& batch) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.io.out_dir);
    fs::create_directories(dir);
    const double ts = cfg.time_scale();

    runner_detail::write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

    {
        std::ofstream f(dir / "detections.jsonl");
        if (!f) throw config_error("cannot write detections.jsonl");
        for (std::size_t i = 0; i < batch.trajectories.size(); ++i)
            write_detections_jsonl(batch.trajectories[i].detections, f, ts,
                                   batch.trajectories.size() > 1 ? int(i) : -1);
    }

    if (!batch.trajectories.empty() && !batch.trajectories.front().trace.empty()) {
        std::ofstream f(dir / "trace.csv");
        write_trace_csv(batch.trajectories.front(), f, ts);
    }

    if (cfg.mode == Mode::nm_filter || cfg.mode == Mode::nm_prism) {
        fs::create_directories(dir / "channels");
        for (const auto& ch : cfg.engine_setup().channels)
            write_kernel_csv(ch, (dir / "channels" / (ch.label + ".csv")).string());
    }

    // ensemble Bloch average over trajectories on the common stride grid
    if (batch.trajectories.size() >= 2) {
        std::size_t n_rows = batch.trajectories.front().trace.size();
        for (const auto& tr : batch.trajectories) n_rows = std::min(n_rows, tr.trace.size());
        if (n_rows > 1) {
            std::vector<std::vector<BlochState>> traces;
            std::vector<double> grid;
            for (std::size_t r = 0; r < n_rows; ++r)
                grid.push_back(batch.trajectories.front().trace[r].t_boundary * ts);
            for (const auto& tr : batch.trajectories) {
                std::vector<BlochState> line;
                for (std::size_t r = 0; r < n_rows; ++r) {
                    const auto& s = tr.trace[r];
                    line.push_back({s.bloch.sx, s.bloch.sy, s.bloch.sz});
                }
                traces.push_back(std::move(line));
            }
            auto avg = ensemble_average(traces, grid);
            std::ofstream f(dir / "ensemble_bloch.csv");
            f << "t,sx,sy,sz,se_sx,se_sy,se_sz\n";
            f.precision(12);
            for (std::size_t r = 0; r < grid.size(); ++r)
                f << grid[r] << "," << avg.mean[r].sx << "," << avg.mean[r].sy << ","
                  << avg.mean[r].sz << "," << avg.stderr_[r].sx << "," << avg.stderr_[r].sy << ","
                  << avg.stderr_[r].sz << "\n";
        }
    }

    nlohmann::json summary = runner_detail::summary_json(cfg, batch);
    if (!batch.worker_errors.empty()) summary["worker_errors"] = batch.worker_errors;
    runner_detail::write_text(dir / "summary.json", summary.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Oracle modes

inline double physics_rate_scale(const ExperimentConfig& cfg) { return cfg.physics.gamma; }

inline void run_oracle_bloch(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.io.out_dir);
    fs::create_directories(dir);
    runner_detail::write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

    const AtomParams p = cfg.atom_internal();
    const double ts = cfg.time_scale();
    const double horizon = cfg.run.duration > 0.0 ? cfg.duration_internal() : 10.0;
    std::ofstream f(dir / "bloch.csv");
    f << "t,sx,sy,sz\n";
    f.precision(12);
    const int n_rows = 400;
    BlochState s{0.0, 0.0, -1.0};
    double t_prev = 0.0;
    for (int i = 0; i <= n_rows; ++i) {
        const double t = horizon * double(i) / n_rows;
        s = bloch_evolve(s, p, t - t_prev);
        t_prev = t;
        f << t * ts << "," << s.sx << "," << s.sy << "," << s.sz << "\n";
    }
    const auto ss = bloch_steady_state(p);
    nlohmann::json j;
    j["steady_state"] = {{"sx", ss.sx}, {"sy", ss.sy}, {"sz", ss.sz}};
    j["excited_population"] = steady_excited_population(p);
    j["emission_rate"] = steady_emission_rate(p) * physics_rate_scale(cfg);
    runner_detail::write_text(dir / "summary.json", j.dump(2) + "\n");
}

inline void run_oracle_spectrum(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.io.out_dir);
    fs::create_directories(dir);
    runner_detail::write_text(dir / "config.json", to_json(cfg).dump(2) + "\n");

    const AtomParams p = cfg.atom_internal();
    auto grid = default_spectrum_grid(p);
    auto sp = mollow_spectrum(p, grid);
    std::ofstream f(dir / "spectrum.csv");
    f << "omega,s_incoherent\n";
    f.precision(12);
    for (std::size_t i = 0; i < grid.size(); ++i)
        f << grid[i] * cfg.physics.gamma << "," << sp.s_inc[i] << "\n";

    // band weights over the sharp prism bands
    const auto centers = cfg.band_centers_internal();
    const double half = cfg.physics.band_half_width / cfg.physics.gamma;
    nlohmann::json bands = nlohmann::json::array();
    double total_sharp = 0.0;
    std::vector<double> sharp;
    for (double c : centers) {
        double w = band_weight(sp, c - half, c + half);
        sharp.push_back(w);
        total_sharp += w;
    }
    for (std::size_t i = 0; i < centers.size(); ++i)
        bands.push_back({{"center", centers[i] * cfg.physics.gamma},
                         {"weight", sharp[i]},
                         {"fraction", sharp[i] / total_sharp}});
    nlohmann::json j;
    j["total_rate"] = sp.total_rate * cfg.physics.gamma;
    j["coherent_weight"] = sp.coherent_weight * cfg.physics.gamma;
    j["bands_sharp"] = bands;
    runner_detail::write_text(dir / "bands.json", j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// analyze / compare

// One record sequence per trajectory (batch files tag records with "traj").
inline std::vector<std::vector<DetectionRecord>> read_detections_grouped(
    const std::string& path) {
    std::ifstream f(path);
    if (!f) throw config_error("cannot open detections file " + path);
    std::vector<std::vector<DetectionRecord>> groups;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            const auto traj = std::size_t(j.value("traj", 0));
            if (groups.size() <= traj) groups.resize(traj + 1);
            groups[traj].push_back({j.at("t").get<double>(), j.at("channel").get<std::string>()});
        } catch (const nlohmann::json::exception& e) {
            throw config_error(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (groups.empty()) groups.resize(1);
    return groups;
}

inline std::vector<DetectionRecord> read_detections_jsonl(const std::string& path) {
    auto groups = read_detections_grouped(path);
    if (groups.size() == 1) return groups.front();
    std::vector<DetectionRecord> flat;
    for (auto& g : groups) flat.insert(flat.end(), g.begin(), g.end());
    return flat;
}

// Waiting times pooled over trajectory groups (gaps never span trajectories).
inline std::vector<double> grouped_waiting_times(
    const std::vector<std::vector<DetectionRecord>>& groups, const ChannelPredicate& pred) {
    std::vector<double> waits;
    for (const auto& g : groups) {
        auto w = waiting_times(g, pred);
        waits.insert(waits.end(), w.begin(), w.end());
    }
    return waits;
}

inline void run_analyze(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.io.out_dir);
    fs::create_directories(dir);
    auto groups = read_detections_grouped(cfg.io.inputs.at(0));

    const double t_max = cfg.io.histogram_t_max > 0.0 ? cfg.io.histogram_t_max
                                                      : 5.0 / cfg.physics.gamma;
    ChannelCounts counts;
    for (const auto& g : groups)
        for (const auto& r : g) {
            ++counts.counts[r.channel];
            ++counts.total;
        }

    auto write_hist = [&](const std::vector<double>& waits, const std::string& name) {
        auto h = histogram(waits, cfg.io.histogram_bins, t_max, name);
        std::ofstream f(dir / ("hist_" + name + ".csv"));
        write_histogram_csv(h, f);
        return h;
    };
    write_hist(grouped_waiting_times(groups, any_channel()), "all");
    nlohmann::json per_channel = nlohmann::json::object();
    for (const auto& [ch, n] : counts.counts) {
        write_hist(grouped_waiting_times(groups, channel_is(ch)), ch);
        per_channel[ch] = {{"count", n},
                           {"fraction", counts.fraction(ch)},
                           {"fraction_stderr", counts.fraction_stderr(ch)}};
    }
    if (counts.counts.count("L") && counts.counts.count("R")) {
        std::vector<double> lr;
        for (const auto& g : groups) {
            auto w = inter_sideband_waits(g, "L", "R");
            lr.insert(lr.end(), w.begin(), w.end());
        }
        write_hist(lr, "LR");
    }

    nlohmann::json j;
    j["input"] = cfg.io.inputs.at(0);
    j["trajectories"] = groups.size();
    j["total"] = counts.total;
    j["channels"] = per_channel;
    runner_detail::write_text(dir / "summary.json", j.dump(2) + "\n");
}

inline void run_compare(const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    const fs::path dir(cfg.io.out_dir);
    fs::create_directories(dir);
    auto a = read_detections_grouped(cfg.io.inputs.at(0));
    auto b = read_detections_grouped(cfg.io.inputs.at(1));
    const double t_max = cfg.io.histogram_t_max > 0.0 ? cfg.io.histogram_t_max
                                                      : 5.0 / cfg.physics.gamma;
    const std::size_t bins = cfg.io.histogram_bins;

    auto counts_a = channel_counts(read_detections_jsonl(cfg.io.inputs.at(0)));
    auto counts_b = channel_counts(read_detections_jsonl(cfg.io.inputs.at(1)));
    nlohmann::json j;
    j["a"] = cfg.io.inputs.at(0);
    j["b"] = cfg.io.inputs.at(1);

    nlohmann::json distances = nlohmann::json::object();
    auto add_distance = [&](const std::string& name, const ChannelPredicate& pred) {
        auto ha = histogram(grouped_waiting_times(a, pred), bins, t_max);
        auto hb = histogram(grouped_waiting_times(b, pred), bins, t_max);
        if (ha.total == 0 || hb.total == 0) return;
        distances[name] = histogram_distance(ha, hb);
    };
    add_distance("all", any_channel());
    for (const auto& [ch, n] : counts_a.counts)
        if (counts_b.counts.count(ch)) add_distance(ch, channel_is(ch));
    j["l1_distance"] = distances;

    // noise floor from pairs of calibration files
    if (cfg.io.calib.size() >= 2) {
        double floor_sum = 0.0;
        int n_pairs = 0;
        for (std::size_t i = 0; i + 1 < cfg.io.calib.size(); i += 2) {
            auto c1 = read_detections_grouped(cfg.io.calib[i]);
            auto c2 = read_detections_grouped(cfg.io.calib[i + 1]);
            auto h1 = histogram(grouped_waiting_times(c1, any_channel()), bins, t_max);
            auto h2 = histogram(grouped_waiting_times(c2, any_channel()), bins, t_max);
            floor_sum += histogram_distance(h1, h2);
            ++n_pairs;
        }
        const double floor = 1.5 * floor_sum / n_pairs;
        j["noise_floor"] = floor;
        j["within_floor"] = distances.contains("all") &&
                            distances["all"].get<double>() < floor;
    }

    // fraction comparison with binomial errors, per shared channel
    nlohmann::json fracs = nlohmann::json::object();
    for (const auto& [ch, n] : counts_a.counts) {
        if (!counts_b.counts.count(ch)) continue;
        const double fa = counts_a.fraction(ch), fb = counts_b.fraction(ch);
        const double se = std::sqrt(counts_a.fraction_stderr(ch) * counts_a.fraction_stderr(ch) +
                                    counts_b.fraction_stderr(ch) * counts_b.fraction_stderr(ch));
        fracs[ch] = {{"a", fa}, {"b", fb}, {"diff_sigma", se > 0 ? (fa - fb) / se : 0.0}};
    }
    j["fractions"] = fracs;
    runner_detail::write_text(dir / "report.json", j.dump(2) + "\n");
}

// Dispatch a full experiment; returns the process exit code.
inline int run_experiment(ExperimentConfig cfg) {
    if (const char* env = std::getenv("NMQT_OUT_DIR")) cfg.io.out_dir = env;
    cfg.validate();
    switch (cfg.mode) {
        case Mode::oracle_bloch: run_oracle_bloch(cfg); return 0;
        case Mode::oracle_spectrum: run_oracle_spectrum(cfg); return 0;
        case Mode::analyze: run_analyze(cfg); return 0;
        case Mode::compare: run_compare(cfg); return 0;
        default: break;
    }
    BatchResult batch = run_batch(cfg);
    write_batch_artifacts(cfg, batch);
    return batch.worker_errors.empty() ? 0 : 1;
}

} // namespace nmqt
