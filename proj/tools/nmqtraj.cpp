// nmqtraj: trajectory simulator for spectral photodetection of a driven
// two-level atom.
//
//   nmqtraj run   --mode nm-filter --seed 7 --duration 100 --out out/
//   nmqtraj batch --mode nm-filter --seed 7 --trajectories 2000 ...
//
// A JSON config file (--config) provides the same settings; flags override
// file values. Exit codes: 0 success, 1 partial worker failure, 2 invalid
// configuration, 3 numerical fault while stepping.

#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "nmqt/config.hpp"
#include "nmqt/runner.hpp"

namespace {

struct CliOverrides {
    std::string config_path;
    std::string mode;
    double gamma = -1.0, omega = -1.0, kappa = -1.0;
    double nu = -1e300;
    double band_half_width = -1.0;
    std::vector<double> band_centers;
    double t_m = -1.0, dt = -1.0;
    double duration = -1.0, burn_in = -1e300;
    std::int64_t target_detections = -1;
    std::int64_t trajectories = -1;
    std::int64_t seed = -1;
    std::int64_t stride = -1;
    std::int64_t workers = -1;
    std::int64_t n_max = -1;
    bool strict_window = false;
    std::string out_dir;
    std::vector<std::string> inputs;
    std::vector<std::string> calib;
    std::int64_t bins = -1;
    double hist_t_max = -1.0;
};

void add_common_options(CLI::App* cmd, CliOverrides& o) {
    cmd->add_option("--config", o.config_path, "JSON config file; flags override its values");
    cmd->add_option("--mode", o.mode,
                    "nm-filter | nm-prism | cascaded-filter | oracle-bloch | oracle-spectrum | "
                    "analyze | compare");
    cmd->add_option("--gamma", o.gamma, "atomic decay rate (sets the unit system)");
    cmd->add_option("--omega", o.omega, "drive strength");
    cmd->add_option("--kappa", o.kappa, "filter line width");
    cmd->add_option("--nu", o.nu, "filter center frequency");
    cmd->add_option("--band-half-width", o.band_half_width, "prism band half width");
    cmd->add_option("--band-centers", o.band_centers, "prism band centers (3 values)");
    cmd->add_option("--t-m", o.t_m, "memory time (default 1/gamma)");
    cmd->add_option("--dt", o.dt, "grid step (default t_m/200)");
    cmd->add_option("--n-max", o.n_max, "cascaded Fock truncation");
    cmd->add_option("--duration", o.duration, "simulated time per trajectory");
    cmd->add_option("--target-detections", o.target_detections,
                    "stop after this many detections (duration becomes a cap)");
    cmd->add_option("--burn-in", o.burn_in, "discard detections before this time (default t_m)");
    cmd->add_option("--seed", o.seed, "master seed (required for runs)");
    cmd->add_option("--trace-stride", o.stride, "steps between trace samples (0 disables)");
    cmd->add_option("--workers", o.workers, "worker threads for batches (0 = hardware)");
    cmd->add_flag("--strict-window", o.strict_window,
                  "raise an error on three detections within half a memory window");
    cmd->add_option("--out", o.out_dir, "output directory");
    cmd->add_option("--in", o.inputs, "input detections.jsonl (analyze: 1, compare: 2)");
    cmd->add_option("--calib", o.calib, "calibration detections files for the compare noise floor");
    cmd->add_option("--bins", o.bins, "histogram bin count");
    cmd->add_option("--hist-t-max", o.hist_t_max, "histogram range upper edge");
}

nmqt::ExperimentConfig resolve(const CliOverrides& o, bool batch) {
    nmqt::ExperimentConfig cfg;
    if (!o.config_path.empty()) cfg = nmqt::load_config_file(o.config_path);
    if (!o.mode.empty()) cfg.mode = nmqt::mode_from_string(o.mode);
    if (o.gamma > 0) cfg.physics.gamma = o.gamma;
    if (o.omega >= 0) cfg.physics.omega_rabi = o.omega;
    if (o.kappa > 0) cfg.physics.kappa = o.kappa;
    if (o.nu != -1e300) cfg.physics.nu = o.nu;
    if (o.band_half_width > 0) cfg.physics.band_half_width = o.band_half_width;
    if (!o.band_centers.empty()) cfg.physics.band_centers = o.band_centers;
    if (o.t_m > 0) cfg.physics.t_m = o.t_m;
    if (o.dt > 0) cfg.physics.dt = o.dt;
    if (o.n_max > 1) cfg.physics.n_max = std::size_t(o.n_max);
    if (o.duration >= 0) cfg.run.duration = o.duration;
    if (o.target_detections >= 0) cfg.run.target_detections = std::uint64_t(o.target_detections);
    if (o.burn_in != -1e300) cfg.run.burn_in = o.burn_in;
    if (o.seed >= 0) cfg.run.seed = std::uint64_t(o.seed);
    if (o.stride >= 0) cfg.run.trace_stride = std::size_t(o.stride);
    if (o.workers >= 0) cfg.run.n_workers = std::size_t(o.workers);
    if (o.trajectories > 0) cfg.run.n_trajectories = std::size_t(o.trajectories);
    if (o.strict_window) cfg.run.strict_window = true;
    if (!o.out_dir.empty()) cfg.io.out_dir = o.out_dir;
    if (!o.inputs.empty()) cfg.io.inputs = o.inputs;
    if (!o.calib.empty()) cfg.io.calib = o.calib;
    if (o.bins > 0) cfg.io.histogram_bins = std::size_t(o.bins);
    if (o.hist_t_max > 0) cfg.io.histogram_t_max = o.hist_t_max;
    if (!batch) cfg.run.n_trajectories = 1;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-Markovian spectral-detection trajectories for a driven two-level atom"};
    app.require_subcommand(1);

    CliOverrides run_opts, batch_opts;
    CLI::App* run_cmd = app.add_subcommand("run", "single run of the selected mode");
    add_common_options(run_cmd, run_opts);
    CLI::App* batch_cmd = app.add_subcommand("batch", "many trajectories, aggregated");
    add_common_options(batch_cmd, batch_opts);
    batch_cmd->add_option("--trajectories", batch_opts.trajectories, "number of trajectories");

    CLI11_PARSE(app, argc, argv);

    try {
        nmqt::ExperimentConfig cfg =
            run_cmd->parsed() ? resolve(run_opts, false) : resolve(batch_opts, true);
        int code = nmqt::run_experiment(cfg);
        if (code == 0)
            std::printf("ok: artifacts in %s\n", cfg.io.out_dir.c_str());
        else
            std::fprintf(stderr, "partial results in %s (worker failures)\n",
                         cfg.io.out_dir.c_str());
        return code;
    } catch (const nmqt::config_error& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const nmqt::numerical_error& e) {
        std::fprintf(stderr, "numerical fault: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
