#pragma once

// Command-line front end. Commands: run, map <which>, curve <which>, validate.
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include "stno/config.hpp"
#include "stno/io.hpp"
#include "stno/pipeline.hpp"
#include "stno/sweep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <exception>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace stno {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_runtime = 3 };

struct CliOptions {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::size_t jobs = 1;
};

namespace detail {

inline RunConfig load_with_overrides(const CliOptions& opts)
{
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    RunConfig cfg = load_config(opts.config_path);
    if (opts.seed) cfg.seed = *opts.seed;
    if (opts.out_dir) cfg.output.directory = *opts.out_dir;
    if (opts.jobs < 1) throw ConfigError("--jobs must be >= 1");
    return cfg;
}

inline nlohmann::json report_json(const EvalReport& r)
{
    return {{"rms", r.rms}, {"point_error_rate", r.point_error_rate}, {"symbol_error_rate", r.symbol_error_rate}};
}

using Files = std::vector<std::pair<std::string, std::string>>;

inline Files run_artifacts(const RunConfig& cfg, const ExperimentResult& r, const ArtifactMeta& meta)
{
    Files files;
    if (cfg.output.wants("csv")) {
        CsvBuilder trace(meta);
        trace.row({"t_s", "v_mV"});
        for (std::size_t m = 0; m < r.trace.values.size(); ++m)
            trace.row({format_number(r.trace.t0 + static_cast<double>(m) * r.trace.dt),
                       format_number(r.trace.values[m])});
        files.emplace_back("trace.csv", trace.str());

        const auto n_theta = static_cast<std::size_t>(r.states.cols() - 1);
        CsvBuilder states(meta);
        states.comment("shift=" + std::to_string(r.states.shift));
        std::vector<std::string> header{"k"};
        for (std::size_t i = 1; i <= n_theta; ++i) header.push_back("v" + std::to_string(i) + "_mV");
        header.push_back("bias");
        states.row(header);
        for (Eigen::Index k = 0; k < r.states.rows(); ++k) {
            std::vector<std::string> cells{std::to_string(k)};
            for (Eigen::Index c = 0; c < r.states.cols(); ++c) cells.push_back(format_number(r.states.data(k, c)));
            states.row(cells);
        }
        files.emplace_back("states.csv", states.str());

        std::vector<char> is_test(static_cast<std::size_t>(r.outputs.size()), 0);
        for (auto k : r.split.test_points) is_test[k] = 1;
        CsvBuilder outputs(meta);
        outputs.row({"k", "output", "target", "label", "predicted", "set"});
        for (Eigen::Index k = 0; k < r.outputs.size(); ++k) {
            const auto uk = static_cast<std::size_t>(k);
            outputs.row({std::to_string(k), format_number(r.outputs(k)), format_number(r.targets(k)),
                         std::to_string(r.waveform.labels[uk]), std::to_string(classify(r.outputs(k))),
                         is_test[uk] ? "test" : "train"});
        }
        files.emplace_back("outputs.csv", outputs.str());
    }
    if (cfg.output.wants("json")) {
        nlohmann::json rep;
        rep["tool"] = std::string(tool_name);
        rep["version"] = std::string(tool_version);
        rep["config_hash"] = hex64(meta.config_hash);
        rep["seed"] = meta.seed;
        rep["config"] = to_json(cfg);
        rep["lambda"] = r.lambda;
        rep["weights"] = std::vector<double>(r.weights.w.data(), r.weights.w.data() + r.weights.w.size());
        rep["train"] = report_json(r.train);
        rep["test"] = report_json(r.test);
        rep["n_points"] = r.waveform.size();
        rep["n_train_points"] = r.split.train_points.size();
        rep["n_test_points"] = r.split.test_points.size();
        files.emplace_back("report.json", rep.dump(2) + "\n");
    }
    return files;
}

inline int cmd_run(const CliOptions& opts, std::ostream& out)
{
    const RunConfig cfg = load_with_overrides(opts);
    const ArtifactMeta meta{config_hash(cfg), cfg.seed};
    const ExperimentResult r = run_experiment(cfg.experiment, cfg.seed);
    write_artifacts(cfg.output.directory, run_artifacts(cfg, r, meta));
    out << "train rms " << format_number(r.train.rms) << ", point errors "
        << format_number(r.train.point_error_rate) << "\n"
        << "test  rms " << format_number(r.test.rms) << ", point errors "
        << format_number(r.test.point_error_rate) << ", symbol errors "
        << format_number(r.test.symbol_error_rate) << "\n";
    return exit_ok;
}

inline int cmd_map(const CliOptions& opts, const std::string& which, std::ostream& out)
{
    const RunConfig cfg = load_with_overrides(opts);
    const ArtifactMeta meta{config_hash(cfg), cfg.seed};
    const FieldMap fm = cfg.fieldmap();
    const auto& s = cfg.sweep;
    GridResult grid;
    if (which == "amplitude")
        grid = map_amplitude(fm, s.i_dc_grid, opts.jobs);
    else if (which == "nonlinearity")
        grid = map_nonlinearity(fm, s.i_dc_grid, s.nonlinearity_h, opts.jobs);
    else if (which == "noise")
        grid = map_noise(fm, s.i_dc_grid, s.noise_duration, s.noise_dt, cfg.seed, opts.jobs);
    else if (which == "rms")
        grid = map_rms(fm, s.i_dc_grid, cfg.experiment, cfg.seed, opts.jobs);
    else
        throw ConfigError("map: unknown map '" + which + "' (amplitude, nonlinearity, noise, rms)");
    const std::string name = "map_" + which + ".csv";
    write_artifacts(cfg.output.directory, {{name, grid_csv(grid, meta, which)}});
    out << "wrote " << (std::filesystem::path(cfg.output.directory) / name).string() << " (" << grid.rows()
        << " x " << grid.cols() << ")\n";
    return exit_ok;
}

inline int cmd_curve(const CliOptions& opts, const std::string& which, std::ostream& out)
{
    const RunConfig cfg = load_with_overrides(opts);
    const ArtifactMeta meta{config_hash(cfg), cfg.seed};
    const auto& s = cfg.sweep;
    CurveResult curve;
    if (which == "theta")
        curve = theta_curve(cfg.experiment, s.theta_grid, cfg.experiment.shift_mode, cfg.seed, s.a_in_grid, opts.jobs);
    else if (which == "amplitude")
        curve = amplitude_curve(cfg.experiment, s.a_in_grid, cfg.experiment.encoding.theta, cfg.seed, opts.jobs);
    else
        throw ConfigError("curve: unknown curve '" + which + "' (theta, amplitude)");
    const std::string name = "curve_" + which + ".csv";
    write_artifacts(cfg.output.directory, {{name, curve_csv(curve, meta, which)}});
    out << "wrote " << (std::filesystem::path(cfg.output.directory) / name).string() << " (" << curve.x.size()
        << " points, " << curve.series.size() << " series)\n";
    return exit_ok;
}

inline int cmd_validate(const CliOptions& opts, std::ostream& out)
{
    const RunConfig cfg = load_with_overrides(opts);
    const auto& ex = cfg.experiment;
    const double i_dc = ex.encoding.i_dc;
    out << "config ok (hash " << hex64(config_hash(cfg)) << ", seed " << cfg.seed << ")\n"
        << "i_th = " << format_number(ex.oscillator.i_th()) << " mA\n"
        << "tau = n_theta * theta = " << ex.encoding.n_theta << " * " << format_number(ex.encoding.theta)
        << " s = " << format_number(ex.encoding.tau()) << " s\n"
        << "shift = " << ex.shift() << " (" << to_string(ex.shift_mode) << ")\n"
        << "dt = " << format_number(ex.dt()) << " s\n";
    if (i_dc > ex.oscillator.i_th())
        out << "relaxation time at " << format_number(i_dc)
            << " mA = " << format_number(relaxation_time(ex.oscillator, i_dc)) << " s\n";
    else
        out << "bias " << format_number(i_dc) << " mA is not above threshold\n";
    return exit_ok;
}

}  // namespace detail

/// Parses argv and dispatches. Diagnostics go to `err`, summaries to `out`.
inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Time-multiplexed reservoir computing with a spin-torque nano-oscillator", "stno_rc"};
    app.set_version_flag("--version", std::string(tool_version));
    app.require_subcommand(1);
    app.fallthrough();

    CliOptions opts;
    std::uint64_t seed = 0;
    std::string out_dir;
    app.add_option("--config", opts.config_path, "JSON configuration file");
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output.directory)");
    auto* seed_opt = app.add_option("--seed", seed, "run seed (overrides task.seed)");
    app.add_option("--jobs", opts.jobs, "worker threads for sweeps")->check(CLI::PositiveNumber);

    std::string map_which, curve_which;
    auto* run = app.add_subcommand("run", "run one full pipeline");
    auto* map = app.add_subcommand("map", "bias-point map over (field, current)");
    map->add_option("which", map_which, "amplitude | nonlinearity | noise | rms")->required();
    auto* curve = app.add_subcommand("curve", "rms curve over theta or input amplitude");
    curve->add_option("which", curve_which, "theta | amplitude")->required();
    auto* validate = app.add_subcommand("validate", "check a configuration and print derived quantities");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, e2;
        const int code = app.exit(e, o, e2);
        out << o.str();
        err << e2.str();
        return code == 0 ? exit_ok : exit_config;
    }
    if (*out_opt) opts.out_dir = out_dir;
    if (*seed_opt) opts.seed = seed;

    try {
        if (*run) return detail::cmd_run(opts, out);
        if (*map) return detail::cmd_map(opts, map_which, out);
        if (*curve) return detail::cmd_curve(opts, curve_which, out);
        if (*validate) return detail::cmd_validate(opts, out);
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_config;
}

}  // namespace stno
