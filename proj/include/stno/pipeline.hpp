#pragma once

// One complete reservoir experiment: task -> mask -> drive -> envelope ->
// states -> trained readout -> metrics.

#include "stno/errors.hpp"
#include "stno/multiplexing.hpp"
#include "stno/oscillator.hpp"
#include "stno/random.hpp"
#include "stno/readout.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace stno {

/// Which samples reconstruct each output: the current segment only, or half
/// from the previous segment (target shifted by tau/2).
enum class ShiftMode { in_phase, half_tau };

inline std::string_view to_string(ShiftMode mode) noexcept
{
    return mode == ShiftMode::in_phase ? "in_phase" : "half_tau";
}

inline ShiftMode parse_shift_mode(std::string_view text)
{
    if (text == "in_phase") return ShiftMode::in_phase;
    if (text == "half_tau") return ShiftMode::half_tau;
    throw ConfigError("shift mode must be in_phase or half_tau, got '" + std::string(text) + "'");
}

struct ExperimentConfig {
    OscillatorParams oscillator;
    EncodingConfig encoding;
    std::uint64_t mask_seed = 8;
    std::size_t substeps = 20;  // integrator steps per theta
    std::size_t n_symbols = 80;
    double train_fraction = 0.5;
    double ridge_rel = 1e-9;       // lambda = ridge_rel * trace(S^T S) / cols
    std::optional<double> ridge;   // absolute lambda, overrides ridge_rel
    ShiftMode shift_mode = ShiftMode::half_tau;

    std::size_t shift() const noexcept
    {
        return shift_mode == ShiftMode::in_phase ? 0 : encoding.n_theta / 2;
    }

    double dt() const noexcept { return encoding.theta / static_cast<double>(substeps); }

    void validate() const
    {
        oscillator.validate();
        encoding.validate();
        if (encoding.n_theta < 2) throw ConfigError("n_theta must be >= 2");
        if (substeps < 10) throw ConfigError("substeps must be >= 10");
        if (n_symbols < 2) throw ConfigError("n_symbols must be >= 2");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw ConfigError("train_fraction must be in (0, 1)");
        if (!(ridge_rel >= 0.0)) throw ConfigError("ridge_rel must be >= 0");
        if (ridge && !(*ridge >= 0.0)) throw ConfigError("lambda must be >= 0");
        if (shift_mode == ShiftMode::half_tau && encoding.n_theta % 2 != 0)
            throw ConfigError("half_tau shift requires an even n_theta");
    }
};

/// Sub-stream keys derived from a run seed. None depends on the shift mode, so
/// runs that differ only in shift share their trace.
struct RunSeeds {
    std::uint64_t task, noise, split;

    explicit RunSeeds(std::uint64_t seed) noexcept
        : task(hash64(seed, 1)), noise(hash64(seed, 2)), split(hash64(seed, 3))
    {
    }
};

struct ExperimentResult {
    Waveform waveform;
    Mask mask;
    DriveSignal drive;  // includes the leading warm-up segment
    AmplitudeTrace trace;
    StateMatrix states;
    Eigen::VectorXd targets;
    Split split;
    double lambda = 0.0;
    ReadoutWeights weights;
    Eigen::VectorXd outputs;  // every point, train and test
    EvalReport train;
    EvalReport test;
};

inline ExperimentResult run_experiment(const ExperimentConfig& config, std::uint64_t seed)
{
    config.validate();
    const RunSeeds seeds(seed);

    ExperimentResult r;
    r.waveform = generate_task(config.n_symbols, seeds.task);
    r.mask = make_mask(config.encoding.n_theta, config.mask_seed);
    r.drive = prepend_warmup(encode(r.waveform, r.mask, config.encoding), config.encoding.n_theta);
    r.trace = simulate(config.oscillator, r.drive, config.dt(), seeds.noise);
    r.states = sample_states(r.trace, config.encoding, r.waveform.size(), config.shift());
    r.targets = make_targets(r.waveform);
    r.split = split_train_test(config.n_symbols, points_per_period, config.train_fraction, seeds.split);

    const Eigen::MatrixXd s_train = select_rows(r.states.data, r.split.train_points);
    const Eigen::VectorXd y_train = select_rows(r.targets, r.split.train_points);
    r.lambda = config.ridge ? *config.ridge : default_ridge(s_train, config.ridge_rel);
    r.weights = train(s_train, y_train, r.lambda);
    r.outputs = predict(r.states, r.weights);

    r.train = evaluate(select_rows(r.outputs, r.split.train_points), y_train);
    r.test = evaluate(select_rows(r.outputs, r.split.test_points),
                      select_rows(r.targets, r.split.test_points));
    return r;
}

}  // namespace stno
