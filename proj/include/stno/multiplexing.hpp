#pragma once

// Time-multiplexing: the sine/square task, the binary input mask, the
// piecewise-constant current drive, and sampling of the simulated envelope
// into one feature row per input point.

#include "stno/errors.hpp"
#include "stno/oscillator.hpp"
#include "stno/random.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace stno {

inline constexpr std::size_t points_per_period = 8;

enum class SymbolClass : int { sine = 0, square = 1 };

/// One period of each waveform class. Sine extrema are exactly +1 and -1.
inline constexpr std::array<double, points_per_period> sine_period{
    0.0, std::numbers::sqrt2 / 2, 1.0, std::numbers::sqrt2 / 2,
    0.0, -std::numbers::sqrt2 / 2, -1.0, -std::numbers::sqrt2 / 2};
inline constexpr std::array<double, points_per_period> square_period{
    1.0, 1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0};

struct Waveform {
    std::vector<double> points;
    std::vector<int> labels;   // per point, 0 = sine, 1 = square
    std::vector<int> symbols;  // per period

    std::size_t size() const noexcept { return points.size(); }
};

/// Builds the waveform for a fixed symbol sequence.
inline Waveform waveform_from_symbols(std::span<const int> symbols)
{
    Waveform w;
    w.points.reserve(symbols.size() * points_per_period);
    w.labels.reserve(symbols.size() * points_per_period);
    for (int s : symbols) {
        if (s != 0 && s != 1) throw ConfigError("symbol classes are 0 (sine) or 1 (square)");
        const auto& period = s == 1 ? square_period : sine_period;
        for (double u : period) {
            w.points.push_back(u);
            w.labels.push_back(s);
        }
        w.symbols.push_back(s);
    }
    return w;
}

/// Random sequence of sine and square periods, each class with probability 1/2.
inline Waveform generate_task(std::size_t n_symbols, std::uint64_t seed)
{
    if (n_symbols < 1) throw ConfigError("generate_task: n_symbols must be >= 1");
    CounterRng rng(seed);
    std::vector<int> symbols(n_symbols);
    for (auto& s : symbols) s = rng.coin() ? 1 : 0;
    return waveform_from_symbols(symbols);
}

struct Mask {
    std::vector<double> entries;  // each +1 or -1

    std::size_t size() const noexcept { return entries.size(); }
};

/// Seeded uniform +-1 sequence, redrawn until both signs occur.
inline Mask make_mask(std::size_t n_theta, std::uint64_t seed)
{
    if (n_theta < 2) throw ConfigError("make_mask: n_theta must be >= 2");
    CounterRng rng(seed);
    Mask mask{std::vector<double>(n_theta)};
    for (;;) {
        bool plus = false, minus = false;
        for (auto& m : mask.entries) {
            m = rng.coin() ? 1.0 : -1.0;
            (m > 0 ? plus : minus) = true;
        }
        if (plus && minus) return mask;
    }
}

struct EncodingConfig {
    std::size_t n_theta = 24;
    double theta = 100e-9;  // s
    double i_dc = 7.2;      // mA
    double a_in = 6.0;      // mA

    double tau() const noexcept { return static_cast<double>(n_theta) * theta; }

    void validate() const
    {
        if (n_theta < 1) throw ConfigError("n_theta must be >= 1");
        if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("theta must be > 0");
        if (!(a_in >= 0.0) || !std::isfinite(a_in)) throw ConfigError("a_in must be >= 0");
        if (!std::isfinite(i_dc)) throw ConfigError("i_dc must be finite");
    }
};

/// Segment (k, i) carries i_dc + a_in * u_k * m_i.
inline DriveSignal encode(const Waveform& waveform, const Mask& mask, const EncodingConfig& config)
{
    config.validate();
    if (mask.size() != config.n_theta)
        throw DimensionMismatch("encode: mask length " + std::to_string(mask.size())
                                + " != n_theta " + std::to_string(config.n_theta));
    DriveSignal drive;
    drive.baseline = config.i_dc;
    drive.theta = config.theta;
    drive.segments.reserve(waveform.size() * config.n_theta);
    for (double u : waveform.points)
        for (double m : mask.entries) drive.segments.push_back(config.i_dc + config.a_in * u * m);
    return drive;
}

/// Prepends one input segment at u = 0 so that shifted rows are defined for k = 0.
inline DriveSignal prepend_warmup(DriveSignal drive, std::size_t n_theta)
{
    drive.segments.insert(drive.segments.begin(), n_theta, drive.baseline);
    return drive;
}

struct StateMatrix {
    Eigen::MatrixXd data;  // rows: input points; cols: n_theta samples then the bias feature 1.0
    std::size_t shift = 0;

    Eigen::Index rows() const noexcept { return data.rows(); }
    Eigen::Index cols() const noexcept { return data.cols(); }
};

/// Last integrator sample of every theta sub-interval in the trace.
inline std::vector<double> subinterval_samples(const AmplitudeTrace& trace, double theta)
{
    const std::size_t nsub = detail::substeps_per_segment(theta, trace.dt);
    std::vector<double> out;
    if (trace.values.size() < 1 + nsub) return out;
    const std::size_t count = (trace.values.size() - 1) / nsub;
    out.reserve(count);
    // sub-interval j (1-based) ends at t0 + j * theta; its last sample inside lies one step earlier
    for (std::size_t j = 1; j <= count; ++j) out.push_back(trace.values[j * nsub - 1]);
    return out;
}

/// Assembles one feature row per input point.
///
/// Global sub-intervals are numbered from the warm-up segment. Row k takes the
/// n_theta consecutive sub-intervals that end `shift` samples before the end of
/// input segment k; shift = n_theta / 2 splits each row evenly between the
/// previous and the current input.
inline StateMatrix sample_states(const AmplitudeTrace& trace, const EncodingConfig& config,
                                 std::size_t n_points, std::size_t shift)
{
    config.validate();
    const std::size_t n = config.n_theta;
    if (shift > n) throw ConfigError("sample_states: shift must be in [0, n_theta]");
    const auto samples = subinterval_samples(trace, config.theta);
    const std::size_t needed = (n_points + 1) * n;
    if (samples.size() < needed)
        throw OutOfRange("sample_states: trace covers " + std::to_string(samples.size())
                         + " sub-intervals, need " + std::to_string(needed));

    StateMatrix states;
    states.shift = shift;
    states.data.resize(static_cast<Eigen::Index>(n_points), static_cast<Eigen::Index>(n + 1));
    for (std::size_t k = 0; k < n_points; ++k) {
        const std::size_t first = (k + 1) * n - shift;  // 0-based index into samples
        for (std::size_t i = 0; i < n; ++i)
            states.data(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = samples[first + i];
        states.data(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n)) = 1.0;
    }
    return states;
}

}  // namespace stno
