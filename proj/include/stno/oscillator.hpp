#pragma once

// Power-envelope model of a spin-torque nano-oscillator.
//
// The normalized oscillation power p obeys the single-mode auto-oscillator
// equation
//
//     dp = [ -2 G (1 + Q p) p + 2 s I (1 - p) p + D ] dt + sqrt(2 D p) dW
//
// with damping rate G, nonlinear damping Q, current-to-gain conversion s and
// diffusion constant D. The +D term is the Ito drift of p = |c|^2 for a complex
// amplitude c driven by isotropic thermal noise; it keeps p = 0 from being
// absorbing below threshold and vanishes when D = 0. The observable voltage
// envelope is V = v_offset + kappa * sqrt(p).

#include "stno/errors.hpp"
#include "stno/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace stno {

struct OscillatorParams {
    double gamma_g = 3.8e6;  // 1/s
    double q_nl = 2.0;
    double sigma = 7.6e5;    // 1/(s mA)
    double kappa = 30.0;     // mV
    double v_offset = 0.0;   // mV
    double noise_d = 3.0;    // 1/s

    /// Auto-oscillation threshold gamma_g / sigma in mA.
    double i_th() const noexcept { return gamma_g / sigma; }

    /// Supercriticality at a given current.
    double zeta(double i_dc) const noexcept { return sigma * i_dc / gamma_g; }

    void validate() const
    {
        auto finite = [](double v) { return std::isfinite(v); };
        if (!finite(gamma_g) || gamma_g <= 0.0) throw ConfigError("gamma_g must be > 0");
        if (!finite(sigma) || sigma <= 0.0) throw ConfigError("sigma must be > 0");
        if (!finite(q_nl) || q_nl < 0.0) throw ConfigError("q_nl must be >= 0");
        if (!finite(kappa) || kappa < 0.0) throw ConfigError("kappa must be >= 0");
        if (!finite(noise_d) || noise_d < 0.0) throw ConfigError("noise_d must be >= 0");
        if (!finite(v_offset)) throw ConfigError("v_offset must be finite");
    }
};

struct OscillatorState {
    double p = 0.0;  // normalized power in [0, 1]
    double t = 0.0;  // s
};

/// Sampled voltage envelope. values[m] is the envelope at t0 + m * dt.
struct AmplitudeTrace {
    double dt = 0.0;
    double t0 = 0.0;
    std::vector<double> values;
};

/// Piecewise-constant current drive: segments[j] holds on [j*theta, (j+1)*theta).
struct DriveSignal {
    double baseline = 0.0;  // mA
    std::vector<double> segments;
    double theta = 0.0;  // s
};

/// Deterministic part of the power drift, 1/s.
inline double deterministic_drift(const OscillatorParams& params, double p, double i_now) noexcept
{
    return -2.0 * params.gamma_g * (1.0 + params.q_nl * p) * p
           + 2.0 * params.sigma * i_now * (1.0 - p) * p;
}

inline double steady_state_power(const OscillatorParams& params, double i_dc)
{
    params.validate();
    const double z = params.zeta(i_dc);
    if (!(z > 1.0)) return 0.0;
    const double p0 = (z - 1.0) / (z + params.q_nl);
    return std::clamp(p0, 0.0, std::nextafter(1.0, 0.0));
}

inline double power_to_voltage(const OscillatorParams& params, double p) noexcept
{
    return params.v_offset + params.kappa * std::sqrt(p);
}

inline double steady_state_amplitude(const OscillatorParams& params, double i_dc)
{
    return power_to_voltage(params, steady_state_power(params, i_dc));
}

/// One Euler-Maruyama step. `dw` is a Gaussian increment with variance dt.
inline OscillatorState step(const OscillatorState& state, const OscillatorParams& params,
                            double i_now, double dt, double dw) noexcept
{
    const double p = state.p;
    const double drift = deterministic_drift(params, p, i_now) + params.noise_d;
    const double diffusion = std::sqrt(2.0 * params.noise_d * std::max(p, 0.0));
    const double next = p + drift * dt + diffusion * dw;
    return {std::clamp(next, 0.0, 1.0), state.t + dt};
}

namespace detail {

/// Number of integrator steps per drive segment; throws unless dt divides theta
/// and leaves at least ten steps per segment.
inline std::size_t substeps_per_segment(double theta, double dt)
{
    if (!(theta > 0.0) || !(dt > 0.0)) throw ConfigError("theta and dt must be > 0");
    const double ratio = theta / dt;
    const double n = std::round(ratio);
    if (std::abs(ratio - n) > 1e-9 * ratio) throw ConfigError("dt does not divide theta");
    if (n < 10.0) throw ConfigError("dt must be at most theta / 10");
    return static_cast<std::size_t>(n);
}

}  // namespace detail

/// Integrates the drive from the steady state at drive.baseline.
/// The result holds segments * substeps + 1 samples, starting with the initial state.
inline AmplitudeTrace simulate(const OscillatorParams& params, const DriveSignal& drive, double dt,
                               std::uint64_t seed)
{
    params.validate();
    const std::size_t nsub = detail::substeps_per_segment(drive.theta, dt);
    const double h = drive.theta / static_cast<double>(nsub);
    const double sqrt_h = std::sqrt(h);
    const bool noisy = params.noise_d > 0.0;

    AmplitudeTrace trace;
    trace.dt = h;
    trace.t0 = 0.0;
    trace.values.reserve(drive.segments.size() * nsub + 1);

    CounterRng rng(seed);
    OscillatorState state{steady_state_power(params, drive.baseline), 0.0};
    trace.values.push_back(power_to_voltage(params, state.p));
    for (double current : drive.segments) {
        for (std::size_t s = 0; s < nsub; ++s) {
            const double dw = noisy ? sqrt_h * rng.normal() : 0.0;
            state = step(state, params, current, h, dw);
            trace.values.push_back(power_to_voltage(params, state.p));
        }
    }
    return trace;
}

/// Exponential recovery time of a 1 % power perturbation at a constant bias.
///
/// The perturbation is integrated without noise and log|p - p0| is fitted by
/// least squares over its first decade of decay.
inline double relaxation_time(const OscillatorParams& params, double i_dc)
{
    params.validate();
    if (!(i_dc > params.i_th()))
        throw NotOscillating("relaxation_time: i_dc " + std::to_string(i_dc)
                             + " mA is not above threshold");

    OscillatorParams quiet = params;
    quiet.noise_d = 0.0;
    const double p0 = steady_state_power(quiet, i_dc);

    // step size from an upper bound on the drift's rate, not from its linearization
    const double rate_bound = 2.0 * (quiet.gamma_g * (1.0 + quiet.q_nl) + quiet.sigma * i_dc);
    const double dt = 1e-3 / rate_bound;
    const double start = 0.01 * p0;
    const double stop = 0.1 * start;

    OscillatorState state{p0 + start, 0.0};
    std::vector<double> ts, logs;
    constexpr std::size_t max_steps = 200'000'000;
    for (std::size_t n = 0; n < max_steps; ++n) {
        const double dev = std::abs(state.p - p0);
        if (dev <= stop) break;
        ts.push_back(state.t);
        logs.push_back(std::log(dev));
        state = step(state, quiet, i_dc, dt, 0.0);
    }
    if (ts.size() < 3) throw Error("relaxation_time: perturbation did not decay");

    const double n = static_cast<double>(ts.size());
    const double t_mean = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
    const double l_mean = std::accumulate(logs.begin(), logs.end(), 0.0) / n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < ts.size(); ++k) {
        sxy += (ts[k] - t_mean) * (logs[k] - l_mean);
        sxx += (ts[k] - t_mean) * (ts[k] - t_mean);
    }
    const double slope = sxy / sxx;
    if (!(slope < 0.0)) throw Error("relaxation_time: perturbation did not decay");
    return -1.0 / slope;
}

/// Central second difference of the steady-state amplitude curve, mV/mA^2.
inline double nonlinearity(const OscillatorParams& params, double i_dc, double h)
{
    if (!(h > 0.0)) throw ConfigError("nonlinearity: h must be > 0");
    const double up = steady_state_amplitude(params, i_dc + h);
    const double mid = steady_state_amplitude(params, i_dc);
    const double down = steady_state_amplitude(params, i_dc - h);
    return (up - 2.0 * mid + down) / (h * h);
}

/// Standard deviation of the steady-state envelope, mV.
///
/// The run starts at the deterministic fixed point; the first ten relaxation
/// times are discarded. `duration` must cover at least 100 relaxation times.
inline double amplitude_noise(const OscillatorParams& params, double i_dc, double duration,
                              double dt, std::uint64_t seed)
{
    params.validate();
    if (!(i_dc > params.i_th()))
        throw NotOscillating("amplitude_noise: i_dc " + std::to_string(i_dc)
                             + " mA is not above threshold");
    if (!(dt > 0.0)) throw ConfigError("amplitude_noise: dt must be > 0");
    const double tau = relaxation_time(params, i_dc);
    if (duration < 100.0 * tau)
        throw ConfigError("amplitude_noise: duration must be at least 100 relaxation times");

    const auto total = static_cast<std::size_t>(std::ceil(duration / dt));
    const auto warmup = static_cast<std::size_t>(std::ceil(10.0 * tau / dt));
    const double sqrt_dt = std::sqrt(dt);

    CounterRng rng(seed);
    OscillatorState state{steady_state_power(params, i_dc), 0.0};
    // Welford accumulation over the retained samples
    double mean = 0.0, m2 = 0.0;
    std::size_t count = 0;
    for (std::size_t n = 0; n < total; ++n) {
        const double dw = params.noise_d > 0.0 ? sqrt_dt * rng.normal() : 0.0;
        state = step(state, params, i_dc, dt, dw);
        if (n < warmup) continue;
        const double v = power_to_voltage(params, state.p);
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }
    if (count < 2) return 0.0;
    return std::sqrt(m2 / static_cast<double>(count));
}

}  // namespace stno
