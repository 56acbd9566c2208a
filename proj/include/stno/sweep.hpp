#pragma once

// Parameter studies over bias current and a field-proxy axis, and rms curves
// against theta and input amplitude.
//
// Every cell is a self-contained work item: its inputs and seed depend only on
// (seed, row, col), so any scheduling order and any number of worker threads
// give identical results.

#include "stno/errors.hpp"
#include "stno/oscillator.hpp"
#include "stno/pipeline.hpp"
#include "stno/random.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace stno {

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. The first exception is rethrown.
inline void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn)
{
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    workers.reserve(jobs);
    for (std::size_t t = 0; t < jobs; ++t) {
        workers.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
}

/// Maps the field axis onto model parameters. Each coefficient varies affinely,
/// base * (1 + span * x), with x running from -1 at the lowest field to +1 at
/// the highest.
struct FieldMap {
    std::vector<double> field_grid;  // mT, labels only
    OscillatorParams base;
    double gamma_g_rel_span = 0.3;
    double q_nl_rel_span = 0.0;
    double sigma_rel_span = 0.0;

    double position(std::size_t row) const noexcept
    {
        if (field_grid.size() < 2) return 0.0;
        const double lo = field_grid.front(), hi = field_grid.back();
        return 2.0 * (field_grid[row] - lo) / (hi - lo) - 1.0;
    }

    OscillatorParams params_at(std::size_t row) const
    {
        const double x = position(row);
        OscillatorParams p = base;
        p.gamma_g *= 1.0 + gamma_g_rel_span * x;
        p.q_nl *= 1.0 + q_nl_rel_span * x;
        p.sigma *= 1.0 + sigma_rel_span * x;
        return p;
    }

    void validate() const
    {
        if (field_grid.empty()) throw ConfigError("field grid is empty");
        for (std::size_t i = 1; i < field_grid.size(); ++i)
            if (!(field_grid[i] > field_grid[i - 1]))
                throw ConfigError("field grid must be strictly increasing");
        for (std::size_t r = 0; r < field_grid.size(); ++r) {
            try {
                params_at(r).validate();
            } catch (const ConfigError& e) {
                throw ConfigError("field " + std::to_string(field_grid[r]) + " mT: " + e.what());
            }
        }
    }
};

inline void validate_grid(const std::vector<double>& grid, const char* name)
{
    if (grid.empty()) throw ConfigError(std::string(name) + " is empty");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw ConfigError(std::string(name) + " must be strictly increasing");
}

struct GridResult {
    std::vector<double> i_dc_grid;   // mA, columns
    std::vector<double> field_grid;  // mT, rows
    std::vector<double> cells;       // row-major, |field| x |i_dc|
    std::vector<std::string> reasons;  // empty unless the cell is flagged

    std::size_t rows() const noexcept { return field_grid.size(); }
    std::size_t cols() const noexcept { return i_dc_grid.size(); }
    double at(std::size_t row, std::size_t col) const { return cells.at(row * cols() + col); }
    const std::string& reason(std::size_t row, std::size_t col) const { return reasons.at(row * cols() + col); }
    bool any_flagged() const
    {
        return std::any_of(reasons.begin(), reasons.end(), [](const auto& s) { return !s.empty(); });
    }
};

namespace detail {

template <class CellFn>
GridResult map_cells(const FieldMap& fieldmap, const std::vector<double>& i_dc_grid, std::size_t jobs,
                     CellFn&& cell)
{
    fieldmap.validate();
    validate_grid(i_dc_grid, "i_dc grid");
    GridResult g;
    g.i_dc_grid = i_dc_grid;
    g.field_grid = fieldmap.field_grid;
    g.cells.assign(g.rows() * g.cols(), 0.0);
    g.reasons.assign(g.rows() * g.cols(), std::string{});
    parallel_for(g.cells.size(), jobs, [&](std::size_t idx) {
        const std::size_t row = idx / g.cols(), col = idx % g.cols();
        cell(row, col, fieldmap.params_at(row), i_dc_grid[col], g.cells[idx], g.reasons[idx]);
    });
    return g;
}

}  // namespace detail

/// Steady-state envelope at every (field, current).
inline GridResult map_amplitude(const FieldMap& fieldmap, const std::vector<double>& i_dc_grid,
                                std::size_t jobs = 1)
{
    return detail::map_cells(fieldmap, i_dc_grid, jobs,
                             [](std::size_t, std::size_t, const OscillatorParams& p, double i,
                                double& value, std::string&) { value = steady_state_amplitude(p, i); });
}

inline GridResult map_nonlinearity(const FieldMap& fieldmap, const std::vector<double>& i_dc_grid,
                                   double h, std::size_t jobs = 1)
{
    if (!(h > 0.0)) throw ConfigError("nonlinearity step h must be > 0");
    return detail::map_cells(fieldmap, i_dc_grid, jobs,
                             [h](std::size_t, std::size_t, const OscillatorParams& p, double i,
                                 double& value, std::string&) { value = nonlinearity(p, i, h); });
}

/// Duration used for one noise cell: the requested duration, extended to 100
/// relaxation times where the cell relaxes slowly.
inline double noise_cell_duration(const OscillatorParams& params, double i_dc, double duration)
{
    return std::max(duration, 100.0 * relaxation_time(params, i_dc));
}

/// Steady-state envelope noise. Sub-threshold cells hold 0 and are flagged.
inline GridResult map_noise(const FieldMap& fieldmap, const std::vector<double>& i_dc_grid,
                            double duration, double dt, std::uint64_t seed, std::size_t jobs = 1)
{
    if (!(duration > 0.0) || !(dt > 0.0)) throw ConfigError("noise duration and dt must be > 0");
    return detail::map_cells(
        fieldmap, i_dc_grid, jobs,
        [&](std::size_t row, std::size_t col, const OscillatorParams& p, double i, double& value,
            std::string& reason) {
            if (!(i > p.i_th())) {
                value = 0.0;
                reason = "not_oscillating";
                return;
            }
            value = amplitude_noise(p, i, noise_cell_duration(p, i, duration), dt, hash64(seed, row, col));
        });
}

/// Test-set rms of the full pipeline at every (field, current).
/// Failed cells hold NaN with the error message as reason.
inline GridResult map_rms(const FieldMap& fieldmap, const std::vector<double>& i_dc_grid,
                          const ExperimentConfig& base, std::uint64_t seed, std::size_t jobs = 1)
{
    base.validate();
    return detail::map_cells(
        fieldmap, i_dc_grid, jobs,
        [&](std::size_t row, std::size_t col, const OscillatorParams& p, double i, double& value,
            std::string& reason) {
            ExperimentConfig cfg = base;
            cfg.oscillator = p;
            cfg.encoding.i_dc = i;
            try {
                value = run_experiment(cfg, hash64(seed, row, col)).test.rms;
            } catch (const std::exception& e) {
                value = std::numeric_limits<double>::quiet_NaN();
                reason = e.what();
            }
        });
}

struct CurveSeries {
    std::string name;
    std::vector<double> values;
};

struct CurveResult {
    std::vector<double> x;  // theta in s, or input amplitude in mA
    std::vector<CurveSeries> series;
    std::string shift_mode;  // "in_phase", "half_tau", or "both"
    std::size_t n_theta = 0;
    std::uint64_t seed = 0;
};

inline std::string amplitude_series_name(double a_in)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "rms_a%gmA", a_in);
    return buf;
}

/// Test rms against theta at fixed n_theta (so tau grows with theta), one
/// series per input amplitude. An empty amplitude list uses the config's a_in.
/// The same run seed is used at every theta.
inline CurveResult theta_curve(const ExperimentConfig& base, const std::vector<double>& theta_grid,
                               ShiftMode shift_mode, std::uint64_t seed,
                               std::vector<double> a_in_grid = {}, std::size_t jobs = 1)
{
    ExperimentConfig probe = base;
    probe.shift_mode = shift_mode;
    probe.validate();
    validate_grid(theta_grid, "theta grid");
    if (a_in_grid.empty()) a_in_grid.push_back(base.encoding.a_in);

    CurveResult c;
    c.x = theta_grid;
    c.shift_mode = std::string(to_string(shift_mode));
    c.n_theta = base.encoding.n_theta;
    c.seed = seed;
    for (double a : a_in_grid) c.series.push_back({amplitude_series_name(a), std::vector<double>(theta_grid.size())});

    const std::size_t n = theta_grid.size();
    parallel_for(n * a_in_grid.size(), jobs, [&](std::size_t idx) {
        const std::size_t s = idx / n, j = idx % n;
        ExperimentConfig cfg = probe;
        cfg.encoding.theta = theta_grid[j];
        cfg.encoding.a_in = a_in_grid[s];
        c.series[s].values[j] = run_experiment(cfg, seed).test.rms;
    });
    return c;
}

/// Test rms against input amplitude at fixed theta, one series per shift mode.
inline CurveResult amplitude_curve(const ExperimentConfig& base, const std::vector<double>& a_in_grid,
                                   double theta, std::uint64_t seed, std::size_t jobs = 1)
{
    validate_grid(a_in_grid, "a_in grid");
    const ShiftMode modes[] = {ShiftMode::in_phase, ShiftMode::half_tau};
    for (ShiftMode m : modes) {
        ExperimentConfig probe = base;
        probe.shift_mode = m;
        probe.encoding.theta = theta;
        probe.validate();
    }

    CurveResult c;
    c.x = a_in_grid;
    c.shift_mode = "both";
    c.n_theta = base.encoding.n_theta;
    c.seed = seed;
    for (ShiftMode m : modes) c.series.push_back({std::string(to_string(m)), std::vector<double>(a_in_grid.size())});

    const std::size_t n = a_in_grid.size();
    parallel_for(2 * n, jobs, [&](std::size_t idx) {
        const std::size_t s = idx / n, j = idx % n;
        ExperimentConfig cfg = base;
        cfg.shift_mode = modes[s];
        cfg.encoding.theta = theta;
        cfg.encoding.a_in = a_in_grid[j];
        c.series[s].values[j] = run_experiment(cfg, seed).test.rms;
    });
    return c;
}

}  // namespace stno
