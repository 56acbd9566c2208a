#pragma once

// Run configuration: a single JSON document with a strict schema.
//
// Every key is optional and defaults to the calibrated reference setup;
// unknown keys and mistyped values are rejected. Errors name the offending key
// as a JSON pointer and, when the source text is available, its line.

#include "stno/errors.hpp"
#include "stno/pipeline.hpp"
#include "stno/sweep.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace stno {

struct SweepConfig {
    std::vector<double> i_dc_grid{3.0, 3.5, 4.0, 4.5, 5.0, 5.5, 6.0, 6.5, 7.0, 7.5, 8.0, 8.5, 9.0, 9.5, 10.0};
    std::vector<double> field_grid{380.0, 390.0, 400.0, 410.0, 420.0, 430.0, 440.0, 450.0, 460.0, 470.0};
    double gamma_g_rel_span = 0.3;
    double q_nl_rel_span = 0.0;
    double sigma_rel_span = 0.0;
    std::vector<double> theta_grid{30e-9, 50e-9, 100e-9, 150e-9, 300e-9, 600e-9, 1500e-9};
    std::vector<double> a_in_grid{3.6, 4.8, 6.0};
    double nonlinearity_h = 0.01;  // mA
    double noise_duration = 50e-6; // s
    double noise_dt = 1e-9;        // s
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};

    bool wants(std::string_view fmt) const
    {
        for (const auto& f : formats)
            if (f == fmt) return true;
        return false;
    }
};

struct RunConfig {
    ExperimentConfig experiment;
    std::uint64_t seed = 1;
    SweepConfig sweep;
    OutputConfig output;

    FieldMap fieldmap() const
    {
        FieldMap fm;
        fm.field_grid = sweep.field_grid;
        fm.base = experiment.oscillator;
        fm.gamma_g_rel_span = sweep.gamma_g_rel_span;
        fm.q_nl_rel_span = sweep.q_nl_rel_span;
        fm.sigma_rel_span = sweep.sigma_rel_span;
        return fm;
    }
};

namespace detail {

using json = nlohmann::json;

/// 1-based line of the key at `pointer` in `text`, found by scanning for each
/// path component in order; 0 when not found.
inline std::size_t locate_key(std::string_view text, std::string_view pointer)
{
    std::size_t pos = 0;
    std::size_t start = 1;
    while (start <= pointer.size()) {
        const std::size_t end = std::min(pointer.find('/', start), pointer.size());
        const std::string needle = "\"" + std::string(pointer.substr(start, end - start)) + "\"";
        const std::size_t found = text.find(needle, pos);
        if (found == std::string_view::npos) return 0;
        pos = found + needle.size();
        start = end + 1;
    }
    if (pos == 0) return 0;
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class ConfigReader {
public:
    explicit ConfigReader(std::string_view source) : source_(source) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& message) const
    {
        std::string where = pointer;
        if (const auto line = locate_key(source_, pointer); line > 0)
            where = "line " + std::to_string(line) + ": " + pointer;
        throw ConfigError(where + ": " + message);
    }

    void check(bool ok, const std::string& pointer, const std::string& message) const
    {
        if (!ok) fail(pointer, message);
    }

    const json& object(const json& parent, const std::string& pointer, const std::string& key,
                       const std::set<std::string>& allowed) const
    {
        static const json empty = json::object();
        if (!parent.contains(key)) return empty;
        const json& node = parent.at(key);
        const std::string here = pointer + "/" + key;
        check(node.is_object(), here, "must be an object");
        for (const auto& item : node.items())
            check(allowed.count(item.key()) > 0, here + "/" + item.key(), "unknown key");
        return node;
    }

    void number(const json& obj, const std::string& pointer, const std::string& key, double& out) const
    {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        check(v.is_number(), pointer + "/" + key, "must be a number");
        out = v.get<double>();
        check(std::isfinite(out), pointer + "/" + key, "must be finite");
    }

    template <class Int>
    void integer(const json& obj, const std::string& pointer, const std::string& key, Int& out) const
    {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        check(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0),
              pointer + "/" + key, "must be a non-negative integer");
        out = static_cast<Int>(v.get<std::uint64_t>());
    }

    void string(const json& obj, const std::string& pointer, const std::string& key, std::string& out) const
    {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        check(v.is_string(), pointer + "/" + key, "must be a string");
        out = v.get<std::string>();
    }

    void numbers(const json& obj, const std::string& pointer, const std::string& key,
                 std::vector<double>& out) const
    {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        const std::string here = pointer + "/" + key;
        check(v.is_array(), here, "must be an array of numbers");
        out.clear();
        for (const auto& e : v) {
            check(e.is_number(), here, "must be an array of numbers");
            out.push_back(e.get<double>());
            check(std::isfinite(out.back()), here, "entries must be finite");
        }
    }

    void strings(const json& obj, const std::string& pointer, const std::string& key,
                 std::vector<std::string>& out) const
    {
        if (!obj.contains(key)) return;
        const json& v = obj.at(key);
        const std::string here = pointer + "/" + key;
        check(v.is_array(), here, "must be an array of strings");
        out.clear();
        for (const auto& e : v) {
            check(e.is_string(), here, "must be an array of strings");
            out.push_back(e.get<std::string>());
        }
    }

    void increasing(const std::vector<double>& grid, const std::string& pointer) const
    {
        check(!grid.empty(), pointer, "must not be empty");
        for (std::size_t i = 1; i < grid.size(); ++i)
            check(grid[i] > grid[i - 1], pointer, "must be strictly increasing");
    }

private:
    std::string_view source_;
};

}  // namespace detail

/// Parses and fully validates a configuration document. Nothing is simulated
/// here except the fail-fast checks.
inline RunConfig parse_config(std::string_view text)
{
    using detail::json;
    json root;
    try {
        root = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    const detail::ConfigReader rd(text);
    rd.check(root.is_object(), "", "top level must be an object");
    for (const auto& item : root.items())
        rd.check(item.key() == "oscillator" || item.key() == "encoding" || item.key() == "task"
                     || item.key() == "readout" || item.key() == "sweep" || item.key() == "output",
                 "/" + item.key(), "unknown key");

    RunConfig cfg;
    auto& ex = cfg.experiment;

    const json& osc = rd.object(root, "", "oscillator", {"gamma_g", "q_nl", "sigma", "kappa", "v_offset", "noise_d"});
    rd.number(osc, "/oscillator", "gamma_g", ex.oscillator.gamma_g);
    rd.number(osc, "/oscillator", "q_nl", ex.oscillator.q_nl);
    rd.number(osc, "/oscillator", "sigma", ex.oscillator.sigma);
    rd.number(osc, "/oscillator", "kappa", ex.oscillator.kappa);
    rd.number(osc, "/oscillator", "v_offset", ex.oscillator.v_offset);
    rd.number(osc, "/oscillator", "noise_d", ex.oscillator.noise_d);
    rd.check(ex.oscillator.gamma_g > 0, "/oscillator/gamma_g", "must be > 0");
    rd.check(ex.oscillator.sigma > 0, "/oscillator/sigma", "must be > 0");
    rd.check(ex.oscillator.q_nl >= 0, "/oscillator/q_nl", "must be >= 0");
    rd.check(ex.oscillator.kappa >= 0, "/oscillator/kappa", "must be >= 0");
    rd.check(ex.oscillator.noise_d >= 0, "/oscillator/noise_d", "must be >= 0");

    const json& enc = rd.object(root, "", "encoding", {"n_theta", "theta", "i_dc", "a_in", "mask_seed", "substeps"});
    rd.integer(enc, "/encoding", "n_theta", ex.encoding.n_theta);
    rd.number(enc, "/encoding", "theta", ex.encoding.theta);
    rd.number(enc, "/encoding", "i_dc", ex.encoding.i_dc);
    rd.number(enc, "/encoding", "a_in", ex.encoding.a_in);
    rd.integer(enc, "/encoding", "mask_seed", ex.mask_seed);
    rd.integer(enc, "/encoding", "substeps", ex.substeps);
    rd.check(ex.encoding.n_theta >= 2, "/encoding/n_theta", "must be >= 2");
    rd.check(ex.encoding.theta > 0, "/encoding/theta", "must be > 0");
    rd.check(ex.encoding.a_in >= 0, "/encoding/a_in", "must be >= 0");
    rd.check(ex.substeps >= 10, "/encoding/substeps", "must be >= 10");

    const json& task = rd.object(root, "", "task", {"n_symbols", "seed", "train_fraction"});
    rd.integer(task, "/task", "n_symbols", ex.n_symbols);
    rd.integer(task, "/task", "seed", cfg.seed);
    rd.number(task, "/task", "train_fraction", ex.train_fraction);
    rd.check(ex.n_symbols >= 2, "/task/n_symbols", "must be >= 2");
    rd.check(ex.train_fraction > 0 && ex.train_fraction < 1, "/task/train_fraction", "must be in (0, 1)");
    {
        const auto n_train = std::llround(ex.train_fraction * static_cast<double>(ex.n_symbols));
        rd.check(n_train > 0 && n_train < static_cast<long long>(ex.n_symbols), "/task/train_fraction",
                 "leaves the train or test set empty");
    }

    const json& ro = rd.object(root, "", "readout", {"lambda_rel", "lambda"});
    rd.number(ro, "/readout", "lambda_rel", ex.ridge_rel);
    rd.check(ex.ridge_rel >= 0, "/readout/lambda_rel", "must be >= 0");
    if (ro.contains("lambda") && !ro.at("lambda").is_null()) {
        double lambda = 0.0;
        rd.number(ro, "/readout", "lambda", lambda);
        rd.check(lambda >= 0, "/readout/lambda", "must be >= 0");
        ex.ridge = lambda;
    }

    const json& sw = rd.object(root, "", "sweep",
                               {"i_dc_grid", "field_grid", "fieldmap", "shift_mode", "theta_grid", "a_in_grid",
                                "nonlinearity_h", "noise_duration", "noise_dt"});
    auto& s = cfg.sweep;
    rd.numbers(sw, "/sweep", "i_dc_grid", s.i_dc_grid);
    rd.numbers(sw, "/sweep", "field_grid", s.field_grid);
    rd.numbers(sw, "/sweep", "theta_grid", s.theta_grid);
    rd.numbers(sw, "/sweep", "a_in_grid", s.a_in_grid);
    rd.number(sw, "/sweep", "nonlinearity_h", s.nonlinearity_h);
    rd.number(sw, "/sweep", "noise_duration", s.noise_duration);
    rd.number(sw, "/sweep", "noise_dt", s.noise_dt);
    rd.increasing(s.i_dc_grid, "/sweep/i_dc_grid");
    rd.increasing(s.field_grid, "/sweep/field_grid");
    rd.increasing(s.theta_grid, "/sweep/theta_grid");
    rd.increasing(s.a_in_grid, "/sweep/a_in_grid");
    rd.check(s.theta_grid.front() > 0, "/sweep/theta_grid", "entries must be > 0");
    rd.check(s.a_in_grid.front() >= 0, "/sweep/a_in_grid", "entries must be >= 0");
    rd.check(s.nonlinearity_h > 0, "/sweep/nonlinearity_h", "must be > 0");
    rd.check(s.noise_duration > 0, "/sweep/noise_duration", "must be > 0");
    rd.check(s.noise_dt > 0, "/sweep/noise_dt", "must be > 0");
    if (sw.contains("shift_mode")) {
        std::string mode;
        rd.string(sw, "/sweep", "shift_mode", mode);
        try {
            ex.shift_mode = parse_shift_mode(mode);
        } catch (const ConfigError& e) {
            rd.fail("/sweep/shift_mode", e.what());
        }
    }
    rd.check(ex.shift_mode != ShiftMode::half_tau || ex.encoding.n_theta % 2 == 0, "/sweep/shift_mode",
             "half_tau requires an even /encoding/n_theta");
    const json& fm = rd.object(sw, "/sweep", "fieldmap", {"gamma_g_rel_span", "q_nl_rel_span", "sigma_rel_span"});
    rd.number(fm, "/sweep/fieldmap", "gamma_g_rel_span", s.gamma_g_rel_span);
    rd.number(fm, "/sweep/fieldmap", "q_nl_rel_span", s.q_nl_rel_span);
    rd.number(fm, "/sweep/fieldmap", "sigma_rel_span", s.sigma_rel_span);
    rd.check(std::abs(s.gamma_g_rel_span) < 1, "/sweep/fieldmap/gamma_g_rel_span", "must lie in (-1, 1)");
    rd.check(std::abs(s.sigma_rel_span) < 1, "/sweep/fieldmap/sigma_rel_span", "must lie in (-1, 1)");
    rd.check(std::abs(s.q_nl_rel_span) <= 1, "/sweep/fieldmap/q_nl_rel_span", "must lie in [-1, 1]");

    const json& out = rd.object(root, "", "output", {"directory", "formats"});
    rd.string(out, "/output", "directory", cfg.output.directory);
    rd.strings(out, "/output", "formats", cfg.output.formats);
    rd.check(!cfg.output.directory.empty(), "/output/directory", "must not be empty");
    for (const auto& f : cfg.output.formats)
        rd.check(f == "csv" || f == "json", "/output/formats", "entries must be \"csv\" or \"json\"");

    // backstop: module-level invariants
    try {
        ex.validate();
        cfg.fieldmap().validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("invalid configuration: ") + e.what());
    }
    return cfg;
}

inline RunConfig load_config(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/// The effective configuration as JSON; the output block is omitted so that the
/// hash does not depend on where artifacts are written.
inline nlohmann::json to_json(const RunConfig& cfg)
{
    const auto& ex = cfg.experiment;
    nlohmann::json j;
    j["oscillator"] = {{"gamma_g", ex.oscillator.gamma_g}, {"q_nl", ex.oscillator.q_nl},
                       {"sigma", ex.oscillator.sigma},     {"kappa", ex.oscillator.kappa},
                       {"v_offset", ex.oscillator.v_offset}, {"noise_d", ex.oscillator.noise_d}};
    j["encoding"] = {{"n_theta", ex.encoding.n_theta}, {"theta", ex.encoding.theta},
                     {"i_dc", ex.encoding.i_dc},       {"a_in", ex.encoding.a_in},
                     {"mask_seed", ex.mask_seed},      {"substeps", ex.substeps}};
    j["task"] = {{"n_symbols", ex.n_symbols}, {"seed", cfg.seed}, {"train_fraction", ex.train_fraction}};
    j["readout"] = {{"lambda_rel", ex.ridge_rel}};
    j["readout"]["lambda"] = ex.ridge ? nlohmann::json(*ex.ridge) : nlohmann::json(nullptr);
    const auto& s = cfg.sweep;
    j["sweep"] = {{"i_dc_grid", s.i_dc_grid},
                  {"field_grid", s.field_grid},
                  {"fieldmap",
                   {{"gamma_g_rel_span", s.gamma_g_rel_span},
                    {"q_nl_rel_span", s.q_nl_rel_span},
                    {"sigma_rel_span", s.sigma_rel_span}}},
                  {"shift_mode", std::string(to_string(ex.shift_mode))},
                  {"theta_grid", s.theta_grid},
                  {"a_in_grid", s.a_in_grid},
                  {"nonlinearity_h", s.nonlinearity_h},
                  {"noise_duration", s.noise_duration},
                  {"noise_dt", s.noise_dt}};
    return j;
}

/// FNV-1a over the canonical dump of to_json().
inline std::uint64_t config_hash(const RunConfig& cfg)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : to_json(cfg).dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace stno
