#pragma once

// Deterministic artifact writing: shortest round-trip number formatting and
// CSV files with a '#' metadata preamble.

#include "stno/errors.hpp"
#include "stno/sweep.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#ifndef STNO_VERSION
#define STNO_VERSION "0.1.0"
#endif

namespace stno {

inline constexpr std::string_view tool_name = "stno_rc";
inline constexpr std::string_view tool_version = STNO_VERSION;

/// Shortest decimal text that parses back to the same double; "nan", "inf", "-inf" otherwise.
inline std::string format_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw Error("format_number: conversion failed");
    return {buf, end};
}

inline std::string hex64(std::uint64_t v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Provenance shared by every artifact of one command invocation.
struct ArtifactMeta {
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

/// CSV text under construction; rows are joined with ',' and end with '\n'.
class CsvBuilder {
public:
    explicit CsvBuilder(const ArtifactMeta& meta)
    {
        text_ += "# tool=" + std::string(tool_name) + " " + std::string(tool_version) + "\n";
        text_ += "# config_hash=" + hex64(meta.config_hash) + "\n";
        text_ += "# seed=" + std::to_string(meta.seed) + "\n";
    }

    void comment(std::string_view line) { text_ += "# " + std::string(line) + "\n"; }

    void row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += ',';
            text_ += cells[i];
        }
        text_ += '\n';
    }

    const std::string& str() const noexcept { return text_; }

private:
    std::string text_;
};

/// Free text made safe for a single CSV cell.
inline std::string csv_cell(std::string_view text)
{
    std::string out(text);
    for (char& c : out)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return out;
}

inline std::string grid_csv(const GridResult& grid, const ArtifactMeta& meta, std::string_view which)
{
    CsvBuilder csv(meta);
    csv.comment("map=" + std::string(which));
    const bool flagged = grid.any_flagged();
    if (flagged)
        csv.row({"field_mT", "i_dc_mA", "value", "reason"});
    else
        csv.row({"field_mT", "i_dc_mA", "value"});
    for (std::size_t r = 0; r < grid.rows(); ++r) {
        for (std::size_t c = 0; c < grid.cols(); ++c) {
            std::vector<std::string> cells{format_number(grid.field_grid[r]), format_number(grid.i_dc_grid[c]),
                                           format_number(grid.at(r, c))};
            if (flagged) cells.push_back(csv_cell(grid.reason(r, c)));
            csv.row(cells);
        }
    }
    return csv.str();
}

inline std::string curve_csv(const CurveResult& curve, const ArtifactMeta& meta, std::string_view which)
{
    CsvBuilder csv(meta);
    csv.comment("curve=" + std::string(which) + " shift_mode=" + curve.shift_mode
                + " n_theta=" + std::to_string(curve.n_theta));
    std::vector<std::string> header{"x"};
    for (const auto& s : curve.series) header.push_back(csv_cell(s.name));
    csv.row(header);
    for (std::size_t j = 0; j < curve.x.size(); ++j) {
        std::vector<std::string> cells{format_number(curve.x[j])};
        for (const auto& s : curve.series) cells.push_back(format_number(s.values[j]));
        csv.row(cells);
    }
    return csv.str();
}

/// Writes every (name, content) pair into `dir`, creating it first. Nothing is
/// written unless all contents are ready, so failures leave no partial set.
inline void write_artifacts(const std::filesystem::path& dir,
                            const std::vector<std::pair<std::string, std::string>>& files)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create output directory '" + dir.string() + "': " + ec.message());
    for (const auto& [name, content] : files) {
        const auto path = dir / name;
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + path.string() + "'");
        out << content;
        if (!out) throw Error("write failed for '" + path.string() + "'");
    }
}

}  // namespace stno
