#pragma once

// Plot-ready trajectory files. CSV columns are t,x,theta_e (plus y when the
// reduced coordinate is requested); numbers use 17 significant digits so
// they parse back to the same doubles. JSON mirrors the CSV rows.

#include "lockin.hpp"
#include "oracle.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace pll {

enum class OutputFormat { Csv, Json };

/// Loop data needed to add the reduced y column.
struct ReducedColumn {
    LoopParameters params;
    double omega = 0.0;
};

inline std::string format_number(double value)
{
    char buf[40];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

inline void write_trajectory_csv(std::ostream& out, const Trajectory& traj,
                                 const std::optional<ReducedColumn>& reduced = std::nullopt)
{
    out << (reduced ? "t,x,theta_e,y\n" : "t,x,theta_e\n");
    for (const auto& s : traj.samples) {
        out << format_number(s.t) << ',' << format_number(s.state.x) << ',' << format_number(s.state.theta_e);
        if (reduced)
            out << ',' << format_number(to_reduced(s.state, reduced->params, reduced->omega).y);
        out << '\n';
    }
}

inline nlohmann::json trajectory_to_json(const Trajectory& traj,
                                         const std::optional<ReducedColumn>& reduced = std::nullopt)
{
    auto rows = nlohmann::json::array();
    for (const auto& s : traj.samples) {
        nlohmann::json row = {{"t", s.t}, {"x", s.state.x}, {"theta_e", s.state.theta_e}};
        if (reduced)
            row["y"] = to_reduced(s.state, reduced->params, reduced->omega).y;
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_trajectory(std::ostream& out, const Trajectory& traj, OutputFormat format,
                             const std::optional<ReducedColumn>& reduced = std::nullopt)
{
    if (format == OutputFormat::Csv)
        write_trajectory_csv(out, traj, reduced);
    else
        out << trajectory_to_json(traj, reduced).dump(2) << '\n';
}

inline void export_trajectory(const Trajectory& traj, OutputFormat format, const std::string& path,
                              const std::optional<ReducedColumn>& reduced = std::nullopt)
{
    if (traj.empty())
        throw Error(ErrorCode::InvalidParameters, "cannot export an empty trajectory");
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw Error(ErrorCode::Io, "cannot open '" + path + "' for writing");
    write_trajectory(file, traj, format, reduced);
    file.flush();
    if (!file)
        throw Error(ErrorCode::Io, "write to '" + path + "' failed");
}

namespace detail {

inline double parse_number(std::string_view text)
{
    const std::string owned(text);
    char* end = nullptr;
    const double value = std::strtod(owned.c_str(), &end);
    if (end == owned.c_str() || *end != '\0')
        throw Error(ErrorCode::Io, "malformed number '" + owned + "'");
    return value;
}

} // namespace detail

/// Parses the CSV written by write_trajectory_csv; a y column is ignored.
inline Trajectory read_trajectory_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || (line != "t,x,theta_e" && line != "t,x,theta_e,y"))
        throw Error(ErrorCode::Io, "unexpected trajectory CSV header");
    Trajectory traj;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (auto pos = rest.find(','); pos != std::string_view::npos; pos = rest.find(',')) {
            fields.push_back(rest.substr(0, pos));
            rest.remove_prefix(pos + 1);
        }
        fields.push_back(rest);
        if (fields.size() < 3)
            throw Error(ErrorCode::Io, "short trajectory CSV row");
        traj.samples.push_back(
            {detail::parse_number(fields[0]), {detail::parse_number(fields[1]), detail::parse_number(fields[2])}});
    }
    return traj;
}

inline Trajectory read_trajectory_json(std::istream& in)
{
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Io, e.what());
    }
    if (!doc.is_array())
        throw Error(ErrorCode::Io, "trajectory JSON must be an array of rows");
    Trajectory traj;
    for (const auto& row : doc)
        traj.samples.push_back({row.at("t").get<double>(), {row.at("x").get<double>(), row.at("theta_e").get<double>()}});
    return traj;
}

} // namespace pll
