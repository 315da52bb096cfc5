#pragma once

// Command implementations behind the pll_lockin executable. Kept in the
// library so they can be driven directly from tests.

#include "core.hpp"
#include "lockin.hpp"
#include "oracle.hpp"
#include "stability.hpp"
#include "trajectory_io.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

namespace pll {

enum class Command { Equilibria, Holdin, Pullin, Lockin, Portrait, Sweep };

struct SweepSpec {
    double kvco_min = 50.0;
    double kvco_max = 500.0;
    int points = 46;
};

struct RunConfig {
    LoopParameters params;
    std::optional<double> omega;
    Command command = Command::Lockin;
    /// Oracle integration tolerance; the closed-form solver has fixed tolerances.
    double tol = 1e-9;
    OutputFormat format = OutputFormat::Csv;
    std::optional<std::string> output_path;
    std::optional<SweepSpec> sweep;
    bool oracle = false;
    double epsilon = default_separatrix_epsilon;
    IndexRange m_range;
    bool reduced = false;
    /// Portrait transient length in reduced time units.
    double portrait_duration = 60.0;
};

inline constexpr int exit_ok = 0;
inline constexpr int exit_invalid = 1;
inline constexpr int exit_solver = 2;

inline void validate(const RunConfig& config)
{
    config.params.validate();
    if (!(config.tol >= 1e-13 && config.tol <= 1e-3))
        throw Error(ErrorCode::InvalidParameters, "--tol must lie in [1e-13, 1e-3]");
    if (!(config.epsilon >= 1e-10 && config.epsilon <= 1e-4))
        throw Error(ErrorCode::InvalidParameters, "--epsilon must lie in [1e-10, 1e-4]");
    if (config.omega && !std::isfinite(*config.omega))
        throw Error(ErrorCode::InvalidParameters, "--omega must be finite");
    if ((config.command == Command::Equilibria || config.command == Command::Portrait) && !config.omega)
        throw Error(ErrorCode::InvalidParameters, "this command needs --omega");
    if (config.command == Command::Portrait && !(*config.omega > 0.0 && *config.omega < config.params.kvco))
        throw Error(ErrorCode::InvalidParameters, "portrait needs 0 < omega < kvco");
    if (!(config.portrait_duration > 0.0 && std::isfinite(config.portrait_duration)))
        throw Error(ErrorCode::InvalidParameters, "portrait duration must be positive");
    if (config.command == Command::Sweep) {
        const SweepSpec spec = config.sweep.value_or(SweepSpec{});
        if (spec.points < 2 || spec.points > 100000)
            throw Error(ErrorCode::InvalidParameters, "--points must lie in [2, 100000]");
        if (!(spec.kvco_min > 0.0 && spec.kvco_max > spec.kvco_min && std::isfinite(spec.kvco_max)))
            throw Error(ErrorCode::InvalidParameters, "need 0 < kvco-min < kvco-max");
    }
}

namespace detail {

/// A one-row table: CSV header + row, or a flat JSON object.
class Record {
public:
    Record& add(std::string key, double value)
    {
        fields_.emplace_back(std::move(key), nlohmann::json(value));
        return *this;
    }
    Record& add(std::string key, bool value)
    {
        fields_.emplace_back(std::move(key), nlohmann::json(value));
        return *this;
    }
    Record& add(std::string key, std::string value)
    {
        fields_.emplace_back(std::move(key), nlohmann::json(std::move(value)));
        return *this;
    }
    Record& add(std::string key, std::intmax_t value)
    {
        fields_.emplace_back(std::move(key), nlohmann::json(value));
        return *this;
    }
    Record& add(std::string key, std::uintmax_t value)
    {
        fields_.emplace_back(std::move(key), nlohmann::json(value));
        return *this;
    }

    [[nodiscard]] nlohmann::json to_json() const
    {
        nlohmann::json obj = nlohmann::json::object();
        for (const auto& [k, v] : fields_)
            obj[k] = v;
        return obj;
    }

    [[nodiscard]] std::string header() const
    {
        std::string out;
        for (const auto& [k, v] : fields_)
            out += (out.empty() ? "" : ",") + k;
        return out;
    }

    [[nodiscard]] std::string row() const
    {
        std::string out;
        bool first = true;
        for (const auto& [k, v] : fields_) {
            if (!first)
                out += ',';
            first = false;
            if (v.is_number_float())
                out += format_number(v.get<double>());
            else if (v.is_string())
                out += v.get<std::string>();
            else
                out += v.dump();
        }
        return out;
    }

private:
    std::vector<std::pair<std::string, nlohmann::json>> fields_;
};

inline void write_records(std::ostream& out, const std::vector<Record>& records, OutputFormat format)
{
    if (format == OutputFormat::Json) {
        if (records.size() == 1) {
            out << records.front().to_json().dump(2) << '\n';
            return;
        }
        auto arr = nlohmann::json::array();
        for (const auto& r : records)
            arr.push_back(r.to_json());
        out << arr.dump(2) << '\n';
        return;
    }
    if (records.empty())
        return;
    out << records.front().header() << '\n';
    for (const auto& r : records)
        out << r.row() << '\n';
}

/// Inserts `tag` before the extension: "run.csv" -> "run.tag.csv".
inline std::string tagged_path(const std::string& path, std::string_view tag)
{
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + "." + std::string(tag);
    return path.substr(0, dot) + "." + std::string(tag) + path.substr(dot);
}

inline std::vector<Record> equilibria_records(const RunConfig& c)
{
    std::vector<Record> out;
    for (const auto& eq : equilibria(c.params, *c.omega, c.m_range)) {
        Record r;
        r.add("m", static_cast<std::intmax_t>(eq.index_m))
            .add("x_eq", eq.x_eq)
            .add("theta_eq", eq.theta_eq)
            .add("kind", std::string(to_string(eq.kind)));
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<Record> pullin_records(const RunConfig& c)
{
    const auto report = pull_in_lower_bound(c.params);
    Record r;
    r.add("beta0", report.beta0)
        .add("condition_holds", report.condition_holds)
        .add("pull_in_lower_bound", report.pull_in_lower_bound)
        .add("bound_is_trivial", report.bound_is_trivial);
    if (c.omega) {
        r.add("omega", *c.omega).add("beta0_at_omega", beta0(*c.omega, c.params.kvco));
        if (c.params.tau2 > 0.0)
            r.add("global_stability", global_stability_condition(c.params, *c.omega) ? std::string("true")
                                                                                       : std::string("false"));
        else
            r.add("global_stability", std::string("inapplicable"));
    }
    return {r};
}

inline std::vector<Record> lockin_records(const RunConfig& c)
{
    const auto sol = conservative_lock_in(c.params);
    Record r;
    r.add("omega_lc", sol.omega_lc)
        .add("y_ab", sol.y_ab)
        .add("case", std::string(to_string(sol.case_tag)))
        .add("residual_a", sol.residual_a)
        .add("residual_b", sol.residual_b)
        .add("iterations", sol.iterations);
    if (c.oracle) {
        const double numeric = numeric_conservative_lock_in(c.params, {c.tol, c.epsilon});
        r.add("numeric_omega_lc", numeric).add("difference", sol.omega_lc - numeric);
    }
    return {r};
}

inline std::vector<Record> sweep_records(const RunConfig& c)
{
    const SweepSpec spec = c.sweep.value_or(SweepSpec{});
    const auto n = static_cast<std::size_t>(spec.points);
    struct Row {
        double kvco = 0.0;
        double omega_lc = 0.0;
        double numeric = 0.0;
    };
    std::vector<Row> rows(n);
    for (std::size_t i = 0; i < n; ++i)
        rows[i].kvco = spec.kvco_min + (spec.kvco_max - spec.kvco_min) * static_cast<double>(i) / static_cast<double>(n - 1);

    // Rows are independent; each worker takes a strided share.
    const std::size_t workers = std::clamp<std::size_t>(std::thread::hardware_concurrency(), 1, n);
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&, w] {
            for (std::size_t i = w; i < n; i += workers) {
                LoopParameters p = c.params;
                p.kvco = rows[i].kvco;
                rows[i].omega_lc = conservative_lock_in(p).omega_lc;
                if (c.oracle)
                    rows[i].numeric = numeric_conservative_lock_in(p, {c.tol, c.epsilon});
            }
        }));
    }
    for (auto& j : jobs)
        j.get(); // rethrows the first failure

    std::vector<Record> out;
    for (const auto& row : rows) {
        Record r;
        r.add("kvco", row.kvco).add("omega_lc", row.omega_lc);
        if (c.oracle)
            r.add("numeric_omega_lc", row.numeric);
        out.push_back(std::move(r));
    }
    return out;
}

struct Portrait {
    Trajectory transient;  ///< from the -w stable equilibrium after the jump to +w
    Trajectory separatrix; ///< upper stable separatrix of the +w saddle
};

inline Portrait portrait(const RunConfig& c)
{
    const double omega = *c.omega;
    const auto start = equilibrium(c.params, -omega, 0);
    Portrait p;
    p.transient = integrate_trajectory(c.params, omega, {start.x_eq, start.theta_eq},
                                       c.portrait_duration / time_scale(c.params), c.tol);
    p.separatrix = trace_separatrix(c.params, omega, c.epsilon, c.tol);
    return p;
}

inline void write_portrait(const RunConfig& c, const Portrait& p, std::ostream& out)
{
    std::optional<ReducedColumn> reduced;
    if (c.reduced)
        reduced = ReducedColumn{c.params, *c.omega};
    if (c.output_path) {
        export_trajectory(p.transient, c.format, tagged_path(*c.output_path, "trajectory"), reduced);
        export_trajectory(p.separatrix, c.format, tagged_path(*c.output_path, "separatrix"), reduced);
        return;
    }
    if (c.format == OutputFormat::Json) {
        nlohmann::json doc = {{"trajectory", trajectory_to_json(p.transient, reduced)},
                              {"separatrix", trajectory_to_json(p.separatrix, reduced)}};
        out << doc.dump(2) << '\n';
        return;
    }
    out << "# trajectory\n";
    write_trajectory_csv(out, p.transient, reduced);
    out << "\n# separatrix\n";
    write_trajectory_csv(out, p.separatrix, reduced);
}

inline void emit(const RunConfig& c, const std::vector<Record>& records, std::ostream& out)
{
    if (!c.output_path) {
        write_records(out, records, c.format);
        return;
    }
    std::ofstream file(*c.output_path, std::ios::binary);
    if (!file)
        throw Error(ErrorCode::Io, "cannot open '" + *c.output_path + "' for writing");
    write_records(file, records, c.format);
    file.flush();
    if (!file)
        throw Error(ErrorCode::Io, "write to '" + *c.output_path + "' failed");
}

} // namespace detail

/// Runs one command. Returns 0 on success, 1 on invalid input or I/O
/// failure, 2 when a numerical search fails (no bracket, undecided, ...).
inline int run(const RunConfig& config, std::ostream& out = std::cout, std::ostream& err = std::cerr)
{
    try {
        validate(config);
        switch (config.command) {
        case Command::Equilibria: detail::emit(config, detail::equilibria_records(config), out); break;
        case Command::Holdin: {
            detail::Record r;
            r.add("omega_h", hold_in_frequency(config.params));
            detail::emit(config, {r}, out);
            break;
        }
        case Command::Pullin: detail::emit(config, detail::pullin_records(config), out); break;
        case Command::Lockin: detail::emit(config, detail::lockin_records(config), out); break;
        case Command::Sweep: detail::emit(config, detail::sweep_records(config), out); break;
        case Command::Portrait: detail::write_portrait(config, detail::portrait(config), out); break;
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return is_solver_failure(e.code()) ? exit_solver : exit_invalid;
    }
    return exit_ok;
}

} // namespace pll
