// pll_lockin: hold-in, pull-in and lock-in ranges of a second-order PLL with
// a lead-lag filter and triangular phase detector.

#include <pll_lockin/app.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

namespace {

std::optional<pll::IndexRange> parse_index_range(const std::string& text)
{
    const auto sep = text.find_first_of(":,", 1);
    if (sep == std::string::npos)
        return std::nullopt;
    try {
        std::size_t used_first = 0, used_last = 0;
        const std::string head = text.substr(0, sep);
        const std::string tail = text.substr(sep + 1);
        pll::IndexRange r{std::stoi(head, &used_first), std::stoi(tail, &used_last)};
        if (used_first != head.size() || used_last != tail.size() || r.last < r.first)
            return std::nullopt;
        return r;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Hold-in, pull-in and conservative lock-in ranges of a PLL with lead-lag filter and "
                 "triangular phase detector"};
    app.set_config("--config", "", "Read key=value defaults from a file (flags override)");
    app.require_subcommand(1);

    pll::RunConfig config;
    std::optional<double> omega;
    std::string format = "csv";
    std::string output;
    std::string m_range;
    pll::SweepSpec sweep;

    app.add_option("--tau1", config.params.tau1, "Loop filter time constant tau1 [s]")->required();
    app.add_option("--tau2", config.params.tau2, "Loop filter time constant tau2 [s]")->required();
    app.add_option("--kvco", config.params.kvco, "VCO gain [rad/s] (not used by sweep)");
    app.add_option("--omega", omega, "Frequency error [rad/s]");
    app.add_option("--tol", config.tol, "Oracle integration tolerance")->capture_default_str();
    app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
    app.add_option("--output", output, "Write to this path instead of stdout");
    app.add_flag("--oracle", config.oracle, "Cross-check with the numerical separatrix oracle");
    app.add_option("--epsilon", config.epsilon, "Separatrix seed offset")->capture_default_str();
    app.add_option("--m-range", m_range, "Equilibrium indices, e.g. -2:2");
    app.add_flag("--reduced", config.reduced, "Add the reduced coordinate y to trajectory output");
    app.add_option("--duration", config.portrait_duration, "Portrait transient length, reduced time units")
        ->capture_default_str();
    app.add_option("--kvco-min", sweep.kvco_min, "Sweep start [rad/s]")->capture_default_str();
    app.add_option("--kvco-max", sweep.kvco_max, "Sweep end [rad/s]")->capture_default_str();
    app.add_option("--points", sweep.points, "Sweep points")->capture_default_str();

    const std::map<std::string, pll::Command> commands = {
        {"equilibria", pll::Command::Equilibria}, {"holdin", pll::Command::Holdin},
        {"pullin", pll::Command::Pullin},         {"lockin", pll::Command::Lockin},
        {"portrait", pll::Command::Portrait},     {"sweep", pll::Command::Sweep},
    };
    const std::map<std::string, std::string> descriptions = {
        {"equilibria", "List equilibria and their type (needs --omega)"},
        {"holdin", "Print the hold-in frequency"},
        {"pullin", "Lyapunov pull-in estimate (optionally at --omega)"},
        {"lockin", "Exact conservative lock-in frequency"},
        {"portrait", "Transient and separatrix samples at --omega"},
        {"sweep", "Conservative lock-in frequency over a kvco range"},
    };
    for (const auto& [name, cmd] : commands)
        app.add_subcommand(name, descriptions.at(name))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return pll::exit_invalid;
    }

    config.command = commands.at(app.get_subcommands().front()->get_name());
    config.omega = omega;
    config.format = format == "json" ? pll::OutputFormat::Json : pll::OutputFormat::Csv;
    if (!output.empty())
        config.output_path = output;
    if (config.command == pll::Command::Sweep) {
        config.sweep = sweep;
        config.params.kvco = sweep.kvco_min;
    }
    if (!m_range.empty()) {
        const auto range = parse_index_range(m_range);
        if (!range) {
            std::cerr << "error: --m-range expects FIRST:LAST with FIRST <= LAST\n";
            return pll::exit_invalid;
        }
        config.m_range = *range;
    }
    return pll::run(config);
}
