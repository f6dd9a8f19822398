// slowlight: exact slow-light soliton maps, figure data and self-checks.

#include <charconv>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slowlight/runner.hpp"

namespace {

using namespace slowlight;

std::vector<double> parse_values(const std::string& list) {
    std::vector<double> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto b = item.find_first_not_of(' '), e = item.find_last_not_of(' ');
        if (b == std::string::npos) throw ConfigError("empty entry in --values");
        const auto s = item.substr(b, e - b + 1);
        double v = 0.0;
        const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw ConfigError("bad number '" + s + "' in --values");
        out.push_back(v);
    }
    return out;
}

std::filesystem::path output_dir(const Scenario& s, const std::string& override_dir) {
    return override_dir.empty() ? std::filesystem::path(s.output.dir) : std::filesystem::path(override_dir);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exact slow-light soliton solutions of the three-level Maxwell-Bloch system.\n"
                 "Threads: SLOWLIGHT_THREADS (default: hardware concurrency).\n"
                 "Exit codes: 0 ok, 2 validation, 3 numeric, 4 I/O."};
    app.require_subcommand(1);

    std::string config, out, param, values;
    int figure_id = 0;
    double bessel_tolerance = SelfcheckOptions{}.bessel_tolerance;

    auto* run = app.add_subcommand("run", "Evaluate a scenario; write the field map and a JSON summary");
    run->add_option("config", config, "Scenario file (JSON, comments allowed)")->required();
    run->add_option("--out", out, "Output directory (overrides output.dir)");

    auto* figure = app.add_subcommand("figure", "Write the data behind one figure (1 to 6)");
    figure->add_option("id", figure_id, "Figure id")->required();
    figure->add_option("--out", out, "Output directory")->default_str("figures");

    auto* selfcheck = app.add_subcommand("selfcheck", "Run the fast consistency checks");
    selfcheck->add_option("--bessel-tolerance", bessel_tolerance, "Bessel series truncation")->group("");

    auto* sweep = app.add_subcommand("sweep", "Run a scenario once per parameter value");
    sweep->add_option("config", config, "Scenario file")->required();
    sweep->add_option("--param", param, "Parameter to vary")->required()->check(CLI::IsMember(sweep_parameters()));
    sweep->add_option("--values", values, "Comma-separated values")->required();
    sweep->add_option("--out", out, "Output directory (overrides output.dir)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_code_for(ErrorKind::validation);
    }

    try {
        if (*run) {
            const auto s = load_scenario(config);
            const auto r = run_scenario(s, output_dir(s, out));
            std::cout << "field map: " << r.field_map.string() << "\nsummary:   " << r.summary_path.string() << '\n';
        } else if (*figure) {
            if (!known_figure(figure_id)) {
                std::cerr << "error: unknown figure id " << figure_id << ", expected 1 to 6\n" << app.help();
                return exit_code_for(ErrorKind::validation);
            }
            const auto b = emit_figure(figure_id, out.empty() ? "figures" : out);
            for (const auto& f : b.files) std::cout << f.string() << '\n';
        } else if (*selfcheck) {
            SelfcheckOptions opt;
            opt.bessel_tolerance = bessel_tolerance;
            bool ok = true;
            for (const auto& item : run_selfcheck(opt)) {
                std::cout << (item.passed ? "PASS " : "FAIL ") << item.name << ": " << item.detail << '\n';
                ok = ok && item.passed;
            }
            if (!ok) return exit_code_for(ErrorKind::numeric);
        } else if (*sweep) {
            const auto s = load_scenario(config);
            const auto v = parse_values(values);
            const auto dir = output_dir(s, out);
            run_sweep(s, param, v, dir);
            std::cout << "sweep: " << (dir / "sweep.json").string() << '\n';
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(e.kind());
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(ErrorKind::io);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_for(ErrorKind::numeric);
    }
    return 0;
}
