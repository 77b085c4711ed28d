#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "silab/config.hpp"
#include "silab/errors.hpp"
#include "silab/experiment.hpp"
#include "silab/trace_io.hpp"
#include "silab/verify.hpp"

namespace {

int cmd_run(const std::string& config_path) {
    const auto cfg = silab::config::load_experiment(config_path);
    const auto result = silab::experiment::run_experiment(cfg, std::cout);
    std::cout << "artifacts under " << result.output.string() << "\n";
    return 0;
}

int cmd_verify(const std::vector<std::string>& suites, const std::string& out_path) {
    std::vector<std::string> names = suites;
    if (names.empty() || (names.size() == 1 && names[0] == "all"))
        names = silab::verify::suite_names();
    std::vector<silab::verify::SuiteResult> results;
    bool all_pass = true;
    for (const auto& name : names) {
        results.push_back(silab::verify::run_suite(name));
        all_pass = all_pass && results.back().pass();
    }
    std::cout << silab::verify::report_text(results);
    if (!out_path.empty())
        silab::io::write_file(out_path, silab::verify::report_json(results));
    return all_pass ? 0 : 1;
}

int cmd_plot(const std::string& input, const std::string& kind, std::string output,
             double delta, std::size_t period) {
    if (output.empty()) {
        auto p = std::filesystem::path(input);
        p.replace_extension(kind + ".svg");
        output = p.string();
    }
    const auto written = silab::experiment::plot_file(input, kind, output, delta, period);
    for (const auto& p : written) std::cout << p.string() << "\n";
    return 0;
}

int cmd_report(const std::string& dir) {
    std::cout << silab::experiment::report_dir(dir);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"numerical laboratory for periodic training dynamics under scale "
                 "invariance and weight decay"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "run a config-driven experiment sweep");
    run->add_option("config", config_path, "experiment config file")->required();

    std::vector<std::string> suites;
    std::string verify_out;
    auto* verify = app.add_subcommand("verify", "run verification suites");
    verify->add_option("suite", suites,
                       "closed-forms | jump-theory | beta-seq | rescaling | periodicity | all");
    verify->add_option("--out", verify_out, "write the JSON report here");

    std::string plot_input, plot_kind = "trace", plot_out;
    double plot_delta = 0.1;
    std::size_t plot_period = 0;
    auto* plot = app.add_subcommand("plot", "render an SVG chart from an artifact file");
    plot->add_option("input", plot_input, "trace.csv / overlay.csv / similarity.csv")->required();
    plot->add_option("--kind", plot_kind, "trace | period | phase | elr | overlay | similarity");
    plot->add_option("--out", plot_out, "output SVG path");
    plot->add_option("--delta", plot_delta, "jump threshold for period segmentation");
    plot->add_option("--period", plot_period, "period index for --kind period");

    std::string report_path;
    auto* report = app.add_subcommand("report", "summarize manifests under a directory");
    report->add_option("dir", report_path, "artifact directory")->required();

    try {
        app.parse(argc, argv);
        if (run->parsed()) return cmd_run(config_path);
        if (verify->parsed()) return cmd_verify(suites, verify_out);
        if (plot->parsed()) return cmd_plot(plot_input, plot_kind, plot_out, plot_delta,
                                            plot_period);
        if (report->parsed()) return cmd_report(report_path);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    } catch (const silab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const silab::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
