#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "silab/config.hpp"
#include "silab/dynamics.hpp"
#include "silab/errors.hpp"
#include "silab/experiment.hpp"
#include "silab/objectives.hpp"
#include "silab/svg.hpp"
#include "silab/trace_io.hpp"

using namespace silab;

TEST_CASE("round-trip double formatting") {
    for (double v : {0.0, 1.0, -1.0, 0.1, 1e-300, 1.7976931348623157e308, 3.141592653589793,
                     2.4602, 1.0 / 3.0}) {
        CHECK(io::parse_double(io::format_double(v)) == v);
    }
    CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(std::isnan(io::parse_double("nan")));
    CHECK_THROWS_AS(io::parse_double("1.2.3"), IoError);
}

TEST_CASE("trace csv round trip") {
    objectives::ToyRational toy;
    dynamics::OptimizerConfig cfg;
    cfg.eta = 1.0;
    cfg.lambda = 0.01;
    cfg.steps = 50;
    const std::vector<double> x0 = {0.01, 1.0};
    const auto traj = dynamics::run(toy, cfg, x0);

    const auto path = std::filesystem::temp_directory_path() / "silab_trace_test.csv";
    io::write_trace_csv(path, traj);
    const auto back = io::read_trace_csv(path, cfg.eta, cfg.lambda);
    REQUIRE(back.records.size() == traj.records.size());
    for (std::size_t t = 0; t < traj.records.size(); ++t) {
        CHECK(back.records[t].step == traj.records[t].step);
        CHECK(back.records[t].loss == traj.records[t].loss);  // exact by round-trip format
        CHECK(back.records[t].rho == traj.records[t].rho);
        CHECK(back.records[t].cos_dist == traj.records[t].cos_dist);
        CHECK(std::isnan(back.records[t].train_error));
    }
    // the re-read trace still satisfies the closed forms
    CHECK(dynamics::verify_trace_closed_forms(back).pass);
    std::filesystem::remove(path);
}

TEST_CASE("git blob hash") {
    // `echo -n 'hello' | git hash-object --stdin` reference value
    CHECK(io::git_blob_sha1("hello") == "b6fc4c620b67d95f953a5c1c1230aaab5db5a1b0");
    CHECK(io::git_blob_sha1("") == "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
}

TEST_CASE("config parsing") {
    SUBCASE("values, sections, arrays, comments") {
        const auto doc = config::parse("name = \"demo\" # inline comment\n"
                                       "count = 3\n"
                                       "flag = true\n"
                                       "[table]\n"
                                       "xs = [1, 2.5, -3e-2]\n"
                                       "labels = [\"a\", \"b\"]\n");
        CHECK(doc.root.string("name") == "demo");
        CHECK(doc.root.number("count") == 3.0);
        CHECK(doc.root.boolean_or("flag", false));
        CHECK(doc.section("table").numbers("xs") == std::vector<double>{1.0, 2.5, -3e-2});
    }
    SUBCASE("errors carry line numbers") {
        try {
            config::parse("ok = 1\nbroken\n");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
        CHECK_THROWS_AS(config::parse("x = [1, 2\n"), ConfigError);
        CHECK_THROWS_AS(config::parse("x = 1\nx = 2\n"), ConfigError);
    }
}

TEST_CASE("experiment config expansion") {
    SUBCASE("lambda axis") {
        const auto doc = config::parse("objective = \"toy-rational\"\n"
                                       "[optimizer]\n"
                                       "eta = 1.0\n"
                                       "steps = 100\n"
                                       "[init]\n"
                                       "x0 = [0.01, 1.0]\n"
                                       "[sweep]\n"
                                       "lambda = [0.0, 0.01]\n");
        const auto cfg = config::parse_experiment(doc);
        REQUIRE(cfg.points.size() == 2);
        CHECK(cfg.points[0].lambda == 0.0);
        CHECK(cfg.points[1].lambda == 0.01);
        CHECK(cfg.points[0].eta == 1.0);
    }
    SUBCASE("fixed product with ratios rescales inits") {
        const auto doc = config::parse("objective = \"toy-rational\"\n"
                                       "[optimizer]\n"
                                       "steps = 100\n"
                                       "[init]\n"
                                       "x0 = [0.01, 1.0]\n"
                                       "[sweep]\n"
                                       "product = 1e-4\n"
                                       "ratios = [1e2, 1e4]\n");
        const auto cfg = config::parse_experiment(doc);
        REQUIRE(cfg.points.size() == 2);
        for (const auto& p : cfg.points)
            CHECK(p.eta * p.lambda == doctest::Approx(1e-4).epsilon(1e-12));
        CHECK(cfg.points[0].x0_scale == 1.0);
        CHECK(cfg.points[1].x0_scale ==
              doctest::Approx(std::sqrt(cfg.points[1].eta / cfg.points[0].eta)).epsilon(1e-12));
    }
    SUBCASE("empty sweep axis is a config error") {
        const auto doc = config::parse("objective = \"toy-rational\"\n"
                                       "[optimizer]\n"
                                       "steps = 100\n"
                                       "[sweep]\n"
                                       "lambda = []\n");
        CHECK_THROWS_AS(config::parse_experiment(doc), ConfigError);
    }
    SUBCASE("eta*lambda cap is enforced") {
        const auto doc = config::parse("objective = \"toy-rational\"\n"
                                       "[optimizer]\n"
                                       "eta = 10\n"
                                       "lambda = 0.4\n"
                                       "steps = 100\n"
                                       "[init]\n"
                                       "x0 = [0.01, 1.0]\n");
        CHECK_THROWS_AS(config::parse_experiment(doc), ConfigError);
    }
}

TEST_CASE("experiment runner end to end") {
    const auto out_root = std::filesystem::temp_directory_path() / "silab_exp_test";
    std::filesystem::remove_all(out_root);
    const auto doc = config::parse("name = \"toy-demo\"\n"
                                   "objective = \"toy-rational\"\n"
                                   "output = \"" + (out_root / "demo").string() + "\"\n"
                                   "seed = 9\n"
                                   "[optimizer]\n"
                                   "eta = 1.0\n"
                                   "steps = 3000\n"
                                   "[init]\n"
                                   "x0 = [0.01, 1.0]\n"
                                   "[sweep]\n"
                                   "lambda = [0.0, 0.01]\n"
                                   "[checkpoints]\n"
                                   "steps = [0, 1000]\n");
    auto cfg = config::parse_experiment(doc);
    std::ostringstream log;
    const auto result = experiment::run_experiment(cfg, log);
    REQUIRE(result.points.size() == 2);

    for (const auto& point : result.points) {
        CHECK(std::filesystem::exists(point.dir / "trace.csv"));
        CHECK(std::filesystem::exists(point.dir / "jumps.json"));
        CHECK(std::filesystem::exists(point.dir / "periods.json"));
        CHECK(std::filesystem::exists(point.dir / "manifest.json"));
        CHECK(std::filesystem::exists(point.dir / "checkpoint_1000.txt"));
    }

    // idempotent re-run reproduces identical bytes
    const auto trace_path = result.points[1].dir / "trace.csv";
    const auto before = io::read_file(trace_path);
    experiment::run_experiment(cfg, log);
    CHECK(io::read_file(trace_path) == before);

    // the periodic point has jumps, the decay-only one does not
    CHECK(result.points[0].jumps == 0);
    CHECK(result.points[1].jumps >= 1);

    const auto report = experiment::report_dir(result.output);
    CHECK(report.find("HASH MISMATCH") == std::string::npos);
    CHECK(report.find("toy-demo") == std::string::npos);  // labels, not names, in rows

    // plots render from the trace
    const auto svg_path = result.points[1].dir / "trace.svg";
    experiment::plot_file(trace_path, "trace", svg_path, 0.1, 0);
    const auto svg = io::read_file(svg_path);
    CHECK(svg.find("<svg") == 0);
    CHECK(svg.find("polyline") != std::string::npos);
    CHECK_THROWS_AS(experiment::plot_file(trace_path, "nonsense", svg_path, 0.1, 0),
                    ConfigError);

    std::filesystem::remove_all(out_root);
}

TEST_CASE("svg renderer handles awkward data") {
    svg::Panel p;
    p.title = "demo";
    p.logy = true;
    p.series.push_back({"s", {0, 1, 2, 3}, {1.0, 0.0, std::nan(""), 10.0}, "", false});
    p.bands.push_back({0.5, 1.5, "#eeeeee", "A"});
    const auto out = svg::render({p});
    CHECK(out.find("<svg") == 0);
    CHECK(out.find("</svg>") != std::string::npos);
}
