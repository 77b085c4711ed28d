#include "silab/experiment.hpp"

#include <atomic>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "silab/errors.hpp"
#include "silab/jump.hpp"
#include "silab/kernels.hpp"
#include "silab/net.hpp"
#include "silab/svg.hpp"
#include "silab/trace_io.hpp"

namespace silab::experiment {

using nlohmann::ordered_json;

void ensure_registry() { net::ensure_builtin_objectives(); }

std::shared_ptr<const objectives::Objective> resolve_objective(const std::string& id) {
    ensure_registry();
    return objectives::make_objective(id);
}

std::filesystem::path apply_output_root(const std::filesystem::path& configured) {
    if (const char* root = std::getenv("SILAB_OUT_ROOT")) {
        if (configured.is_relative()) return std::filesystem::path(root) / configured;
    }
    return configured;
}

namespace {

ordered_json optimizer_json(const dynamics::OptimizerConfig& c) {
    ordered_json j;
    j["family"] = dynamics::family_name(c.family);
    j["eta"] = c.eta;
    j["lambda"] = c.lambda;
    j["steps"] = c.steps;
    j["batch"] = c.batch;
    j["seed"] = c.seed;
    j["trace_thin"] = c.trace_thin;
    if (c.family == dynamics::Family::Momentum) j["momentum"] = c.mu;
    if (c.family == dynamics::Family::Adam) {
        j["beta1"] = c.beta1;
        j["beta2"] = c.beta2;
        j["eps"] = c.eps;
    }
    if (c.family == dynamics::Family::Sphere) j["target_norm"] = c.target_norm;
    if (c.coupled_l2) j["coupled_l2"] = true;
    return j;
}

ordered_json events_json(const std::vector<jump::JumpEvent>& events) {
    ordered_json arr = ordered_json::array();
    for (const auto& e : events) {
        ordered_json j;
        j["step"] = e.step;
        j["cos_dist"] = e.cos_dist;
        j["rho_sq"] = e.rho_sq;
        arr.push_back(j);
    }
    return arr;
}

const char* phase_name(jump::Phase p) {
    switch (p) {
        case jump::Phase::A: return "A";
        case jump::Phase::B: return "B";
        case jump::Phase::C: return "C";
        case jump::Phase::Unclassified: return "unclassified";
    }
    return "?";
}

ordered_json segmentation_json(const jump::Segmentation& seg, double delta) {
    ordered_json j;
    j["delta"] = delta;
    j["single_segment"] = seg.single_segment;
    j["events"] = events_json(seg.events);
    ordered_json periods = ordered_json::array();
    for (const auto& p : seg.periods) {
        ordered_json pj;
        pj["index"] = p.index;
        pj["begin"] = p.begin;
        pj["end"] = p.end;
        pj["ordered_abc"] = p.ordered_abc;
        pj["min_rho_sq"] = p.min_rho_sq;
        pj["max_rho_sq"] = p.max_rho_sq;
        pj["min_loss"] = p.min_loss;
        pj["loss_rise_lead"] = p.loss_rise_lead;
        ordered_json phases = ordered_json::array();
        for (const auto& ph : p.phases) {
            ordered_json fj;
            fj["phase"] = phase_name(ph.phase);
            fj["begin"] = ph.begin;
            fj["end"] = ph.end;
            phases.push_back(fj);
        }
        pj["phases"] = phases;
        periods.push_back(pj);
    }
    j["periods"] = periods;
    return j;
}

struct PointOutcome {
    PointResult result;
    std::string error;
};

PointOutcome run_point(const config::ExperimentConfig& cfg, const config::SweepPoint& point,
                       const std::filesystem::path& out_root) {
    PointOutcome outcome;
    outcome.result.label = point.label;
    const auto dir = out_root / point.label;
    outcome.result.dir = dir;

    auto objective = resolve_objective(cfg.objective);
    const auto* net_obj = dynamic_cast<const net::SiNetObjective*>(objective.get());

    // Initial point: explicit coordinates, or a seeded net init.
    std::vector<double> x0;
    if (!cfg.x0.empty()) {
        x0 = cfg.x0;
        if (x0.size() != objective->dim())
            throw ConfigError("experiment: x0 dimension does not match the objective");
    } else if (net_obj) {
        x0 = net_obj->init_params(cfg.init_seed);
        if (cfg.init_norm > 0.0) {
            const double nrm = std::sqrt(kernels::ops().nrm2_sq(x0.data(), x0.size()));
            kernels::ops().scale(x0.data(), cfg.init_norm / nrm, x0.size());
        }
    } else {
        throw ConfigError("experiment: objective '" + cfg.objective + "' needs [init] x0");
    }
    if (point.x0_scale != 1.0) kernels::ops().scale(x0.data(), point.x0_scale, x0.size());

    dynamics::OptimizerConfig opt = cfg.base;
    opt.eta = point.eta;
    opt.lambda = point.lambda;
    opt.seed = cfg.seed;

    dynamics::Trajectory traj;
    std::vector<net::EpochMetrics> epochs;
    if (net_obj) {
        auto trained = net::train(*net_obj, opt, x0, cfg.checkpoint_steps,
                                  cfg.metrics_every_epochs);
        traj = std::move(trained.trajectory);
        epochs = std::move(trained.epochs);
    } else {
        dynamics::RunOptions ro;
        ro.checkpoint_steps = cfg.checkpoint_steps;
        ro.objective_id = cfg.objective;
        traj = dynamics::run(*objective, opt, x0, ro);
    }
    traj.objective_id = cfg.objective;
    outcome.result.truncated = traj.truncated;

    // Artifacts.
    const std::string trace_csv = io::trace_to_csv(traj);
    io::write_file(dir / "trace.csv", trace_csv);

    ordered_json jumps;
    for (double delta : cfg.deltas) {
        const auto events = jump::detect_jumps(traj, delta, cfg.debounce);
        jumps[io::format_double(delta)] = events_json(events);
        if (delta == cfg.deltas.front()) outcome.result.jumps = events.size();
    }
    const std::string jumps_str = jumps.dump(2) + "\n";
    io::write_file(dir / "jumps.json", jumps_str);

    jump::SegmentationOptions seg_opt;
    seg_opt.delta = cfg.deltas.front();
    seg_opt.debounce = cfg.debounce;
    const auto seg = jump::segment_phases(traj, seg_opt);
    outcome.result.periods = seg.periods.size();
    const std::string periods_str = segmentation_json(seg, seg_opt.delta).dump(2) + "\n";
    io::write_file(dir / "periods.json", periods_str);

    ordered_json manifest;
    manifest["experiment"] = cfg.name;
    manifest["objective"] = cfg.objective;
    manifest["seed"] = cfg.seed;
    manifest["label"] = point.label;
    ordered_json pj;
    pj["eta"] = point.eta;
    pj["lambda"] = point.lambda;
    pj["x0_scale"] = point.x0_scale;
    manifest["point"] = pj;
    manifest["optimizer"] = optimizer_json(opt);
    manifest["truncated"] = traj.truncated;
    if (traj.truncated) manifest["divergence_step"] = traj.divergence_step;
    manifest["trace_hash"] = io::git_blob_sha1(trace_csv);

    ordered_json files;
    files["trace.csv"] = io::git_blob_sha1(trace_csv);
    files["jumps.json"] = io::git_blob_sha1(jumps_str);
    files["periods.json"] = io::git_blob_sha1(periods_str);

    if (!epochs.empty()) {
        std::string csv = "epoch,step,train_error,test_error\n";
        for (const auto& m : epochs) {
            csv += std::to_string(m.epoch) + ',' + std::to_string(m.step) + ',' +
                   io::format_double(m.train_error) + ',' + io::format_double(m.test_error) +
                   '\n';
        }
        io::write_file(dir / "epochs.csv", csv);
        files["epochs.csv"] = io::git_blob_sha1(csv);
    }
    for (const auto& ck : traj.checkpoints) {
        const std::string name = "checkpoint_" + std::to_string(ck.step) + ".txt";
        io::write_checkpoint(dir / name, ck, net_obj ? net_obj->spec().hash() : std::string{});
        files[name] = io::git_blob_sha1(io::read_file(dir / name));
    }
    manifest["files"] = files;
    io::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
    return outcome;
}

} // namespace

ExperimentResult run_experiment(const config::ExperimentConfig& cfg, std::ostream& log) {
    cfg.validate();
    ExperimentResult result;
    result.output = apply_output_root(cfg.output);
    result.points.resize(cfg.points.size());

    std::vector<std::string> errors(cfg.points.size());
    std::atomic<std::size_t> next{0};
    std::mutex log_mutex;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cfg.points.size()) return;
            try {
                auto outcome = run_point(cfg, cfg.points[i], result.output);
                result.points[i] = outcome.result;
                std::lock_guard lock(log_mutex);
                log << "point " << cfg.points[i].label << ": "
                    << (outcome.result.truncated ? "truncated" : "done") << ", "
                    << outcome.result.jumps << " jumps, " << outcome.result.periods
                    << " periods\n";
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        }
    };

    const std::size_t n_workers =
        std::max<std::size_t>(1, std::min<std::size_t>(cfg.points.size(),
                                                       std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            throw ConfigError("point " + cfg.points[i].label + ": " + errors[i]);
    return result;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> column(const dynamics::Trajectory& traj,
                           double dynamics::TraceRecord::* field) {
    std::vector<double> out;
    out.reserve(traj.records.size());
    for (const auto& r : traj.records) out.push_back(r.*field);
    return out;
}

std::vector<double> step_axis(const dynamics::Trajectory& traj) {
    std::vector<double> out;
    out.reserve(traj.records.size());
    for (const auto& r : traj.records) out.push_back(static_cast<double>(r.step));
    return out;
}

std::string first_line(const std::filesystem::path& p) {
    const auto text = io::read_file(p);
    return text.substr(0, text.find('\n'));
}

} // namespace

std::vector<std::filesystem::path> plot_file(const std::filesystem::path& input,
                                             const std::string& kind,
                                             const std::filesystem::path& output,
                                             double delta, std::size_t period_index) {
    const std::string header = first_line(input);
    std::vector<svg::Panel> panels;

    if (header == "step,loss,rho,grad_norm,eff_grad_norm,eff_lr,cos_dist,train_error") {
        const auto traj = io::read_trace_csv(input);
        if (traj.records.empty()) throw ConfigError("plot: empty trace " + input.string());
        const auto steps = step_axis(traj);
        if (kind == "trace") {
            auto add = [&](const std::string& name, double dynamics::TraceRecord::* f,
                           bool logy) {
                svg::Panel p;
                p.title = name;
                p.ylabel = name;
                p.logy = logy;
                p.series.push_back({"", steps, column(traj, f), "", false});
                panels.push_back(std::move(p));
            };
            add("train loss", &dynamics::TraceRecord::loss, true);
            add("weight norm", &dynamics::TraceRecord::rho, false);
            add("effective LR", &dynamics::TraceRecord::eff_lr, true);
            add("effective gradient norm", &dynamics::TraceRecord::eff_grad_norm, true);
            add("cosine distance", &dynamics::TraceRecord::cos_dist, true);
        } else if (kind == "period") {
            jump::SegmentationOptions opt;
            opt.delta = delta;
            const auto seg = jump::segment_phases(traj, opt);
            if (seg.periods.size() <= period_index)
                throw ConfigError("plot: trace has no period " + std::to_string(period_index));
            const auto& period = seg.periods[period_index];
            const char* colors[] = {"#cfe3f5", "#d5eed9", "#f5d4d4", "#eeeeee"};
            std::vector<svg::Band> bands;
            for (const auto& ph : period.phases)
                bands.push_back({static_cast<double>(ph.begin), static_cast<double>(ph.end),
                                 colors[static_cast<int>(ph.phase)], phase_name(ph.phase)});
            auto windowed = [&](double dynamics::TraceRecord::* f) {
                svg::Series s;
                for (const auto& r : traj.records) {
                    if (r.step < period.begin || r.step > period.end) continue;
                    s.x.push_back(static_cast<double>(r.step));
                    s.y.push_back(r.*f);
                }
                return s;
            };
            svg::Panel ploss;
            ploss.title = "train loss (one period)";
            ploss.ylabel = "loss";
            ploss.logy = true;
            ploss.bands = bands;
            ploss.series.push_back(windowed(&dynamics::TraceRecord::loss));
            panels.push_back(std::move(ploss));
            svg::Panel prho;
            prho.title = "weight norm (one period)";
            prho.ylabel = "rho";
            prho.bands = bands;
            prho.series.push_back(windowed(&dynamics::TraceRecord::rho));
            panels.push_back(std::move(prho));
        } else if (kind == "phase") {
            svg::Panel p;
            p.title = "phase diagram";
            p.xlabel = "effective gradient norm";
            p.ylabel = "effective LR";
            p.logx = true;
            p.logy = true;
            p.series.push_back({"", column(traj, &dynamics::TraceRecord::eff_grad_norm),
                                column(traj, &dynamics::TraceRecord::eff_lr), "", false});
            panels.push_back(std::move(p));
        } else if (kind == "elr") {
            svg::Panel p;
            p.title = "effective learning rate";
            p.ylabel = "eta / rho^2";
            p.logy = true;
            p.series.push_back({"", steps, column(traj, &dynamics::TraceRecord::eff_lr), "",
                                false});
            panels.push_back(std::move(p));
        } else {
            throw ConfigError("plot: unknown kind '" + kind + "' for a trace input");
        }
    } else if (header == "step,cos_dist,delta_min,delta_max") {
        if (kind != "overlay")
            throw ConfigError("plot: kind '" + kind + "' does not apply to an overlay input");
        std::vector<double> steps, cd, dmin, dmax;
        std::istringstream in(io::read_file(input));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string f;
            std::getline(row, f, ',');
            steps.push_back(io::parse_double(f));
            std::getline(row, f, ',');
            cd.push_back(io::parse_double(f));
            std::getline(row, f, ',');
            dmin.push_back(io::parse_double(f));
            std::getline(row, f, ',');
            dmax.push_back(io::parse_double(f));
        }
        if (steps.empty()) throw ConfigError("plot: empty overlay " + input.string());
        svg::Panel p;
        p.title = "cosine distance with jump-size bounds";
        p.ylabel = "1 - cos";
        p.logy = true;
        p.series.push_back({"observed", steps, cd, "#1f6fb4", false});
        p.series.push_back({"delta_min", steps, dmin, "#2e8b57", true});
        p.series.push_back({"delta_max", steps, dmax, "#d1495b", true});
        panels.push_back(std::move(p));
    } else if (header == "step,cosine_sim,ensemble_err,single_err") {
        if (kind != "similarity")
            throw ConfigError("plot: kind '" + kind + "' does not apply to a similarity input");
        std::vector<double> steps, cos, ens, single;
        std::istringstream in(io::read_file(input));
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            std::istringstream row(line);
            std::string f;
            std::getline(row, f, ',');
            steps.push_back(io::parse_double(f));
            std::getline(row, f, ',');
            cos.push_back(io::parse_double(f));
            std::getline(row, f, ',');
            ens.push_back(io::parse_double(f));
            std::getline(row, f, ',');
            single.push_back(io::parse_double(f));
        }
        if (steps.empty()) throw ConfigError("plot: empty similarity table " + input.string());
        svg::Panel pc;
        pc.title = "weight-space similarity to anchor";
        pc.ylabel = "cosine";
        pc.series.push_back({"", steps, cos, "", false});
        panels.push_back(std::move(pc));
        svg::Panel pe;
        pe.title = "functional similarity to anchor";
        pe.ylabel = "test error";
        pe.series.push_back({"ensemble", steps, ens, "#1f6fb4", false});
        pe.series.push_back({"single", steps, single, "#d1495b", true});
        panels.push_back(std::move(pe));
    } else {
        throw ConfigError("plot: unrecognized input format in " + input.string());
    }

    io::write_file(output, svg::render(panels));
    return {output};
}

std::string report_dir(const std::filesystem::path& dir) {
    std::ostringstream out;
    std::vector<std::filesystem::path> manifests;
    if (!std::filesystem::exists(dir)) throw ConfigError("report: no such directory " + dir.string());
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir))
        if (entry.is_regular_file() && entry.path().filename() == "manifest.json")
            manifests.push_back(entry.path());
    std::sort(manifests.begin(), manifests.end());

    out << "label                          eta        lambda     steps    trunc  jumps  periods  hash\n";
    for (const auto& mpath : manifests) {
        const auto j = nlohmann::json::parse(io::read_file(mpath));
        const auto base = mpath.parent_path();
        bool hashes_ok = true;
        for (const auto& [file, hash] : j.at("files").items()) {
            const auto p = base / file;
            if (!std::filesystem::exists(p) ||
                io::git_blob_sha1(io::read_file(p)) != hash.get<std::string>()) {
                hashes_ok = false;
            }
        }
        std::size_t jumps = 0, periods = 0;
        if (std::filesystem::exists(base / "periods.json")) {
            const auto pj = nlohmann::json::parse(io::read_file(base / "periods.json"));
            jumps = pj.at("events").size();
            periods = pj.at("periods").size();
        }
        char line[256];
        std::snprintf(line, sizeof line, "%-30s %-10g %-10g %-8zu %-6s %-6zu %-8zu %.12s%s\n",
                      j.at("label").get<std::string>().c_str(),
                      j.at("point").at("eta").get<double>(),
                      j.at("point").at("lambda").get<double>(),
                      j.at("optimizer").at("steps").get<std::size_t>(),
                      j.at("truncated").get<bool>() ? "yes" : "no", jumps, periods,
                      j.at("trace_hash").get<std::string>().c_str(),
                      hashes_ok ? "" : "  [HASH MISMATCH]");
        out << line;
    }
    out << manifests.size() << " manifest(s)\n";
    return out.str();
}

} // namespace silab::experiment
