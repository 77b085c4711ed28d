#include "silab/config.hpp"

#include <algorithm>
#include <cmath>

#include "silab/errors.hpp"
#include "silab/trace_io.hpp"

namespace silab::config {

namespace {

[[noreturn]] void bail(int line, const std::string& what) {
    throw ConfigError("line " + std::to_string(line) + ": " + what);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_number(const std::string& s, double& out) {
    try {
        out = io::parse_double(s);
        return true;
    } catch (const IoError&) {
        return false;
    }
}

Value parse_value(std::string raw, int line) {
    Value v;
    v.line = line;
    raw = trim(raw);
    if (raw.empty()) bail(line, "missing value");

    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"') bail(line, "unterminated string");
        v.kind = Value::Kind::String;
        v.str = raw.substr(1, raw.size() - 2);
        return v;
    }
    if (raw == "true" || raw == "false") {
        v.kind = Value::Kind::Boolean;
        v.boolean = raw == "true";
        return v;
    }
    if (raw.front() == '[') {
        if (raw.back() != ']') bail(line, "unterminated array");
        std::string body = raw.substr(1, raw.size() - 2);
        std::vector<std::string> items;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= body.size(); ++i) {
            if (i == body.size() || body[i] == ',') {
                const auto item = trim(body.substr(start, i - start));
                if (!item.empty()) items.push_back(item);
                start = i + 1;
            }
        }
        if (!items.empty() && items.front().front() == '"') {
            v.kind = Value::Kind::StringList;
            for (const auto& item : items) {
                if (item.size() < 2 || item.front() != '"' || item.back() != '"')
                    bail(line, "bad string array element: " + item);
                v.strs.push_back(item.substr(1, item.size() - 2));
            }
        } else {
            v.kind = Value::Kind::NumberList;
            for (const auto& item : items) {
                double num;
                if (!parse_number(item, num)) bail(line, "bad numeric array element: " + item);
                v.nums.push_back(num);
            }
        }
        return v;
    }
    double num;
    if (!parse_number(raw, num)) bail(line, "unrecognized value: " + raw);
    v.kind = Value::Kind::Number;
    v.num = num;
    return v;
}

} // namespace

const Value& Table::at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw ConfigError("missing key: " + key);
    return it->second;
}

double Table::number(const std::string& key) const {
    const auto& v = at(key);
    if (v.kind != Value::Kind::Number) bail(v.line, "expected a number for '" + key + "'");
    return v.num;
}

double Table::number_or(const std::string& key, double fallback) const {
    return has(key) ? number(key) : fallback;
}

std::string Table::string(const std::string& key) const {
    const auto& v = at(key);
    if (v.kind != Value::Kind::String) bail(v.line, "expected a string for '" + key + "'");
    return v.str;
}

std::string Table::string_or(const std::string& key, const std::string& fallback) const {
    return has(key) ? string(key) : fallback;
}

bool Table::boolean_or(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = at(key);
    if (v.kind != Value::Kind::Boolean) bail(v.line, "expected a boolean for '" + key + "'");
    return v.boolean;
}

std::vector<double> Table::numbers(const std::string& key) const {
    const auto& v = at(key);
    if (v.kind == Value::Kind::Number) return {v.num};
    if (v.kind != Value::Kind::NumberList) bail(v.line, "expected a number list for '" + key + "'");
    return v.nums;
}

const Table& Document::section(const std::string& name) const {
    static const Table empty;
    auto it = sections.find(name);
    return it == sections.end() ? empty : it->second;
}

Document parse(const std::string& text) {
    Document doc;
    Table* current = &doc.root;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
        pos = nl == std::string::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        const auto hash = line.find('#');
        if (hash != std::string::npos) {
            // keep '#' inside quotes
            bool in_str = false;
            std::size_t cut = std::string::npos;
            for (std::size_t i = 0; i < line.size(); ++i) {
                if (line[i] == '"') in_str = !in_str;
                if (line[i] == '#' && !in_str) {
                    cut = i;
                    break;
                }
            }
            if (cut != std::string::npos) line = line.substr(0, cut);
        }
        line = trim(line);
        if (line.empty()) continue;

        if (line.front() == '[') {
            if (line.back() != ']') bail(line_no, "unterminated section header");
            const std::string name = trim(line.substr(1, line.size() - 2));
            if (name.empty()) bail(line_no, "empty section name");
            current = &doc.sections[name];
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) bail(line_no, "expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) bail(line_no, "empty key");
        if (current->values.count(key)) bail(line_no, "duplicate key: " + key);
        current->values[key] = parse_value(line.substr(eq + 1), line_no);
    }
    return doc;
}

Document parse_file(const std::filesystem::path& path) {
    return parse(io::read_file(path));
}

// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
    if (objective.empty()) throw ConfigError("experiment: objective id is required");
    if (points.empty()) throw ConfigError("experiment: sweep produced no points");
    for (const auto& p : points) {
        if (!(p.eta > 0.0)) throw ConfigError("experiment: eta must be positive");
        if (!(p.lambda >= 0.0)) throw ConfigError("experiment: lambda must be non-negative");
        if (!(p.eta * p.lambda < 0.5))
            throw ConfigError("experiment: eta*lambda must stay below 0.5");
    }
    for (double d : deltas)
        if (!(d > 0.0)) throw ConfigError("experiment: delta must be positive");
    if (base.steps == 0) throw ConfigError("experiment: steps must be positive");
}

ExperimentConfig parse_experiment(const Document& doc) {
    ExperimentConfig cfg;
    cfg.name = doc.root.string_or("name", "experiment");
    cfg.objective = doc.root.string_or("objective", "");
    cfg.output = doc.root.string_or("output", "out/" + cfg.name);
    cfg.seed = static_cast<std::uint64_t>(doc.root.number_or("seed", 1));

    const auto& opt = doc.section("optimizer");
    cfg.base.family = dynamics::family_from_name(opt.string_or("family", "gd"));
    cfg.base.eta = opt.number_or("eta", 0.1);
    cfg.base.lambda = opt.number_or("lambda", 0.0);
    cfg.base.steps = static_cast<std::size_t>(opt.number_or("steps", 1000));
    cfg.base.batch = static_cast<std::size_t>(opt.number_or("batch", 0));
    cfg.base.mu = opt.number_or("momentum", 0.9);
    cfg.base.beta1 = opt.number_or("beta1", 0.9);
    cfg.base.beta2 = opt.number_or("beta2", 0.999);
    cfg.base.eps = opt.number_or("eps", 1e-8);
    cfg.base.target_norm = opt.number_or("target_norm", 0.0);
    cfg.base.coupled_l2 = opt.boolean_or("coupled_l2", false);
    cfg.base.trace_thin = static_cast<std::size_t>(opt.number_or("trace_thin", 1));
    cfg.base.seed = cfg.seed;

    const auto& init = doc.section("init");
    if (init.has("x0")) cfg.x0 = init.numbers("x0");
    cfg.init_norm = init.number_or("norm", 0.0);
    cfg.init_seed = static_cast<std::uint64_t>(init.number_or("seed",
                                                              static_cast<double>(cfg.seed)));

    const auto& detect = doc.section("detect");
    if (detect.has("delta")) cfg.deltas = detect.numbers("delta");
    cfg.debounce = static_cast<std::size_t>(detect.number_or("debounce", 5));

    const auto& ck = doc.section("checkpoints");
    if (ck.has("steps"))
        for (double s : ck.numbers("steps")) cfg.checkpoint_steps.push_back(
            static_cast<std::size_t>(s));
    cfg.metrics_every_epochs =
        static_cast<std::size_t>(doc.section("metrics").number_or("every_epochs", 1));

    // Sweep expansion.
    const auto& sweep = doc.section("sweep");
    auto label_for = [](double eta, double lambda) {
        return "eta" + io::format_double(eta) + "_lambda" + io::format_double(lambda);
    };
    if (sweep.has("product")) {
        const double product = sweep.number("product");
        if (!sweep.has("ratios")) throw ConfigError("sweep: fixed product needs a ratio list");
        const auto ratios = sweep.numbers("ratios");
        if (ratios.empty()) throw ConfigError("sweep: empty ratio list");
        double eta0 = 0.0;
        for (double r : ratios) {
            if (!(r > 0.0)) throw ConfigError("sweep: ratios must be positive");
            SweepPoint p;
            p.eta = std::sqrt(product * r);
            p.lambda = product / p.eta;
            if (eta0 == 0.0) eta0 = p.eta;
            p.x0_scale = std::sqrt(p.eta / eta0);  // matched inits across ratios
            p.label = label_for(p.eta, p.lambda);
            cfg.points.push_back(p);
        }
    } else {
        std::vector<double> etas = sweep.has("eta") ? sweep.numbers("eta")
                                                    : std::vector<double>{cfg.base.eta};
        std::vector<double> lambdas = sweep.has("lambda") ? sweep.numbers("lambda")
                                                          : std::vector<double>{cfg.base.lambda};
        if (etas.empty() || lambdas.empty()) throw ConfigError("sweep: empty axis");
        for (double e : etas)
            for (double l : lambdas)
                cfg.points.push_back({e, l, 1.0, label_for(e, l)});
    }

    cfg.validate();
    return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
    return parse_experiment(parse_file(path));
}

} // namespace silab::config
