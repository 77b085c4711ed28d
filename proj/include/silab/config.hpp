#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "silab/dynamics.hpp"

namespace silab::config {

// Minimal TOML-style subset: [sections], key = value with numbers, strings,
// booleans and one-line arrays, # comments. Enough for diff-able,
// hand-editable experiment files; errors carry line numbers.

struct Value {
    enum class Kind { Number, String, Boolean, NumberList, StringList } kind = Kind::Number;
    double num = 0.0;
    std::string str;
    bool boolean = false;
    std::vector<double> nums;
    std::vector<std::string> strs;
    int line = 0;
};

struct Table {
    std::map<std::string, Value> values;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    const Value& at(const std::string& key) const;  // ConfigError when missing
    double number(const std::string& key) const;
    double number_or(const std::string& key, double fallback) const;
    std::string string(const std::string& key) const;
    std::string string_or(const std::string& key, const std::string& fallback) const;
    bool boolean_or(const std::string& key, bool fallback) const;
    std::vector<double> numbers(const std::string& key) const;
};

struct Document {
    Table root;
    std::map<std::string, Table> sections;

    const Table& section(const std::string& name) const;  // empty table when absent
    bool has_section(const std::string& name) const { return sections.count(name) > 0; }
};

Document parse(const std::string& text);
Document parse_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------

struct SweepPoint {
    double eta = 0.0;
    double lambda = 0.0;
    double x0_scale = 1.0;  // rescaled init for fixed-product sweeps
    std::string label;
};

struct ExperimentConfig {
    std::string name;
    std::string objective;  // registry id
    std::filesystem::path output;
    std::uint64_t seed = 0;

    dynamics::OptimizerConfig base;
    std::vector<double> x0;        // explicit initial point (analytic objectives)
    double init_norm = 0.0;        // rescale a random net init to this norm (0 = natural)
    std::uint64_t init_seed = 0;   // net init stream; defaults to seed

    std::vector<SweepPoint> points;
    std::vector<double> deltas{0.1};
    std::size_t debounce = 5;
    std::vector<std::size_t> checkpoint_steps;
    std::size_t metrics_every_epochs = 1;

    void validate() const;  // throws ConfigError
};

/// Parses and expands the sweep ([sweep] eta/lambda lists cross-multiplied,
/// or a fixed eta*lambda product with a ratio list and rescaled inits).
ExperimentConfig parse_experiment(const Document& doc);
ExperimentConfig load_experiment(const std::filesystem::path& path);

} // namespace silab::config
