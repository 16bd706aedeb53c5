#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "bopp/config.hpp"
#include "bopp/fit.hpp"

namespace bopp {

// One embedded acceptance threshold: value `op` threshold, op ∈ {"<=", ">=", "<", ">"}.
struct Check {
    std::string name;
    double value = 0.0;
    std::string op;
    double threshold = 0.0;
    bool pass = false;

    std::string describe() const;
};

Check make_check(std::string name, double value, std::string op, double threshold);

// Columns are either numeric or text; every cell is written as text.
struct CsvTable {
    std::string file;  // relative to the output directory
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add(const std::vector<double>& values);
    void add_row(std::vector<std::string> cells);
};

// 17 significant digits, so float64 values round-trip.
std::string csv_number(double v);
std::string format_csv(const CsvTable& t);
void write_csv(const std::string& dir, const CsvTable& t);

struct ExperimentResult {
    std::string name;
    std::vector<Check> checks;
    std::vector<CsvTable> tables;
    std::vector<std::string> notes;  // free-form diagnostics for the log

    bool pass() const;
    std::vector<Check> failures() const;
};

using ExperimentFn = std::function<ExperimentResult(const RunConfig&)>;

// Subcommand name -> experiment.
const std::map<std::string, ExperimentFn>& experiment_catalog();

// Validates cfg and runs cfg.experiment. Throws ConfigError / ModelError.
ExperimentResult run_experiment(const RunConfig& cfg);

// Runs fn(i) for i in [0, n) on up to `threads` workers; results come back in index order.
template <class T>
std::vector<T> parallel_map(int n, int threads, const std::function<T(int)>& fn);

}  // namespace bopp

#include "bopp/detail/parallel.hpp"
