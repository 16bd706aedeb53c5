#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "bopp/electronic.hpp"
#include "bopp/window.hpp"

namespace bopp {

// Invalid or inconsistent configuration; the message names the offending field as section.key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Flat sectioned key-value run description. The schema is documented in configs/README.md.
struct RunConfig {
    std::string experiment;
    std::string model = "avoided_crossing";
    std::map<std::string, std::string> model_params;
    double L = 12.8;
    std::vector<double> h;
    std::vector<int> M{3};
    std::vector<double> t;
    EnergyWindow f{-1e300, 1.5, 0.5};
    EnergyWindow g{-1e300, 2.5, 0.5};
    std::string out_dir = ".";
    std::uint64_t seed = 7;
    int threads = 1;
    std::map<std::string, std::string> params;  // [params] section, experiment specific

    double param(const std::string& key, double def) const;
    std::vector<double> param_list(const std::string& key, const std::vector<double>& def) const;
    double model_param(const std::string& key, double def) const;
    // N = smallest power of two >= L/h (with a 1e-9 relative slack).
    GridSpec grid(double h_value) const;
    std::vector<GridSpec> grids() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Throws ConfigError naming the field: h strictly decreasing with at least `min_h` entries, a known model,
// windows with w > 0, M >= 0, threads >= 1.
void validate_config(const RunConfig& cfg, int min_h = 3);

// Catalog: avoided_crossing, angle, constant, random_smooth, free, harmonic.
std::vector<std::string> model_names();
ElectronicModel make_model(const RunConfig& cfg);

}  // namespace bopp
