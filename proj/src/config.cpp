#include "bopp/config.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace bopp {

namespace {

namespace pt = boost::property_tree;

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

double to_double(const std::string& field, const std::string& v) {
    const std::string s = trim(v);
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    try {
        size_t pos = 0;
        const double d = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return d;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("{}: '{}' is not a number", field, v));
    }
}

std::vector<double> to_list(const std::string& field, const std::string& v) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(to_double(field, item));
    if (out.empty()) throw ConfigError(field + ": empty list");
    return out;
}

int to_int(const std::string& field, const std::string& v) {
    const double d = to_double(field, v);
    if (d != std::floor(d) || std::abs(d) > 1e9) throw ConfigError(fmt::format("{}: '{}' is not an integer", field, v));
    return static_cast<int>(d);
}

EnergyWindow to_window(const std::string& sec, const pt::ptree& t, EnergyWindow w) {
    if (auto a = t.get_optional<std::string>("a")) w.a = std::max(to_double(sec + ".a", *a), -1e300);
    if (auto b = t.get_optional<std::string>("b")) w.b = to_double(sec + ".b", *b);
    if (auto x = t.get_optional<std::string>("w")) w.w = to_double(sec + ".w", *x);
    return w;
}

std::map<std::string, std::string> to_map(const pt::ptree& t) {
    std::map<std::string, std::string> m;
    for (const auto& [k, v] : t) m[k] = trim(v.data());
    return m;
}

}  // namespace

double RunConfig::param(const std::string& key, double def) const {
    auto it = params.find(key);
    return it == params.end() ? def : to_double("params." + key, it->second);
}

std::vector<double> RunConfig::param_list(const std::string& key, const std::vector<double>& def) const {
    auto it = params.find(key);
    return it == params.end() ? def : to_list("params." + key, it->second);
}

double RunConfig::model_param(const std::string& key, double def) const {
    auto it = model_params.find(key);
    return it == model_params.end() ? def : to_double("model." + key, it->second);
}

GridSpec RunConfig::grid(double hv) const {
    GridSpec g;
    g.L = L;
    g.h = hv;
    g.N = 2;
    while (g.N < L / hv * (1.0 - 1e-9)) g.N *= 2;
    return g;
}

std::vector<GridSpec> RunConfig::grids() const {
    std::vector<GridSpec> out;
    for (double v : h) out.push_back(grid(v));
    return out;
}

RunConfig parse_config(const std::string& text) {
    pt::ptree tree;
    std::istringstream is(text);
    try {
        pt::read_ini(is, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(fmt::format("config syntax: {} (line {})", e.message(), e.line()));
    }
    static const std::vector<std::string> known = {"experiment", "model", "grid", "hierarchy", "time",
                                                   "window.f", "window.g", "output", "params"};
    for (const auto& [sec, _] : tree)
        if (std::find(known.begin(), known.end(), sec) == known.end())
            throw ConfigError(fmt::format("{}: unknown section", sec));
    static const std::map<std::string, std::vector<std::string>> keys = {
        {"experiment", {"name", "seed", "threads"}}, {"grid", {"L", "h"}},   {"hierarchy", {"M"}},
        {"time", {"t"}},                             {"window.f", {"a", "b", "w"}}, {"window.g", {"a", "b", "w"}},
        {"output", {"dir"}}};
    for (const auto& [sec, sub] : tree) {
        auto it = keys.find(sec);
        if (it == keys.end()) continue;
        for (const auto& [k, _] : sub)
            if (std::find(it->second.begin(), it->second.end(), k) == it->second.end())
                throw ConfigError(fmt::format("{}.{}: unknown key", sec, k));
    }
    RunConfig c;
    if (auto e = tree.get_child_optional("experiment")) {
        c.experiment = trim(e->get<std::string>("name", ""));
        if (auto s = e->get_optional<std::string>("seed")) {
            const double d = to_double("experiment.seed", *s);
            if (d < 0 || d != std::floor(d)) throw ConfigError("experiment.seed: must be a non-negative integer");
            c.seed = static_cast<std::uint64_t>(d);
        }
        if (auto s = e->get_optional<std::string>("threads")) c.threads = to_int("experiment.threads", *s);
    }
    if (auto m = tree.get_child_optional("model")) {
        c.model_params = to_map(*m);
        if (auto it = c.model_params.find("name"); it != c.model_params.end()) {
            c.model = it->second;
            c.model_params.erase(it);
        }
    }
    if (auto gsec = tree.get_child_optional("grid")) {
        if (auto s = gsec->get_optional<std::string>("L")) c.L = to_double("grid.L", *s);
        if (auto s = gsec->get_optional<std::string>("h")) c.h = to_list("grid.h", *s);
    }
    if (auto hs = tree.get_child_optional("hierarchy"))
        if (auto s = hs->get_optional<std::string>("M")) {
            c.M.clear();
            for (double v : to_list("hierarchy.M", *s)) c.M.push_back(to_int("hierarchy.M", fmt::format("{}", v)));
        }
    if (auto ts = tree.get_child_optional("time"))
        if (auto s = ts->get_optional<std::string>("t")) c.t = to_list("time.t", *s);
    // Section names contain '.', which ptree paths would split; look them up as literal keys.
    if (auto w = tree.find("window.f"); w != tree.not_found()) c.f = to_window("window.f", w->second, c.f);
    if (auto w = tree.find("window.g"); w != tree.not_found()) c.g = to_window("window.g", w->second, c.g);
    if (auto o = tree.get_child_optional("output")) c.out_dir = trim(o->get<std::string>("dir", c.out_dir));
    if (auto p = tree.get_child_optional("params")) c.params = to_map(*p);
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError(fmt::format("config: cannot open '{}'", path));
    std::stringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

std::vector<std::string> model_names() {
    return {"avoided_crossing", "angle", "constant", "random_smooth", "free", "harmonic"};
}

void validate_config(const RunConfig& c, int min_h) {
    if (c.experiment.empty()) throw ConfigError("experiment.name: missing");
    const auto names = model_names();
    if (std::find(names.begin(), names.end(), c.model) == names.end())
        throw ConfigError(fmt::format("model.name: unknown model '{}'", c.model));
    if (!(c.L > 0.0)) throw ConfigError("grid.L: must be positive");
    if (static_cast<int>(c.h.size()) < min_h)
        throw ConfigError(fmt::format("grid.h: {} entries, at least {} required", c.h.size(), min_h));
    for (size_t i = 0; i < c.h.size(); ++i) {
        if (!(c.h[i] > 0.0)) throw ConfigError("grid.h: entries must be positive");
        if (i > 0 && !(c.h[i] < c.h[i - 1])) throw ConfigError("grid.h: must be strictly decreasing");
    }
    for (int m : c.M)
        if (m < 0) throw ConfigError("hierarchy.M: must be >= 0");
    if (!(c.f.w > 0.0) || !(c.f.b > c.f.a)) throw ConfigError("window.f: need w > 0 and b > a");
    if (!(c.g.w > 0.0) || !(c.g.b > c.g.a)) throw ConfigError("window.g: need w > 0 and b > a");
    if (c.threads < 1) throw ConfigError("experiment.threads: must be >= 1");
}

ElectronicModel make_model(const RunConfig& c) {
    const double P = c.model_param("period", c.L);
    ElectronicModel m;
    if (c.model == "avoided_crossing") {
        m = avoided_crossing_model(c.model_param("a", 1.0), c.model_param("delta", 1.0), c.model_param("w", 0.3), P);
    } else if (c.model == "angle") {
        m = angle_model(c.model_param("E", 1.0), c.model_param("theta0", 0.0), c.model_param("theta1", 0.5),
                        static_cast<int>(c.model_param("winding", 0.0)), P);
    } else if (c.model == "constant") {
        RVec lv(2);
        lv << c.model_param("e0", -1.0), c.model_param("e1", 1.0);
        m = constant_model(lv, c.model_param("w", 0.0), P);
    } else if (c.model == "random_smooth") {
        const int n = static_cast<int>(c.model_param("n_el", 3.0));
        m = random_smooth_model(n, {static_cast<int>(c.model_param("level", 0.0))}, c.model_param("amp", 0.2), P,
                                c.seed);
    } else if (c.model == "free") {
        m = constant_model(RVec::Zero(1), 0.0, P);
        m.name = "free";
    } else if (c.model == "harmonic") {
        m = constant_model(RVec::Zero(1), 0.0, P);
        const double k = c.model_param("k", 1.0);
        m.W = [k](double x, int d) { return d == 0 ? 0.5 * k * x * x : d == 1 ? k * x : d == 2 ? k : 0.0; };
        m.name = "harmonic";
    } else {
        throw ConfigError(fmt::format("model.name: unknown model '{}'", c.model));
    }
    m.kinetic.b = c.model_param("b", 1.0);
    m.kinetic.c = c.model_param("c", 0.0);
    m.kinetic.d = c.model_param("d", 0.0);
    if (const double amp = c.model_param("A_amp", 0.0); amp != 0.0) {
        const double k = 2.0 * M_PI / P;
        m.kinetic.A = [amp, k](double x, int d) {
            static constexpr double s[4] = {0, 1, 0, -1};
            static constexpr double co[4] = {1, 0, -1, 0};
            return amp * std::pow(k, d) * (std::sin(k * x) * co[d % 4] + std::cos(k * x) * s[d % 4]);
        };
    }
    return m;
}

}  // namespace bopp
