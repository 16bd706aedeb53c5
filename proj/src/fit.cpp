#include "bopp/fit.hpp"

#include <fmt/format.h>

#include <cmath>
#include <stdexcept>

namespace bopp {

std::string SlopeFit::describe() const {
    std::string s = fmt::format("slope {:.4f}, R^2 {:.4f}, {} points", slope, r2, log_h.size());
    if (!excluded_h.empty()) {
        s += ", excluded below floor at h =";
        for (double h : excluded_h) s += fmt::format(" {:g}", h);
    }
    return s;
}

SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& err, double floor) {
    if (h.size() != err.size()) throw std::invalid_argument("fit_slope: h and error lists differ in length");
    SlopeFit f;
    for (size_t i = 0; i < h.size(); ++i) {
        if (!(h[i] > 0.0)) throw std::invalid_argument("fit_slope: h must be positive");
        if (!(err[i] > floor)) {
            f.excluded_h.push_back(h[i]);
            continue;
        }
        f.log_h.push_back(std::log(h[i]));
        f.log_err.push_back(std::log(err[i]));
    }
    const size_t n = f.log_h.size();
    if (n < 3) throw std::invalid_argument(fmt::format("fit_slope: {} usable points, need at least 3", n));
    double mx = 0.0, my = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mx += f.log_h[i];
        my += f.log_err[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = f.log_h[i] - mx, dy = f.log_err[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_slope: all h values coincide");
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double r = f.log_err[i] - (f.intercept + f.slope * f.log_h[i]);
        sse += r * r;
    }
    f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    return f;
}

std::vector<double> successive_ratios(const std::vector<double>& err) {
    std::vector<double> r;
    for (size_t i = 0; i + 1 < err.size(); ++i) r.push_back(err[i] / err[i + 1]);
    return r;
}

}  // namespace bopp
