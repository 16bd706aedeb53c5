#pragma once

#include <string>
#include <vector>

namespace bopp {

// Points with error <= floor are treated as roundoff-dominated.
inline constexpr double kFitFloor = 1e-14;

struct SlopeFit {
    std::vector<double> log_h, log_err;  // points used in the fit
    std::vector<double> excluded_h;      // h values dropped by the floor guard
    double slope = 0.0, intercept = 0.0, r2 = 0.0;

    std::string describe() const;
};

// OLS fit of log err against log h. Throws std::invalid_argument with fewer than 3 usable points.
SlopeFit fit_slope(const std::vector<double>& h, const std::vector<double>& err, double floor = kFitFloor);

// Ratios err[i] / err[i+1] along a sweep.
std::vector<double> successive_ratios(const std::vector<double>& err);

}  // namespace bopp
