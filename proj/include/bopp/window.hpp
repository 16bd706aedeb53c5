#pragma once

#include <algorithm>
#include <cmath>

namespace bopp {

// Quintic smoothstep bump: 1 on [a+w, b-w], 0 outside (a, b), C² joins.
struct EnergyWindow {
    double a = -1e300;
    double b = 1.0;
    double w = 0.5;

    static double step(double t) {
        t = std::clamp(t, 0.0, 1.0);
        return t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
    }
    double operator()(double e) const {
        const double lo = a < -1e299 ? 1.0 : step((e - a) / w);
        return lo * step((b - e) / w);
    }
    double plateau_lo() const { return a + w; }
    double plateau_hi() const { return b - w; }
    // supp f ⊂ {g = 1}.
    bool inside_plateau_of(const EnergyWindow& g) const {
        return (g.a < -1e299 || a >= g.plateau_lo()) && b <= g.plateau_hi();
    }
};

}  // namespace bopp
