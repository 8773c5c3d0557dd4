#include "bornrad/scaling.hpp"

#include <cmath>

#include <fmt/format.h>

#include "bornrad/errors.hpp"

namespace bornrad {

ScalingReport fit_scaling(const std::vector<ScalingPoint>& points, const std::string& quantity,
                          double floor) {
    if (points.size() < 3) throw ValidationError("scaling fit needs at least three points");
    ScalingReport r;
    r.quantity = quantity;
    r.ladder = points;
    std::vector<double> lx, ly;
    for (const auto& p : points) {
        if (!(p.value > 0.0))
            throw NonPositiveValue("value " + std::to_string(p.value) + " at parameter " +
                                   std::to_string(p.param));
        if (!(p.param > 0.0)) throw ValidationError("ladder parameters must be positive");
        if (p.value < floor) continue;
        lx.push_back(std::log(p.param));
        ly.push_back(std::log(p.value));
    }
    r.used_points = static_cast<int>(lx.size());
    if (lx.size() < 2) {
        r.degenerate = true;
        r.note = "degenerate (values below floor " + fmt::format("{:g}", floor) + ")";
        return r;
    }
    if (lx.size() < points.size()) r.note = "points below floor excluded";
    const double n = static_cast<double>(lx.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    r.exponent = sxy / sxx;
    r.intercept = my - r.exponent * mx;
    r.r_squared = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return r;
}

}  // namespace bornrad
