#pragma once

#include <string>
#include <vector>

namespace bornrad {

struct ScalingPoint {
    double param;
    double value;
};

struct ScalingReport {
    std::string quantity;
    std::vector<ScalingPoint> ladder;
    double exponent = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    int used_points = 0;
    bool degenerate = false;  // fewer than two points above the floor
    std::string note;
};

inline constexpr double kScalingFloor = 1e-9;

// Least-squares fit of log(value) against log(param). Throws
// NonPositiveValue on a non-positive value and ValidationError on fewer than
// three points. Values below `floor` are excluded and flagged.
ScalingReport fit_scaling(const std::vector<ScalingPoint>& points, const std::string& quantity = "",
                          double floor = kScalingFloor);

}  // namespace bornrad
