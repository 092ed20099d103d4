#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "mrh/engine.hpp"

namespace mrh {

// Optimality direction T: (x1, x2) -> (T1, T2).
using Direction = std::function<std::pair<double, double>(double, double)>;

struct WorstCaseScenario {
    double r = 0.0;
    Constraint constraint = Constraint::None;
    Metric metric = Metric::Adapted;
    std::vector<SamplePoint> base;
    std::vector<SamplePoint> displaced;
    double gain = 0.0;               // (ghat(mu_r) - g(mu)) / r, 0 when r = 0
    double gain_stderr = 0.0;
    double empirical_distance = 0.0; // E[|X' - X|^p]^{1/p}, pre-recentring
    double recentre_shift = 0.0;     // largest |bin mean| removed by recentring
    bool recentred = false;
};

struct GainRow {
    double r = 0.0;
    double gain = 0.0;
    double stderr_gain = 0.0;
};

struct GainTable {
    std::vector<GainRow> rows;
    double extrapolated = 0.0; // polynomial extrapolation of gain to r -> 0
    double sensitivity = 0.0;  // module-reported G'(0) for comparison
};

// Normalized first-order optimality direction for the given constraint set;
// requires the optimal hedge resolvable by `engine`.  If the residual norm
// vanishes (locally flat criterion) the zero direction is returned and
// *zero_direction (when non-null) is set.
Direction displacement_direction(const SensitivityEngine& engine, Constraint c, Metric m,
                                 bool* zero_direction = nullptr);

// Pushforward mu o (X + rT)^{-1} on a fresh sample of size n.  When
// `recentre` is set and the constraint includes M under the standard metric,
// X2' is shifted by the binned estimate of -(E[X2'|X1'] - X1') (64 equal-mass
// bins).  The gain is evaluated on the linearized criterion (frozen stopping
// rule) with the scenario's own base sample as control variate.
WorstCaseScenario pushforward_scenario(const SensitivityEngine& engine, const Direction& T,
                                       double r, std::size_t n, std::uint64_t seed, bool recentre,
                                       Constraint c, Metric m);

// Gains over a decreasing radius sequence (common seed) plus the radius-zero
// polynomial extrapolation; radii are used three at a time (the smallest).
GainTable first_order_gain(const SensitivityEngine& engine, Constraint c, Metric m,
                           const std::vector<double>& radii, std::size_t n, std::uint64_t seed);

}  // namespace mrh
