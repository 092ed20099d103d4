#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "mrh/grid.hpp"

namespace mrh {

enum class Constraint { None, M, M1, M_M1 };
enum class Metric { Adapted, Standard };

const char* to_string(Constraint c);
const char* to_string(Metric m);
std::optional<Constraint> constraint_from_string(const std::string& s);
std::optional<Metric> metric_from_string(const std::string& s);

// Hedge coefficients are piecewise-linear functions of x1 on the working
// interval, constant outside it.
using HedgeFunction = PiecewiseLinear;

struct Diagnostics {
    // L2(mu1) residual of the defining first-order condition of the reported
    // hedge(s); zero when no hedge is attached.
    double foc_residual = 0.0;
    // Monte Carlo standard error of the reported value (delta method).
    double mc_stderr = 0.0;
    // Crude grid-interpolation error estimate for the conditional fields.
    double quad_error = 0.0;
    bool ridge_used = false;
    std::vector<std::string> notes;
};

struct SensitivityReport {
    Constraint constraint = Constraint::None;
    Metric metric = Metric::Adapted;
    double p = 2.0;
    double value = 0.0;
    std::optional<HedgeFunction> h;  // buy-and-hold coefficient h(x1)
    std::optional<HedgeFunction> f;  // vanilla-block coefficient f(x1)
    Diagnostics diagnostics;
};

std::string report_to_json(const SensitivityReport& report);

}  // namespace mrh
