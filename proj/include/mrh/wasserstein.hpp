#pragma once

#include <utility>

#include "mrh/engine.hpp"

namespace mrh {

// Standard-Wasserstein sensitivities: unconstrained and martingale-constrained
// via (a) direct convex minimization of U^M over discretized hedges and (b)
// the Fredholm/Nystrom integral-equation route (d = 1, p = 2).  Same engine
// conventions as the adapted entry points.

SensitivityReport wasserstein_unconstrained_sensitivity(const Criterion& criterion,
                                                        const TwoPeriodModel& model, double p,
                                                        const EvalOptions& base = {});

double evaluate_U_M(const Criterion& criterion, const TwoPeriodModel& model,
                    const HedgeFunction& h, double p, const EvalOptions& base = {});

// Minimizes U^M(h)^2 over piecewise-linear hedges on `grid_nodes` uniform
// nodes; p = 2 only.  Returns (h_M, U^M(h_M)); *ridge_used reports whether the
// normal equations needed Tikhonov regularization.
std::pair<HedgeFunction, double> direct_minimize_U_M(const Criterion& criterion,
                                                     const TwoPeriodModel& model, double p,
                                                     std::size_t grid_nodes,
                                                     const EvalOptions& base = {},
                                                     bool* ridge_used = nullptr);

// Both Fredholm entry points require base.p = 2 (the integral equation only
// characterizes the quadratic case) and throw std::invalid_argument otherwise.
FredholmSystem build_fredholm_system(const Criterion& criterion, const TwoPeriodModel& model,
                                     const EvalOptions& base = {});

std::pair<HedgeFunction, double> solve_fredholm_hedge(FredholmSystem& system,
                                                      const Criterion& criterion,
                                                      const TwoPeriodModel& model,
                                                      const EvalOptions& base = {});

// fredholm_residual(h, system) is declared in engine.hpp.

}  // namespace mrh
