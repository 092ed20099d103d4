#pragma once

#include "mrh/engine.hpp"

namespace mrh {

// Free-standing entry points for the adapted-metric sensitivities.  Each call
// builds a fresh evaluation engine from `base` (with the exponent overridden
// by `p`), so repeated calls are independent but deterministic per seed.  Use
// SensitivityEngine directly when several constraint sets must share noise.

SensitivityReport adapted_unconstrained_sensitivity(const Criterion& criterion,
                                                    const TwoPeriodModel& model, double p,
                                                    const EvalOptions& base = {});

HedgeFunction adapted_martingale_hedge(const Criterion& criterion, const TwoPeriodModel& model,
                                       double p, const EvalOptions& base = {});

SensitivityReport adapted_martingale_sensitivity(const Criterion& criterion,
                                                 const TwoPeriodModel& model, double p,
                                                 const EvalOptions& base = {});

SensitivityReport marginal_hedge_and_sensitivity(const Criterion& criterion,
                                                 const TwoPeriodModel& model, double p,
                                                 const EvalOptions& base = {});

SensitivityReport martingale_marginal_hedge_and_sensitivity(const Criterion& criterion,
                                                            const TwoPeriodModel& model, double p,
                                                            const EvalOptions& base = {});

// Dispatches to the operation matching `constraint` for an optimal-stopping
// criterion (gradient field of the frozen payoff l_tau).
SensitivityReport optimal_stopping_sensitivities(const Criterion& criterion,
                                                 const TwoPeriodModel& model, double p,
                                                 Constraint constraint,
                                                 const EvalOptions& base = {});

}  // namespace mrh
