#include "mrh/adapted.hpp"

#include <stdexcept>

namespace mrh {

namespace {
EvalOptions with_p(const EvalOptions& base, double p) {
    EvalOptions opts = base;
    opts.p = p;
    return opts;
}
}  // namespace

SensitivityReport adapted_unconstrained_sensitivity(const Criterion& criterion,
                                                    const TwoPeriodModel& model, double p,
                                                    const EvalOptions& base) {
    return SensitivityEngine(criterion, model, with_p(base, p)).adapted_unconstrained();
}

HedgeFunction adapted_martingale_hedge(const Criterion& criterion, const TwoPeriodModel& model,
                                       double p, const EvalOptions& base) {
    return SensitivityEngine(criterion, model, with_p(base, p)).adapted_martingale_hedge();
}

SensitivityReport adapted_martingale_sensitivity(const Criterion& criterion,
                                                 const TwoPeriodModel& model, double p,
                                                 const EvalOptions& base) {
    return SensitivityEngine(criterion, model, with_p(base, p)).adapted_martingale();
}

SensitivityReport marginal_hedge_and_sensitivity(const Criterion& criterion,
                                                 const TwoPeriodModel& model, double p,
                                                 const EvalOptions& base) {
    return SensitivityEngine(criterion, model, with_p(base, p)).adapted_marginal();
}

SensitivityReport martingale_marginal_hedge_and_sensitivity(const Criterion& criterion,
                                                            const TwoPeriodModel& model, double p,
                                                            const EvalOptions& base) {
    return SensitivityEngine(criterion, model, with_p(base, p)).adapted_martingale_marginal();
}

SensitivityReport optimal_stopping_sensitivities(const Criterion& criterion,
                                                 const TwoPeriodModel& model, double p,
                                                 Constraint constraint, const EvalOptions& base) {
    if (criterion.kind != CriterionKind::OptimalStopping) {
        throw std::invalid_argument(
            "optimal_stopping_sensitivities: criterion must be an optimal stopping problem");
    }
    return SensitivityEngine(criterion, model, with_p(base, p))
        .report_for(constraint, Metric::Adapted);
}

}  // namespace mrh
