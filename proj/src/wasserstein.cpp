#include "mrh/wasserstein.hpp"

#include <stdexcept>

namespace mrh {

namespace {
EvalOptions with_p(const EvalOptions& base, double p) {
    EvalOptions opts = base;
    opts.p = p;
    return opts;
}

void require_quadratic(const EvalOptions& base, const char* op) {
    if (base.p != 2.0) throw std::invalid_argument(std::string(op) + ": requires p = 2");
}
}  // namespace

SensitivityReport wasserstein_unconstrained_sensitivity(const Criterion& criterion,
                                                        const TwoPeriodModel& model, double p,
                                                        const EvalOptions& base) {
    return SensitivityEngine(criterion, model, with_p(base, p)).wasserstein_unconstrained();
}

double evaluate_U_M(const Criterion& criterion, const TwoPeriodModel& model,
                    const HedgeFunction& h, double p, const EvalOptions& base) {
    return SensitivityEngine(criterion, model, with_p(base, p)).evaluate_U_M(h);
}

std::pair<HedgeFunction, double> direct_minimize_U_M(const Criterion& criterion,
                                                     const TwoPeriodModel& model, double p,
                                                     std::size_t grid_nodes,
                                                     const EvalOptions& base, bool* ridge_used) {
    return SensitivityEngine(criterion, model, with_p(base, p))
        .direct_minimize(grid_nodes, ridge_used);
}

FredholmSystem build_fredholm_system(const Criterion& criterion, const TwoPeriodModel& model,
                                     const EvalOptions& base) {
    require_quadratic(base, "build_fredholm_system");
    return SensitivityEngine(criterion, model, base).build_fredholm();
}

std::pair<HedgeFunction, double> solve_fredholm_hedge(FredholmSystem& system,
                                                      const Criterion& criterion,
                                                      const TwoPeriodModel& model,
                                                      const EvalOptions& base) {
    require_quadratic(base, "solve_fredholm_hedge");
    return SensitivityEngine(criterion, model, base).solve_fredholm(system);
}

}  // namespace mrh
