#include "mrh/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mrh {

double ConditionalFields::interp(const std::vector<double>& table, double x1) const {
    if (x1 <= grid.lo) return table.front();
    if (x1 >= grid.hi) return table.back();
    const std::size_t i = grid.cell_of(x1);
    const double t = (x1 - grid.node(i)) / grid.step();
    return table[i] + t * (table[i + 1] - table[i]);
}

double ConditionalFields::interp_error_estimate() const {
    // |f - interp(f)| <= h^2 max|f''| / 8 ~ max second difference / 8.
    double worst = 0.0;
    for (const auto* table : {&A, &B}) {
        for (std::size_t i = 1; i + 1 < table->size(); ++i) {
            const double d2 = (*table)[i + 1] - 2.0 * (*table)[i] + (*table)[i - 1];
            worst = std::max(worst, std::abs(d2) / 8.0);
        }
    }
    return worst;
}

ConditionalFields build_conditional_fields(const CriterionContext& ctx, double pprime) {
    const TwoPeriodModel& model = ctx.model();
    ConditionalFields f;
    f.grid = model.grid1();
    f.pprime = pprime;
    const std::size_t n = f.grid.n;
    f.A.resize(n);
    f.B.resize(n);
    f.gamma1.resize(n);
    f.gamma2.resize(n);
    f.sigma2.resize(n);
    f.q1.resize(n);
    f.vp.resize(n);

    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = f.grid.node(i);
        const std::vector<double> kinks = ctx.x2_kinks(x1);
        f.A[i] = model.conditional_expectation_split(
            x1, [&ctx](double a, double b) { return ctx.grad(a, b).first; }, kinks);
        f.B[i] = model.conditional_expectation_split(
            x1, [&ctx](double a, double b) { return ctx.grad(a, b).second; }, kinks);
        f.gamma1[i] = model.conditional_expectation_split(
            x1, [&ctx](double a, double b) { return (b - a) * ctx.grad(a, b).first; }, kinks);
        f.gamma2[i] = f.B[i] - f.A[i];
        f.sigma2[i] = model.conditional_expectation_split(
            x1, [](double a, double b) { return (b - a) * (b - a); }, {});
        f.q1[i] = model.marginal_density_at(x1);
        const double moment = (model.kind() == ModelKind::Empirical)
                                  ? model.conditional_expectation(
                                        x1, [pprime](double a, double b) {
                                            return std::pow(std::abs(b - a), pprime);
                                        })
                                  : model.conditional_abs_moment(x1, pprime);
        f.vp[i] = f.q1[i] * moment;
        if (!std::isfinite(f.A[i]) || !std::isfinite(f.B[i]) || !std::isfinite(f.gamma1[i])) {
            throw std::runtime_error("build_conditional_fields: non-finite field value");
        }
    }
    return f;
}

}  // namespace mrh
