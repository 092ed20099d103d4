#include "mrh/criterion.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrh/expr.hpp"

namespace mrh {

Criterion Criterion::forward_start() {
    Criterion c;
    c.kind = CriterionKind::Linear;
    c.label = "forward_start";
    c.payoff = [](double x1, double x2) { return std::max(x2 - x1, 0.0); };
    c.payoff_grad = [](double x1, double x2) -> std::pair<double, double> {
        if (x2 > x1) return {-1.0, 1.0};
        return {0.0, 0.0};
    };
    c.x2_kinks = [](double x1) { return std::vector<double>{x1}; };
    return c;
}

Criterion Criterion::american_put(double strike, double rate, const std::string& convention) {
    if (!(strike > 0.0)) throw std::invalid_argument("american_put: strike must be > 0");
    double disc1, disc2;
    if (convention == "t12") {
        disc1 = std::exp(-rate);
        disc2 = std::exp(-2.0 * rate);
    } else if (convention == "t01") {
        disc1 = 1.0;
        disc2 = std::exp(-rate);
    } else {
        throw std::invalid_argument("american_put: discount_convention must be 't12' or 't01'");
    }
    Criterion c;
    c.kind = CriterionKind::OptimalStopping;
    c.label = "american_put";
    c.l1 = [strike, disc1](double x1) { return disc1 * std::max(strike - x1, 0.0); };
    c.dl1 = [strike, disc1](double x1) { return x1 < strike ? -disc1 : 0.0; };
    c.l2 = [strike, disc2](double, double x2) { return disc2 * std::max(strike - x2, 0.0); };
    c.dl2 = [strike, disc2](double, double x2) -> std::pair<double, double> {
        return {0.0, x2 < strike ? -disc2 : 0.0};
    };
    c.x2_kinks = [strike](double) { return std::vector<double>{strike}; };
    return c;
}

Criterion Criterion::from_expression(const std::string& source) {
    const Expression expr = Expression::parse(source);
    Criterion c;
    c.kind = CriterionKind::Linear;
    c.label = "expression";
    c.payoff = [expr](double x1, double x2) { return expr.value(x1, x2); };
    c.payoff_grad = [expr](double x1, double x2) -> std::pair<double, double> {
        const ExprValue v = expr.eval(x1, x2);
        return {v.d1, v.d2};
    };
    // Kink locations of a general expression are not tracked; conditional
    // quadratures fall back to unsplit composite panels.
    c.x2_kinks = nullptr;
    return c;
}

Criterion Criterion::constant(double value) {
    Criterion c;
    c.kind = CriterionKind::Linear;
    c.label = "constant";
    c.payoff = [value](double, double) { return value; };
    c.payoff_grad = [](double, double) -> std::pair<double, double> { return {0.0, 0.0}; };
    c.x2_kinks = nullptr;
    return c;
}

Criterion Criterion::linear(std::function<double(double, double)> payoff,
                            std::function<std::pair<double, double>(double, double)> grad,
                            std::function<std::vector<double>(double)> kinks, std::string label) {
    Criterion c;
    c.kind = CriterionKind::Linear;
    c.label = std::move(label);
    c.payoff = std::move(payoff);
    c.payoff_grad = std::move(grad);
    c.x2_kinks = std::move(kinks);
    return c;
}

Criterion Criterion::scaled(const Criterion& base, double lambda) {
    Criterion c = base;
    c.label = base.label + "_scaled";
    if (base.kind == CriterionKind::Linear) {
        auto payoff = base.payoff;
        auto grad = base.payoff_grad;
        c.payoff = [payoff, lambda](double a, double b) { return lambda * payoff(a, b); };
        c.payoff_grad = [grad, lambda](double a, double b) -> std::pair<double, double> {
            const auto g = grad(a, b);
            return {lambda * g.first, lambda * g.second};
        };
    } else {
        auto l1 = base.l1;
        auto dl1 = base.dl1;
        auto l2 = base.l2;
        auto dl2 = base.dl2;
        c.l1 = [l1, lambda](double a) { return lambda * l1(a); };
        c.dl1 = [dl1, lambda](double a) { return lambda * dl1(a); };
        c.l2 = [l2, lambda](double a, double b) { return lambda * l2(a, b); };
        c.dl2 = [dl2, lambda](double a, double b) -> std::pair<double, double> {
            const auto g = dl2(a, b);
            return {lambda * g.first, lambda * g.second};
        };
    }
    return c;
}

// --- stopping rule -----------------------------------------------------------

StoppingRule::StoppingRule(const Criterion& criterion, const TwoPeriodModel& model)
    : criterion_(&criterion), model_(&model) {
    if (criterion.kind != CriterionKind::OptimalStopping) {
        throw std::invalid_argument("StoppingRule: criterion is not an optimal-stopping problem");
    }

    // Scan on an interval slightly wider than I so samples in the truncated
    // tails are classified by a genuine evaluation rather than extrapolation.
    const double lo = model.is_analytic() ? model.marginal_quantile(1e-6) : model.interval_lo();
    const double hi = model.is_analytic() ? model.marginal_quantile(1.0 - 1e-6) : model.interval_hi();
    const std::size_t scan_nodes = 2 * model.grid1().n;
    UniformGrid scan(lo, hi, scan_nodes);

    std::vector<double> nodes = scan.nodes();
    // Stage-one kinks (e.g. the strike) are natural switch candidates; make
    // sure they are scan nodes so a sign change cannot straddle a kink cell.
    if (criterion.x2_kinks) {
        for (double k : criterion.x2_kinks(0.5 * (lo + hi))) {
            if (k > lo && k < hi) nodes.push_back(k);
        }
        std::sort(nodes.begin(), nodes.end());
    }

    std::vector<double> s(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) s[i] = advantage(nodes[i]);

    auto tau_of = [](double adv) { return adv >= 0.0 ? 1 : 2; };
    region_tau_.push_back(tau_of(s[0]));
    for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
        if (tau_of(s[i]) == tau_of(s[i + 1])) continue;
        double a = nodes[i], b = nodes[i + 1];
        double sa = s[i];
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (a + b);
            const double sm = advantage(mid);
            if (tau_of(sm) == tau_of(sa)) {
                a = mid;
                sa = sm;
            } else {
                b = mid;
            }
            if (b - a <= 1e-13 * (1.0 + std::abs(a))) break;
        }
        boundaries_.push_back(0.5 * (a + b));
        region_tau_.push_back(tau_of(s[i + 1]));
    }
}

double StoppingRule::advantage(double x1) const {
    const double cont = model_->conditional_expectation_split(
        x1, [this](double a, double b) { return criterion_->l2(a, b); },
        criterion_->x2_kinks ? criterion_->x2_kinks(x1) : std::vector<double>{});
    return cont - criterion_->l1(x1);
}

int StoppingRule::tau(double x1) const {
    const std::size_t region =
        std::upper_bound(boundaries_.begin(), boundaries_.end(), x1) - boundaries_.begin();
    return region_tau_[region];
}

// --- bound context -----------------------------------------------------------

CriterionContext::CriterionContext(const Criterion& criterion, const TwoPeriodModel& model)
    : criterion_(&criterion), model_(&model) {
    if (criterion.kind == CriterionKind::OptimalStopping) {
        rule_.emplace(criterion, model);
    }
}

std::pair<double, double> CriterionContext::grad(double x1, double x2) const {
    if (criterion_->kind == CriterionKind::Linear) return criterion_->payoff_grad(x1, x2);
    if (rule_->tau(x1) == 1) return {criterion_->dl1(x1), 0.0};
    return criterion_->dl2(x1, x2);
}

double CriterionContext::value_at(double x1, double x2) const {
    if (criterion_->kind == CriterionKind::Linear) return criterion_->payoff(x1, x2);
    if (rule_->tau(x1) == 1) return criterion_->l1(x1);
    return criterion_->l2(x1, x2);
}

std::vector<double> CriterionContext::x2_kinks(double x1) const {
    if (!criterion_->x2_kinks) return {};
    return criterion_->x2_kinks(x1);
}

// --- module operations -------------------------------------------------------

std::pair<double, double> gradient(const Criterion& criterion, const TwoPeriodModel& model,
                                   double x1, double x2) {
    return CriterionContext(criterion, model).grad(x1, x2);
}

std::pair<double, double> compensated_gradient(const Criterion& criterion,
                                               const TwoPeriodModel& model, double x1, double x2) {
    const CriterionContext ctx(criterion, model);
    const double first = model.conditional_expectation_split(
        x1, [&ctx](double a, double b) { return ctx.grad(a, b).first; }, ctx.x2_kinks(x1));
    return {first, ctx.grad(x1, x2).second};
}

int stopping_rule(const Criterion& criterion, const TwoPeriodModel& model, double x1) {
    return StoppingRule(criterion, model).tau(x1);
}

double criterion_value(const Criterion& criterion, const std::vector<SamplePoint>& sample,
                       const std::vector<double>& weights, const TwoPeriodModel* model) {
    if (sample.empty()) throw std::invalid_argument("criterion_value: empty sample");
    if (!weights.empty() && weights.size() != sample.size()) {
        throw std::invalid_argument("criterion_value: weights size mismatch");
    }
    std::optional<CriterionContext> ctx;
    if (criterion.kind == CriterionKind::OptimalStopping) {
        if (!model) throw std::invalid_argument("criterion_value: stopping criterion needs a model");
        ctx.emplace(criterion, *model);
    }
    auto value_at = [&](double a, double b) {
        return ctx ? ctx->value_at(a, b) : criterion.payoff(a, b);
    };
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        num += w * value_at(sample[i].x1, sample[i].x2);
        den += w;
    }
    if (!(den > 0.0)) throw std::invalid_argument("criterion_value: weights sum to zero");
    return num / den;
}

}  // namespace mrh
