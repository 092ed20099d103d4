#include "mrh/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mrh/rng.hpp"
#include "mrh/stats.hpp"

namespace mrh {

namespace {

void check_common(double sigma, std::pair<double, double> trunc, std::size_t grid_nodes) {
    if (!(sigma > 0.0)) throw std::invalid_argument("model: sigma must be > 0");
    if (!(trunc.first > 0.0 && trunc.second > 0.0 && trunc.first + trunc.second < 1.0)) {
        throw std::invalid_argument("model: truncation quantiles must be in (0,1) and sum below 1");
    }
    if (grid_nodes < 8) throw std::invalid_argument("model: grid must have at least 8 nodes");
}

}  // namespace

TwoPeriodModel TwoPeriodModel::bachelier(double sigma, double spot,
                                         std::pair<double, double> trunc,
                                         std::size_t grid_nodes, int quad_order) {
    check_common(sigma, trunc, grid_nodes);
    TwoPeriodModel m;
    m.kind_ = ModelKind::Bachelier;
    m.sigma_ = sigma;
    m.spot_ = spot;  // the Bachelier law is centered at zero; spot is not used
    m.trunc_ = trunc;
    m.quad_order_ = quad_order;
    m.gh_ = gauss_hermite_normal(quad_order);
    const double lo = sigma * normal_quantile(trunc.first);
    const double hi = sigma * normal_quantile(1.0 - trunc.second);
    m.grid_ = UniformGrid(lo, hi, grid_nodes);
    return m;
}

TwoPeriodModel TwoPeriodModel::black_scholes(double sigma, double spot,
                                             std::pair<double, double> trunc,
                                             std::size_t grid_nodes, int quad_order) {
    check_common(sigma, trunc, grid_nodes);
    if (!(spot > 0.0)) throw std::invalid_argument("model: spot must be > 0");
    TwoPeriodModel m;
    m.kind_ = ModelKind::BlackScholes;
    m.sigma_ = sigma;
    m.spot_ = spot;
    m.trunc_ = trunc;
    m.quad_order_ = quad_order;
    m.gh_ = gauss_hermite_normal(quad_order);
    const double lo = spot * std::exp(-0.5 * sigma * sigma + sigma * normal_quantile(trunc.first));
    const double hi = spot * std::exp(-0.5 * sigma * sigma + sigma * normal_quantile(1.0 - trunc.second));
    m.grid_ = UniformGrid(lo, hi, grid_nodes);
    return m;
}

TwoPeriodModel TwoPeriodModel::empirical(std::vector<SamplePoint> points, std::vector<double> weights,
                                         std::optional<double> bandwidth,
                                         std::pair<double, double> trunc, std::size_t grid_nodes) {
    if (points.empty()) throw std::invalid_argument("model: empirical points must be non-empty");
    if (weights.empty()) {
        weights.assign(points.size(), 1.0 / static_cast<double>(points.size()));
    }
    if (weights.size() != points.size()) {
        throw std::invalid_argument("model: empirical weights size mismatch");
    }
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw std::invalid_argument("model: empirical weights must be nonnegative");
        total += w;
    }
    if (!(std::abs(total - 1.0) <= 1e-8)) {
        throw std::invalid_argument("model: empirical weights must sum to 1");
    }
    if (bandwidth && !(*bandwidth > 0.0)) {
        throw std::invalid_argument("model: bandwidth must be > 0 when supplied");
    }

    TwoPeriodModel m;
    m.kind_ = ModelKind::Empirical;
    m.trunc_ = trunc;
    m.points_ = std::move(points);
    m.weights_ = std::move(weights);
    m.bandwidth_ = bandwidth;
    m.cum_weights_.resize(m.weights_.size());
    std::partial_sum(m.weights_.begin(), m.weights_.end(), m.cum_weights_.begin());
    m.cum_weights_.back() = 1.0;

    // Weighted quantiles of the first coordinate define I.
    std::vector<std::size_t> order(m.points_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return m.points_[a].x1 < m.points_[b].x1; });
    auto weighted_quantile = [&](double eps) {
        double acc = 0.0;
        for (std::size_t idx : order) {
            acc += m.weights_[idx];
            if (acc >= eps) return m.points_[idx].x1;
        }
        return m.points_[order.back()].x1;
    };
    double lo = weighted_quantile(trunc.first);
    double hi = weighted_quantile(1.0 - trunc.second);
    if (!(lo < hi)) {  // degenerate clouds: widen by the point spread
        lo = m.points_[order.front()].x1;
        hi = m.points_[order.back()].x1;
        if (!(lo < hi)) throw std::invalid_argument("model: empirical first marginal is degenerate");
    }
    m.grid_ = UniformGrid(lo, hi, grid_nodes);
    return m;
}

std::vector<SamplePoint> TwoPeriodModel::sample(std::size_t n, std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    std::vector<SamplePoint> out(n);
    Rng rng(seed);
    switch (kind_) {
        case ModelKind::Bachelier:
            for (auto& p : out) {
                const double z1 = rng.normal();
                const double z2 = rng.normal();
                p.x1 = sigma_ * z1;
                p.x2 = sigma_ * (z1 + z2);
            }
            break;
        case ModelKind::BlackScholes:
            for (auto& p : out) {
                const double z1 = rng.normal();
                const double z2 = rng.normal();
                p.x1 = spot_ * std::exp(-0.5 * sigma_ * sigma_ + sigma_ * z1);
                p.x2 = spot_ * std::exp(-sigma_ * sigma_ + sigma_ * (z1 + z2));
            }
            break;
        case ModelKind::Empirical:
            for (auto& p : out) {
                const double u = rng.uniform();
                const auto it = std::lower_bound(cum_weights_.begin(), cum_weights_.end(), u);
                const std::size_t idx =
                    std::min(static_cast<std::size_t>(it - cum_weights_.begin()), points_.size() - 1);
                p = points_[idx];
            }
            break;
    }
    return out;
}

double TwoPeriodModel::x2_of_z(double x1, double z) const {
    switch (kind_) {
        case ModelKind::Bachelier:
            return x1 + sigma_ * z;
        case ModelKind::BlackScholes:
            return x1 * std::exp(-0.5 * sigma_ * sigma_ + sigma_ * z);
        default:
            throw std::logic_error("x2_of_z: analytic kinds only");
    }
}

std::optional<double> TwoPeriodModel::z_of_x2(double x1, double x2) const {
    switch (kind_) {
        case ModelKind::Bachelier:
            return (x2 - x1) / sigma_;
        case ModelKind::BlackScholes:
            if (!(x1 > 0.0) || !(x2 > 0.0)) return std::nullopt;
            return (std::log(x2 / x1) + 0.5 * sigma_ * sigma_) / sigma_;
        default:
            throw std::logic_error("z_of_x2: analytic kinds only");
    }
}

void TwoPeriodModel::require_bandwidth(const char* op) const {
    if (!bandwidth_) {
        throw std::invalid_argument(std::string(op) + ": empirical model requires a kernel bandwidth");
    }
}

double TwoPeriodModel::conditional_expectation(
    double x1, const std::function<double(double, double)>& f) const {
    if (kind_ == ModelKind::Empirical) {
        require_bandwidth("conditional_expectation");
        const double b = *bandwidth_;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < points_.size(); ++i) {
            const double k = weights_[i] * normal_pdf((x1 - points_[i].x1) / b);
            num += k * f(x1, points_[i].x2);
            den += k;
        }
        if (!(den > 0.0)) throw std::runtime_error("conditional_expectation: empty kernel window");
        const double v = num / den;
        if (!std::isfinite(v)) throw std::runtime_error("conditional_expectation: non-finite integrand");
        return v;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < gh_.nodes.size(); ++i) {
        const double v = f(x1, x2_of_z(x1, gh_.nodes[i]));
        if (!std::isfinite(v)) throw std::runtime_error("conditional_expectation: non-finite integrand");
        acc += gh_.weights[i] * v;
    }
    return acc;
}

double TwoPeriodModel::conditional_expectation_split(
    double x1, const std::function<double(double, double)>& f,
    const std::vector<double>& x2_kinks) const {
    if (kind_ == ModelKind::Empirical) {
        return conditional_expectation(x1, f);  // finite sum: kinks are immaterial
    }
    std::vector<double> zbreaks;
    zbreaks.reserve(x2_kinks.size());
    for (double k : x2_kinks) {
        if (auto z = z_of_x2(x1, k)) zbreaks.push_back(*z);
    }
    return seg_.integrate([&](double z) { return f(x1, x2_of_z(x1, z)); }, zbreaks);
}

double TwoPeriodModel::conditional_abs_moment(double x1, double pprime) const {
    return conditional_expectation_split(
        x1, [pprime](double a, double b) { return std::pow(std::abs(b - a), pprime); }, {x1});
}

double TwoPeriodModel::marginal_density_at(double x1) const {
    switch (kind_) {
        case ModelKind::Bachelier:
            return normal_pdf(x1 / sigma_) / sigma_;
        case ModelKind::BlackScholes: {
            if (!(x1 > 0.0)) return 0.0;
            const double z = (std::log(x1 / spot_) + 0.5 * sigma_ * sigma_) / sigma_;
            return normal_pdf(z) / (sigma_ * x1);
        }
        case ModelKind::Empirical: {
            require_bandwidth("marginal_density");
            const double b = *bandwidth_;
            double acc = 0.0;
            for (std::size_t i = 0; i < points_.size(); ++i) {
                acc += weights_[i] * normal_pdf((x1 - points_[i].x1) / b) / b;
            }
            return acc;
        }
    }
    return 0.0;
}

double TwoPeriodModel::marginal_quantile(double eps) const {
    if (!(eps > 0.0 && eps < 1.0)) throw std::domain_error("marginal_quantile: eps in (0,1)");
    switch (kind_) {
        case ModelKind::Bachelier:
            return sigma_ * normal_quantile(eps);
        case ModelKind::BlackScholes:
            return spot_ * std::exp(-0.5 * sigma_ * sigma_ + sigma_ * normal_quantile(eps));
        case ModelKind::Empirical: {
            std::vector<std::size_t> order(points_.size());
            std::iota(order.begin(), order.end(), std::size_t{0});
            std::sort(order.begin(), order.end(),
                      [&](std::size_t a, std::size_t b) { return points_[a].x1 < points_[b].x1; });
            double acc = 0.0;
            for (std::size_t idx : order) {
                acc += weights_[idx];
                if (acc >= eps) return points_[idx].x1;
            }
            return points_[order.back()].x1;
        }
    }
    return 0.0;
}

MarginalDensityTable TwoPeriodModel::marginal_density(double pprime) const {
    if (!(pprime > 1.0)) throw std::invalid_argument("marginal_density: p' must be > 1");
    if (kind_ == ModelKind::Empirical) require_bandwidth("marginal_density");
    MarginalDensityTable table;
    table.grid = grid_;
    table.pprime = pprime;
    table.q1.resize(grid_.n);
    table.vp.resize(grid_.n);
    for (std::size_t i = 0; i < grid_.n; ++i) {
        const double x = grid_.node(i);
        table.q1[i] = marginal_density_at(x);
        const double moment = (kind_ == ModelKind::Empirical)
                                  ? conditional_expectation(
                                        x, [pprime](double a, double b) {
                                            return std::pow(std::abs(b - a), pprime);
                                        })
                                  : conditional_abs_moment(x, pprime);
        table.vp[i] = table.q1[i] * moment;
        if (!(table.q1[i] > 0.0) || !(table.vp[i] > 0.0)) {
            throw std::runtime_error("marginal_density: nonpositive density value on I");
        }
    }
    return table;
}

std::vector<double> TwoPeriodModel::conditional_sample(double x1, std::size_t n,
                                                       std::uint64_t seed) const {
    if (kind_ == ModelKind::Empirical) {
        throw std::logic_error("conditional_sample: analytic kinds only");
    }
    std::vector<double> out(n);
    Rng rng(seed);
    for (auto& v : out) v = x2_of_z(x1, rng.normal());
    return out;
}

}  // namespace mrh
