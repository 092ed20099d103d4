#include "mrh/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mrh/stats.hpp"

namespace mrh {

// Nodes/weights for the physicists' weight exp(-x^2) by Newton iteration on
// the orthonormal Hermite recurrence, then transformed to the N(0,1) weight.
QuadratureRule gauss_hermite_normal(int n) {
    if (n < 1) throw std::invalid_argument("gauss_hermite_normal: order must be >= 1");
    const double eps = 1e-15;
    const double pim4 = 0.7511255444649424828587030;  // pi^{-1/4}
    const int m = (n + 1) / 2;
    std::vector<double> x(n), w(n);
    double z = 0.0, z_prev1 = 0.0, z_prev2 = 0.0;
    for (int i = 0; i < m; ++i) {
        if (i == 0) {
            z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
        } else if (i == 1) {
            z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
        } else if (i == 2) {
            z = 1.86 * z - 0.86 * z_prev2;
        } else if (i == 3) {
            z = 1.91 * z - 0.91 * z_prev2;
        } else {
            z = 2.0 * z - z_prev2;
        }
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = pim4, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= eps * (1.0 + std::abs(z))) break;
        }
        z_prev2 = z_prev1;
        z_prev1 = z;
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    // Transform: node z -> sqrt(2) z, weight w -> w / sqrt(pi); sort ascending.
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double sqrt2 = std::sqrt(2.0);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::acos(-1.0));
    for (int i = 0; i < n; ++i) {
        rule.nodes[i] = -sqrt2 * x[i];  // x[] is descending, negate to ascend
        rule.weights[i] = w[i] * inv_sqrt_pi;
    }
    return rule;
}

QuadratureRule gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    const double eps = 1e-15;
    const int m = (n + 1) / 2;
    QuadratureRule rule;
    rule.nodes.resize(n);
    rule.weights.resize(n);
    const double pi = std::acos(-1.0);
    for (int i = 0; i < m; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p1 = 1.0, p2 = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
            }
            pp = n * (z * p1 - p2) / (z * z - 1.0);
            const double step = p1 / pp;
            z -= step;
            if (std::abs(step) <= eps) break;
        }
        rule.nodes[i] = -z;
        rule.nodes[n - 1 - i] = z;
        rule.weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        rule.weights[n - 1 - i] = rule.weights[i];
    }
    return rule;
}

NormalSegmentQuad::NormalSegmentQuad(double z_max, double panel_width, int panel_nodes)
    : z_max_(z_max), panel_width_(panel_width), gl_(gauss_legendre(panel_nodes)) {
    if (z_max <= 0.0 || panel_width <= 0.0) {
        throw std::invalid_argument("NormalSegmentQuad: z_max and panel width must be positive");
    }
}

double NormalSegmentQuad::integrate(const std::function<double(double)>& f) const {
    return integrate(f, {});
}

double NormalSegmentQuad::integrate(const std::function<double(double)>& f,
                                    const std::vector<double>& breaks) const {
    std::vector<double> cuts;
    cuts.reserve(breaks.size() + 2);
    cuts.push_back(-z_max_);
    for (double b : breaks) {
        if (b > -z_max_ && b < z_max_) cuts.push_back(b);
    }
    cuts.push_back(z_max_);
    std::sort(cuts.begin(), cuts.end());

    double total = 0.0;
    for (std::size_t s = 0; s + 1 < cuts.size(); ++s) {
        const double a = cuts[s], b = cuts[s + 1];
        if (b - a <= 1e-14) continue;
        const int panels = std::max(1, static_cast<int>(std::ceil((b - a) / panel_width_)));
        const double width = (b - a) / panels;
        for (int p = 0; p < panels; ++p) {
            const double lo = a + p * width;
            const double mid = lo + 0.5 * width;
            const double half = 0.5 * width;
            double acc = 0.0;
            for (std::size_t i = 0; i < gl_.nodes.size(); ++i) {
                const double zi = mid + half * gl_.nodes[i];
                acc += gl_.weights[i] * f(zi) * normal_pdf(zi);
            }
            total += acc * half;
        }
    }
    return total;
}

}  // namespace mrh
