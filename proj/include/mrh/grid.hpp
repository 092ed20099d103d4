#pragma once

#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace mrh {

// Uniform grid on a closed interval [lo, hi]; nodes are the hedge/field
// discretization everywhere in the library.
struct UniformGrid {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 2;  // node count, >= 2

    UniformGrid() = default;
    UniformGrid(double lo_, double hi_, std::size_t n_) : lo(lo_), hi(hi_), n(n_) {
        if (!(lo < hi) || n < 2) throw std::invalid_argument("UniformGrid: need lo < hi and n >= 2");
    }

    double step() const { return (hi - lo) / static_cast<double>(n - 1); }
    double node(std::size_t i) const { return lo + step() * static_cast<double>(i); }

    // Index of the cell [node(i), node(i+1)] containing x, clamped to valid range.
    std::size_t cell_of(double x) const {
        if (x <= lo) return 0;
        if (x >= hi) return n - 2;
        auto i = static_cast<std::size_t>((x - lo) / step());
        if (i > n - 2) i = n - 2;
        return i;
    }

    std::vector<double> nodes() const {
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) out[i] = node(i);
        return out;
    }

    // Trapezoid quadrature weights over [lo, hi].
    std::vector<double> trapezoid_weights() const {
        std::vector<double> w(n, step());
        w.front() *= 0.5;
        w.back() *= 0.5;
        return w;
    }
};

// Piecewise-linear interpolant on a uniform grid with constant extrapolation
// outside the interval; the weak derivative is the cell slope (zero outside).
struct PiecewiseLinear {
    UniformGrid grid;
    std::vector<double> values;

    PiecewiseLinear() = default;
    PiecewiseLinear(UniformGrid g, std::vector<double> v) : grid(g), values(std::move(v)) {
        if (values.size() != grid.n) throw std::invalid_argument("PiecewiseLinear: size mismatch");
    }

    double operator()(double x) const {
        if (x <= grid.lo) return values.front();
        if (x >= grid.hi) return values.back();
        const std::size_t i = grid.cell_of(x);
        const double t = (x - grid.node(i)) / grid.step();
        return values[i] + t * (values[i + 1] - values[i]);
    }

    double derivative(double x) const {
        if (x <= grid.lo || x >= grid.hi) return 0.0;
        const std::size_t i = grid.cell_of(x);
        return (values[i + 1] - values[i]) / grid.step();
    }
};

// Cumulative trapezoid integral of nodal values f on grid g; out[0] = 0.
inline std::vector<double> cumtrapz(const UniformGrid& g, const std::vector<double>& f) {
    assert(f.size() == g.n);
    std::vector<double> out(g.n, 0.0);
    const double h = g.step();
    for (std::size_t i = 1; i < g.n; ++i) {
        out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
    }
    return out;
}

}  // namespace mrh
