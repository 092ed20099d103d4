#pragma once

#include <cstddef>
#include <vector>

namespace mrh {

double normal_pdf(double z);
double normal_cdf(double z);
// Inverse of the standard normal CDF (Acklam's rational approximation
// polished by one Halley step); accurate to ~1e-15 on (0,1).
double normal_quantile(double p);

// Mean and standard error of a sample mean.
struct MeanEstimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
    std::size_t n = 0;
};

MeanEstimate mean_estimate(const std::vector<double>& values);

// Streaming accumulator (Welford) for mean/variance of a scalar statistic.
class RunningStat {
  public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
    double stderr_mean() const;

  private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

}  // namespace mrh
