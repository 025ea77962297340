#pragma once

#include <functional>
#include <vector>

namespace bgs {

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

// One-sample KS test against a continuous CDF. The p-value uses the
// asymptotic distribution with Stephens' small-sample correction.
KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

}  // namespace bgs
