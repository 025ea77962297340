#include "bandgapsim/stats.hpp"

#include <algorithm>
#include <cmath>

#include "bandgapsim/errors.hpp"

namespace bgs {

double kolmogorov_q(double lambda) {
    if (lambda < 1.1e-16) return 1.0;
    // small lambda: the alternating series converges slowly, use the theta-function dual
    if (lambda < 1.18) {
        const double y = std::exp(-1.23370055013616983 / (lambda * lambda));  // pi^2/8
        const double cdf = 2.50662827463100050 / lambda *  // sqrt(2 pi)
                           (y + std::pow(y, 9) + std::pow(y, 25) + std::pow(y, 49));
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    const double x = std::exp(-2.0 * lambda * lambda);
    return std::clamp(2.0 * (x - std::pow(x, 4) + std::pow(x, 9)), 0.0, 1.0);
}

KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
    if (samples.empty()) throw InvalidArgument("ks_test", "no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, f - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - f});
    }
    const double sn = std::sqrt(n);
    KsResult r;
    r.statistic = d;
    r.p_value = kolmogorov_q((sn + 0.12 + 0.11 / sn) * d);
    return r;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw DimensionMismatch("total_variation", "distributions differ in length");
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
    return 0.5 * s;
}

}  // namespace bgs
