#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

namespace qploc {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

// Wilson score interval for k successes out of n
inline Interval wilson(std::size_t k, std::size_t n, double z = 1.959963984540054) {
    if (n == 0) return {0.0, 1.0};
    double p = static_cast<double>(k) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double centre = (p + z2 / (2.0 * n)) / denom;
    double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

inline double student_t_quantile(double prob, double dof) {
    boost::math::students_t dist(dof);
    return boost::math::quantile(dist, prob);
}

struct LineFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    double intercept = std::numeric_limits<double>::quiet_NaN();
    double rms_residual = std::numeric_limits<double>::quiet_NaN();
    std::size_t points = 0;
};

// Streaming least squares y = a + b x
class LineAccumulator {
public:
    void add(double x, double y) {
        ++n_;
        sx_ += x;
        sy_ += y;
        sxx_ += static_cast<long double>(x) * x;
        sxy_ += static_cast<long double>(x) * y;
        syy_ += static_cast<long double>(y) * y;
    }
    std::size_t count() const { return n_; }
    LineFit fit() const {
        LineFit f;
        f.points = n_;
        if (n_ < 2) return f;
        long double n = n_;
        long double vx = sxx_ - sx_ * sx_ / n;
        if (vx <= 0) return f;
        long double cxy = sxy_ - sx_ * sy_ / n;
        long double b = cxy / vx;
        long double a = (sy_ - b * sx_) / n;
        long double sse = syy_ - a * sy_ - b * sxy_;
        f.slope = static_cast<double>(b);
        f.intercept = static_cast<double>(a);
        f.rms_residual = static_cast<double>(std::sqrt(std::max<long double>(0, sse) / n));
        return f;
    }

private:
    std::size_t n_ = 0;
    long double sx_ = 0, sy_ = 0, sxx_ = 0, sxy_ = 0, syy_ = 0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LineAccumulator acc;
    for (std::size_t i = 0; i < x.size(); ++i) acc.add(x[i], y[i]);
    return acc.fit();
}

inline double mean(const std::vector<double>& v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / v.size());
}

inline double sample_stddev(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean(v);
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return static_cast<double>(std::sqrt(s / (v.size() - 1)));
}

}  // namespace qploc
