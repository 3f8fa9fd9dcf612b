#include "fgml/pmath.hpp"

#include <cmath>

namespace fgml::pmath {

namespace {

constexpr double kLn2Hi = 6.93147180369123816490e-01;
constexpr double kLn2Lo = 1.90821492927058770002e-10;
constexpr double kPiO2Hi = 1.57079632679489655800e+00;
constexpr double kPiO2Lo = 6.12323399573676603587e-17;
constexpr double kTwoOverPi = 6.36619772367581382433e-01;

// sin(r)/r and cos(r) Taylor coefficients, |r| <= pi/4.
constexpr double kS[] = {
    -1.0 / 6, 1.0 / 120, -1.0 / 5040, 1.0 / 362880,
    -1.0 / 39916800, 1.0 / 6227020800.0, -1.0 / 1307674368000.0,
};
constexpr double kC[] = {
    -1.0 / 2, 1.0 / 24, -1.0 / 720, 1.0 / 40320,
    -1.0 / 3628800, 1.0 / 479001600.0, -1.0 / 87178291200.0, 1.0 / 20922789888000.0,
};

double sin_kernel(double r) {
    const double r2 = r * r;
    double p = kS[6];
    for (int i = 5; i >= 0; --i) p = p * r2 + kS[i];
    return r + r * (r2 * p);
}

double cos_kernel(double r) {
    const double r2 = r * r;
    double p = kC[7];
    for (int i = 6; i >= 0; --i) p = p * r2 + kC[i];
    return 1.0 + r2 * p;
}

// Quadrant index and reduced argument r = x - k*pi/2, |r| <= pi/4 + eps.
int reduce(double x, double& r) {
    const double k = std::nearbyint(x * kTwoOverPi);
    r = (x - k * kPiO2Hi) - k * kPiO2Lo;
    const long long ki = static_cast<long long>(k);
    return static_cast<int>(((ki % 4) + 4) % 4);
}

}  // namespace

double log(double x) {
    int exp = 0;
    double m = std::frexp(x, &exp);  // m in [0.5, 1)
    if (m < 0.70710678118654752440) {
        m *= 2.0;
        exp -= 1;
    }
    // ln(m) = 2 atanh(t), t = (m-1)/(m+1), |t| <= 0.1716
    const double t = (m - 1.0) / (m + 1.0);
    const double t2 = t * t;
    double series = 1.0 / 25;
    series = series * t2 + 1.0 / 23;
    series = series * t2 + 1.0 / 21;
    series = series * t2 + 1.0 / 19;
    series = series * t2 + 1.0 / 17;
    series = series * t2 + 1.0 / 15;
    series = series * t2 + 1.0 / 13;
    series = series * t2 + 1.0 / 11;
    series = series * t2 + 1.0 / 9;
    series = series * t2 + 1.0 / 7;
    series = series * t2 + 1.0 / 5;
    series = series * t2 + 1.0 / 3;
    series = series * t2 + 1.0;
    const double e = static_cast<double>(exp);
    return e * kLn2Hi + (2.0 * t * series + e * kLn2Lo);
}

double sin(double x) {
    double r = 0.0;
    switch (reduce(x, r)) {
        case 0: return sin_kernel(r);
        case 1: return cos_kernel(r);
        case 2: return -sin_kernel(r);
        default: return -cos_kernel(r);
    }
}

double cos(double x) {
    double r = 0.0;
    switch (reduce(x, r)) {
        case 0: return cos_kernel(r);
        case 1: return -sin_kernel(r);
        case 2: return -cos_kernel(r);
        default: return sin_kernel(r);
    }
}

}  // namespace fgml::pmath
