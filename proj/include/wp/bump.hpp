#pragma once

#include <cmath>

namespace wp {

struct BumpDerivs {
    double val = 0, gx = 0, gy = 0, hxx = 0, hxy = 0, hyy = 0;
};

// normalization of the standard bump: |phi|_L2(R^2) = 1
inline double bump_norm_constant() {
    static const double c = [] {
        const int n = 4000;
        double acc = 0.0;
        for (int m = 0; m < n; ++m) {
            double r = (m + 0.5) / n;
            double s = 1.0 - r * r;
            acc += std::exp(-2.0 / s) * r / n;
        }
        return 1.0 / std::sqrt(2.0 * M_PI * acc);
    }();
    return c;
}

// phi = c exp(-1/(1-|z|^2)) with first and second derivatives, zero outside |z|<1
inline BumpDerivs bump_derivs(double zx, double zy) {
    BumpDerivs d;
    double r2 = zx * zx + zy * zy;
    if (r2 >= 1.0) return d;
    double s = 1.0 - r2;
    double v = bump_norm_constant() * std::exp(-1.0 / s);
    double s2 = s * s, s3 = s2 * s;
    double gx = -2.0 * zx / s2, gy = -2.0 * zy / s2;  // grad of -1/s
    double hxx = -2.0 / s2 - 8.0 * zx * zx / s3;
    double hyy = -2.0 / s2 - 8.0 * zy * zy / s3;
    double hxy = -8.0 * zx * zy / s3;
    d.val = v;
    d.gx = v * gx;
    d.gy = v * gy;
    d.hxx = v * (gx * gx + hxx);
    d.hyy = v * (gy * gy + hyy);
    d.hxy = v * (gx * gy + hxy);
    return d;
}

}  // namespace wp
