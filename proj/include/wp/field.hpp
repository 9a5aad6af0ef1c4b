#pragma once

#include <cmath>
#include <vector>

#include "wp/common.hpp"

namespace wp {

struct Field2D {
    int ny = 0, nx = 0;
    std::vector<double> v;

    Field2D() = default;
    Field2D(int ny_, int nx_) : ny(ny_), nx(nx_), v(static_cast<size_t>(ny_) * nx_, 0.0) {}

    double& at(int j, int i) { return v[static_cast<size_t>(j) * nx + i]; }
    double at(int j, int i) const { return v[static_cast<size_t>(j) * nx + i]; }
    void fill(double a) { std::fill(v.begin(), v.end(), a); }
    size_t size() const { return v.size(); }
};

// space-time field, time level slowest
struct Field3D {
    int nl = 0, ny = 0, nx = 0;  // nl = nt+1 levels
    std::vector<double> v;

    Field3D() = default;
    Field3D(int nl_, int ny_, int nx_)
        : nl(nl_), ny(ny_), nx(nx_), v(static_cast<size_t>(nl_) * ny_ * nx_, 0.0) {}

    double& at(int k, int j, int i) {
        return v[(static_cast<size_t>(k) * ny + j) * nx + i];
    }
    double at(int k, int j, int i) const {
        return v[(static_cast<size_t>(k) * ny + j) * nx + i];
    }
    const double* level(int k) const { return v.data() + static_cast<size_t>(k) * ny * nx; }
    double* level(int k) { return v.data() + static_cast<size_t>(k) * ny * nx; }
    void fill(double a) { std::fill(v.begin(), v.end(), a); }
    size_t size() const { return v.size(); }

    Field2D slice(int k) const {
        Field2D f(ny, nx);
        std::copy(level(k), level(k) + static_cast<size_t>(ny) * nx, f.v.begin());
        return f;
    }

    // keep every `factor`-th level (nl-1 must be divisible by factor)
    Field3D subsample_time(int factor) const {
        Field3D out((nl - 1) / factor + 1, ny, nx);
        for (int k = 0; k < out.nl; ++k)
            std::copy(level(k * factor), level(k * factor) + static_cast<size_t>(ny) * nx,
                      out.level(k));
        return out;
    }

    double max_abs() const {
        double m = 0.0;
        for (double a : v) m = std::max(m, std::abs(a));
        return m;
    }
};

}  // namespace wp
