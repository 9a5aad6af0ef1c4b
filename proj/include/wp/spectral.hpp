#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "wp/common.hpp"

namespace wp {

int next_fast_size(int n);  // smallest 2^a 3^b 5^c 7^d >= n

// Periodic space-time box for the constant-coefficient spectral kernels.
// Real data layout (nt, ny, nx) row-major; half-complex spectrum along x.
class SpectralBox {
public:
    SpectralBox(int nt, int ny, int nx, double dt, double dy, double dx);
    ~SpectralBox();
    SpectralBox(const SpectralBox&) = delete;
    SpectralBox& operator=(const SpectralBox&) = delete;

    int nt, ny, nx, nxh;
    double dt, dy, dx;

    double* real_data() { return real_.data(); }
    const double* real_data() const { return real_.data(); }
    std::complex<double>* spec_data();

    size_t real_size() const { return real_.size(); }
    size_t spec_size() const { return static_cast<size_t>(nt) * ny * nxh; }

    void zero_real() { std::fill(real_.begin(), real_.end(), 0.0); }
    void forward();  // real -> spectrum
    void inverse();  // spectrum -> real (normalized)

    double freq_t(int k) const { return two_pi_ * signed_index(k, nt) / (nt * dt); }
    double freq_y(int k) const { return two_pi_ * signed_index(k, ny) / (ny * dy); }
    double freq_x(int k) const { return two_pi_ * k / (nx * dx); }  // half spectrum

    // 2 for modes whose conjugate partner is not stored, 1 otherwise
    double energy_weight(int kx) const {
        if (kx == 0) return 1.0;
        if (nx % 2 == 0 && kx == nxh - 1) return 1.0;
        return 2.0;
    }

    // mu, xi1(=x), xi2(=y) angular frequencies
    void for_each_mode(const std::function<void(double mu, double xi1, double xi2, double w,
                                                std::complex<double>& c)>& fn);

    static int signed_index(int k, int n) { return (k <= n / 2) ? k : k - n; }

private:
    static constexpr double two_pi_ = 6.283185307179586476925286766559;
    std::vector<double> real_;
    std::vector<double> spec_storage_;  // interleaved complex
    void* plan_fwd_ = nullptr;
    void* plan_inv_ = nullptr;
};

// symbol of the conjugated wave operator Box + 2s(d_t - omega.grad), s = sign*lambda
inline std::complex<double> conjugated_symbol(double mu, double xi1, double xi2, int sign,
                                              double lambda, Vec2 omega) {
    double re = -mu * mu + xi1 * xi1 + xi2 * xi2;
    double im = 2.0 * sign * lambda * (mu - (omega.x * xi1 + omega.y * xi2));
    return {re, im};
}

}  // namespace wp
