#include "wp/spectral.hpp"

#include <fftw3.h>

#include <mutex>

namespace wp {

namespace {
std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

int next_fast_size(int n) {
    for (int m = n;; ++m) {
        int r = m;
        for (int p : {2, 3, 5, 7})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

SpectralBox::SpectralBox(int nt_, int ny_, int nx_, double dt_, double dy_, double dx_)
    : nt(nt_), ny(ny_), nx(nx_), nxh(nx_ / 2 + 1), dt(dt_), dy(dy_), dx(dx_) {
    real_.assign(static_cast<size_t>(nt) * ny * nx, 0.0);
    spec_storage_.assign(static_cast<size_t>(nt) * ny * nxh * 2, 0.0);
    std::lock_guard<std::mutex> lock(plan_mutex());
    plan_fwd_ = fftw_plan_dft_r2c_3d(nt, ny, nx, real_.data(),
                                     reinterpret_cast<fftw_complex*>(spec_storage_.data()),
                                     FFTW_ESTIMATE);
    plan_inv_ = fftw_plan_dft_c2r_3d(nt, ny, nx,
                                     reinterpret_cast<fftw_complex*>(spec_storage_.data()),
                                     real_.data(), FFTW_ESTIMATE);
    if (!plan_fwd_ || !plan_inv_) fail(Errc::stage_failure, "fftw plan creation failed");
}

SpectralBox::~SpectralBox() {
    std::lock_guard<std::mutex> lock(plan_mutex());
    if (plan_fwd_) fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
    if (plan_inv_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

std::complex<double>* SpectralBox::spec_data() {
    return reinterpret_cast<std::complex<double>*>(spec_storage_.data());
}

void SpectralBox::forward() { fftw_execute(static_cast<fftw_plan>(plan_fwd_)); }

void SpectralBox::inverse() {
    fftw_execute(static_cast<fftw_plan>(plan_inv_));
    const double s = 1.0 / (static_cast<double>(nt) * ny * nx);
    for (auto& v : real_) v *= s;
}

void SpectralBox::for_each_mode(
    const std::function<void(double, double, double, double, std::complex<double>&)>& fn) {
    auto* spec = spec_data();
    size_t idx = 0;
    for (int kt = 0; kt < nt; ++kt) {
        double mu = freq_t(kt);
        for (int ky = 0; ky < ny; ++ky) {
            double xi2 = freq_y(ky);
            for (int kx = 0; kx < nxh; ++kx, ++idx) {
                fn(mu, freq_x(kx), xi2, energy_weight(kx), spec[idx]);
            }
        }
    }
}

}  // namespace wp
