#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "wp/boundary_operator.hpp"
#include "wp/go_factory.hpp"
#include "wp/potential.hpp"

namespace wp {

struct IdentityBreakdown {
    double lhs = 0.0;              // int_Q q u2 u1 in amplitude variables
    double term_G = 0.0;           // -int_G dnu(u) u1
    double term_sigma_rest = 0.0;  // -int_{Sigma\G} dnu(u) u1
    double term_velT = 0.0;        // +int_Omega u_t(T) u1(T)
    double term_valT = 0.0;        // -int_Omega u(T) d_t u1(T)
    double residual = 0.0;         // lhs - sum of the four terms
    double boundary_total() const { return term_G + term_sigma_rest + term_velT + term_valT; }
};

IdentityBreakdown greens_identity_breakdown(const Potential& q1, const Potential& q2,
                                            const GOProbe& probe1, const GOProbe& probe2,
                                            const FacePartition& faces);

enum class VMode { oracle, measured };

struct VEstimateOptions {
    double lambda = 32.0;
    double delta = 0.0;  // 0 = coupled delta = lambda^{-1/(4+2 alpha)}
    VMode mode = VMode::measured;
    double floor_rel = 1e-3;
    double alpha = 0.5;
};

double coupled_delta(double lambda, double alpha);

double estimate_Vdelta(const Potential& q1, const Potential& q2, Vec2 y, Vec2 omega,
                       const FacePartition& faces, std::shared_ptr<const SpaceTimeGrid> grid,
                       const VEstimateOptions& opt);

// --- sampled light-ray data on a uniform anchor grid -----------------------

struct YGrid {
    double x0 = 0.0, y0 = 0.0;  // position of sample (0,0)
    double h = 0.0;             // spacing
    int n1 = 0, n2 = 0;         // counts along x and y
    std::vector<double> v;

    double& at(int a, int b) { return v[static_cast<size_t>(b) * n1 + a]; }
    double at(int a, int b) const { return v[static_cast<size_t>(b) * n1 + a]; }
    Vec2 pos(int a, int b) const { return {x0 + a * h, y0 + b * h}; }
};

// per-direction V_delta sweep; uses a translated spectral template when q1 = 0
YGrid v_sweep(const Potential& q1, const Potential& q2, Vec2 omega, const FacePartition& faces,
              std::shared_ptr<const SpaceTimeGrid> grid, const VEstimateOptions& opt);

// direct quadrature of the defining mollified integral (test oracle)
double v_delta_direct(const Potential& q, Vec2 y, Vec2 omega, double delta, int quad_steps);

// V values convolved from the light-ray oracle (synthetic data for rq tests)
YGrid v_from_lightray(const Potential& q, Vec2 omega, double delta, const YGrid& layout);

// light-ray estimate from V data; optional Richardson pairing of delta, delta/2
YGrid rq_estimate(const YGrid& v_delta, double delta, double alpha,
                  const YGrid* v_half = nullptr);

// --- Fourier slices and the aperture cone ----------------------------------

struct ConeLattice {
    double dtau = 0.0, dxi_x = 0.0, dxi_y = 0.0;
    int jmax = 0, kxmax = 0, kymax = 0;
    double R_max = 0.0;

    static ConeLattice for_grid(const SpaceTimeGrid& g, double R_max);
    int count() const { return (2 * jmax + 1) * (2 * kxmax + 1) * (2 * kymax + 1); }
    int index(int j, int kx, int ky) const {
        return ((j + jmax) * (2 * kxmax + 1) + (kx + kxmax)) * (2 * kymax + 1) + (ky + kymax);
    }
    double tau(int j) const { return j * dtau; }
    Vec2 xi(int kx, int ky) const { return {kx * dxi_x, ky * dxi_y}; }
};

struct Slice {
    Vec2 omega;
    std::vector<Vec2> xis;
    std::vector<std::complex<double>> vals;  // estimates of I(sigma w.xi, xi)
};

// discrete transform of the sampled rq over its grid, at the given xi nodes
Slice fourier_slice(const YGrid& rq, Vec2 omega, const std::vector<Vec2>& xis, int sigma);

// slice-sign calibration against the direct space-time transform; returns +1 or -1
int calibrate_slice_sign(const Potential& q, Vec2 omega, const YGrid& rq_data,
                         const ConeLattice& lat);

int slice_sign();               // module constant; fails if unset
void set_slice_sign(int sign);  // set by calibration or config

// I(tau, xi) = int_Q q e^{-i(t tau + x.xi)} via the periodic Riemann sum
std::complex<double> direct_transform(const Potential& q, double tau, Vec2 xi);

struct FourierCone {
    ConeLattice lat;
    std::vector<std::complex<double>> values;
    std::vector<int> hits;
    std::vector<std::uint8_t> mask;     // node carries data (directly or by symmetry)
    std::vector<std::uint8_t> in_ball;  // |(tau,xi)| < R_max
    bool full_circle = true;
    Vec2 omega0{1.0, 0.0};
    double eps_cap = 0.0;

    double a_of_xi(Vec2 xi) const;  // inf over the aperture of xi.w
    double b_of_xi(Vec2 xi) const;
    double covered_energy() const;
};

FourierCone assemble_cone(const std::vector<Slice>& slices, const ConeLattice& lat,
                          bool full_circle, Vec2 omega0, double eps_cap,
                          double scatter_tol_frac = 0.45);

// fills every in-ball node from the direct transform (perfect-data oracle)
FourierCone oracle_cone(const Potential& q, const ConeLattice& lat, bool full_circle,
                        Vec2 omega0, double eps_cap);

enum class FillMode { zero, extrapolate };

Field3D invert_lowpass(const FourierCone& cone, double R, FillMode fill,
                       const SpaceTimeGrid& g);

// directions whose slices land exactly on covered lattice nodes
std::vector<Vec2> plan_aperture_directions(const ConeLattice& lat, bool full_circle,
                                           Vec2 omega0, double eps_cap, int sigma);

// --- end-to-end reconstruction and the stability experiment ----------------

struct ReconOptions {
    double lambda = 32.0;
    double delta = 0.0;  // 0 = coupled
    double R = 8.0;
    FillMode fill = FillMode::zero;
    VMode mode = VMode::measured;
    bool full_circle = true;
    double alpha = 0.5;
};

struct ReconResult {
    Field3D qhat;
    FourierCone cone;
    double rel_l2_error = 0.0;  // against q2 - q1 on Q
    int n_directions = 0;
    int n_anchor_points = 0;
    double delta_used = 0.0;
    int sigma = 0;
};

ReconResult reconstruct(const Potential& q1, const Potential& q2, const FacePartition& faces,
                        std::shared_ptr<const SpaceTimeGrid> grid, const ReconOptions& opt);

struct StabilityPair {
    double scale = 0.0;
    double gamma_hat = 0.0;
    double l2_diff = 0.0;
    double bound_value = 0.0;  // fitted_C * ln(|ln gamma|)^{-1/2}
    double slack = 0.0;
    bool in_fit = false;
    bool resolution_floor = false;
};

struct StabilityFit {
    std::vector<StabilityPair> pairs;
    double fitted_C = 0.0;
    double gamma_star = 0.0;
    double alpha = 0.5;
    bool gamma_strictly_increasing = true;
};

struct StabilityConfig {
    int n_random = 8;
    GoSweepSpec go_sweep;
    std::uint64_t seed = 1;
    double gamma_star = std::exp(-1.5);
    double thmma_tol = 1e-9;
};

StabilityFit stability_curve(const Potential& q1, const Potential& p,
                             const std::vector<double>& scales, const FacePartition& faces,
                             std::shared_ptr<const SpaceTimeGrid> grid,
                             const StabilityConfig& cfg);

}  // namespace wp
