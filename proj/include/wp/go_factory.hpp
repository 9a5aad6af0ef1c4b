#pragma once

#include <memory>
#include <vector>

#include "wp/potential.hpp"
#include "wp/wave_solver.hpp"

namespace wp {

// Amplitude profile transported along the light ray direction (1, omega).
// Implementations provide enough analytic structure for the probe builders:
// values, the time derivative, and the d'Alembertian.
class ChiField {
public:
    virtual ~ChiField() = default;
    virtual double value(double t, double x, double y) const = 0;
    virtual double d_t(double t, double x, double y) const = 0;
    virtual double box_op(double t, double x, double y) const = 0;  // (d_tt - Lap) chi
    virtual std::string describe() const = 0;
};

// chi_delta(t,x) = delta^{-n/2} phi(delta^{-1}(y0 - x - t omega)), n = 2, with
// phi the normalized standard bump supported in the unit ball.
class MollifierChi : public ChiField {
public:
    MollifierChi(double delta, Vec2 y0, Vec2 omega);
    double value(double t, double x, double y) const override;
    double d_t(double t, double x, double y) const override;
    double box_op(double t, double x, double y) const override;
    std::string describe() const override;

    double delta() const { return delta_; }
    Vec2 anchor() const { return y0_; }
    Vec2 omega() const { return omega_; }

    static double phi(double zx, double zy);       // normalized bump
    static double phi_sq(double zx, double zy);    // phi^2 (mollifier kernel)

private:
    double delta_;
    Vec2 y0_;
    Vec2 omega_;
};

class ConstantChi : public ChiField {
public:
    explicit ConstantChi(double c = 1.0) : c_(c) {}
    double value(double, double, double) const override { return c_; }
    double d_t(double, double, double) const override { return 0.0; }
    double box_op(double, double, double) const override { return 0.0; }
    std::string describe() const override { return "constant"; }

private:
    double c_;
};

Field3D sample_chi(const ChiField& chi, const SpaceTimeGrid& g);

// mollifier samples on the grid (the [OP] surface)
Field3D mollifier_chi(double delta, Vec2 y0, Vec2 omega, const SpaceTimeGrid& g);

// finite-difference Sobolev norms on Q (one-sided at edges, mixed terms included)
double fd_sobolev_norm(const Field3D& f, const SpaceTimeGrid& g, int order);

struct SymbolApplyResult {
    Field3D field;
    double zeroed_fraction = 0.0;
};

// divides by the symbol of Box + 2*sign*lambda*(d_t - omega.grad) on a doubled
// periodic box, zeroing modes with |p| < floor*lambda
SymbolApplyResult symbol_inverse_apply(const Field3D& f, const SpaceTimeGrid& g, double lambda,
                                       Vec2 omega, double floor_rel = 1e-3, int sign = -1,
                                       double max_zeroed = 0.10);

// multiplies by the same symbol (definitional partner of the inverse)
Field3D apply_conjugated_symbol(const Field3D& f, const SpaceTimeGrid& g, double lambda,
                                Vec2 omega, int sign = -1);

struct GOProbe {
    int sign = -1;  // phase exponent sign: -1 decaying, +1 growing
    double lambda = 0.0;
    Vec2 omega;
    double delta = 0.0;
    Vec2 anchor;
    std::shared_ptr<const SpaceTimeGrid> grid;
    Field3D chi;        // amplitude profile samples on the base grid
    Field3D remainder;  // w (sign -1) or z (sign +1) on the base grid
    double residual_norm = 0.0;
    double zeroed_energy_fraction = 0.0;
    double remainder_l2 = 0.0;
    double remainder_h1 = 0.0;
    int picard_iters = 0;
    std::shared_ptr<const ChiField> chi_fn;
    // growing probes keep the refined amplitude field for chained solves
    std::shared_ptr<const WaveField> refined;
    std::shared_ptr<const FacePartition> faces;
};

struct GoBuildOptions {
    double tol = 1e-8;
    int max_iter = 24;
    double floor_rel = 1e-3;
    double dt_target = 0.0;  // growing builds: force lambda-proportional stepping
};

GOProbe build_go_decaying(const Potential& q, double lambda, Vec2 omega,
                          std::shared_ptr<const ChiField> chi,
                          std::shared_ptr<const SpaceTimeGrid> grid,
                          const GoBuildOptions& opt = {});

GOProbe build_go_vanishing(const Potential& q, double lambda, Vec2 omega,
                           std::shared_ptr<const ChiField> chi, const FacePartition& faces,
                           std::shared_ptr<const SpaceTimeGrid> grid,
                           const GoBuildOptions& opt = {});

// smooth boundary cutoff in nu.omega: 1 below -eps/2, 0 above -eps/3
double boundary_cutoff_psi(double nu_dot_omega, double epsilon);

struct DecayRow {
    double lambda = 0.0;
    double w_l2 = 0.0, w_h1 = 0.0, w_residual = 0.0, w_zeroed = 0.0;
    double z_l2 = 0.0, z_h1 = 0.0, z_residual = 0.0;
};

struct DecayReport {
    std::vector<DecayRow> rows;
    double slope_w_h1 = 0.0;  // fitted log-log slopes; NaN when degenerate
    double slope_z_l2 = 0.0;
    bool monotone_w = true;   // remainder L2 non-increasing in lambda (one
    bool monotone_z = true;   // inversion tolerated by callers, flagged here)
};

DecayReport remainder_decay_report(const Potential& q, Vec2 omega, double delta,
                                   const std::vector<double>& lambdas, Vec2 y_anchor,
                                   const FacePartition& faces,
                                   std::shared_ptr<const SpaceTimeGrid> grid,
                                   const GoBuildOptions& opt = {});

// least-squares slope of log(y) against log(x); NaN if fewer than 2 valid points
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace wp
