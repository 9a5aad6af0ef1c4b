#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "wp/field.hpp"
#include "wp/geometry.hpp"

namespace wp {

using SpaceTimeFn = std::function<double(double t, double x, double y)>;

struct AnalyticExpr {
    std::string name;
    SpaceTimeFn f;
};

// parses the expression catalog: zero, constant(c), gaussian_bump(cx,cy,ct,sx,st),
// separable(g,h), static(h); time profiles tgauss/tpoly/tconst, space profiles
// xgauss/xbump/xcone_sqrt/xmode
AnalyticExpr parse_expr(const std::string& text);

struct NormReport {
    double L2 = 0.0;
    double Linf = 0.0;
    double H1 = 0.0;
    double Hminus1 = 0.0;
    double W1p = 0.0;
    double Holder_alpha = 0.0;
};

class Potential {
public:
    std::shared_ptr<const SpaceTimeGrid> grid;
    Field3D values;  // zero extension outside Q is implicit everywhere
    double p_exponent = 6.0;
    std::optional<AnalyticExpr> expr;

    double alpha() const { return 1.0 - 3.0 / p_exponent; }

    // exact when an analytic expression is attached, otherwise linear in t /
    // bilinear in x of the samples; zero outside Q
    double eval(double t, double x, double y) const;
    // always interpolates the grid samples (independent of any attached expression)
    double eval_grid(double t, double x, double y) const;
    double at(int k, int j, int i) const { return values.at(k, j, i); }
    bool is_zero() const;

    const NormReport& norms() const;

private:
    mutable std::optional<NormReport> cache_;
};

Potential sample_potential(const AnalyticExpr& expr, std::shared_ptr<const SpaceTimeGrid> grid,
                           double p_exponent = 6.0);
Potential potential_from_field(Field3D f, std::shared_ptr<const SpaceTimeGrid> grid,
                               double p_exponent = 6.0);

NormReport sobolev_norms(const Potential& q);

// composite midpoint quadrature of t -> q(t, x + t*omega) over the ray-domain
// intersection, with the entry/exit times resolved analytically
double lightray_oracle(const Potential& q, Vec2 omega, Vec2 x, int quad_steps);

// chord {t in (0,T): x + t*omega inside Omega}; empty -> (0,-1)
std::pair<double, double> ray_domain_interval(const Domain& d, double T, Vec2 x, Vec2 omega);

bool check_boundary_agreement(const Potential& q1, const Potential& q2, double tol);

// discrete space-time L2 over Q with trapezoid weights
double l2_norm_Q(const Field3D& f, const SpaceTimeGrid& g);
double l2_inner_Q(const Field3D& a, const Field3D& b, const SpaceTimeGrid& g);

}  // namespace wp
