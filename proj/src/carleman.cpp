#include "wp/carleman.hpp"

#include <algorithm>
#include <cmath>

#include "wp/bump.hpp"

namespace wp {

PolyBumpSolution::PolyBumpSolution(double tpow, Vec2 center, double radius, double amp,
                                   const std::string& id)
    : tpow_(tpow), radius_(radius), amp_(amp), center_(center), id_(id) {
    if (tpow < 2.0) fail(Errc::hypothesis_violation, "need t-power >= 2 for zero Cauchy data");
}

double PolyBumpSolution::value(double t, double x, double y) const {
    auto d = bump_derivs((x - center_.x) / radius_, (y - center_.y) / radius_);
    return amp_ * std::pow(t, tpow_) * d.val;
}

double PolyBumpSolution::d_t(double t, double x, double y) const {
    auto d = bump_derivs((x - center_.x) / radius_, (y - center_.y) / radius_);
    return amp_ * tpow_ * std::pow(t, tpow_ - 1.0) * d.val;
}

Vec2 PolyBumpSolution::grad(double t, double x, double y) const {
    auto d = bump_derivs((x - center_.x) / radius_, (y - center_.y) / radius_);
    double f = amp_ * std::pow(t, tpow_) / radius_;
    return {f * d.gx, f * d.gy};
}

double PolyBumpSolution::dalembert(double t, double x, double y) const {
    auto d = bump_derivs((x - center_.x) / radius_, (y - center_.y) / radius_);
    double lap = (d.hxx + d.hyy) / (radius_ * radius_);
    return amp_ * (tpow_ * (tpow_ - 1.0) * std::pow(t, tpow_ - 2.0) * d.val -
                   std::pow(t, tpow_) * lap);
}

CarlemanReport carleman_terms(const CarlemanSolution& u, const Potential& q, double lambda,
                              Vec2 omega, const SpaceTimeGrid& g, double shift) {
    // hypothesis check: the harness only accepts admissible solutions
    double scale = 0.0;
    for (int j = 0; j < g.ny; j += 2)
        for (int i = 0; i < g.nx; i += 2)
            if (g.in_domain(j, i))
                scale = std::max(scale, std::abs(u.value(0.5 * g.T, g.x(i), g.y(j))));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.in_domain(j, i))
                scale = std::max(scale, std::abs(u.value(0.37 * g.T, g.x(i), g.y(j))));
    double viol = 0.0;
    for (const auto& c : g.boundary_cells)
        for (int k = 0; k <= g.nt; k += std::max(1, g.nt / 64))
            viol = std::max(viol, std::abs(u.value(g.t(k), c.pos.x, c.pos.y)));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.in_domain(j, i)) {
                viol = std::max(viol, std::abs(u.value(0.0, g.x(i), g.y(j))));
                viol = std::max(viol, std::abs(u.d_t(0.0, g.x(i), g.y(j))));
            }
    if (scale > 0.0 && viol > 1e-8 * scale)
        fail(Errc::hypothesis_violation,
             "solution violates the zero lateral/initial conditions");

    if (std::isnan(shift)) {
        shift = 1e300;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (g.in_domain(j, i))
                    shift = std::min(shift, omega.x * g.x(i) + omega.y * g.y(j));
        // t contributes nonnegatively, so the minimum sits at t = 0
    }

    auto wgt = [&](double t, double x, double y) {
        return std::exp(-2.0 * lambda * (t + omega.x * x + omega.y * y - shift));
    };
    auto wgt_T = [&](double x, double y) { return wgt(g.T, x, y); };

    CarlemanReport rep;
    rep.u_id = u.id();
    rep.lambda = lambda;
    rep.omega = omega;

    // interior and pde terms
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        double t = g.t(k);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double w = g.area_weight(j, i);
                if (w == 0.0) continue;
                double x = g.x(i), y = g.y(j);
                double e = wgt(t, x, y) * tw * w * g.dt;
                double uv = u.value(t, x, y);
                double pde = u.dalembert(t, x, y) + q.eval(t, x, y) * uv;
                rep.interior_term += e * lambda * lambda * uv * uv;
                rep.pde_term += e * pde * pde;
            }
    }

    // final-time terms
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double w = g.area_weight(j, i);
            if (w == 0.0) continue;
            double x = g.x(i), y = g.y(j);
            double e = wgt_T(x, y) * w;
            double ut = u.d_t(g.T, x, y);
            double uv = u.value(g.T, x, y);
            Vec2 gr = u.grad(g.T, x, y);
            rep.final_velocity_term += e * lambda * ut * ut;
            rep.final_value_term += e * lambda * lambda * lambda * uv * uv;
            rep.final_gradient_term += e * lambda * (gr.x * gr.x + gr.y * gr.y);
        }

    // flux terms split by the sign of w.nu, weighted by |w.nu|
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        double t = g.t(k);
        for (const auto& c : g.boundary_cells) {
            Vec2 gr = u.grad(t, c.pos.x, c.pos.y);
            double dn = gr.x * c.normal.x + gr.y * c.normal.y;
            double wn = omega.dot(c.normal);
            double e = wgt(t, c.pos.x, c.pos.y) * tw * c.weight * g.dt * std::abs(wn) *
                       lambda * dn * dn;
            if (wn >= 0.0)
                rep.shadow_flux_term += e;
            else
                rep.illum_flux_term += e;
        }
    }

    double rhs = rep.rhs_total();
    rep.empirical_C =
        rhs > 0.0 ? rep.lhs_total() / rhs : std::numeric_limits<double>::quiet_NaN();
    return rep;
}

CarlemanSweep carleman_sweep(const std::vector<std::shared_ptr<CarlemanSolution>>& family,
                             const Potential& q, const std::vector<double>& lambdas, Vec2 omega,
                             const SpaceTimeGrid& grid) {
    if (family.empty()) fail(Errc::empty_family, "the manufactured family is empty");
    if (lambdas.empty()) fail(Errc::empty_family, "the lambda list is empty");
    for (size_t i = 1; i < lambdas.size(); ++i)
        if (!(lambdas[i] > lambdas[i - 1]))
            fail(Errc::config_invalid, "lambda sweep must be ascending");
    CarlemanSweep sw;
    sw.lambdas = lambdas;
    for (double lam : lambdas) {
        double mx = 0.0;
        for (const auto& u : family) {
            CarlemanReport rep = carleman_terms(*u, q, lam, omega, grid);
            if (std::isfinite(rep.empirical_C)) mx = std::max(mx, rep.empirical_C);
            sw.reports.push_back(rep);
        }
        sw.max_C_per_lambda.push_back(mx);
    }
    return sw;
}

}  // namespace wp
