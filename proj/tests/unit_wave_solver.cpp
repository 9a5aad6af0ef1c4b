#include <doctest.h>

#include <cmath>
#include <functional>

#include "wp/wave_solver.hpp"

using namespace wp;

namespace {

std::shared_ptr<SpaceTimeGrid> square_grid(int nx, double T = 4.0) {
    DomainSpec s;
    return build_grid(build_domain(s), nx, T, 0.9);
}

Field2D eigenmode(const SpaceTimeGrid& g) {
    Field2D v(g.ny, g.nx);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            v.at(j, i) = std::sin(M_PI * (g.x(i) + 1.0) / 2.0) *
                         std::sin(M_PI * (g.y(j) + 1.0) / 2.0);
    return v;
}

double l2_err_at_T(const WaveField& u, const std::function<double(double, double)>& exact) {
    const auto& g = *u.grid;
    double acc = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double w = g.area_weight(j, i);
            if (w == 0.0) continue;
            double e = u.u.at(g.nt, j, i) - exact(g.x(i), g.y(j));
            acc += w * e * e;
        }
    return std::sqrt(acc);
}

}  // namespace

TEST_CASE("zero data gives the zero field, bit exact") {
    auto g = square_grid(24, 1.0);
    IbvpProblem prob;
    prob.grid = g;
    WaveField u = solve_ibvp(prob);
    CHECK(u.u.max_abs() == 0.0);
}

TEST_CASE("free eigenmode evolves with the separation-of-variables factor") {
    const double w0 = M_PI / std::sqrt(2.0);
    double errs[2];
    int nxs[2] = {24, 48};
    for (int m = 0; m < 2; ++m) {
        auto g = square_grid(nxs[m], 1.0);
        Field2D v0 = eigenmode(*g);
        IbvpProblem prob;
        prob.grid = g;
        prob.v0 = &v0;
        WaveField u = solve_ibvp(prob);
        double cT = std::cos(w0 * g->T);
        errs[m] = l2_err_at_T(u, [&](double x, double y) {
            return cT * std::sin(M_PI * (x + 1) / 2) * std::sin(M_PI * (y + 1) / 2);
        });
    }
    CHECK(errs[0] / errs[1] > 3.2);  // second order
    CHECK(errs[1] < 2e-3);
}

TEST_CASE("manufactured solution with potential, source and boundary data") {
    auto q_expr = parse_expr("gaussian_bump(0.2,-0.1,0.5,0.35,0.5)");
    auto exact = [](double t, double x, double y) {
        return std::cos(1.3 * t + 0.4) * std::cos(0.9 * x) * std::cos(0.7 * y);
    };

    std::vector<double> errs, hs;
    for (int nx : {24, 48, 96}) {
        auto g = square_grid(nx, 1.0);
        Potential q = sample_potential(q_expr, g);
        Field2D v0(g->ny, g->nx), v1(g->ny, g->nx);
        for (int j = 0; j < g->ny; ++j)
            for (int i = 0; i < g->nx; ++i) {
                v0.at(j, i) = exact(0.0, g->x(i), g->y(j));
                v1.at(j, i) = -1.3 * std::sin(0.4) * std::cos(0.9 * g->x(i)) *
                              std::cos(0.7 * g->y(j));
            }
        IbvpProblem prob;
        prob.grid = g;
        prob.q = &q;
        prob.v0 = &v0;
        prob.v1 = &v1;
        prob.g = [&](double t, const BoundaryCell& c) { return exact(t, c.pos.x, c.pos.y); };
        prob.f = [&](double t, Field2D& out) {
            for (int j = 0; j < g->ny; ++j)
                for (int i = 0; i < g->nx; ++i) {
                    double x = g->x(i), y = g->y(j);
                    // u_tt - Lap u + q u for the chosen separable cosine profile
                    out.at(j, i) = (-1.69 + 0.81 + 0.49 + q.expr->f(t, x, y)) * exact(t, x, y);
                }
        };
        WaveField u = solve_ibvp(prob);
        errs.push_back(l2_err_at_T(u, [&](double x, double y) { return exact(g->T, x, y); }));
        hs.push_back(g->dx);

        if (nx == 96) {
            TraceSet ts = traces(u);
            double emax = 0.0;
            for (int j = 1; j < g->ny - 1; ++j)
                for (int i = 1; i < g->nx - 1; ++i) {
                    double vt = -1.3 * std::sin(1.3 * g->T + 0.4) * std::cos(0.9 * g->x(i)) *
                                std::cos(0.7 * g->y(j));
                    emax = std::max(emax, std::abs(ts.final_velocity.at(j, i) - vt));
                }
            CHECK(emax < 5e-3);
        }
    }
    double p1 = std::log(errs[0] / errs[1]) / std::log(hs[0] / hs[1]);
    double p2 = std::log(errs[1] / errs[2]) / std::log(hs[1] / hs[2]);
    CHECK(0.5 * (p1 + p2) >= 1.8);
}

TEST_CASE("steady linear field has exact face fluxes") {
    auto g = square_grid(24, 0.5);
    Field2D v0(g->ny, g->nx);
    for (int j = 0; j < g->ny; ++j)
        for (int i = 0; i < g->nx; ++i) v0.at(j, i) = g->x(i);
    IbvpProblem prob;
    prob.grid = g;
    prob.v0 = &v0;
    prob.g = [](double, const BoundaryCell& c) { return c.pos.x; };
    WaveField u = solve_ibvp(prob);
    TraceSet ts = traces(u);
    for (size_t b = 0; b < g->boundary_cells.size(); ++b) {
        const auto& c = g->boundary_cells[b];
        CHECK(ts.nd(g->nt, static_cast<int>(b)) ==
              doctest::Approx(c.normal.x).epsilon(1e-9));
    }
}

TEST_CASE("free energy drift stays small") {
    auto g = square_grid(64, 4.0);
    Field2D v0 = eigenmode(*g);
    IbvpProblem prob;
    prob.grid = g;
    prob.v0 = &v0;
    WaveField u = solve_ibvp(prob);
    auto E = discrete_energy(u);
    double e0 = E.front();
    double dev = 0.0;
    for (double e : E) dev = std::max(dev, std::abs(e - e0) / e0);
    CHECK(dev < 1e-3);
}

TEST_CASE("solver is jointly linear in the data") {
    auto g = square_grid(24, 1.0);
    Field2D v0a = eigenmode(*g), v0b(g->ny, g->nx), v1b(g->ny, g->nx);
    for (int j = 0; j < g->ny; ++j)
        for (int i = 0; i < g->nx; ++i) {
            v0b.at(j, i) = std::cos(g->x(i)) * std::cos(g->y(j));
            v1b.at(j, i) = g->x(i) * g->y(j);
        }
    auto gb = [](double t, const BoundaryCell& c) { return std::sin(t) * c.pos.y; };
    Potential q = sample_potential(parse_expr("static(xgauss(0,0,0.4))"), g);

    auto solve_one = [&](const Field2D* v0, const Field2D* v1, BoundaryFn gfn) {
        IbvpProblem prob;
        prob.grid = g;
        prob.q = &q;
        prob.v0 = v0;
        prob.v1 = v1;
        prob.g = gfn;
        return solve_ibvp(prob);
    };
    WaveField ua = solve_one(&v0a, nullptr, nullptr);
    WaveField ub = solve_one(&v0b, &v1b, gb);

    const double a = 1.7, b = -0.6;
    Field2D v0c(g->ny, g->nx), v1c(g->ny, g->nx);
    for (size_t m = 0; m < v0c.v.size(); ++m) {
        v0c.v[m] = a * v0a.v[m] + b * v0b.v[m];
        v1c.v[m] = b * v1b.v[m];
    }
    WaveField uc = solve_one(
        &v0c, &v1c, [&](double t, const BoundaryCell& c) { return b * gb(t, c); });
    double num = 0.0, den = 0.0;
    for (size_t m = 0; m < uc.u.v.size(); ++m) {
        double ref = a * ua.u.v[m] + b * ub.u.v[m];
        num += (uc.u.v[m] - ref) * (uc.u.v[m] - ref);
        den += ref * ref;
    }
    CHECK(std::sqrt(num / den) < 1e-10);
}

TEST_CASE("positive drift damps the amplitude") {
    auto g = square_grid(32, 2.0);
    Field2D v1 = eigenmode(*g);
    IbvpProblem prob;
    prob.grid = g;
    prob.v1 = &v1;
    prob.drift = DriftTag{16.0, {1.0, 0.0}};
    WaveField u = solve_ibvp(prob);
    const auto& rg = *u.grid;
    // the v1-driven response rises from zero over the first few steps, then
    // the temporal drift term must damp it
    double prev = 1e300;
    bool monotone = true;
    for (int k = rg.nt / 8; k <= rg.nt; k += 4) {
        double n = l2_omega(u.u.slice(k), rg);
        if (n > prev * (1.0 + 1e-9)) monotone = false;
        prev = n;
    }
    CHECK(monotone);
}

TEST_CASE("stiffness guard refines and eventually rejects") {
    auto g = square_grid(32, 1.0);
    Field2D v1 = eigenmode(*g);
    IbvpProblem prob;
    prob.grid = g;
    prob.v1 = &v1;
    prob.drift = DriftTag{64.0, {1.0, 0.0}};
    WaveField u = solve_ibvp(prob);
    CHECK(u.refine_factor >= 4);
    CHECK(std::abs(u.conjugation->s) * u.grid->dt <= 0.5 + 1e-12);

    prob.drift = DriftTag{2000.0, {1.0, 0.0}};
    CHECK_THROWS_AS(solve_ibvp(prob), Error);
}

TEST_CASE("hf norm: eigenmode closed form and support validation") {
    auto g = square_grid(48, 4.0);
    FacePartition faces = boundary_faces(g->domain, *g, {1.0, 0.0}, 0.25, 0.0);
    Field2D v1 = eigenmode(*g);
    LogVal n = hf_norm(g, faces, nullptr, &v1);
    const double w0 = M_PI / std::sqrt(2.0);
    double tint = 0.0;
    {
        int nq = 200000;
        for (int m = 0; m < nq; ++m) {
            double t = g->T * (m + 0.5) / nq;
            double s = std::sin(w0 * t) / w0;
            tint += s * s;
        }
        tint *= g->T / nq;
    }
    CHECK(n.linear() == doctest::Approx(std::sqrt(tint)).epsilon(2e-3));

    CHECK(hf_norm(g, faces, nullptr, nullptr).is_zero());

    BoundaryFn bad = [](double t, const BoundaryCell& c) {
        return (c.normal.x < -0.9) ? std::sin(t) : 0.0;
    };
    CHECK_THROWS_AS(hf_norm(g, faces, bad, nullptr), Error);
}

TEST_CASE("energy estimate check: zero difference and linear scaling") {
    auto g = square_grid(24, 1.0);
    Potential q1 = sample_potential(parse_expr("gaussian_bump(0,0,0.5,0.3,0.4)"), g);
    Field2D v1 = eigenmode(*g);
    IbvpProblem prob;
    prob.grid = g;
    prob.q = &q1;
    prob.v1 = &v1;
    WaveField u2 = solve_ibvp(prob);

    EnergyEstimateReport same = energy_estimate_check(q1, q1, u2);
    CHECK(same.lhs == 0.0);

    auto perturbed = [&](double s) {
        Potential bump = sample_potential(parse_expr("gaussian_bump(0.1,0.1,0.6,0.2,0.3)"), g);
        Field3D f = q1.values;
        for (size_t m = 0; m < f.v.size(); ++m) f.v[m] += s * bump.values.v[m];
        return potential_from_field(std::move(f), g);
    };
    Potential qa = perturbed(1e-3), qb = perturbed(2e-3);
    EnergyEstimateReport ra = energy_estimate_check(q1, qa, u2);
    EnergyEstimateReport rb = energy_estimate_check(q1, qb, u2);
    CHECK(rb.lhs / ra.lhs == doctest::Approx(2.0).epsilon(0.05));
    CHECK(rb.ratio == doctest::Approx(ra.ratio).epsilon(0.05));
}
