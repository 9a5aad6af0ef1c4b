#include "wp/wave_solver.hpp"

#include <algorithm>
#include <cmath>

namespace wp {

WaveField WaveField::subsampled(std::shared_ptr<const SpaceTimeGrid> base) const {
    if (refine_factor == 1) {
        WaveField f{base, u, conjugation, 1};
        return f;
    }
    WaveField f;
    f.grid = base;
    f.u = u.subsample_time(refine_factor);
    f.conjugation = conjugation;
    f.refine_factor = 1;
    return f;
}

namespace {

int choose_refine_factor(const SpaceTimeGrid& g, const std::optional<DriftTag>& drift,
                         const SolveOptions& opt) {
    int factor = 1;
    double dt = g.dt;
    if (opt.dt_target > 0.0) {
        while (dt > opt.dt_target && factor < (1 << 12)) {
            factor *= 2;
            dt = g.dt / factor;
        }
    }
    if (drift) {
        double s = std::abs(drift->s);
        int halvings = 0;
        while (s * dt > opt.stiffness_limit) {
            if (halvings >= opt.max_refine)
                fail(Errc::unstable_scheme,
                     "drift magnitude " + std::to_string(s) +
                         " violates the |s|*dt stiffness guard after " +
                         std::to_string(opt.max_refine) + " dt halvings");
            factor *= 2;
            dt *= 0.5;
            ++halvings;
        }
    }
    return factor;
}

}  // namespace

WaveField solve_ibvp(const IbvpProblem& prob, const SolveOptions& opt) {
    const auto& base = *prob.grid;
    int factor = prob.q_tab ? 1 : choose_refine_factor(base, prob.drift, opt);
    if (prob.q_tab && prob.drift &&
        std::abs(prob.drift->s) * base.dt > opt.stiffness_limit + 1e-12)
        fail(Errc::unstable_scheme, "tabulated-potential solve violates the stiffness guard");
    std::shared_ptr<const SpaceTimeGrid> gp =
        (factor == 1) ? prob.grid
                      : std::shared_ptr<const SpaceTimeGrid>(base.time_refined(factor));
    const SpaceTimeGrid& g = *gp;

    if (prob.v0 && (prob.v0->ny != g.ny || prob.v0->nx != g.nx))
        fail(Errc::grid_mismatch, "v0 shape does not match the grid");
    if (prob.v1 && (prob.v1->ny != g.ny || prob.v1->nx != g.nx))
        fail(Errc::grid_mismatch, "v1 shape does not match the grid");

    const int nx = g.nx, ny = g.ny, nt = g.nt;
    const double dt = g.dt, dx = g.dx, dy = g.dy;
    const double idx2 = 1.0 / (dx * dx), idy2 = 1.0 / (dy * dy);

    double s = prob.drift ? prob.drift->s : 0.0;
    Vec2 om = prob.drift ? prob.drift->omega : Vec2{0.0, 0.0};
    // one-sided drift stencil reaching toward sign(s*omega_d); this is the
    // dissipative side for the first-order part of the conjugated operator
    int ox = (s * om.x > 0.0) ? 1 : -1;
    int oy = (s * om.y > 0.0) ? 1 : -1;
    const double ax = om.x / dx, ay = om.y / dy;

    // tabulate the potential on the stepping grid
    Field3D qtab;
    const Field3D* qfield = nullptr;
    if (prob.q_tab) {
        if (prob.q_tab->nl != nt + 1 || prob.q_tab->ny != ny || prob.q_tab->nx != nx)
            fail(Errc::grid_mismatch, "tabulated potential does not match the stepping grid");
        qfield = prob.q_tab;
    } else if (prob.q && !prob.q->is_zero()) {
        if (factor == 1 && prob.q->grid->same_layout(g)) {
            qfield = &prob.q->values;
        } else {
            qtab = Field3D(nt + 1, ny, nx);
            for (int k = 0; k <= nt; ++k)
                for (int j = 0; j < ny; ++j)
                    for (int i = 0; i < nx; ++i)
                        if (g.in_domain(j, i))
                            qtab.at(k, j, i) = prob.q->eval(g.t(k), g.x(i), g.y(j));
            qfield = &qtab;
        }
    }
    const bool has_q = qfield != nullptr;

    WaveField out;
    out.grid = gp;
    out.conjugation = prob.drift;
    out.refine_factor = factor;
    out.u = Field3D(nt + 1, ny, nx);
    Field3D& u = out.u;

    Field2D src(ny, nx);
    auto eval_source = [&](double t) {
        if (prob.f) prob.f(t, src);
        else src.fill(0.0);
    };

    auto impose_boundary = [&](int k) {
        double t = g.t(k);
        double* lev = u.level(k);
        for (const auto& c : g.boundary_cells)
            lev[g.idx(c.j, c.i)] = prob.g ? prob.g(t, c) : 0.0;
    };

    // level 0
    if (prob.v0)
        std::copy(prob.v0->v.begin(), prob.v0->v.end(), u.level(0));
    impose_boundary(0);

    // level 1 by second-order Taylor start
    {
        eval_source(0.0);
        const double* u0 = u.level(0);
        double* u1 = u.level(1);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i) {
                int id = g.idx(j, i);
                if (!g.interior[id]) continue;
                double lap = (u0[id - 1] - 2.0 * u0[id] + u0[id + 1]) * idx2 +
                             (u0[id - nx] - 2.0 * u0[id] + u0[id + nx]) * idy2;
                double adv = ax * (u0[id + ox] - u0[id]) * ox + ay * (u0[id + oy * nx] - u0[id]) * oy;
                double vel = prob.v1 ? prob.v1->v[id] : 0.0;
                double qv = has_q ? qfield->at(0, j, i) : 0.0;
                double acc = lap + 2.0 * s * (adv - vel) - qv * u0[id] + src.v[id];
                u1[id] = u0[id] + dt * vel + 0.5 * dt * dt * acc;
            }
        impose_boundary(1);
    }

    const double denom = 1.0 + s * dt;
    if (!(denom > 0.0))
        fail(Errc::unstable_scheme, "drift update denominator is not positive");
    const double inv_denom = 1.0 / denom;

    for (int k = 1; k < nt; ++k) {
        eval_source(g.t(k));
        const double* um = u.level(k - 1);
        const double* uc = u.level(k);
        double* up = u.level(k + 1);
        const double* qk = has_q ? qfield->level(k) : nullptr;
        for (int j = 1; j < ny - 1; ++j) {
            int row = j * nx;
            for (int i = 1; i < nx - 1; ++i) {
                int id = row + i;
                if (!g.interior[id]) continue;
                double lap = (uc[id - 1] - 2.0 * uc[id] + uc[id + 1]) * idx2 +
                             (uc[id - nx] - 2.0 * uc[id] + uc[id + nx]) * idy2;
                double rhs = lap - (qk ? qk[id] * uc[id] : 0.0) + src.v[id];
                if (s != 0.0) {
                    double adv = ax * (uc[id + ox] - uc[id]) * ox +
                                 ay * (uc[id + oy * nx] - uc[id]) * oy;
                    rhs += 2.0 * s * adv;
                }
                up[id] = (2.0 * uc[id] - um[id] + s * dt * um[id] + dt * dt * rhs) * inv_denom;
            }
        }
        impose_boundary(k + 1);
        if ((k & 0x3f) == 0) {
            double m = 0.0;
            for (int j = 0; j < ny; ++j)
                for (int i = 0; i < nx; ++i) m = std::max(m, std::abs(up[g.idx(j, i)]));
            if (m > opt.blowup_limit)
                fail(Errc::unstable_scheme,
                     "field exceeded the blow-up guard at t=" + std::to_string(g.t(k + 1)));
        }
    }
    return out;
}

double sample_level(const Field3D& u, const SpaceTimeGrid& g, int k, double x, double y) {
    double fx = (x - g.domain_x0_) / g.dx;
    double fy = (y - g.domain_y0_) / g.dy;
    int i = std::clamp(static_cast<int>(std::floor(fx)), 0, g.nx - 2);
    int j = std::clamp(static_cast<int>(std::floor(fy)), 0, g.ny - 2);
    double wx = fx - i, wy = fy - j;
    auto val = [&](int jj, int ii) {
        if (!g.in_domain(jj, ii)) return 0.0;
        return u.at(k, jj, ii);
    };
    return (1 - wx) * (1 - wy) * val(j, i) + wx * (1 - wy) * val(j, i + 1) +
           (1 - wx) * wy * val(j + 1, i) + wx * wy * val(j + 1, i + 1);
}

TraceSet traces(const WaveField& field) {
    const auto& g = *field.grid;
    const auto& u = field.u;
    TraceSet ts;
    ts.grid = field.grid;
    const int nb = static_cast<int>(g.boundary_cells.size());
    ts.normal_deriv.assign(static_cast<size_t>(g.nt + 1) * nb, 0.0);

    const double h = std::min(g.dx, g.dy);
    for (int k = 0; k <= g.nt; ++k) {
        for (int b = 0; b < nb; ++b) {
            const auto& c = g.boundary_cells[b];
            double u0 = u.at(k, c.j, c.i);
            bool axis = (g.domain.shape == Shape::rectangle) &&
                        (std::abs(c.normal.x) < 1e-14 || std::abs(c.normal.y) < 1e-14);
            double u1, u2;
            if (axis) {
                int di = static_cast<int>(std::lround(c.normal.x));
                int dj = static_cast<int>(std::lround(c.normal.y));
                double hh = di != 0 ? g.dx : g.dy;
                u1 = u.at(k, c.j - dj, c.i - di);
                u2 = u.at(k, c.j - 2 * dj, c.i - 2 * di);
                ts.normal_deriv[static_cast<size_t>(k) * nb + b] =
                    (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * hh);
            } else {
                u1 = sample_level(u, g, k, c.pos.x - h * c.normal.x, c.pos.y - h * c.normal.y);
                u2 = sample_level(u, g, k, c.pos.x - 2 * h * c.normal.x,
                                  c.pos.y - 2 * h * c.normal.y);
                ts.normal_deriv[static_cast<size_t>(k) * nb + b] =
                    (3.0 * u0 - 4.0 * u1 + u2) / (2.0 * h);
            }
        }
    }

    ts.final_value = u.slice(g.nt);
    ts.final_velocity = Field2D(g.ny, g.nx);
    ts.initial_velocity = Field2D(g.ny, g.nx);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            if (!g.in_domain(j, i)) continue;
            ts.final_velocity.at(j, i) =
                (3.0 * u.at(g.nt, j, i) - 4.0 * u.at(g.nt - 1, j, i) + u.at(g.nt - 2, j, i)) /
                (2.0 * g.dt);
            ts.initial_velocity.at(j, i) =
                (-3.0 * u.at(0, j, i) + 4.0 * u.at(1, j, i) - u.at(2, j, i)) / (2.0 * g.dt);
        }
    return ts;
}

std::vector<double> discrete_energy(const WaveField& field) {
    const auto& g = *field.grid;
    const auto& u = field.u;
    std::vector<double> E;
    E.reserve(g.nt - 1);
    for (int k = 1; k < g.nt; ++k) {
        double e = 0.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double w = g.area_weight(j, i);
                if (w == 0.0) continue;
                double ut = (u.at(k + 1, j, i) - u.at(k - 1, j, i)) / (2.0 * g.dt);
                e += 0.5 * w * ut * ut;
                // centered gradient, one-sided at the boundary
                auto val = [&](int jj, int ii) {
                    if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny || !g.in_domain(jj, ii))
                        return 0.0;
                    return u.at(k, jj, ii);
                };
                double ux, uy;
                if (i > 0 && i < g.nx - 1 && g.in_domain(j, i - 1) && g.in_domain(j, i + 1))
                    ux = (val(j, i + 1) - val(j, i - 1)) / (2.0 * g.dx);
                else if (i < g.nx - 1 && g.in_domain(j, i + 1))
                    ux = (val(j, i + 1) - val(j, i)) / g.dx;
                else
                    ux = (val(j, i) - val(j, i - 1)) / g.dx;
                if (j > 0 && j < g.ny - 1 && g.in_domain(j - 1, i) && g.in_domain(j + 1, i))
                    uy = (val(j + 1, i) - val(j - 1, i)) / (2.0 * g.dy);
                else if (j < g.ny - 1 && g.in_domain(j + 1, i))
                    uy = (val(j + 1, i) - val(j, i)) / g.dy;
                else
                    uy = (val(j, i) - val(j - 1, i)) / g.dy;
                e += 0.5 * w * (ux * ux + uy * uy);
            }
        E.push_back(e);
    }
    return E;
}

double l2_omega(const Field2D& f, const SpaceTimeGrid& g) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double w = g.area_weight(j, i);
            if (w == 0.0) continue;
            s += w * f.at(j, i) * f.at(j, i);
        }
    return std::sqrt(s);
}

double h1_omega(const Field2D& f, const SpaceTimeGrid& g) {
    double s = 0.0;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double w = g.area_weight(j, i);
            if (w == 0.0) continue;
            auto val = [&](int jj, int ii) {
                if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny || !g.in_domain(jj, ii))
                    return 0.0;
                return f.at(jj, ii);
            };
            double ux = (i > 0 && i < g.nx - 1)
                            ? (val(j, i + 1) - val(j, i - 1)) / (2.0 * g.dx)
                            : ((i == 0 ? val(j, 1) - val(j, 0) : val(j, i) - val(j, i - 1)) / g.dx);
            double uy = (j > 0 && j < g.ny - 1)
                            ? (val(j + 1, i) - val(j - 1, i)) / (2.0 * g.dy)
                            : ((j == 0 ? val(1, i) - val(0, i) : val(j, i) - val(j - 1, i)) / g.dy);
            s += w * (f.at(j, i) * f.at(j, i) + ux * ux + uy * uy);
        }
    return std::sqrt(s);
}

EnergyEstimateReport energy_estimate_check(const Potential& q1, const Potential& q2,
                                           const WaveField& u2) {
    const auto gp = u2.grid;
    const auto& g = *gp;
    // zero-data problem driven by (q2-q1) u2
    Field3D dq(g.nt + 1, g.ny, g.nx);
    for (int k = 0; k <= g.nt; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (g.in_domain(j, i))
                    dq.at(k, j, i) = (q2.eval(g.t(k), g.x(i), g.y(j)) -
                                      q1.eval(g.t(k), g.x(i), g.y(j))) *
                                     u2.u.at(k, j, i);
    IbvpProblem prob;
    prob.grid = gp;
    prob.q = &q1;
    prob.f = [&](double t, Field2D& out) {
        int k = std::clamp(static_cast<int>(std::lround(t / g.dt)), 0, g.nt);
        std::copy(dq.level(k), dq.level(k) + out.size(), out.v.begin());
    };
    WaveField u = solve_ibvp(prob);
    TraceSet ts = traces(u);

    double sup_ut = 0.0, sup_h1 = 0.0;
    for (int k = 0; k <= g.nt; ++k) {
        Field2D ut(g.ny, g.nx), uk = u.u.slice(k);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (!g.in_domain(j, i)) continue;
                if (k == 0)
                    ut.at(j, i) = ts.initial_velocity.at(j, i);
                else if (k == g.nt)
                    ut.at(j, i) = ts.final_velocity.at(j, i);
                else
                    ut.at(j, i) = (u.u.at(k + 1, j, i) - u.u.at(k - 1, j, i)) / (2.0 * g.dt);
            }
        sup_ut = std::max(sup_ut, l2_omega(ut, g));
        sup_h1 = std::max(sup_h1, h1_omega(uk, g));
    }
    double flux = 0.0;
    const int nb = static_cast<int>(g.boundary_cells.size());
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        for (int b = 0; b < nb; ++b) {
            double d = ts.nd(k, b);
            flux += tw * g.dt * g.boundary_cells[b].weight * d * d;
        }
    }
    EnergyEstimateReport rep;
    rep.lhs = sup_ut + sup_h1 + std::sqrt(flux);
    double dq_inf = 0.0;
    for (int k = 0; k <= g.nt; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (g.in_domain(j, i))
                    dq_inf = std::max(dq_inf, std::abs(q2.eval(g.t(k), g.x(i), g.y(j)) -
                                                       q1.eval(g.t(k), g.x(i), g.y(j))));
    rep.rhs = dq_inf * l2_norm_Q(u2.u, g);
    rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
    return rep;
}

LogVal hf_norm(std::shared_ptr<const SpaceTimeGrid> grid, const FacePartition& faces,
               const BoundaryFn& g, const Field2D* v1, std::optional<DriftTag> tag) {
    const auto& gr = *grid;
    // validate supp g inside F before any solve
    if (g) {
        double gmax = 0.0, leak = 0.0;
        for (int k = 0; k <= gr.nt; ++k)
            for (const auto& c : gr.boundary_cells) {
                double v = std::abs(g(gr.t(k), c));
                gmax = std::max(gmax, v);
                if (!faces.in_F(c.normal)) leak = std::max(leak, v);
            }
        if (gmax > 0.0 && leak > 1e-12 * gmax)
            fail(Errc::support_violation, "Dirichlet input is nonzero outside F");
    }

    IbvpProblem prob;
    prob.grid = grid;
    prob.g = g;
    prob.v1 = v1;
    prob.drift = tag;
    WaveField u = solve_ibvp(prob);
    const auto& sg = *u.grid;

    if (!tag) return LogVal::from_linear(l2_norm_Q(u.u, sg));

    // phase-weighted quadrature, scaled by the max exponent over Q
    const double lam = tag->s;
    const Vec2 om = tag->omega;
    double emax = -1e300;
    for (int j = 0; j < sg.ny; ++j)
        for (int i = 0; i < sg.nx; ++i)
            if (sg.in_domain(j, i))
                emax = std::max(emax, sg.T + om.x * sg.x(i) + om.y * sg.y(j));
    emax *= 2.0 * lam;
    double acc = 0.0;
    for (int k = 0; k <= sg.nt; ++k) {
        double tw = (k == 0 || k == sg.nt) ? 0.5 : 1.0;
        for (int j = 0; j < sg.ny; ++j)
            for (int i = 0; i < sg.nx; ++i) {
                double w = sg.area_weight(j, i);
                if (w == 0.0) continue;
                double phase = 2.0 * lam * (sg.t(k) + om.x * sg.x(i) + om.y * sg.y(j));
                double v = u.u.at(k, j, i);
                acc += tw * w * sg.dt * std::exp(phase - emax) * v * v;
            }
    }
    LogVal r;
    r.ln = acc > 0.0 ? 0.5 * (emax + std::log(acc)) : -std::numeric_limits<double>::infinity();
    return r;
}

}  // namespace wp
