#include "wp/go_factory.hpp"

#include <algorithm>
#include <cmath>

#include "wp/bump.hpp"
#include "wp/spectral.hpp"

namespace wp {

double MollifierChi::phi(double zx, double zy) { return bump_derivs(zx, zy).val; }

double MollifierChi::phi_sq(double zx, double zy) {
    double v = bump_derivs(zx, zy).val;
    return v * v;
}

MollifierChi::MollifierChi(double delta, Vec2 y0, Vec2 omega)
    : delta_(delta), y0_(y0), omega_(omega) {
    if (!(delta > 0.0) || delta >= 1.0) fail(Errc::config_invalid, "delta must lie in (0,1)");
    double n = omega.norm();
    if (std::abs(n - 1.0) > 1e-10) fail(Errc::config_invalid, "omega must be a unit vector");
}

double MollifierChi::value(double t, double x, double y) const {
    double zx = (y0_.x - x - t * omega_.x) / delta_;
    double zy = (y0_.y - y - t * omega_.y) / delta_;
    return bump_derivs(zx, zy).val / delta_;
}

double MollifierChi::d_t(double t, double x, double y) const {
    double zx = (y0_.x - x - t * omega_.x) / delta_;
    double zy = (y0_.y - y - t * omega_.y) / delta_;
    auto d = bump_derivs(zx, zy);
    return -(omega_.x * d.gx + omega_.y * d.gy) / (delta_ * delta_);
}

double MollifierChi::box_op(double t, double x, double y) const {
    double zx = (y0_.x - x - t * omega_.x) / delta_;
    double zy = (y0_.y - y - t * omega_.y) / delta_;
    auto d = bump_derivs(zx, zy);
    double along = omega_.x * omega_.x * d.hxx + 2.0 * omega_.x * omega_.y * d.hxy +
                   omega_.y * omega_.y * d.hyy;
    double trace = d.hxx + d.hyy;
    return (along - trace) / (delta_ * delta_ * delta_);
}

std::string MollifierChi::describe() const {
    return "mollifier(delta=" + std::to_string(delta_) + ")";
}

Field3D sample_chi(const ChiField& chi, const SpaceTimeGrid& g) {
    Field3D f(g.nt + 1, g.ny, g.nx);
    for (int k = 0; k <= g.nt; ++k) {
        double t = g.t(k);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                if (g.in_domain(j, i)) f.at(k, j, i) = chi.value(t, g.x(i), g.y(j));
    }
    return f;
}

Field3D mollifier_chi(double delta, Vec2 y0, Vec2 omega, const SpaceTimeGrid& g) {
    MollifierChi chi(delta, y0, omega);
    return sample_chi(chi, g);
}

namespace {

Field3D diff_axis(const Field3D& f, const SpaceTimeGrid& g, int axis) {
    Field3D d(f.nl, f.ny, f.nx);
    auto val = [&](int k, int j, int i) { return f.at(k, j, i); };
    for (int k = 0; k < f.nl; ++k)
        for (int j = 0; j < f.ny; ++j)
            for (int i = 0; i < f.nx; ++i) {
                double v;
                if (axis == 0) {
                    if (k == 0) v = (val(1, j, i) - val(0, j, i)) / g.dt;
                    else if (k == f.nl - 1) v = (val(k, j, i) - val(k - 1, j, i)) / g.dt;
                    else v = (val(k + 1, j, i) - val(k - 1, j, i)) / (2.0 * g.dt);
                } else if (axis == 1) {
                    if (i == 0) v = (val(k, j, 1) - val(k, j, 0)) / g.dx;
                    else if (i == f.nx - 1) v = (val(k, j, i) - val(k, j, i - 1)) / g.dx;
                    else v = (val(k, j, i + 1) - val(k, j, i - 1)) / (2.0 * g.dx);
                } else {
                    if (j == 0) v = (val(k, 1, i) - val(k, 0, i)) / g.dy;
                    else if (j == f.ny - 1) v = (val(k, j, i) - val(k, j - 1, i)) / g.dy;
                    else v = (val(k, j + 1, i) - val(k, j - 1, i)) / (2.0 * g.dy);
                }
                d.at(k, j, i) = v;
            }
    return d;
}

void accumulate_orders(const Field3D& f, const SpaceTimeGrid& g, int order, int max_order,
                       std::vector<double>& acc) {
    double n = l2_norm_Q(f, g);
    acc[order] += n * n;
    if (order == max_order) return;
    for (int axis = 0; axis < 3; ++axis) {
        Field3D d = diff_axis(f, g, axis);
        accumulate_orders(d, g, order + 1, max_order, acc);
    }
}

}  // namespace

double fd_sobolev_norm(const Field3D& f, const SpaceTimeGrid& g, int order) {
    std::vector<double> acc(order + 1, 0.0);
    accumulate_orders(f, g, 0, order, acc);
    double s = 0.0;
    for (double a : acc) s += a;
    return std::sqrt(s);
}

namespace {

// zero-padded doubled box around Q with copy-in/copy-out helpers
struct GoWorkspace {
    const SpaceTimeGrid& g;
    SpectralBox box;

    explicit GoWorkspace(const SpaceTimeGrid& grid)
        : g(grid),
          box(next_fast_size(2 * (grid.nt + 1)), next_fast_size(2 * grid.ny),
              next_fast_size(2 * grid.nx), grid.dt, grid.dy, grid.dx) {}

    void load(const Field3D& f) {
        box.zero_real();
        double* d = box.real_data();
        for (int k = 0; k <= g.nt; ++k)
            for (int j = 0; j < g.ny; ++j)
                std::copy(f.level(k) + static_cast<size_t>(j) * g.nx,
                          f.level(k) + static_cast<size_t>(j) * g.nx + g.nx,
                          d + (static_cast<size_t>(k) * box.ny + j) * box.nx);
    }

    Field3D unload() const {
        Field3D f(g.nt + 1, g.ny, g.nx);
        const double* d = box.real_data();
        for (int k = 0; k <= g.nt; ++k)
            for (int j = 0; j < g.ny; ++j)
                std::copy(d + (static_cast<size_t>(k) * box.ny + j) * box.nx,
                          d + (static_cast<size_t>(k) * box.ny + j) * box.nx + g.nx,
                          f.level(k) + static_cast<size_t>(j) * g.nx);
        return f;
    }

    // returns zeroed energy fraction
    double divide_symbol(double lambda, Vec2 omega, int sign, double floor_rel) {
        double zeroed = 0.0, total = 0.0;
        const double floor_abs = floor_rel * lambda;
        box.for_each_mode([&](double mu, double xi1, double xi2, double w,
                              std::complex<double>& c) {
            auto p = conjugated_symbol(mu, xi1, xi2, sign, lambda, omega);
            double e = w * std::norm(c);
            total += e;
            if (std::abs(p) < floor_abs) {
                zeroed += e;
                c = 0.0;
            } else {
                c /= p;
            }
        });
        return total > 0.0 ? zeroed / total : 0.0;
    }

    void multiply_symbol(double lambda, Vec2 omega, int sign) {
        box.for_each_mode([&](double mu, double xi1, double xi2, double,
                              std::complex<double>& c) {
            c *= conjugated_symbol(mu, xi1, xi2, sign, lambda, omega);
        });
    }
};

}  // namespace

SymbolApplyResult symbol_inverse_apply(const Field3D& f, const SpaceTimeGrid& g, double lambda,
                                       Vec2 omega, double floor_rel, int sign,
                                       double max_zeroed) {
    if (!(floor_rel > 0.0)) fail(Errc::config_invalid, "mode floor must be positive");
    GoWorkspace ws(g);
    ws.load(f);
    ws.box.forward();
    double zeroed = ws.divide_symbol(lambda, omega, sign, floor_rel);
    if (zeroed > max_zeroed)
        fail(Errc::ill_conditioned_inversion,
             "symbol inversion zeroed " + std::to_string(100.0 * zeroed) +
                 "% of the source energy; move lambda off the characteristic lattice resonance");
    ws.box.inverse();
    SymbolApplyResult r{ws.unload(), zeroed};
    return r;
}

Field3D apply_conjugated_symbol(const Field3D& f, const SpaceTimeGrid& g, double lambda,
                                Vec2 omega, int sign) {
    GoWorkspace ws(g);
    ws.load(f);
    ws.box.forward();
    ws.multiply_symbol(lambda, omega, sign);
    ws.box.inverse();
    return ws.unload();
}

GOProbe build_go_decaying(const Potential& q, double lambda, Vec2 omega,
                          std::shared_ptr<const ChiField> chi,
                          std::shared_ptr<const SpaceTimeGrid> grid,
                          const GoBuildOptions& opt) {
    const SpaceTimeGrid& g = *grid;
    if (lambda < 4.0)
        fail(Errc::lambda_too_small, "decaying probes require lambda >= 4 (contraction range)");

    GOProbe probe;
    probe.sign = -1;
    probe.lambda = lambda;
    probe.omega = omega;
    probe.grid = grid;
    probe.chi_fn = chi;
    probe.chi = sample_chi(*chi, g);
    if (auto m = dynamic_cast<const MollifierChi*>(chi.get())) {
        probe.delta = m->delta();
        probe.anchor = m->anchor();
    }

    const bool has_q = !q.is_zero();
    Field3D b0(g.nt + 1, g.ny, g.nx);  // (box + q) chi on Q
    for (int k = 0; k <= g.nt; ++k) {
        double t = g.t(k);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (!g.in_domain(j, i)) continue;
                double b = chi->box_op(t, g.x(i), g.y(j));
                if (has_q) b += q.at(k, j, i) * probe.chi.at(k, j, i);
                b0.at(k, j, i) = b;
            }
    }

    const double chi_l2 = l2_norm_Q(probe.chi, g);
    GoWorkspace ws(g);
    Field3D w(g.nt + 1, g.ny, g.nx);
    Field3D rhs = b0;
    double prev_dn = -1.0;
    double zeroed = 0.0;
    int iters = 0;
    for (int it = 0; it < opt.max_iter; ++it) {
        ws.load(rhs);
        ws.box.forward();
        zeroed = ws.divide_symbol(lambda, omega, -1, opt.floor_rel);
        if (zeroed > 0.10)
            fail(Errc::ill_conditioned_inversion,
                 "mode floor removed more than 10% of the probe source energy");
        ws.box.inverse();
        Field3D wn = ws.unload();
        for (auto& v : wn.v) v = -v;
        double dn = 0.0;
        {
            Field3D diff = wn;
            for (size_t m = 0; m < diff.v.size(); ++m) diff.v[m] -= w.v[m];
            dn = l2_norm_Q(diff, g);
        }
        w = std::move(wn);
        ++iters;
        if (dn <= opt.tol * std::max(chi_l2, 1e-300)) break;
        if (prev_dn >= 0.0 && dn > prev_dn && dn > chi_l2)
            fail(Errc::lambda_too_small,
                 "fixed-point iteration diverges; lambda is below the contraction threshold");
        prev_dn = dn;
        if (!has_q) break;  // single application is exact when q = 0
        for (size_t m = 0; m < rhs.v.size(); ++m)
            rhs.v[m] = b0.v[m] + (has_q ? q.values.v[m] * w.v[m] : 0.0);
    }
    probe.picard_iters = iters;
    probe.zeroed_energy_fraction = zeroed;
    probe.remainder = w;
    probe.remainder_l2 = l2_norm_Q(w, g);
    probe.remainder_h1 = fd_sobolev_norm(w, g, 1);

    // residual of the conjugated equation: P_{-lambda} w + (box+q)chi + q w
    {
        Field3D pw = apply_conjugated_symbol(w, g, lambda, omega, -1);
        for (size_t m = 0; m < pw.v.size(); ++m)
            pw.v[m] += b0.v[m] + (has_q ? q.values.v[m] * w.v[m] : 0.0);
        probe.residual_norm = l2_norm_Q(pw, g);
    }
    return probe;
}

double boundary_cutoff_psi(double nu_dot_omega, double epsilon) {
    double hi = -epsilon / 3.0, lo = -epsilon / 2.0;
    if (nu_dot_omega <= lo) return 1.0;
    if (nu_dot_omega >= hi) return 0.0;
    double u = (hi - nu_dot_omega) / (hi - lo);
    return u * u * (3.0 - 2.0 * u);
}

GOProbe build_go_vanishing(const Potential& q, double lambda, Vec2 omega,
                           std::shared_ptr<const ChiField> chi, const FacePartition& faces,
                           std::shared_ptr<const SpaceTimeGrid> grid,
                           const GoBuildOptions& opt) {
    const SpaceTimeGrid& g = *grid;
    GOProbe probe;
    probe.sign = +1;
    probe.lambda = lambda;
    probe.omega = omega;
    probe.grid = grid;
    probe.chi_fn = chi;
    probe.chi = sample_chi(*chi, g);
    probe.faces = std::make_shared<FacePartition>(faces);
    if (auto m = dynamic_cast<const MollifierChi*>(chi.get())) {
        probe.delta = m->delta();
        probe.anchor = m->anchor();
    }

    const bool has_q = !q.is_zero();
    Field2D v0(g.ny, g.nx);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.in_domain(j, i)) v0.at(j, i) = -chi->value(0.0, g.x(i), g.y(j));

    IbvpProblem prob;
    prob.grid = grid;
    prob.q = has_q ? &q : nullptr;
    prob.v0 = &v0;
    prob.drift = DriftTag{lambda, omega};
    prob.g = [&](double t, const BoundaryCell& c) {
        double psi = boundary_cutoff_psi(c.normal.dot(omega), faces.epsilon);
        return -psi * chi->value(t, c.pos.x, c.pos.y);
    };
    prob.f = [&](double t, Field2D& out) {
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (!g.in_domain(j, i)) {
                    out.at(j, i) = 0.0;
                    continue;
                }
                double b = chi->box_op(t, g.x(i), g.y(j));
                if (has_q) b += q.eval(t, g.x(i), g.y(j)) * chi->value(t, g.x(i), g.y(j));
                out.at(j, i) = -b;
            }
    };
    SolveOptions sopt;
    sopt.dt_target = opt.dt_target;
    auto zfield = std::make_shared<WaveField>(solve_ibvp(prob, sopt));
    const SpaceTimeGrid& rg = *zfield->grid;

    // trace of the physical probe must stay inside F (one-cell tolerance)
    double chi_max = probe.chi.max_abs();
    if (chi_max > 0.0) {
        double band = 0.0, leak = 0.0;
        for (int k = 0; k <= rg.nt; ++k)
            for (const auto& c : rg.boundary_cells) {
                double tr = chi->value(rg.t(k), c.pos.x, c.pos.y) +
                            zfield->u.at(k, c.j, c.i);
                if (c.normal.dot(omega) < -faces.epsilon / 2.0)
                    band = std::max(band, std::abs(tr));
                if (!faces.in_F(c.normal)) leak = std::max(leak, std::abs(tr));
            }
        if (band > 1e-8 * chi_max)
            fail(Errc::unstable_scheme, "probe fails to vanish on the imposed boundary band");
        if (leak > 1e-8 * chi_max)
            fail(Errc::support_leak, "probe trace leaks outside the input face F");
    }

    // residual by centered differences on the stepping grid, interior nodes
    {
        double acc = 0.0;
        const auto& u = zfield->u;
        for (int k = 1; k < rg.nt; ++k) {
            double t = rg.t(k);
            for (int j = 1; j < rg.ny - 1; ++j)
                for (int i = 1; i < rg.nx - 1; ++i) {
                    if (!rg.interior[rg.idx(j, i)]) continue;
                    if (!rg.interior[rg.idx(j, i - 1)] || !rg.interior[rg.idx(j, i + 1)] ||
                        !rg.interior[rg.idx(j - 1, i)] || !rg.interior[rg.idx(j + 1, i)])
                        continue;
                    double d2t = (u.at(k + 1, j, i) - 2 * u.at(k, j, i) + u.at(k - 1, j, i)) /
                                 (rg.dt * rg.dt);
                    double lap =
                        (u.at(k, j, i + 1) - 2 * u.at(k, j, i) + u.at(k, j, i - 1)) /
                            (rg.dx * rg.dx) +
                        (u.at(k, j + 1, i) - 2 * u.at(k, j, i) + u.at(k, j - 1, i)) /
                            (rg.dy * rg.dy);
                    double dtu = (u.at(k + 1, j, i) - u.at(k - 1, j, i)) / (2.0 * rg.dt);
                    double gx = (u.at(k, j, i + 1) - u.at(k, j, i - 1)) / (2.0 * rg.dx);
                    double gy = (u.at(k, j + 1, i) - u.at(k, j - 1, i)) / (2.0 * rg.dy);
                    double qv = has_q ? q.eval(t, rg.x(i), rg.y(j)) : 0.0;
                    double src = chi->box_op(t, rg.x(i), rg.y(j)) +
                                 qv * chi->value(t, rg.x(i), rg.y(j));
                    double r = d2t - lap + 2.0 * lambda * (dtu - omega.x * gx - omega.y * gy) +
                               qv * u.at(k, j, i) + src;
                    acc += r * r * rg.dx * rg.dy * rg.dt;
                }
        }
        probe.residual_norm = std::sqrt(acc);
    }

    probe.remainder = (zfield->refine_factor == 1)
                          ? zfield->u
                          : zfield->u.subsample_time(zfield->refine_factor);
    probe.remainder_l2 = l2_norm_Q(probe.remainder, g);
    probe.remainder_h1 = fd_sobolev_norm(probe.remainder, g, 1);
    probe.refined = zfield;
    return probe;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0)) continue;
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) return std::numeric_limits<double>::quiet_NaN();
    double d = n * sxx - sx * sx;
    if (std::abs(d) < 1e-30) return std::numeric_limits<double>::quiet_NaN();
    return (n * sxy - sx * sy) / d;
}

DecayReport remainder_decay_report(const Potential& q, Vec2 omega, double delta,
                                   const std::vector<double>& lambdas, Vec2 y_anchor,
                                   const FacePartition& faces,
                                   std::shared_ptr<const SpaceTimeGrid> grid,
                                   const GoBuildOptions& opt) {
    if (lambdas.size() < 3)
        fail(Errc::list_too_short, "a decay sweep needs at least 3 lambda values");
    for (size_t i = 1; i < lambdas.size(); ++i)
        if (!(lambdas[i] > lambdas[i - 1]))
            fail(Errc::config_invalid, "lambda sweep must be ascending");

    auto chi = std::make_shared<MollifierChi>(delta, y_anchor, omega);
    DecayReport rep;
    const double lambda_min = lambdas.front();
    for (double lam : lambdas) {
        DecayRow row;
        row.lambda = lam;
        GOProbe w = build_go_decaying(q, lam, omega, chi, grid, opt);
        row.w_l2 = w.remainder_l2;
        row.w_h1 = w.remainder_h1;
        row.w_residual = w.residual_norm;
        row.w_zeroed = w.zeroed_energy_fraction;
        GoBuildOptions zopt = opt;
        // lambda-proportional stepping keeps lambda*dt fixed across the sweep
        zopt.dt_target = grid->dt * lambda_min / lam;
        GOProbe z = build_go_vanishing(q, lam, omega, chi, faces, grid, zopt);
        row.z_l2 = z.remainder_l2;
        row.z_h1 = z.remainder_h1;
        row.z_residual = z.residual_norm;
        rep.rows.push_back(row);
    }
    std::vector<double> ls, wh, zl;
    for (const auto& r : rep.rows) {
        ls.push_back(r.lambda);
        wh.push_back(r.w_h1);
        zl.push_back(r.z_l2);
    }
    rep.slope_w_h1 = loglog_slope(ls, wh);
    rep.slope_z_l2 = loglog_slope(ls, zl);
    int w_inversions = 0, z_inversions = 0;
    for (size_t i = 2; i < rep.rows.size(); ++i) {
        if (rep.rows[i].w_l2 > rep.rows[i - 1].w_l2) ++w_inversions;
        if (rep.rows[i].z_l2 > rep.rows[i - 1].z_l2) ++z_inversions;
    }
    rep.monotone_w = w_inversions <= 1;
    rep.monotone_z = z_inversions <= 1;
    return rep;
}

}  // namespace wp
