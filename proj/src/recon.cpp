#include "wp/recon.hpp"

#include <algorithm>
#include <cmath>

#include "wp/bump.hpp"
#include "wp/spectral.hpp"

namespace wp {

double coupled_delta(double lambda, double alpha) {
    return std::pow(lambda, -1.0 / (4.0 + 2.0 * alpha));
}

namespace {

// one-sided second-order time derivative at the final level
double dt_at_T(const Field3D& f, const SpaceTimeGrid& g, int j, int i) {
    return (3.0 * f.at(g.nt, j, i) - 4.0 * f.at(g.nt - 1, j, i) + f.at(g.nt - 2, j, i)) /
           (2.0 * g.dt);
}

struct IdentityTerms {
    double lhs = 0, term_G = 0, term_rest = 0, term_velT = 0, term_valT = 0;
};

// all quadratures of the pairing identity in amplitude variables; udiff is the
// conjugated difference field on the base grid, probe fields on the base grid
IdentityTerms identity_quadratures(const SpaceTimeGrid& g, const Field3D& dq,
                                   const Field3D& chi1, const Field3D& w,
                                   const ChiField& chi_fn, const Field3D& u2_amp,
                                   const WaveField& udiff, const FacePartition& faces,
                                   double lambda) {
    IdentityTerms T;
    // lhs = int q (chi + w)(chi + z)
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                double wgt = g.area_weight(j, i);
                if (wgt == 0.0) continue;
                T.lhs += tw * wgt * g.dt * dq.at(k, j, i) * (chi1.at(k, j, i) + w.at(k, j, i)) *
                         u2_amp.at(k, j, i);
            }
    }
    TraceSet ts = traces(udiff);
    const int nb = static_cast<int>(g.boundary_cells.size());
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        for (int b = 0; b < nb; ++b) {
            const auto& c = g.boundary_cells[b];
            double u1b = chi1.at(k, c.j, c.i) + w.at(k, c.j, c.i);
            double v = tw * g.dt * c.weight * ts.nd(k, b) * u1b;
            if (faces.in_G(c.normal))
                T.term_G -= v;
            else
                T.term_rest -= v;
        }
    }
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double wgt = g.area_weight(j, i);
            if (wgt == 0.0) continue;
            double u1T = chi1.at(g.nt, j, i) + w.at(g.nt, j, i);
            // d_t of the physical probe1 amplitude: (d_t - lambda)(chi + w)
            double du1T = chi_fn.d_t(g.T, g.x(i), g.y(j)) + dt_at_T(w, g, j, i) - lambda * u1T;
            double udT = udiff.u.at(g.nt, j, i);
            double utT = lambda * udT + ts.final_velocity.at(j, i);
            T.term_velT += wgt * utT * u1T;
            T.term_valT -= wgt * udT * du1T;
        }
    return T;
}

}  // namespace

IdentityBreakdown greens_identity_breakdown(const Potential& q1, const Potential& q2,
                                            const GOProbe& probe1, const GOProbe& probe2,
                                            const FacePartition& faces) {
    if (probe1.sign != -1 || probe2.sign != +1)
        fail(Errc::probe_mismatch, "the identity pairs a decaying probe with a growing one");
    if (probe1.lambda != probe2.lambda ||
        std::abs(probe1.omega.x - probe2.omega.x) + std::abs(probe1.omega.y - probe2.omega.y) >
            1e-12)
        fail(Errc::probe_mismatch, "probe pair must share (lambda, omega)");
    if (!probe1.grid->same_layout(*probe2.grid))
        fail(Errc::grid_mismatch, "probes live on different grids");

    const auto grid = probe1.grid;
    const SpaceTimeGrid& g = *grid;
    const double lambda = probe1.lambda;
    const Vec2 omega = probe1.omega;

    // difference amplitude: (Box + 2 lambda (dt - w.grad) + q1) u = (q2-q1)(chi + z)
    const WaveField* zref = probe2.refined.get();
    IbvpProblem prob;
    prob.grid = zref ? zref->grid : grid;
    const SpaceTimeGrid& rg = *prob.grid;
    Field3D src(rg.nt + 1, rg.ny, rg.nx);
    for (int k = 0; k <= rg.nt; ++k) {
        double t = rg.t(k);
        int kb = (zref && zref->refine_factor > 1) ? -1 : k;  // direct level when unrefined
        for (int j = 0; j < rg.ny; ++j)
            for (int i = 0; i < rg.nx; ++i) {
                if (!rg.in_domain(j, i)) continue;
                double zv;
                if (zref)
                    zv = zref->u.at(k, j, i);
                else if (kb >= 0)
                    zv = probe2.remainder.at(k, j, i);
                else
                    zv = 0.0;
                double chiv = probe2.chi_fn->value(t, rg.x(i), rg.y(j));
                double dqv = q2.eval(t, rg.x(i), rg.y(j)) - q1.eval(t, rg.x(i), rg.y(j));
                src.at(k, j, i) = dqv * (chiv + zv);
            }
    }
    prob.q = q1.is_zero() ? nullptr : &q1;
    prob.drift = DriftTag{lambda, omega};
    prob.f = [&](double t, Field2D& out) {
        int k = std::clamp(static_cast<int>(std::lround(t / rg.dt)), 0, rg.nt);
        std::copy(src.level(k), src.level(k) + out.size(), out.v.begin());
    };
    SolveOptions sopt;
    WaveField udiff = solve_ibvp(prob, sopt).subsampled(grid);

    // q2 - q1 and u2 amplitude on the base grid
    Field3D dq(g.nt + 1, g.ny, g.nx);
    Field3D u2a(g.nt + 1, g.ny, g.nx);
    for (int k = 0; k <= g.nt; ++k)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                if (!g.in_domain(j, i)) continue;
                dq.at(k, j, i) = q2.at(k, j, i) - q1.at(k, j, i);
                u2a.at(k, j, i) = probe2.chi.at(k, j, i) + probe2.remainder.at(k, j, i);
            }

    IdentityTerms T = identity_quadratures(g, dq, probe1.chi, probe1.remainder,
                                           *probe1.chi_fn, u2a, udiff, faces, lambda);
    IdentityBreakdown out;
    out.lhs = T.lhs;
    out.term_G = T.term_G;
    out.term_sigma_rest = T.term_rest;
    out.term_velT = T.term_velT;
    out.term_valT = T.term_valT;
    out.residual = T.lhs - (T.term_G + T.term_rest + T.term_velT + T.term_valT);
    return out;
}

double v_delta_direct(const Potential& q, Vec2 y, Vec2 omega, double delta, int quad_steps) {
    // int q(t,x) delta^{-2} phi^2((y - x - t w)/delta) dx dt over the tube
    const auto& g = *q.grid;
    double acc = 0.0;
    int nsub = std::max(1, quad_steps / g.nt);
    double dts = g.T / (g.nt * nsub);
    for (int k = 0; k < g.nt * nsub; ++k) {
        double t = (k + 0.5) * dts;
        Vec2 c{y.x - t * omega.x, y.y - t * omega.y};  // tube center at time t
        // integrate over the delta-ball around c with a fine local lattice
        int nl = 24;
        double h = 2.0 * delta / nl;
        double loc = 0.0;
        for (int a = 0; a < nl; ++a)
            for (int b = 0; b < nl; ++b) {
                double px = c.x - delta + (a + 0.5) * h;
                double py = c.y - delta + (b + 0.5) * h;
                double z1 = (y.x - px - t * omega.x) / delta;
                double z2 = (y.y - py - t * omega.y) / delta;
                double ph = bump_derivs(z1, z2).val;
                if (ph == 0.0) continue;
                loc += q.eval_grid(t, px, py) * ph * ph;
            }
        acc += loc * h * h;
    }
    return acc * dts / (delta * delta);
}

YGrid v_from_lightray(const Potential& q, Vec2 omega, double delta, const YGrid& layout) {
    // V(y) = int Rq(y - delta u) phi^2(u) du by midpoint quadrature on the unit disk
    YGrid out = layout;
    const int nu = 16;
    double hu = 2.0 / nu;
    struct Node {
        double ux, uy, w;
    };
    std::vector<Node> nodes;
    for (int a = 0; a < nu; ++a)
        for (int b = 0; b < nu; ++b) {
            double ux = -1.0 + (a + 0.5) * hu;
            double uy = -1.0 + (b + 0.5) * hu;
            double ph = bump_derivs(ux, uy).val;
            if (ph == 0.0) continue;
            nodes.push_back({ux, uy, ph * ph * hu * hu});
        }
    for (int b = 0; b < layout.n2; ++b)
        for (int a = 0; a < layout.n1; ++a) {
            Vec2 y = layout.pos(a, b);
            double acc = 0.0;
            for (const auto& n : nodes) {
                Vec2 p{y.x - delta * n.ux, y.y - delta * n.uy};
                acc += n.w * lightray_oracle(q, omega, p, 2 * q.grid->nt);
            }
            out.at(a, b) = acc;
        }
    return out;
}

YGrid rq_estimate(const YGrid& v_delta, double delta, double alpha, const YGrid* v_half) {
    if (!v_half) return v_delta;  // the plain route: accept the mollification error
    if (v_half->n1 != v_delta.n1 || v_half->n2 != v_delta.n2)
        fail(Errc::grid_mismatch, "Richardson pair must share the anchor layout");
    YGrid out = v_delta;
    double f = std::pow(2.0, alpha);
    for (size_t m = 0; m < out.v.size(); ++m)
        out.v[m] = (f * v_half->v[m] - v_delta.v[m]) / (f - 1.0);
    (void)delta;
    return out;
}

double estimate_Vdelta(const Potential& q1, const Potential& q2, Vec2 y, Vec2 omega,
                       const FacePartition& faces, std::shared_ptr<const SpaceTimeGrid> grid,
                       const VEstimateOptions& opt) {
    double delta = opt.delta > 0.0 ? opt.delta : coupled_delta(opt.lambda, opt.alpha);
    auto chi = std::make_shared<MollifierChi>(delta, y, omega);
    GOProbe p1 = build_go_decaying(q1, opt.lambda, omega, chi, grid,
                                   GoBuildOptions{1e-8, 24, opt.floor_rel, 0.0});
    GOProbe p2 = build_go_vanishing(q2, opt.lambda, omega, chi, faces, grid);
    IdentityBreakdown ib = greens_identity_breakdown(q1, q2, p1, p2, faces);
    if (opt.mode == VMode::oracle) return ib.lhs;
    return ib.term_G + ib.term_valT;
}

// ---------------------------------------------------------------------------
// batched sweep with a translated spectral template for the decaying probe
// ---------------------------------------------------------------------------

namespace {

double time_window(double t, double T, double taper) {
    if (t <= T) return 1.0;
    if (t >= T + taper) return 0.0;
    double u = (t - T) / taper;
    return 1.0 - u * u * (3.0 - 2.0 * u);
}

struct SweepTemplate {
    // padded box with the reference-anchor remainder field
    int npt, npy, npx;
    int offx, offy;
    Vec2 y_ref;
    std::vector<double> w0;  // (npt', npy, npx): first nt+1 levels kept
    int levels;
    double zeroed_fraction = 0.0;
    bool valid = false;
};

SweepTemplate build_template(const SpaceTimeGrid& g, double lambda, Vec2 omega, double delta,
                             double floor_rel, double taper) {
    SweepTemplate tp;
    tp.npt = next_fast_size(2 * (g.nt + 1));
    tp.npx = next_fast_size(4 * (g.nx - 1));
    tp.npy = next_fast_size(4 * (g.ny - 1));
    tp.offx = (tp.npx - g.nx) / 2;
    tp.offy = (tp.npy - g.ny) / 2;
    tp.levels = g.nt + 1;

    // wraparound safety: every tube point stays farther from the periodic
    // images of Q than the mollifier radius
    double need = 2.0 + 2.0 * delta + (g.T + taper) + 0.5;
    double span_x = (g.domain.x_max - g.domain.x_min);
    need = span_x + 2.0 * delta + (g.T + taper) + 0.5;
    if (tp.npx * g.dx < need || tp.npy * g.dy < need) {
        tp.valid = false;
        return tp;
    }

    int ic = g.nx / 2, jc = g.ny / 2;
    tp.y_ref = {g.x(ic), g.y(jc)};
    MollifierChi chi(delta, tp.y_ref, omega);

    SpectralBox box(tp.npt, tp.npy, tp.npx, g.dt, g.dy, g.dx);
    box.zero_real();
    double* d = box.real_data();
    for (int k = 0; k < tp.npt; ++k) {
        double t = k * g.dt;
        double wt = time_window(t, g.T, taper);
        if (wt == 0.0) continue;
        for (int j = 0; j < tp.npy; ++j) {
            double yy = g.domain_y0_ + (j - tp.offy) * g.dy;
            for (int i = 0; i < tp.npx; ++i) {
                double xx = g.domain_x0_ + (i - tp.offx) * g.dx;
                double b = chi.box_op(t, xx, yy);
                if (b != 0.0)
                    d[(static_cast<size_t>(k) * tp.npy + j) * tp.npx + i] = wt * b;
            }
        }
    }
    box.forward();
    double zeroed = 0.0, total = 0.0;
    const double floor_abs = floor_rel * lambda;
    box.for_each_mode([&](double mu, double xi1, double xi2, double w,
                          std::complex<double>& c) {
        auto p = conjugated_symbol(mu, xi1, xi2, -1, lambda, omega);
        double e = w * std::norm(c);
        total += e;
        if (std::abs(p) < floor_abs) {
            zeroed += e;
            c = 0.0;
        } else {
            c /= -p;  // w = -E[source]
        }
    });
    tp.zeroed_fraction = total > 0.0 ? zeroed / total : 0.0;
    box.inverse();
    tp.w0.assign(static_cast<size_t>(tp.levels) * tp.npy * tp.npx, 0.0);
    const double* rd = box.real_data();
    std::copy(rd, rd + tp.w0.size(), tp.w0.begin());
    tp.valid = true;
    return tp;
}

// remainder of the translated probe restricted to Q; shift in lattice cells
Field3D extract_w(const SweepTemplate& tp, const SpaceTimeGrid& g, int si, int sj) {
    Field3D w(g.nt + 1, g.ny, g.nx);
    for (int k = 0; k <= g.nt; ++k)
        for (int j = 0; j < g.ny; ++j) {
            int pj = ((tp.offy + j - sj) % tp.npy + tp.npy) % tp.npy;
            const double* row = tp.w0.data() + (static_cast<size_t>(k) * tp.npy + pj) * tp.npx;
            for (int i = 0; i < g.nx; ++i) {
                int pi = ((tp.offx + i - si) % tp.npx + tp.npx) % tp.npx;
                w.at(k, j, i) = row[pi];
            }
        }
    return w;
}

bool tube_meets_domain(const SpaceTimeGrid& g, Vec2 y, Vec2 omega, double delta) {
    for (int m = 0; m <= 96; ++m) {
        double t = g.T * m / 96.0;
        double px = y.x + t * omega.x, py = y.y + t * omega.y;
        double ddx = std::max({g.domain.x_min - px, 0.0, px - g.domain.x_max});
        double ddy = std::max({g.domain.y_min - py, 0.0, py - g.domain.y_max});
        if (g.domain.shape == Shape::disk) {
            double r = std::sqrt((px - g.domain.center.x) * (px - g.domain.center.x) +
                                 (py - g.domain.center.y) * (py - g.domain.center.y));
            if (r <= g.domain.radius + delta) return true;
        } else if (std::sqrt(ddx * ddx + ddy * ddy) <= delta) {
            return true;
        }
    }
    return false;
}

}  // namespace

YGrid v_sweep(const Potential& q1, const Potential& q2, Vec2 omega, const FacePartition& faces,
              std::shared_ptr<const SpaceTimeGrid> grid, const VEstimateOptions& opt) {
    const SpaceTimeGrid& g = *grid;
    const double lambda = opt.lambda;
    const double delta = opt.delta > 0.0 ? opt.delta : coupled_delta(lambda, opt.alpha);
    const double taper = 0.5;

    // anchor lattice: a sublattice of the node lattice, spacing ~ delta/2
    int m = std::max(1, static_cast<int>(std::lround(delta / (2.0 * g.dx))));
    double h = m * g.dx;
    double pad = delta + 0.25;
    double ax_min = g.domain.x_min - pad - g.T * std::max(omega.x, 0.0);
    double ax_max = g.domain.x_max + pad - g.T * std::min(omega.x, 0.0);
    double ay_min = g.domain.y_min - pad - g.T * std::max(omega.y, 0.0);
    double ay_max = g.domain.y_max + pad - g.T * std::min(omega.y, 0.0);

    int ic = g.nx / 2, jc = g.ny / 2;
    Vec2 y_ref{g.x(ic), g.y(jc)};
    int a_lo = static_cast<int>(std::floor((ax_min - y_ref.x) / h));
    int a_hi = static_cast<int>(std::ceil((ax_max - y_ref.x) / h));
    int b_lo = static_cast<int>(std::floor((ay_min - y_ref.y) / h));
    int b_hi = static_cast<int>(std::ceil((ay_max - y_ref.y) / h));

    YGrid out;
    out.h = h;
    out.n1 = a_hi - a_lo + 1;
    out.n2 = b_hi - b_lo + 1;
    out.x0 = y_ref.x + a_lo * h;
    out.y0 = y_ref.y + b_lo * h;
    out.v.assign(static_cast<size_t>(out.n1) * out.n2, 0.0);

    // spectral template for q1 = 0 (one inversion per direction)
    SweepTemplate tp;
    bool fast = q1.is_zero();
    if (fast) {
        tp = build_template(g, lambda, omega, delta, opt.floor_rel, taper);
        fast = tp.valid;
    }

    // stepping grid shared by every anchor
    SolveOptions sref;
    int refine = 1;
    {
        double dt = g.dt;
        while (lambda * dt > sref.stiffness_limit) {
            refine *= 2;
            dt *= 0.5;
        }
    }
    std::shared_ptr<const SpaceTimeGrid> rgp =
        (refine == 1) ? grid : std::shared_ptr<const SpaceTimeGrid>(g.time_refined(refine));
    const SpaceTimeGrid& rg = *rgp;

    // y-independent tabulations
    Field3D q2tab(rg.nt + 1, rg.ny, rg.nx), dqtab(rg.nt + 1, rg.ny, rg.nx);
    for (int k = 0; k <= rg.nt; ++k) {
        double t = rg.t(k);
        for (int j = 0; j < rg.ny; ++j)
            for (int i = 0; i < rg.nx; ++i) {
                if (!rg.in_domain(j, i)) continue;
                double a = q2.eval(t, rg.x(i), rg.y(j));
                q2tab.at(k, j, i) = a;
                dqtab.at(k, j, i) = a - q1.eval(t, rg.x(i), rg.y(j));
            }
    }
    std::vector<double> psi(g.boundary_cells.size());
    for (size_t b = 0; b < g.boundary_cells.size(); ++b)
        psi[b] = boundary_cutoff_psi(g.boundary_cells[b].normal.dot(omega), faces.epsilon);

    Field3D chi_r(rg.nt + 1, rg.ny, rg.nx), zsrc(rg.nt + 1, rg.ny, rg.nx);
    Field3D diff_src(rg.nt + 1, rg.ny, rg.nx);

    for (int b = 0; b < out.n2; ++b)
        for (int a = 0; a < out.n1; ++a) {
            Vec2 y = out.pos(a, b);
            if (!tube_meets_domain(g, y, omega, delta)) continue;
            MollifierChi chi(delta, y, omega);

            // chi and the z-equation source on the stepping grid
            chi_r.fill(0.0);
            zsrc.fill(0.0);
            for (int k = 0; k <= rg.nt; ++k) {
                double t = rg.t(k);
                Vec2 c{y.x - t * omega.x, y.y - t * omega.y};
                int i0 = std::max(0, static_cast<int>((c.x - delta - g.domain_x0_) / rg.dx) - 1);
                int i1 = std::min(rg.nx - 1,
                                  static_cast<int>((c.x + delta - g.domain_x0_) / rg.dx) + 1);
                int j0 = std::max(0, static_cast<int>((c.y - delta - g.domain_y0_) / rg.dy) - 1);
                int j1 = std::min(rg.ny - 1,
                                  static_cast<int>((c.y + delta - g.domain_y0_) / rg.dy) + 1);
                for (int j = j0; j <= j1; ++j)
                    for (int i = i0; i <= i1; ++i) {
                        if (!rg.in_domain(j, i)) continue;
                        double cv = chi.value(t, rg.x(i), rg.y(j));
                        if (cv == 0.0 && std::abs(chi.box_op(t, rg.x(i), rg.y(j))) == 0.0)
                            continue;
                        chi_r.at(k, j, i) = cv;
                        zsrc.at(k, j, i) =
                            -(chi.box_op(t, rg.x(i), rg.y(j)) + q2tab.at(k, j, i) * cv);
                    }
            }

            // growing-probe amplitude
            IbvpProblem zp;
            zp.grid = rgp;
            zp.q_tab = &q2tab;
            Field2D v0(rg.ny, rg.nx);
            for (int j = 0; j < rg.ny; ++j)
                for (int i = 0; i < rg.nx; ++i)
                    if (rg.in_domain(j, i)) v0.at(j, i) = -chi_r.at(0, j, i);
            zp.v0 = &v0;
            zp.drift = DriftTag{lambda, omega};
            zp.g = [&](double t, const BoundaryCell& c) {
                int bi = g.bcell_index[g.idx(c.j, c.i)];
                return -psi[bi] * chi.value(t, c.pos.x, c.pos.y);
            };
            zp.f = [&](double t, Field2D& sout) {
                int k = std::clamp(static_cast<int>(std::lround(t / rg.dt)), 0, rg.nt);
                std::copy(zsrc.level(k), zsrc.level(k) + sout.size(), sout.v.begin());
            };
            WaveField z = solve_ibvp(zp);

            // difference amplitude driven by (q2-q1)(chi+z)
            for (int k = 0; k <= rg.nt; ++k)
                for (int j = 0; j < rg.ny; ++j)
                    for (int i = 0; i < rg.nx; ++i)
                        diff_src.at(k, j, i) =
                            dqtab.at(k, j, i) * (chi_r.at(k, j, i) + z.u.at(k, j, i));
            IbvpProblem dp;
            dp.grid = rgp;
            dp.q_tab = nullptr;
            const Potential* q1p = q1.is_zero() ? nullptr : &q1;
            dp.q = q1p;
            dp.drift = DriftTag{lambda, omega};
            dp.f = [&](double t, Field2D& sout) {
                int k = std::clamp(static_cast<int>(std::lround(t / rg.dt)), 0, rg.nt);
                std::copy(diff_src.level(k), diff_src.level(k) + sout.size(), sout.v.begin());
            };
            WaveField ud = solve_ibvp(dp).subsampled(grid);

            // decaying-probe remainder
            Field3D w;
            if (fast) {
                int si = static_cast<int>(std::lround((y.x - tp.y_ref.x) / g.dx));
                int sj = static_cast<int>(std::lround((y.y - tp.y_ref.y) / g.dy));
                w = extract_w(tp, g, si, sj);
            } else {
                auto chp = std::make_shared<MollifierChi>(delta, y, omega);
                GOProbe p1 = build_go_decaying(q1, lambda, omega, chp, grid,
                                               GoBuildOptions{1e-7, 16, opt.floor_rel, 0.0});
                w = std::move(p1.remainder);
            }

            // base-grid fields for the quadratures
            Field3D chi_b = (refine == 1) ? chi_r : chi_r.subsample_time(refine);
            Field3D z_b = (refine == 1) ? z.u : z.u.subsample_time(refine);
            Field3D dq_b = (refine == 1) ? dqtab : dqtab.subsample_time(refine);
            Field3D u2a(g.nt + 1, g.ny, g.nx);
            for (size_t mm = 0; mm < u2a.v.size(); ++mm)
                u2a.v[mm] = chi_b.v[mm] + z_b.v[mm];

            IdentityTerms T =
                identity_quadratures(g, dq_b, chi_b, w, chi, u2a, ud, faces, lambda);
            out.at(a, b) = (opt.mode == VMode::oracle) ? T.lhs : (T.term_G + T.term_valT);
        }
    return out;
}

}  // namespace wp
