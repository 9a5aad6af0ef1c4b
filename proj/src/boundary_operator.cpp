#include "wp/boundary_operator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "wp/rng.hpp"

namespace wp {

namespace {

// weighted norms of an observation; lam = 0 reduces to the plain norms
void observation_norms(BoundaryObservation& obs, const SpaceTimeGrid& g,
                       const FacePartition& faces) {
    double lam = obs.tag ? obs.tag->s : 0.0;
    Vec2 om = obs.tag ? obs.tag->omega : Vec2{0, 0};
    const int nb = static_cast<int>(g.boundary_cells.size());

    double emax = -1e300;
    for (const auto& c : g.boundary_cells)
        emax = std::max(emax, g.T + om.x * c.pos.x + om.y * c.pos.y);
    emax *= 2.0 * lam;

    double acc = 0.0;
    for (int k = 0; k <= g.nt; ++k) {
        double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
        for (int b = 0; b < nb; ++b) {
            if (!obs.g_mask[b]) continue;
            const auto& c = g.boundary_cells[b];
            double f = obs.flux_on_G[static_cast<size_t>(k) * nb + b];
            double ph = 2.0 * lam * (g.t(k) + om.x * c.pos.x + om.y * c.pos.y);
            acc += tw * g.dt * c.weight * std::exp(ph - emax) * f * f;
        }
    }
    obs.l2G.ln = acc > 0.0 ? 0.5 * (emax + std::log(acc))
                           : -std::numeric_limits<double>::infinity();

    // H1(Omega) of the physical final value e^{lam(T + x.w)} v
    double emax2 = -1e300;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.in_domain(j, i))
                emax2 = std::max(emax2, g.T + om.x * g.x(i) + om.y * g.y(j));
    emax2 *= 2.0 * lam;
    double acc2 = 0.0;
    const Field2D& v = obs.final_value;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double w = g.area_weight(j, i);
            if (w == 0.0) continue;
            auto val = [&](int jj, int ii) {
                if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny || !g.in_domain(jj, ii))
                    return 0.0;
                return v.at(jj, ii);
            };
            double vx = (i > 0 && i < g.nx - 1)
                            ? (val(j, i + 1) - val(j, i - 1)) / (2.0 * g.dx)
                            : ((i == 0 ? val(j, 1) - val(j, 0) : val(j, i) - val(j, i - 1)) / g.dx);
            double vy = (j > 0 && j < g.ny - 1)
                            ? (val(j + 1, i) - val(j - 1, i)) / (2.0 * g.dy)
                            : ((j == 0 ? val(1, i) - val(0, i) : val(j, i) - val(j - 1, i)) / g.dy);
            // physical gradient of e^{lam phi} v = e^{lam phi}(lam w v + grad v)
            double gx = lam * om.x * v.at(j, i) + vx;
            double gy = lam * om.y * v.at(j, i) + vy;
            double ph = 2.0 * lam * (g.T + om.x * g.x(i) + om.y * g.y(j));
            acc2 += w * std::exp(ph - emax2) * (v.at(j, i) * v.at(j, i) + gx * gx + gy * gy);
        }
    obs.h1.ln = acc2 > 0.0 ? 0.5 * (emax2 + std::log(acc2))
                           : -std::numeric_limits<double>::infinity();
    (void)faces;
}

BoundaryObservation observation_from(const WaveField& field, const FacePartition& faces) {
    const auto base = field.grid;  // already the stepping grid here
    WaveField sub = field;
    BoundaryObservation obs;
    obs.grid = base;
    obs.tag = field.conjugation;
    TraceSet ts = traces(field);
    const auto& g = *base;
    const int nb = static_cast<int>(g.boundary_cells.size());
    obs.g_mask.assign(nb, 0);
    for (int b = 0; b < nb; ++b)
        obs.g_mask[b] = faces.in_G(g.boundary_cells[b].normal) ? 1 : 0;
    obs.flux_on_G.assign(static_cast<size_t>(g.nt + 1) * nb, 0.0);
    for (int k = 0; k <= g.nt; ++k)
        for (int b = 0; b < nb; ++b)
            if (obs.g_mask[b]) obs.flux_on_G[static_cast<size_t>(k) * nb + b] = ts.nd(k, b);
    obs.final_value = ts.final_value;
    observation_norms(obs, g, faces);
    return obs;
}

}  // namespace

BoundaryObservation apply_Bq(const Potential& q, const ProbeInput& input,
                             const FacePartition& faces,
                             std::shared_ptr<const SpaceTimeGrid> grid) {
    IbvpProblem prob;
    prob.grid = grid;
    prob.q = q.is_zero() ? nullptr : &q;
    prob.g = input.g;
    prob.v1 = input.v1.get();
    prob.drift = input.tag;
    WaveField u = solve_ibvp(prob);
    WaveField base = u.subsampled(grid);
    return observation_from(base, faces);
}

BoundaryObservation apply_diff(const Potential& q1, const Potential& q2,
                               const ProbeInput& input, const FacePartition& faces,
                               std::shared_ptr<const SpaceTimeGrid> grid) {
    IbvpProblem p2;
    p2.grid = grid;
    p2.q = q2.is_zero() ? nullptr : &q2;
    p2.g = input.g;
    p2.v1 = input.v1.get();
    p2.drift = input.tag;
    WaveField u2 = solve_ibvp(p2);
    const auto sg = u2.grid;
    const auto& rg = *sg;

    // (q2 - q1) u2 on the stepping grid
    Field3D dq(rg.nt + 1, rg.ny, rg.nx);
    for (int k = 0; k <= rg.nt; ++k) {
        double t = rg.t(k);
        for (int j = 0; j < rg.ny; ++j)
            for (int i = 0; i < rg.nx; ++i)
                if (rg.in_domain(j, i))
                    dq.at(k, j, i) =
                        (q2.eval(t, rg.x(i), rg.y(j)) - q1.eval(t, rg.x(i), rg.y(j))) *
                        u2.u.at(k, j, i);
    }

    IbvpProblem pd;
    pd.grid = sg;
    pd.q = q1.is_zero() ? nullptr : &q1;
    pd.drift = input.tag;
    pd.f = [&](double t, Field2D& out) {
        int k = std::clamp(static_cast<int>(std::lround(t / rg.dt)), 0, rg.nt);
        std::copy(dq.level(k), dq.level(k) + out.size(), out.v.begin());
    };
    WaveField du = solve_ibvp(pd);
    WaveField base = du.subsampled(grid);
    return observation_from(base, faces);
}

namespace {

double smoothstep01(double u) {
    u = std::clamp(u, 0.0, 1.0);
    return u * u * (3.0 - 2.0 * u);
}

// smooth window to F in the boundary arclength variable
std::shared_ptr<std::vector<double>> f_cutoff(const SpaceTimeGrid& g,
                                              const FacePartition& faces, double taper) {
    const auto& cells = g.boundary_cells;
    auto cut = std::make_shared<std::vector<double>>(cells.size(), 0.0);
    const double P = g.perimeter();
    for (size_t a = 0; a < cells.size(); ++a) {
        if (!faces.in_F(cells[a].normal)) continue;
        double d = 1e300;
        for (size_t b = 0; b < cells.size(); ++b) {
            if (faces.in_F(cells[b].normal)) continue;
            double ds = std::abs(cells[a].arc_s - cells[b].arc_s);
            ds = std::min(ds, P - ds);
            d = std::min(d, ds);
        }
        (*cut)[a] = (d > 1e200) ? 1.0 : smoothstep01(d / taper);
    }
    return cut;
}

}  // namespace

ProbeInput make_random_input(const SpaceTimeGrid& grid, const FacePartition& faces,
                             std::uint64_t seed, int index) {
    Rng rng = Rng(seed).fork(static_cast<std::uint64_t>(index) + 101);
    const int n_modes = 8;
    auto coeffs = std::make_shared<std::vector<double>>();
    for (int k = 0; k < n_modes; ++k)
        for (int m = 1; m <= n_modes; ++m)
            coeffs->push_back(rng.normal() / (1.0 + k + m));
    auto cut = f_cutoff(grid, faces, 0.3);
    const double T = grid.T;
    const double P = grid.perimeter();
    const SpaceTimeGrid* gp = &grid;

    ProbeInput in;
    in.id = "rand_" + std::to_string(index);
    in.family = "random";
    in.g = [coeffs, cut, T, P, gp, n_modes](double t, const BoundaryCell& c) {
        int bi = gp->bcell_index[gp->idx(c.j, c.i)];
        double w = (*cut)[bi];
        if (w == 0.0) return 0.0;
        double s = c.arc_s;
        double acc = 0.0;
        int idx = 0;
        for (int k = 0; k < n_modes; ++k) {
            double sk = (k % 2 == 0) ? std::sin(2.0 * M_PI * (k / 2 + 1) * s / P)
                                     : std::cos(2.0 * M_PI * (k / 2 + 1) * s / P);
            for (int m = 1; m <= n_modes; ++m, ++idx)
                acc += (*coeffs)[idx] * std::sin(m * M_PI * t / T) * sk;
        }
        return acc * w;
    };

    auto v1 = std::make_shared<Field2D>(grid.ny, grid.nx);
    for (int k = 1; k <= 4; ++k)
        for (int m = 1; m <= 4; ++m) {
            double a = rng.normal() / (k + m);
            for (int j = 0; j < grid.ny; ++j)
                for (int i = 0; i < grid.nx; ++i) {
                    if (!grid.in_domain(j, i)) continue;
                    double xs = (grid.x(i) - grid.domain_x0_) / ((grid.nx - 1) * grid.dx);
                    double ys = (grid.y(j) - grid.domain_y0_) / ((grid.ny - 1) * grid.dy);
                    v1->at(j, i) += a * std::sin(k * M_PI * xs) * std::sin(m * M_PI * ys);
                }
        }
    in.v1 = v1;
    return in;
}

ProbeInput make_go_input(const SpaceTimeGrid& grid, const FacePartition& faces, double lambda,
                         double omega_angle, Vec2 anchor, double delta) {
    Vec2 omega = unit_from_angle(omega_angle);
    auto chi = std::make_shared<MollifierChi>(delta, anchor, omega);
    double eps = faces.epsilon;

    ProbeInput in;
    in.id = "go_l" + std::to_string(lambda) + "_a" + std::to_string(omega_angle);
    in.family = "go";
    in.lambda = lambda;
    in.omega_angle = omega_angle;
    in.anchor = anchor;
    in.tag = DriftTag{lambda, omega};
    in.g = [chi, omega, eps](double t, const BoundaryCell& c) {
        double psi = boundary_cutoff_psi(c.normal.dot(omega), eps);
        return (1.0 - psi) * chi->value(t, c.pos.x, c.pos.y);
    };
    auto v1 = std::make_shared<Field2D>(grid.ny, grid.nx);
    for (int j = 0; j < grid.ny; ++j)
        for (int i = 0; i < grid.nx; ++i)
            if (grid.in_domain(j, i)) v1->at(j, i) = chi->d_t(0.0, grid.x(i), grid.y(j));
    in.v1 = v1;
    return in;
}

DiffNormEstimate diff_norm_estimate(const Potential& q1, const Potential& q2,
                                    const FacePartition& faces,
                                    std::shared_ptr<const SpaceTimeGrid> grid, int n_random,
                                    const GoSweepSpec& go_sweep, std::uint64_t seed,
                                    bool with_galerkin) {
    if (n_random < 8) fail(Errc::config_invalid, "n_random must be at least 8");
    const SpaceTimeGrid& g = *grid;

    std::vector<ProbeInput> inputs;
    for (int i = 0; i < n_random; ++i) inputs.push_back(make_random_input(g, faces, seed, i));
    for (double lam : go_sweep.lambdas)
        for (double ang : go_sweep.omega_angles)
            for (Vec2 y : go_sweep.anchors)
                inputs.push_back(make_go_input(g, faces, lam, ang, y, go_sweep.delta));

    DiffNormEstimate est;
    est.seed = seed;
    est.n_random = n_random;

    std::vector<WaveField> free_fields;  // kept for the Galerkin cross-check
    std::vector<BoundaryObservation> rand_obs;
    bool any_valid = false;
    for (auto& in : inputs) {
        DiffNormRow row;
        row.id = in.id;
        row.family = in.family;
        row.lambda = in.lambda;
        row.omega_angle = in.omega_angle;
        row.anchor = in.anchor;

        LogVal hf = hf_norm(grid, faces, in.g, in.v1.get(), in.tag);
        // input data scale, for the degenerate-probe guard
        double data_sq = 0.0;
        for (int k = 0; k <= g.nt; ++k)
            for (const auto& c : g.boundary_cells) {
                double v = in.g ? in.g(g.t(k), c) : 0.0;
                data_sq += g.dt * c.weight * v * v;
            }
        if (in.v1)
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    data_sq += g.area_weight(j, i) * in.v1->at(j, i) * in.v1->at(j, i);
        double data_norm = std::sqrt(data_sq);
        if (hf.is_zero() || (!in.tag && hf.linear() < 1e-8 * data_norm)) {
            row.excluded = true;
            est.per_probe.push_back(row);
            ++est.excluded;
            continue;
        }
        BoundaryObservation obs = apply_diff(q1, q2, in, faces, grid);
        row.input_norm = hf.ln;
        row.output_l2G = obs.l2G.ln;
        row.output_h1 = obs.h1.ln;
        LogVal out = log_hypot(obs.l2G, obs.h1);
        row.ratio = log_ratio(out, hf);
        est.per_probe.push_back(row);
        est.gamma = std::max(est.gamma, row.ratio);
        any_valid = true;

        if (with_galerkin && in.family == "random") {
            IbvpProblem fp;
            fp.grid = grid;
            fp.g = in.g;
            fp.v1 = in.v1.get();
            free_fields.push_back(solve_ibvp(fp));
            rand_obs.push_back(obs);
        }
    }
    if (!any_valid) fail(Errc::degenerate_probes, "every probe input had zero free-field norm");

    if (with_galerkin && !free_fields.empty()) {
        // largest generalized singular value over the random-input span
        const int n = static_cast<int>(free_fields.size());
        const std::vector<BoundaryObservation>& outs = rand_obs;
        Eigen::MatrixXd Gin(n, n), Gout(n, n);
        const int nb = static_cast<int>(g.boundary_cells.size());
        for (int a = 0; a < n; ++a)
            for (int b = a; b < n; ++b) {
                Gin(a, b) = Gin(b, a) = l2_inner_Q(free_fields[a].u, free_fields[b].u, g);
                double o = 0.0;
                for (int k = 0; k <= g.nt; ++k) {
                    double tw = (k == 0 || k == g.nt) ? 0.5 : 1.0;
                    for (int c = 0; c < nb; ++c)
                        o += tw * g.dt * g.boundary_cells[c].weight *
                             outs[a].flux_on_G[static_cast<size_t>(k) * nb + c] *
                             outs[b].flux_on_G[static_cast<size_t>(k) * nb + c];
                }
                // H1 pairing of final values
                for (int j = 0; j < g.ny; ++j)
                    for (int i = 0; i < g.nx; ++i) {
                        double w = g.area_weight(j, i);
                        if (w == 0.0) continue;
                        o += w * outs[a].final_value.at(j, i) * outs[b].final_value.at(j, i);
                        auto grad = [&](const Field2D& f, double& fx, double& fy) {
                            auto val = [&](int jj, int ii) {
                                if (ii < 0 || ii >= g.nx || jj < 0 || jj >= g.ny ||
                                    !g.in_domain(jj, ii))
                                    return 0.0;
                                return f.at(jj, ii);
                            };
                            fx = (i > 0 && i < g.nx - 1)
                                     ? (val(j, i + 1) - val(j, i - 1)) / (2 * g.dx)
                                     : 0.0;
                            fy = (j > 0 && j < g.ny - 1)
                                     ? (val(j + 1, i) - val(j - 1, i)) / (2 * g.dy)
                                     : 0.0;
                        };
                        double ax, ay, bx, by;
                        grad(outs[a].final_value, ax, ay);
                        grad(outs[b].final_value, bx, by);
                        o += w * (ax * bx + ay * by);
                    }
                Gout(a, b) = Gout(b, a) = o;
            }
        Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(Gout, Gin);
        if (es.info() == Eigen::Success)
            est.gamma_galerkin = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    }
    return est;
}

}  // namespace wp
