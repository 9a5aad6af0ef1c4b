#include "wp/runner.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "wp/boundary_operator.hpp"
#include "wp/carleman.hpp"
#include "wp/csv.hpp"
#include "wp/gridio.hpp"
#include "wp/recon.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace wp {

namespace {

constexpr const char* kVersion = "0.1.0";

struct Stage {
    std::string name;
    std::string out_dir;
    std::vector<std::string> files;

    std::string path(const std::string& rel) {
        files.push_back(rel);
        return (fs::path(out_dir) / rel).string();
    }
};

json load_manifest(const std::string& dir) {
    std::ifstream is(fs::path(dir) / "manifest.json");
    if (!is) return json::object();
    try {
        json j;
        is >> j;
        return j;
    } catch (const json::parse_error&) {
        return json::object();
    }
}

bool stage_is_current(const json& man, const std::string& stage, const std::string& digest,
                      const std::string& dir) {
    if (man.value("config_digest", "") != digest) return false;
    if (!man.contains("stages") || !man["stages"].contains(stage)) return false;
    for (const auto& f : man["stages"][stage]["files"]) {
        fs::path p = fs::path(dir) / f.value("path", "");
        if (!fs::exists(p)) return false;
        if (sha256_file(p.string()) != f.value("sha256", "")) return false;
    }
    return true;
}

void record_stage(json& man, const Stage& st, double seconds, const std::string& digest,
                  const std::string& env_override) {
    if (man.value("config_digest", "") != digest) {
        man = json::object();
        man["config_digest"] = digest;
    }
    man["artifact_version"] = kVersion;
    if (!env_override.empty()) man["out_root_env_override"] = env_override;
    json files = json::array();
    for (const auto& rel : st.files) {
        fs::path p = fs::path(st.out_dir) / rel;
        files.push_back({{"path", rel},
                         {"sha256", sha256_file(p.string())},
                         {"bytes", fs::file_size(p)}});
    }
    man["stages"][st.name] = {{"seconds", seconds}, {"files", files}};
    std::ofstream os(fs::path(st.out_dir) / "manifest.json");
    os << man.dump(2) << "\n";
}

struct Workbench {
    ExperimentConfig ec;
    Domain domain;
    std::shared_ptr<SpaceTimeGrid> grid;
    FacePartition faces;
    Potential q1, q2, pert;

    explicit Workbench(const ExperimentConfig& e) : ec(e) {
        domain = build_domain(e.domain);
        grid = build_grid(domain, e.nx, e.T, e.cfl);
        faces = boundary_faces(domain, *grid, unit_from_angle(e.omega0_angle), e.epsilon,
                               e.face_r);
        q1 = sample_potential(parse_expr(e.q1_expr), grid, e.p_exponent);
        q2 = sample_potential(parse_expr(e.q2_expr), grid, e.p_exponent);
        pert = sample_potential(parse_expr(e.perturbation_expr), grid, e.p_exponent);
    }

    double probe_delta(double lambda) const {
        if (ec.delta_rule == "coupled") return coupled_delta(lambda, q1.alpha());
        return ec.delta;
    }
};

json field_meta(const Workbench& wb, json extra = {}) {
    json m = {{"dx", wb.grid->dx},
              {"dy", wb.grid->dy},
              {"dt", wb.grid->dt},
              {"T", wb.grid->T},
              {"bbox", {wb.grid->domain_x0_, wb.grid->domain_y0_}}};
    if (!extra.empty()) m.update(extra);
    return m;
}

void stage_simulate(Workbench& wb, Stage& st) {
    const auto& g = *wb.grid;
    Field2D v1(g.ny, g.nx);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (g.in_domain(j, i)) {
                double xs = (g.x(i) - g.domain_x0_) / ((g.nx - 1) * g.dx);
                double ys = (g.y(j) - g.domain_y0_) / ((g.ny - 1) * g.dy);
                v1.at(j, i) = std::sin(M_PI * xs) * std::sin(M_PI * ys);
            }
    IbvpProblem prob;
    prob.grid = wb.grid;
    prob.q = &wb.q2;
    prob.v1 = &v1;
    WaveField u = solve_ibvp(prob);
    TraceSet ts = traces(u);

    write_grid_file(st.path("field.wpg"), grid_file_from_field(u.u, field_meta(wb)));
    {
        CsvWriter csv(st.path("energy.csv"), {"t", "energy"});
        auto E = discrete_energy(u);
        for (size_t k = 0; k < E.size(); ++k)
            csv.row({format_double(g.t(static_cast<int>(k) + 1)), format_double(E[k])});
    }
    {
        CsvWriter csv(st.path("flux.csv"), {"t", "arc_s", "normal_deriv", "on_G"});
        const int nb = static_cast<int>(g.boundary_cells.size());
        for (int k = 0; k <= g.nt; k += std::max(1, g.nt / 64))
            for (int b = 0; b < nb; ++b)
                csv.row({format_double(g.t(k)), format_double(g.boundary_cells[b].arc_s),
                         format_double(ts.nd(k, b)),
                         wb.faces.in_G(g.boundary_cells[b].normal) ? "1" : "0"});
    }
    {
        NormReport nr = sobolev_norms(wb.q2);
        CsvWriter csv(st.path("potential_norms.csv"),
                      {"L2", "Linf", "H1", "Hminus1", "W1p", "Holder_alpha", "alpha"});
        csv.row({format_double(nr.L2), format_double(nr.Linf), format_double(nr.H1),
                 format_double(nr.Hminus1), format_double(nr.W1p),
                 format_double(nr.Holder_alpha), format_double(wb.q2.alpha())});
    }
}

void stage_probe(Workbench& wb, Stage& st) {
    Vec2 omega = unit_from_angle(wb.ec.probe_angle);
    double delta = wb.ec.delta_rule == "fixed" ? wb.ec.delta : wb.probe_delta(wb.ec.lambdas[0]);
    DecayReport rep =
        remainder_decay_report(wb.q2, omega, delta, wb.ec.lambdas,
                               {wb.ec.anchor_x, wb.ec.anchor_y}, wb.faces, wb.grid);
    {
        CsvWriter csv(st.path("probe_decay.csv"),
                      {"lambda", "w_l2", "w_h1", "w_residual", "w_zeroed", "z_l2", "z_h1",
                       "z_residual"});
        for (const auto& r : rep.rows)
            csv.row({format_double(r.lambda), format_double(r.w_l2), format_double(r.w_h1),
                     format_double(r.w_residual), format_double(r.w_zeroed),
                     format_double(r.z_l2), format_double(r.z_h1),
                     format_double(r.z_residual)});
    }
    {
        std::ofstream os(st.path("probe_summary.txt"));
        os << "slope_w_h1 " << format_double(rep.slope_w_h1) << "\n"
           << "slope_z_l2 " << format_double(rep.slope_z_l2) << "\n"
           << "monotone_w " << (rep.monotone_w ? 1 : 0) << "\n"
           << "monotone_z " << (rep.monotone_z ? 1 : 0) << "\n"
           << "delta " << format_double(delta) << "\n";
    }
    // factored probes at the largest lambda, for downstream tooling
    double lam = wb.ec.lambdas.back();
    auto chi = std::make_shared<MollifierChi>(delta, Vec2{wb.ec.anchor_x, wb.ec.anchor_y},
                                              omega);
    GOProbe w = build_go_decaying(wb.q2, lam, omega, chi, wb.grid);
    GOProbe z = build_go_vanishing(wb.q2, lam, omega, chi, wb.faces, wb.grid);
    json meta = {{"lambda", lam},
                 {"omega", {omega.x, omega.y}},
                 {"delta", delta},
                 {"anchor", {wb.ec.anchor_x, wb.ec.anchor_y}}};
    json mw = meta;
    mw["sign"] = -1;
    mw["residual_norm"] = w.residual_norm;
    write_grid_file(st.path("probe_w.wpg"), grid_file_from_field(w.remainder, mw));
    json mz = meta;
    mz["sign"] = 1;
    mz["residual_norm"] = z.residual_norm;
    write_grid_file(st.path("probe_z.wpg"), grid_file_from_field(z.remainder, mz));
}

std::vector<std::shared_ptr<CarlemanSolution>> manufactured_family() {
    std::vector<std::shared_ptr<CarlemanSolution>> fam;
    struct P {
        double tp, cx, cy, r, a;
    };
    std::vector<P> ps = {{2, 0.0, 0.0, 0.75, 1.0},  {2, 0.35, -0.2, 0.5, 0.7},
                         {3, -0.3, 0.25, 0.6, 1.2}, {2, -0.45, -0.4, 0.45, 0.9},
                         {3, 0.2, 0.4, 0.5, 0.6},   {2, 0.0, -0.35, 0.55, 1.5},
                         {3, 0.4, 0.1, 0.45, 1.0},  {2, -0.2, 0.0, 0.8, 0.8},
                         {3, 0.0, 0.2, 0.65, 0.5},  {2, 0.3, 0.3, 0.4, 1.1}};
    int id = 0;
    for (const auto& p : ps)
        fam.push_back(std::make_shared<PolyBumpSolution>(p.tp, Vec2{p.cx, p.cy}, p.r, p.a,
                                                         "u" + std::to_string(id++)));
    return fam;
}

void stage_carleman(Workbench& wb, Stage& st) {
    auto fam = manufactured_family();
    Vec2 omega = unit_from_angle(wb.ec.probe_angle);
    CarlemanSweep sw = carleman_sweep(fam, wb.q2, wb.ec.lambdas, omega, *wb.grid);
    CsvWriter csv(st.path("carleman.csv"),
                  {"u_id", "lambda", "final_velocity_term", "shadow_flux_term",
                   "interior_term", "pde_term", "final_value_term", "final_gradient_term",
                   "illum_flux_term", "empirical_C"});
    for (const auto& r : sw.reports)
        csv.row({r.u_id, format_double(r.lambda), format_double(r.final_velocity_term),
                 format_double(r.shadow_flux_term), format_double(r.interior_term),
                 format_double(r.pde_term), format_double(r.final_value_term),
                 format_double(r.final_gradient_term), format_double(r.illum_flux_term),
                 format_double(r.empirical_C)});
    std::ofstream os(st.path("carleman_summary.txt"));
    for (size_t m = 0; m < sw.lambdas.size(); ++m)
        os << "lambda " << format_double(sw.lambdas[m]) << " max_C "
           << format_double(sw.max_C_per_lambda[m]) << "\n";
}

void stage_identity(Workbench& wb, Stage& st) {
    Vec2 omega = unit_from_angle(wb.ec.probe_angle);
    CsvWriter csv(st.path("identity.csv"),
                  {"lambda", "delta", "lhs", "term_G", "term_sigma_rest", "term_velT",
                   "term_valT", "residual", "residual_over_lhs", "suppressed_share"});
    for (double lam : wb.ec.lambdas) {
        double delta = wb.probe_delta(lam);
        auto chi = std::make_shared<MollifierChi>(
            delta, Vec2{wb.ec.anchor_x, wb.ec.anchor_y}, omega);
        GOProbe p1 = build_go_decaying(wb.q1, lam, omega, chi, wb.grid);
        GOProbe p2 = build_go_vanishing(wb.q2, lam, omega, chi, wb.faces, wb.grid);
        IdentityBreakdown ib = greens_identity_breakdown(wb.q1, wb.q2, p1, p2, wb.faces);
        double denom = std::abs(ib.lhs) > 0 ? std::abs(ib.lhs) : 1.0;
        csv.row({format_double(lam), format_double(delta), format_double(ib.lhs),
                 format_double(ib.term_G), format_double(ib.term_sigma_rest),
                 format_double(ib.term_velT), format_double(ib.term_valT),
                 format_double(ib.residual), format_double(std::abs(ib.residual) / denom),
                 format_double((std::abs(ib.term_sigma_rest) + std::abs(ib.term_velT)) /
                               denom)});
    }
}

void stage_lightray(Workbench& wb, Stage& st) {
    const auto& g = *wb.grid;
    Vec2 omega = unit_from_angle(wb.ec.probe_angle);
    // difference potential drives the transform pipeline
    Field3D dq(g.nt + 1, g.ny, g.nx);
    for (size_t m = 0; m < dq.v.size(); ++m)
        dq.v[m] = wb.q2.values.v[m] - wb.q1.values.v[m];
    Potential qd = potential_from_field(std::move(dq), wb.grid, wb.ec.p_exponent);

    YGrid layout;
    layout.h = 0.25;
    double reach = 0.5 * g.domain.diameter + g.T + 0.5;
    layout.x0 = -reach;
    layout.y0 = -reach;
    layout.n1 = static_cast<int>(2 * reach / layout.h) + 1;
    layout.n2 = layout.n1;
    layout.v.assign(static_cast<size_t>(layout.n1) * layout.n2, 0.0);
    for (int b = 0; b < layout.n2; ++b)
        for (int a = 0; a < layout.n1; ++a)
            layout.at(a, b) = lightray_oracle(qd, omega, layout.pos(a, b), 2 * g.nt);
    {
        CsvWriter csv(st.path("rq.csv"), {"y_x", "y_y", "rq"});
        for (int b = 0; b < layout.n2; ++b)
            for (int a = 0; a < layout.n1; ++a)
                csv.row({format_double(layout.pos(a, b).x), format_double(layout.pos(a, b).y),
                         format_double(layout.at(a, b))});
    }
    ConeLattice lat = ConeLattice::for_grid(g, wb.ec.recon_R);
    int sigma = calibrate_slice_sign(qd, omega, layout, lat);
    set_slice_sign(sigma);
    std::ofstream os(st.path("lightray_summary.txt"));
    os << "sigma " << sigma << "\n";
    os << "n_anchor " << layout.n1 * layout.n2 << "\n";
}

void write_cone(const FourierCone& cone, Stage& st) {
    const ConeLattice& lat = cone.lat;
    int nT = 2 * lat.jmax + 1, nKx = 2 * lat.kxmax + 1, nKy = 2 * lat.kymax + 1;
    GridFile gf;
    gf.dims = {4, static_cast<std::uint64_t>(nT), static_cast<std::uint64_t>(nKx),
               static_cast<std::uint64_t>(nKy)};
    gf.payload.assign(static_cast<size_t>(4) * nT * nKx * nKy, 0.0);
    size_t plane = static_cast<size_t>(nT) * nKx * nKy;
    for (int m = 0; m < lat.count(); ++m) {
        gf.payload[m] = cone.values[m].real();
        gf.payload[plane + m] = cone.values[m].imag();
        gf.payload[2 * plane + m] = cone.mask[m];
        gf.payload[3 * plane + m] = cone.in_ball[m];
    }
    gf.meta = {{"dtau", lat.dtau}, {"dxi_x", lat.dxi_x}, {"dxi_y", lat.dxi_y},
               {"R_max", lat.R_max}, {"planes", {"re", "im", "mask", "in_ball"}}};
    write_grid_file(st.path("cone.wpg"), gf);
}

void stage_reconstruct(Workbench& wb, Stage& st, int workers) {
    ReconOptions opt;
    opt.lambda = wb.ec.recon_lambda;
    opt.delta = wb.ec.delta_rule == "fixed" ? wb.ec.delta : 0.0;
    opt.R = wb.ec.recon_R;
    opt.fill = wb.ec.recon_fill == "zero" ? FillMode::zero : FillMode::extrapolate;
    opt.mode = wb.ec.recon_mode == "measured" ? VMode::measured : VMode::oracle;
    opt.full_circle = wb.ec.full_circle;
    opt.alpha = wb.q1.alpha();
    (void)workers;
    ReconResult res = reconstruct(wb.q1, wb.q2, wb.faces, wb.grid, opt);
    write_grid_file(st.path("qhat.wpg"),
                    grid_file_from_field(res.qhat, field_meta(wb, {{"R", opt.R}})));
    write_cone(res.cone, st);
    std::ofstream os(st.path("recon_summary.txt"));
    os << "rel_l2_error " << format_double(res.rel_l2_error) << "\n"
       << "n_directions " << res.n_directions << "\n"
       << "n_anchor_points " << res.n_anchor_points << "\n"
       << "delta " << format_double(res.delta_used) << "\n"
       << "sigma " << res.sigma << "\n"
       << "lambda " << format_double(opt.lambda) << "\n";
}

void stage_stability(Workbench& wb, Stage& st, std::uint64_t seed) {
    StabilityConfig sc;
    sc.n_random = wb.ec.n_random;
    sc.seed = seed;
    sc.gamma_star = wb.ec.gamma_star;
    StabilityFit fit =
        stability_curve(wb.q1, wb.pert, wb.ec.scales, wb.faces, wb.grid, sc);
    CsvWriter csv(st.path("stability.csv"),
                  {"s", "gamma_hat", "l2_diff", "bound_value", "slack", "in_fit",
                   "resolution_floor"});
    for (const auto& p : fit.pairs)
        csv.row({format_double(p.scale), format_double(p.gamma_hat),
                 format_double(p.l2_diff), format_double(p.bound_value),
                 format_double(p.slack), p.in_fit ? "1" : "0",
                 p.resolution_floor ? "1" : "0"});
    std::ofstream os(st.path("stability_summary.txt"));
    os << "fitted_C " << format_double(fit.fitted_C) << "\n"
       << "gamma_star " << format_double(fit.gamma_star) << "\n"
       << "alpha " << format_double(fit.alpha) << "\n"
       << "gamma_strictly_increasing " << (fit.gamma_strictly_increasing ? 1 : 0) << "\n"
       << "seed " << sc.seed << "\n";
}

}  // namespace

bool is_known_subcommand(const std::string& name) {
    static const char* names[] = {"simulate",  "probe",     "carleman",        "identity",
                                  "lightray",  "reconstruct", "stability",
                                  "config-reference"};
    for (const char* n : names)
        if (name == n) return true;
    return false;
}

void run_subcommand(const std::string& name, const Config& cfg, const RunOverrides& ov) {
    if (!is_known_subcommand(name))
        fail(Errc::config_invalid, "unknown subcommand: " + name);

    ExperimentConfig ec = ExperimentConfig::from(cfg);
    std::string env_override;
    if (const char* env = std::getenv("WAVEPROBE_OUT")) env_override = env;
    std::string out = !ov.out_dir.empty() ? ov.out_dir
                      : !env_override.empty() ? env_override
                                              : ec.out_dir;
    fs::create_directories(out);

    Config stamped = cfg;  // digest covers effective seed/workers
    if (ov.have_seed) stamped.set("run.seed", std::to_string(ov.seed));
    if (ov.workers >= 0) stamped.set("run.workers", std::to_string(ov.workers));
    std::string digest = stamped.digest();
    std::uint64_t seed = ov.have_seed ? ov.seed : ec.seed;
    int workers = ov.workers >= 0 ? ov.workers : ec.workers;

    json man = load_manifest(out);
    if (!ov.force && stage_is_current(man, name, digest, out)) {
        std::cerr << "[waveprobe] stage '" << name << "' is current; skipping (use --force)\n";
        return;
    }

    if (name == "config-reference") {
        Stage st{name, out, {}};
        std::ofstream os(st.path("config_reference.txt"));
        os << config_reference_text();
        os.close();
        record_stage(man, st, 0.0, digest, env_override);
        return;
    }

    Workbench wb(ec);
    Stage st{name, out, {}};
    auto t0 = std::chrono::steady_clock::now();
    if (name == "simulate") stage_simulate(wb, st);
    else if (name == "probe") stage_probe(wb, st);
    else if (name == "carleman") stage_carleman(wb, st);
    else if (name == "identity") stage_identity(wb, st);
    else if (name == "lightray") stage_lightray(wb, st);
    else if (name == "reconstruct") stage_reconstruct(wb, st, workers);
    else if (name == "stability") stage_stability(wb, st, seed);
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    record_stage(man, st, secs, digest, env_override);
}

}  // namespace wp
