#pragma once

#include <functional>
#include <memory>
#include <optional>

#include "wp/field.hpp"
#include "wp/geometry.hpp"
#include "wp/potential.hpp"

namespace wp {

struct DriftTag {
    double s = 0.0;
    Vec2 omega;
};

using BoundaryFn = std::function<double(double t, const BoundaryCell& c)>;
using SourceFn = std::function<void(double t, Field2D& out)>;

struct IbvpProblem {
    std::shared_ptr<const SpaceTimeGrid> grid;
    const Potential* q = nullptr;  // null = free equation
    BoundaryFn g;                  // null = homogeneous Dirichlet
    const Field2D* v0 = nullptr;
    const Field2D* v1 = nullptr;
    SourceFn f;                    // null = no source
    std::optional<DriftTag> drift;
    // potential already tabulated on the stepping grid; overrides q and
    // suppresses automatic refinement (the caller owns the grid choice)
    const Field3D* q_tab = nullptr;
};

struct SolveOptions {
    double stiffness_limit = 0.5;  // require |s| * dt <= this
    int max_refine = 3;            // dt halvings before giving up
    double dt_target = 0.0;        // 0 = automatic
    double blowup_limit = 1e12;
};

struct WaveField {
    std::shared_ptr<const SpaceTimeGrid> grid;  // the grid actually stepped on
    Field3D u;
    std::optional<DriftTag> conjugation;
    int refine_factor = 1;

    // drop back to the base time resolution (levels are nested)
    WaveField subsampled(std::shared_ptr<const SpaceTimeGrid> base) const;
};

WaveField solve_ibvp(const IbvpProblem& prob, const SolveOptions& opt = {});

struct TraceSet {
    std::shared_ptr<const SpaceTimeGrid> grid;
    std::vector<double> normal_deriv;  // (nt+1) x nb
    Field2D final_value;
    Field2D final_velocity;
    Field2D initial_velocity;

    double nd(int k, int b) const {
        return normal_deriv[static_cast<size_t>(k) * grid->boundary_cells.size() + b];
    }
};

TraceSet traces(const WaveField& field);

// bilinear sample of one stored level, zero outside the covered nodes
double sample_level(const Field3D& u, const SpaceTimeGrid& g, int k, double x, double y);

// discrete free energy 0.5|du/dt|^2 + 0.5|grad u|^2 at interior levels 1..nt-1
std::vector<double> discrete_energy(const WaveField& field);

struct EnergyEstimateReport {
    double lhs = 0.0;      // C1-L2 + C0-H1 + flux norms of the difference field
    double rhs = 0.0;      // |q1-q2|_inf * |u2|_L2(Q)
    double ratio = 0.0;    // empirical constant
};

EnergyEstimateReport energy_estimate_check(const Potential& q1, const Potential& q2,
                                           const WaveField& u2);

// |P0(g, v1)|_L2(Q): the free evolution norm of an admissible input. Tagged
// inputs are solved in amplitude space and the phase weight is reinserted in
// the quadrature, log-scaled.
LogVal hf_norm(std::shared_ptr<const SpaceTimeGrid> grid, const FacePartition& faces,
               const BoundaryFn& g, const Field2D* v1, std::optional<DriftTag> tag = {});

// slice norms used in several reports
double l2_omega(const Field2D& f, const SpaceTimeGrid& g);
double h1_omega(const Field2D& f, const SpaceTimeGrid& g);

}  // namespace wp
