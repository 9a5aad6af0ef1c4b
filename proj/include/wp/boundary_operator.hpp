#pragma once

#include <optional>
#include <string>
#include <vector>

#include "wp/go_factory.hpp"
#include "wp/potential.hpp"
#include "wp/wave_solver.hpp"

namespace wp {

struct ProbeInput {
    std::string id;
    std::string family;  // "random" | "go"
    BoundaryFn g;        // amplitude when tagged; support inside F
    std::shared_ptr<const Field2D> v1;
    std::optional<DriftTag> tag;
    double lambda = 0.0, omega_angle = 0.0;
    Vec2 anchor;
};

struct BoundaryObservation {
    std::shared_ptr<const SpaceTimeGrid> grid;
    std::vector<double> flux_on_G;  // (nt+1) x nb, zeroed off G
    std::vector<std::uint8_t> g_mask;
    Field2D final_value;
    std::optional<DriftTag> tag;  // fields are amplitudes when set
    LogVal l2G;
    LogVal h1;
};

BoundaryObservation apply_Bq(const Potential& q, const ProbeInput& input,
                             const FacePartition& faces,
                             std::shared_ptr<const SpaceTimeGrid> grid);

// difference-route observation: one q2 solve, then the zero-data problem with
// source (q2-q1) u2
BoundaryObservation apply_diff(const Potential& q1, const Potential& q2,
                               const ProbeInput& input, const FacePartition& faces,
                               std::shared_ptr<const SpaceTimeGrid> grid);

struct GoSweepSpec {
    std::vector<double> lambdas{8.0, 16.0, 32.0};
    std::vector<double> omega_angles{0.0, 0.15};
    std::vector<Vec2> anchors{{-0.3, 0.0}};
    double delta = 0.35;
};

struct DiffNormRow {
    std::string id;
    std::string family;
    double lambda = 0.0, omega_angle = 0.0;
    Vec2 anchor;
    double input_norm = 0.0;   // log scale
    double output_l2G = 0.0;   // log scale
    double output_h1 = 0.0;    // log scale
    double ratio = 0.0;        // linear
    bool excluded = false;
};

struct DiffNormEstimate {
    double gamma = 0.0;
    std::optional<double> gamma_galerkin;
    std::vector<DiffNormRow> per_probe;
    std::uint64_t seed = 0;
    int n_random = 0;
    int excluded = 0;
};

ProbeInput make_random_input(const SpaceTimeGrid& grid, const FacePartition& faces,
                             std::uint64_t seed, int index);
ProbeInput make_go_input(const SpaceTimeGrid& grid, const FacePartition& faces, double lambda,
                         double omega_angle, Vec2 anchor, double delta);

DiffNormEstimate diff_norm_estimate(const Potential& q1, const Potential& q2,
                                    const FacePartition& faces,
                                    std::shared_ptr<const SpaceTimeGrid> grid, int n_random,
                                    const GoSweepSpec& go_sweep, std::uint64_t seed,
                                    bool with_galerkin = false);

}  // namespace wp
