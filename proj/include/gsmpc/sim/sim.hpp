#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gsmpc/scene_init/scene_init.hpp"
#include "gsmpc/splat/types.hpp"

namespace gsmpc::sim {

using scene_init::RGBDObservation;
using splat::CameraView;

/// Planar granular medium: disks of equal radius at fixed height inside an
/// axis-aligned workspace.
struct ParticleState {
    std::vector<Vec3> positions;  // z fixed to the particle half-height
    double radius = 0.005;
    Box3 workspace;
};

/// Push primitive: planar segment from start to end, executed by a line
/// pusher oriented perpendicular to the motion.
struct Action {
    Vec2 start = Vec2::Zero();
    Vec2 end = Vec2::Zero();

    double length() const { return (end - start).norm(); }
};

enum class TaskKind { Collecting, Splitting, Redistributing };

struct DiskRegion {
    Vec2 center;
    double radius;
};

/// Cell grid for Redistributing: per-cell target particle counts.
struct DensityGrid {
    Vec2 origin = Vec2::Zero();  // lower-left corner
    double cell = 0.05;
    int nx = 0, ny = 0;
    std::vector<int> target_counts;  // row-major, y * nx + x

    int count_at(int x, int y) const { return target_counts[static_cast<std::size_t>(y) * nx + x]; }
};

struct TaskSpec {
    TaskKind kind = TaskKind::Collecting;
    std::vector<DiskRegion> regions;  // Collecting: 1+, Splitting: 2+
    DensityGrid grid;                 // Redistributing only
    double tolerance = 0.0;           // meters for disks, count fraction for the grid
};

struct StepParams {
    double pusher_len = 0.10;
    int substeps = 20;
    int resolve_iters = 10;
    double min_push = 0.02;
    double max_push = 0.20;
};

constexpr double kContactTolerance = 1e-5;

void validate_action(const Action& action, const Box3& workspace, const StepParams& params);

/// Sweep the pusher from start to end in substeps, displacing intersected
/// particles along the push direction and resolving particle overlaps by
/// iterative pairwise projection. Deterministic.
ParticleState step(const ParticleState& state, const Action& action, const StepParams& params);

/// n cameras on a circle, all looking at `lookat`.
std::vector<CameraView> make_rig(int n_cameras, double circle_radius, double elevation_deg,
                                 const Vec3& lookat, int width, int height, double fov_deg);

struct ObserveParams {
    Vec3 particle_color = Vec3(0.82, 0.58, 0.25);
    Vec3 background_color = Vec3(0.16, 0.17, 0.20);
    double table_z = 0.0;
};

/// Flat-shaded disks with exact analytic depth; the table plane renders as a
/// flat background color at its true depth.
std::vector<RGBDObservation> observe(const ParticleState& state,
                                     const std::vector<CameraView>& rig,
                                     const ObserveParams& params = {});

struct OracleParams {
    double approach_offset = 0.03;   // how far behind the particle the push starts
    double max_advance = 0.12;       // how far past the particle the push may reach
    double noise_pos = 0.004;        // start jitter, meters
    double noise_angle = 0.08;       // direction jitter, radians
};

/// Greedy demonstrator: push the particle farthest from its nearest target
/// region toward that region, with small seeded noise. Throws AlreadySolved
/// when the task's success criterion already holds.
Action oracle_policy(const ParticleState& state, const TaskSpec& task, std::mt19937_64& rng,
                     const StepParams& step_params, const OracleParams& params = {});

/// True iff every particle satisfies the task's region/grid criterion.
bool success(const ParticleState& state, const TaskSpec& task);

/// Symmetric Chamfer distance over particle positions: squared Euclidean
/// nearest-neighbor terms averaged per set and summed over both directions.
double state_error(const ParticleState& state, const ParticleState& target);

/// Uniform scatter with non-overlap rejection, seeded.
ParticleState scatter_particles(int n, double radius, const Box3& workspace, std::uint64_t seed,
                                double margin = 0.02);

/// Particles packed in concentric rings inside a disk region.
ParticleState pack_particles_in_disk(int n, double radius, const Box3& workspace,
                                     const DiskRegion& region);

} // namespace gsmpc::sim
