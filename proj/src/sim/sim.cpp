#include "gsmpc/sim/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gsmpc::sim {

namespace {

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 <= 0.0)
        return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

Vec2 clamp_to_box_xy(const Vec2& p, const Box3& box, double margin) {
    return Vec2(std::clamp(p.x(), box.min.x() + margin, box.max.x() - margin),
                std::clamp(p.y(), box.min.y() + margin, box.max.y() - margin));
}

} // namespace

void validate_action(const Action& action, const Box3& workspace, const StepParams& params) {
    const auto inside = [&](const Vec2& p) {
        return p.x() >= workspace.min.x() && p.x() <= workspace.max.x() &&
               p.y() >= workspace.min.y() && p.y() <= workspace.max.y();
    };
    if (!inside(action.start) || !inside(action.end))
        throw InvalidAction("push endpoints must lie inside the workspace");
    const double len = action.length();
    if (len < params.min_push - 1e-12 || len > params.max_push + 1e-12)
        throw InvalidAction("push length outside [min_push, max_push]");
}

ParticleState step(const ParticleState& state, const Action& action, const StepParams& params) {
    validate_action(action, state.workspace, params);

    ParticleState next = state;
    const double r = state.radius;
    const Vec2 dir = (action.end - action.start).normalized();
    const Vec2 side(-dir.y(), dir.x());  // pusher axis, perpendicular to motion
    const double half_len = 0.5 * params.pusher_len;
    const double seg_len = action.length();
    // Per-substep advance must not exceed a particle diameter or particles
    // could be skipped over; at the default radius this evaluates to the
    // configured count.
    const int substeps =
        std::max(params.substeps, static_cast<int>(std::ceil(seg_len / (2.0 * r))));

    const auto resolve_pass = [&](bool* any_overlap) {
        if (any_overlap)
            *any_overlap = false;
        for (std::size_t i = 0; i < next.positions.size(); ++i) {
            for (std::size_t j = i + 1; j < next.positions.size(); ++j) {
                Vec2 pi(next.positions[i].x(), next.positions[i].y());
                Vec2 pj(next.positions[j].x(), next.positions[j].y());
                Vec2 delta = pj - pi;
                double dist = delta.norm();
                if (dist >= 2.0 * r)
                    continue;
                if (any_overlap && dist < 2.0 * r - kContactTolerance)
                    *any_overlap = true;
                if (dist < 1e-9) {
                    // Coincident centers: separate along a fixed axis.
                    delta = Vec2(1.0, 0.0);
                } else {
                    delta /= dist;
                }
                const double push = 0.5 * (2.0 * r - dist);
                pi = clamp_to_box_xy(pi - delta * push, state.workspace, r);
                pj = clamp_to_box_xy(pj + delta * push, state.workspace, r);
                next.positions[i].x() = pi.x();
                next.positions[i].y() = pi.y();
                next.positions[j].x() = pj.x();
                next.positions[j].y() = pj.y();
            }
        }
    };

    for (int sub = 0; sub <= substeps; ++sub) {
        const Vec2 face = action.start + dir * (seg_len * sub / substeps);
        const Vec2 a = face - side * half_len;
        const Vec2 b = face + side * half_len;

        // Push out particles the face currently intersects.
        for (Vec3& pos : next.positions) {
            Vec2 p(pos.x(), pos.y());
            if (point_segment_distance(p, a, b) > r)
                continue;
            const double along = (p - face).dot(dir);
            if (along < r) {
                p = clamp_to_box_xy(p + dir * (r - along), state.workspace, r);
                pos.x() = p.x();
                pos.y() = p.y();
            }
        }

        for (int it = 0; it < params.resolve_iters; ++it)
            resolve_pass(nullptr);
    }

    // Run to convergence so the contact-tolerance invariant holds on output.
    bool overlapping = true;
    for (int extra = 0; overlapping && extra < 100; ++extra)
        resolve_pass(&overlapping);
    return next;
}

std::vector<CameraView> make_rig(int n_cameras, double circle_radius, double elevation_deg,
                                 const Vec3& lookat, int width, int height, double fov_deg) {
    std::vector<CameraView> rig;
    rig.reserve(n_cameras);
    const double elevation = elevation_deg * M_PI / 180.0;
    const double fov = fov_deg * M_PI / 180.0;
    const double focal = 0.5 * width / std::tan(0.5 * fov);

    for (int i = 0; i < n_cameras; ++i) {
        const double az = 2.0 * M_PI * i / n_cameras;
        const Vec3 eye = lookat + Vec3(circle_radius * std::cos(az) * std::cos(elevation),
                                       circle_radius * std::sin(az) * std::cos(elevation),
                                       circle_radius * std::sin(elevation));
        const Vec3 forward = (lookat - eye).normalized();
        Vec3 right = forward.cross(Vec3(0, 0, 1));
        right.normalize();
        const Vec3 down = forward.cross(right);  // image y grows downward

        CameraView view;
        view.rotation.row(0) = right;
        view.rotation.row(1) = down;
        view.rotation.row(2) = forward;
        view.translation = -view.rotation * eye;
        view.fx = view.fy = focal;
        view.cx = 0.5 * width;
        view.cy = 0.5 * height;
        view.width = width;
        view.height = height;
        rig.push_back(view);
    }
    return rig;
}

std::vector<RGBDObservation> observe(const ParticleState& state,
                                     const std::vector<CameraView>& rig,
                                     const ObserveParams& params) {
    if (rig.empty())
        throw InvalidArgument("observe needs a non-empty camera rig");

    std::vector<RGBDObservation> out;
    out.reserve(rig.size());
    const double particle_z = state.positions.empty() ? state.radius : state.positions[0].z();

    for (const CameraView& view : rig) {
        RGBDObservation obs;
        obs.view = view;
        obs.image = splat::Image(view.width, view.height, params.background_color);
        obs.image.depth = std::vector<double>(obs.image.pixel_count(), 0.0);

        const Vec3 origin = view.camera_center_world();
        const Mat3 rot_t = view.rotation.transpose();

        for (int y = 0; y < view.height; ++y) {
            for (int x = 0; x < view.width; ++x) {
                const Vec3 dir_cam((x + 0.5 - view.cx) / view.fx, (y + 0.5 - view.cy) / view.fy,
                                   1.0);
                const Vec3 dir = rot_t * dir_cam;

                const auto shade_plane = [&](double plane_z, const Vec3& color, bool* hit_particle) {
                    if (std::abs(dir.z()) < 1e-12)
                        return false;
                    const double lambda = (plane_z - origin.z()) / dir.z();
                    if (lambda <= 0.0)
                        return false;
                    const Vec3 hit = origin + lambda * dir;
                    if (hit_particle) {
                        *hit_particle = false;
                        for (const Vec3& p : state.positions) {
                            const double dx = hit.x() - p.x();
                            const double dy = hit.y() - p.y();
                            if (dx * dx + dy * dy <= state.radius * state.radius) {
                                *hit_particle = true;
                                break;
                            }
                        }
                        if (!*hit_particle)
                            return false;
                    }
                    obs.image.at(x, y) = color;
                    (*obs.image.depth)[static_cast<std::size_t>(y) * view.width + x] =
                        view.to_camera(hit).z();
                    return true;
                };

                bool hit_particle = false;
                if (!state.positions.empty() &&
                    shade_plane(particle_z, params.particle_color, &hit_particle))
                    continue;
                shade_plane(params.table_z, params.background_color, nullptr);
            }
        }
        out.push_back(std::move(obs));
    }
    return out;
}

namespace {

Vec2 nearest_region_center(const Vec2& p, const TaskSpec& task, double* dist_out) {
    Vec2 best_center = Vec2::Zero();
    double best = std::numeric_limits<double>::infinity();

    if (task.kind == TaskKind::Redistributing) {
        const DensityGrid& g = task.grid;
        for (int y = 0; y < g.ny; ++y) {
            for (int x = 0; x < g.nx; ++x) {
                if (g.count_at(x, y) <= 0)
                    continue;
                const Vec2 center = g.origin + Vec2((x + 0.5) * g.cell, (y + 0.5) * g.cell);
                const double d = (p - center).norm();
                if (d < best) {
                    best = d;
                    best_center = center;
                }
            }
        }
    } else {
        for (const DiskRegion& r : task.regions) {
            const double d = (p - r.center).norm();
            if (d < best) {
                best = d;
                best_center = r.center;
            }
        }
    }
    if (dist_out)
        *dist_out = best;
    return best_center;
}

} // namespace

Action oracle_policy(const ParticleState& state, const TaskSpec& task, std::mt19937_64& rng,
                     const StepParams& step_params, const OracleParams& params) {
    if (success(state, task))
        throw AlreadySolved("task success criterion already met");

    // The particle farthest from its nearest region drives the push.
    std::size_t worst = 0;
    double worst_dist = -1.0;
    Vec2 worst_target = Vec2::Zero();
    for (std::size_t i = 0; i < state.positions.size(); ++i) {
        const Vec2 p(state.positions[i].x(), state.positions[i].y());
        double d = 0.0;
        const Vec2 center = nearest_region_center(p, task, &d);
        if (d > worst_dist) {
            worst_dist = d;
            worst = i;
            worst_target = center;
        }
    }

    const Vec2 p(state.positions[worst].x(), state.positions[worst].y());
    Vec2 to_target = worst_target - p;
    const double dist = to_target.norm();
    if (dist < 1e-9)
        to_target = Vec2(1.0, 0.0);
    else
        to_target /= dist;

    std::normal_distribution<double> gauss(0.0, 1.0);
    const double angle = std::atan2(to_target.y(), to_target.x()) + gauss(rng) * params.noise_angle;
    const Vec2 dir(std::cos(angle), std::sin(angle));
    const Vec2 jitter(gauss(rng) * params.noise_pos, gauss(rng) * params.noise_pos);

    Vec2 start = p - dir * params.approach_offset + jitter;
    Vec2 end = p + dir * std::min(dist, params.max_advance);

    // Project into a valid action.
    const double margin = 1e-6;
    start = clamp_to_box_xy(start, state.workspace, margin);
    end = clamp_to_box_xy(end, state.workspace, margin);
    Vec2 seg = end - start;
    double len = seg.norm();
    if (len < 1e-9) {
        seg = dir;
        len = 1.0;
    }
    seg /= len;
    len = std::clamp(len, step_params.min_push, step_params.max_push);
    end = start + seg * len;
    end = clamp_to_box_xy(end, state.workspace, margin);
    if ((end - start).norm() < step_params.min_push) {
        // Clamping shortened the push below the minimum; take the axis
        // direction with the most room instead.
        const Vec2 room_max(state.workspace.max.x() - margin - start.x(),
                            state.workspace.max.y() - margin - start.y());
        const Vec2 room_min(start.x() - state.workspace.min.x() - margin,
                            start.y() - state.workspace.min.y() - margin);
        Vec2 axis(1.0, 0.0);
        double room = room_max.x();
        if (room_min.x() > room) { room = room_min.x(); axis = Vec2(-1.0, 0.0); }
        if (room_max.y() > room) { room = room_max.y(); axis = Vec2(0.0, 1.0); }
        if (room_min.y() > room) { room = room_min.y(); axis = Vec2(0.0, -1.0); }
        end = start + axis * std::min(step_params.min_push, room);
    }
    return Action{start, end};
}

bool success(const ParticleState& state, const TaskSpec& task) {
    if (task.kind == TaskKind::Redistributing) {
        const DensityGrid& g = task.grid;
        std::vector<int> counts(g.target_counts.size(), 0);
        for (const Vec3& p : state.positions) {
            const int cx = static_cast<int>(std::floor((p.x() - g.origin.x()) / g.cell));
            const int cy = static_cast<int>(std::floor((p.y() - g.origin.y()) / g.cell));
            if (cx < 0 || cy < 0 || cx >= g.nx || cy >= g.ny)
                return false;  // particle outside the pattern grid
            counts[static_cast<std::size_t>(cy) * g.nx + cx]++;
        }
        for (std::size_t i = 0; i < counts.size(); ++i) {
            const int want = g.target_counts[i];
            if (want <= 0) {
                if (counts[i] > 0)
                    return false;
                continue;
            }
            const double frac = std::abs(counts[i] - want) / static_cast<double>(want);
            if (frac > task.tolerance)
                return false;
        }
        return true;
    }

    for (const Vec3& pos : state.positions) {
        const Vec2 p(pos.x(), pos.y());
        bool inside = false;
        for (const DiskRegion& r : task.regions) {
            if ((p - r.center).norm() <= r.radius + task.tolerance) {
                inside = true;
                break;
            }
        }
        if (!inside)
            return false;
    }
    return true;
}

double state_error(const ParticleState& state, const ParticleState& target) {
    if (state.positions.empty() || target.positions.empty())
        throw EmptySet("state_error needs non-empty particle sets");
    const auto direction = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        double sum = 0.0;
        for (const Vec3& p : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& q : to)
                best = std::min(best, (p - q).squaredNorm());
            sum += best;
        }
        return sum / from.size();
    };
    return direction(state.positions, target.positions) +
           direction(target.positions, state.positions);
}

ParticleState scatter_particles(int n, double radius, const Box3& workspace, std::uint64_t seed,
                                double margin) {
    ParticleState state;
    state.radius = radius;
    state.workspace = workspace;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> ux(workspace.min.x() + margin, workspace.max.x() - margin);
    std::uniform_real_distribution<double> uy(workspace.min.y() + margin, workspace.max.y() - margin);

    int guard = 0;
    while (static_cast<int>(state.positions.size()) < n && guard < 100000) {
        ++guard;
        const Vec2 candidate(ux(rng), uy(rng));
        bool clear = true;
        for (const Vec3& p : state.positions) {
            if ((Vec2(p.x(), p.y()) - candidate).norm() < 2.0 * radius + kContactTolerance) {
                clear = false;
                break;
            }
        }
        if (clear)
            state.positions.emplace_back(candidate.x(), candidate.y(), radius);
    }
    if (static_cast<int>(state.positions.size()) < n)
        throw InvalidArgument("workspace too small for the requested particle count");
    return state;
}

ParticleState pack_particles_in_disk(int n, double radius, const Box3& workspace,
                                     const DiskRegion& region) {
    ParticleState state;
    state.radius = radius;
    state.workspace = workspace;
    const double spacing = 2.0 * radius + 2.0 * kContactTolerance;

    state.positions.emplace_back(region.center.x(), region.center.y(), radius);
    int ring = 1;
    while (static_cast<int>(state.positions.size()) < n && ring < 64) {
        const double ring_r = ring * spacing;
        const int slots = std::max(1, static_cast<int>(std::floor(2.0 * M_PI * ring_r / spacing)));
        for (int s = 0; s < slots && static_cast<int>(state.positions.size()) < n; ++s) {
            const double a = 2.0 * M_PI * s / slots;
            state.positions.emplace_back(region.center.x() + ring_r * std::cos(a),
                                         region.center.y() + ring_r * std::sin(a), radius);
        }
        ++ring;
    }
    return state;
}

} // namespace gsmpc::sim
