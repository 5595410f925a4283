#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <ostream>
#include <span>
#include <vector>

#include "bodybrain/morphology.hpp"

namespace bodybrain::locomotion {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(Vec2 o) { x -= o.x; y -= o.y; return *this; }
    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 v) { return std::hypot(v.x, v.y); }
inline Vec2 rotate(Vec2 v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

Vec2 centroid(std::span<const Vec2> points);

/// Planar rigid transform x -> R(rotation) x + translation.
struct Transform2 {
    double rotation = 0.0;
    Vec2 translation;

    Vec2 apply(Vec2 v) const { return rotate(v, rotation) + translation; }
};

struct Pose2 {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

struct SimConfig {
    double eval_time = 30.0;
    double dt = 1.0 / 240.0;
    double module_edge = 0.05;
    double joint_amplitude = std::numbers::pi / 3.0;
    /// Ratio of sideways to lengthwise ground drag of a module. 1 is isotropic,
    /// under which the module centroid can never move.
    double lateral_drag = 1.05;

    std::size_t steps() const;
    void validate() const;
};

/// Position and heading (radians, counter-clockwise from +x) of a module.
struct ModuleFrame {
    Vec2 position;
    double heading = 0.0;
};

/// Body-frame module frames. Every active hinge rotates its whole subtree
/// about its own cell center, composed from the core outward.
std::vector<ModuleFrame> module_frames(const morphology::BodyPlan& body, std::span<const double> joint_angles,
                                       double module_edge);

std::vector<Vec2> forward_kinematics(const morphology::BodyPlan& body, std::span<const double> joint_angles,
                                     double module_edge);

struct FitResult {
    Transform2 transform;
    bool degenerate = false;  // all points coincide: identity rotation, centroid translation
};

/// Least-squares rigid fit taking the new body-frame shape onto the previous
/// world positions (2D Procrustes).
FitResult crawl_step(std::span<const Vec2> prev_world, std::span<const Vec2> new_body);

/// Drag-weighted variant of crawl_step: the slip of module k is penalised
/// with weight 1 along its previous world heading and `lateral_drag` across it.
FitResult drag_fit(std::span<const Vec2> prev_world, std::span<const double> prev_headings,
                   std::span<const Vec2> new_body, double lateral_drag);

/// Sum of squared distances between transform(new_body) and prev_world.
double fit_residual(const Transform2& transform, std::span<const Vec2> prev_world, std::span<const Vec2> new_body);

struct Trajectory {
    std::vector<Pose2> poses;  // body frame in the world, one per step plus the start
    std::vector<Vec2> com;
    Vec2 com_start;
    Vec2 com_end;
};

Trajectory simulate(const morphology::BodyPlan& body, std::span<const double> weights, const SimConfig& cfg,
                    const Pose2& initial = {});

/// Center-of-mass speed in cm/s over the evaluation period. Bodies without
/// joints score 0.
double evaluate(const morphology::BodyPlan& body, std::span<const double> weights, const SimConfig& cfg);

/// Rows of `t com_x com_y theta`.
void write_trajectory(std::ostream& out, const Trajectory& trajectory, double dt);

} // namespace bodybrain::locomotion
