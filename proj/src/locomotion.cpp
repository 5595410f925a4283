#include "bodybrain/locomotion.hpp"

#include <stdexcept>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "bodybrain/controller.hpp"

namespace bodybrain::locomotion {

using morphology::BodyPlan;
using morphology::ModuleKind;

std::size_t SimConfig::steps() const {
    return static_cast<std::size_t>(std::llround(eval_time / dt));
}

void SimConfig::validate() const {
    if (!(eval_time > 0.0) || !(dt > 0.0))
        throw std::invalid_argument("SimConfig: eval_time and dt must be positive");
    const double n = eval_time / dt;
    if (std::abs(n - std::round(n)) > 1e-9 * n)
        throw std::invalid_argument(fmt::format("SimConfig: eval_time/dt = {} is not integral", n));
    if (!(module_edge > 0.0))
        throw std::invalid_argument("SimConfig: module_edge must be positive");
    if (!(lateral_drag > 0.0))
        throw std::invalid_argument("SimConfig: lateral_drag must be positive");
}

Vec2 centroid(std::span<const Vec2> points) {
    Vec2 c;
    for (const auto& p : points)
        c += p;
    const double n = static_cast<double>(points.size());
    return {c.x / n, c.y / n};
}

namespace {

struct Rigid {
    double c = 1.0;
    double s = 0.0;
    double angle = 0.0;
    Vec2 t;

    Vec2 apply(Vec2 v) const { return {c * v.x - s * v.y + t.x, s * v.x + c * v.y + t.y}; }
};

double rest_heading(const morphology::Module& m) {
    return std::numbers::pi / 2.0 + m.heading.quarter_turns * (std::numbers::pi / 2.0);
}

void frames_into(const BodyPlan& body, std::span<const double> joint_angles, double edge,
                 std::vector<Rigid>& subtree, std::vector<ModuleFrame>& out) {
    const std::size_t n = body.modules.size();
    subtree.resize(n);  // transform applied to the children of module i
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& m = body.modules[i];
        const Rigid own = m.parent ? subtree[static_cast<std::size_t>(*m.parent)] : Rigid{};
        const Vec2 rest{edge * m.grid_pos.x, edge * m.grid_pos.y};
        out[i].position = own.apply(rest);
        out[i].heading = rest_heading(m) + own.angle;
        if (m.kind == ModuleKind::ActiveHinge) {
            const double a = joint_angles[static_cast<std::size_t>(*m.joint_index)];
            Rigid r;
            r.angle = own.angle + a;
            r.c = std::cos(r.angle);
            r.s = std::sin(r.angle);
            // own o rotation by a about the hinge center
            const Vec2 spun = rotate(rest, a);
            const Vec2 offset = rest - spun;
            r.t = Vec2{own.c * offset.x - own.s * offset.y, own.s * offset.x + own.c * offset.y} + own.t;
            subtree[i] = r;
        } else {
            subtree[i] = own;
        }
    }
}

void check_angles(const BodyPlan& body, std::span<const double> joint_angles) {
    if (joint_angles.size() != static_cast<std::size_t>(body.n_joints))
        throw std::invalid_argument(fmt::format("forward_kinematics: {} angles for {} joints", joint_angles.size(),
                                                body.n_joints));
}

} // namespace

std::vector<ModuleFrame> module_frames(const BodyPlan& body, std::span<const double> joint_angles,
                                       double module_edge) {
    check_angles(body, joint_angles);
    std::vector<Rigid> scratch;
    std::vector<ModuleFrame> out;
    frames_into(body, joint_angles, module_edge, scratch, out);
    return out;
}

std::vector<Vec2> forward_kinematics(const BodyPlan& body, std::span<const double> joint_angles,
                                     double module_edge) {
    const auto frames = module_frames(body, joint_angles, module_edge);
    std::vector<Vec2> out;
    out.reserve(frames.size());
    for (const auto& f : frames)
        out.push_back(f.position);
    return out;
}

FitResult crawl_step(std::span<const Vec2> prev_world, std::span<const Vec2> new_body) {
    if (prev_world.size() != new_body.size() || prev_world.empty())
        throw std::invalid_argument("crawl_step: point sets must be non-empty and of equal size");
    const Vec2 pc = centroid(prev_world);
    const Vec2 qc = centroid(new_body);
    double s_cross = 0.0, s_dot = 0.0, spread_p = 0.0, spread_q = 0.0;
    for (std::size_t k = 0; k < new_body.size(); ++k) {
        const Vec2 p = prev_world[k] - pc;
        const Vec2 q = new_body[k] - qc;
        s_cross += cross(q, p);
        s_dot += dot(q, p);
        spread_p += dot(p, p);
        spread_q += dot(q, q);
    }
    FitResult fit;
    fit.degenerate = spread_p == 0.0 || spread_q == 0.0;
    fit.transform.rotation = fit.degenerate ? 0.0 : std::atan2(s_cross, s_dot);
    fit.transform.translation = pc - rotate(qc, fit.transform.rotation);
    return fit;
}

FitResult drag_fit(std::span<const Vec2> prev_world, std::span<const double> prev_headings,
                   std::span<const Vec2> new_body, double lateral_drag) {
    FitResult fit = crawl_step(prev_world, new_body);
    if (fit.degenerate || lateral_drag == 1.0)
        return fit;
    if (prev_headings.size() != new_body.size())
        throw std::invalid_argument("drag_fit: one heading per module required");

    // Gauss-Newton on (rotation, tx, ty); the drag tensors are fixed by the
    // previous headings so the problem is smooth in the rotation only.
    const double rho = lateral_drag;
    double phi = fit.transform.rotation;
    Vec2 t = fit.transform.translation;
    for (int iter = 0; iter < 2; ++iter) {
        Eigen::Matrix3d h = Eigen::Matrix3d::Zero();
        Eigen::Vector3d g = Eigen::Vector3d::Zero();
        const double c = std::cos(phi), s = std::sin(phi);
        for (std::size_t k = 0; k < new_body.size(); ++k) {
            const Vec2 rq{c * new_body[k].x - s * new_body[k].y, s * new_body[k].x + c * new_body[k].y};
            const Vec2 d_rq{-rq.y, rq.x};
            const Vec2 r = rq + t - prev_world[k];
            const double tx = std::cos(prev_headings[k]), ty = std::sin(prev_headings[k]);
            const double mxx = tx * tx + rho * ty * ty;
            const double myy = ty * ty + rho * tx * tx;
            const double mxy = (1.0 - rho) * tx * ty;
            const Vec2 m_drq{mxx * d_rq.x + mxy * d_rq.y, mxy * d_rq.x + myy * d_rq.y};
            const Vec2 m_r{mxx * r.x + mxy * r.y, mxy * r.x + myy * r.y};
            h(0, 0) += dot(d_rq, m_drq);
            h(0, 1) += m_drq.x;
            h(0, 2) += m_drq.y;
            h(1, 1) += mxx;
            h(1, 2) += mxy;
            h(2, 2) += myy;
            g(0) += dot(d_rq, m_r);
            g(1) += m_r.x;
            g(2) += m_r.y;
        }
        h(1, 0) = h(0, 1);
        h(2, 0) = h(0, 2);
        h(2, 1) = h(1, 2);
        const Eigen::Vector3d delta = h.ldlt().solve(-g);
        phi += delta(0);
        t += Vec2{delta(1), delta(2)};
    }
    fit.transform.rotation = phi;
    fit.transform.translation = t;
    return fit;
}

double fit_residual(const Transform2& transform, std::span<const Vec2> prev_world, std::span<const Vec2> new_body) {
    double sum = 0.0;
    for (std::size_t k = 0; k < new_body.size(); ++k) {
        const Vec2 d = transform.apply(new_body[k]) - prev_world[k];
        sum += dot(d, d);
    }
    return sum;
}

Trajectory simulate(const BodyPlan& body, std::span<const double> weights, const SimConfig& cfg,
                    const Pose2& initial) {
    cfg.validate();
    controller::CpgNetwork net(static_cast<std::size_t>(body.n_joints), {weights.begin(), weights.end()});
    const std::size_t n = body.modules.size();
    const std::size_t steps = cfg.steps();

    std::vector<double> angles(static_cast<std::size_t>(body.n_joints));
    std::vector<Rigid> scratch;
    std::vector<ModuleFrame> frames;
    std::vector<Vec2> shape(n), world(n);
    std::vector<double> headings(n);

    auto set_angles = [&](std::span<const double> outputs) {
        for (std::size_t j = 0; j < angles.size(); ++j)
            angles[j] = cfg.joint_amplitude * outputs[j];
    };

    Trajectory traj;
    traj.poses.reserve(steps + 1);
    traj.com.reserve(steps + 1);

    set_angles(net.outputs());
    frames_into(body, angles, cfg.module_edge, scratch, frames);
    const Transform2 start{initial.theta, {initial.x, initial.y}};
    for (std::size_t k = 0; k < n; ++k) {
        world[k] = start.apply(frames[k].position);
        headings[k] = frames[k].heading + initial.theta;
    }
    traj.poses.push_back(initial);
    traj.com.push_back(centroid(world));

    for (std::size_t step = 0; step < steps; ++step) {
        set_angles(net.step(cfg.dt));
        frames_into(body, angles, cfg.module_edge, scratch, frames);
        for (std::size_t k = 0; k < n; ++k)
            shape[k] = frames[k].position;
        const auto fit = drag_fit(world, headings, shape, cfg.lateral_drag);
        for (std::size_t k = 0; k < n; ++k) {
            world[k] = fit.transform.apply(shape[k]);
            headings[k] = frames[k].heading + fit.transform.rotation;
        }
        traj.poses.push_back({fit.transform.translation.x, fit.transform.translation.y, fit.transform.rotation});
        traj.com.push_back(centroid(world));
    }
    traj.com_start = traj.com.front();
    traj.com_end = traj.com.back();
    return traj;
}

double evaluate(const BodyPlan& body, std::span<const double> weights, const SimConfig& cfg) {
    if (weights.size() != 3 * static_cast<std::size_t>(body.n_joints))
        throw controller::DimensionMismatch(
            fmt::format("evaluate: {} weights for {} joints", weights.size(), body.n_joints));
    if (body.n_joints == 0)
        return 0.0;
    const auto traj = simulate(body, weights, cfg);
    return 100.0 * norm(traj.com_end - traj.com_start) / cfg.eval_time;
}

void write_trajectory(std::ostream& out, const Trajectory& trajectory, double dt) {
    out << "t com_x com_y theta\n";
    for (std::size_t i = 0; i < trajectory.poses.size(); ++i)
        out << fmt::format("{:.6f} {:.9f} {:.9f} {:.9f}\n", static_cast<double>(i) * dt, trajectory.com[i].x,
                           trajectory.com[i].y, trajectory.poses[i].theta);
}

} // namespace bodybrain::locomotion
