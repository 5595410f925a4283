#include "bodybrain/morphology.hpp"

#include <algorithm>
#include <sstream>

namespace bodybrain::morphology {

using lsystem::RobotSymbol;

std::string_view to_string(ModuleKind kind) {
    switch (kind) {
    case ModuleKind::Core: return "core";
    case ModuleKind::Brick: return "brick";
    case ModuleKind::ActiveHinge: return "hinge";
    }
    return "?";
}

std::string_view to_string(Face face) {
    switch (face) {
    case Face::Front: return "front";
    case Face::Left: return "left";
    case Face::Right: return "right";
    }
    return "?";
}

Cell Heading::step() const {
    switch (((quarter_turns % 4) + 4) % 4) {
    case 0: return {0, 1};
    case 1: return {-1, 0};
    case 2: return {0, -1};
    default: return {1, 0};
    }
}

Heading Heading::turned(Face face) const {
    switch (face) {
    case Face::Left: return {(quarter_turns + 1) % 4};
    case Face::Right: return {(quarter_turns + 3) % 4};
    default: return *this;
    }
}

std::vector<int> BodyPlan::joint_modules() const {
    std::vector<int> out(static_cast<std::size_t>(n_joints), -1);
    for (std::size_t i = 0; i < modules.size(); ++i)
        if (modules[i].joint_index)
            out[static_cast<std::size_t>(*modules[i].joint_index)] = static_cast<int>(i);
    return out;
}

namespace {

bool occupied(const BodyPlan& body, Cell c) {
    return std::any_of(body.modules.begin(), body.modules.end(),
                       [&](const Module& m) { return m.grid_pos == c; });
}

BoundingBox bounds(const BodyPlan& body) {
    int min_x = 0, max_x = 0, min_y = 0, max_y = 0;
    for (const auto& m : body.modules) {
        min_x = std::min(min_x, m.grid_pos.x);
        max_x = std::max(max_x, m.grid_pos.x);
        min_y = std::min(min_y, m.grid_pos.y);
        max_y = std::max(max_y, m.grid_pos.y);
    }
    return {max_x - min_x + 1, max_y - min_y + 1};
}

} // namespace

DecodeResult decode(std::span<const RobotSymbol> symbols, std::size_t max_modules) {
    DecodeResult result;
    BodyPlan& body = result.body;
    body.modules.push_back(Module{});

    std::size_t i = 0;
    if (!symbols.empty() && symbols.front() == RobotSymbol::Core) {
        body.modules.front().source_index = 0;
        i = 1;
    }

    int cursor = 0;
    Face pending = Face::Front;
    bool requested = false;

    for (; i < symbols.size(); ++i) {
        switch (symbols[i]) {
        case RobotSymbol::MountFront: pending = Face::Front; break;
        case RobotSymbol::MountLeft: pending = Face::Left; break;
        case RobotSymbol::MountRight: pending = Face::Right; break;
        case RobotSymbol::Back: {
            const auto& m = body.modules[static_cast<std::size_t>(cursor)];
            if (m.parent)
                cursor = *m.parent;
            pending = Face::Front;
            break;
        }
        case RobotSymbol::Core:
            // a second core can never be placed
            requested = true;
            break;
        case RobotSymbol::Brick:
        case RobotSymbol::Hinge: {
            requested = true;
            const auto& from = body.modules[static_cast<std::size_t>(cursor)];
            const Heading heading = from.heading.turned(pending);
            const Cell d = heading.step();
            const Cell target{from.grid_pos.x + d.x, from.grid_pos.y + d.y};
            if (body.modules.size() >= max_modules || occupied(body, target))
                break;
            Module m;
            m.kind = symbols[i] == RobotSymbol::Brick ? ModuleKind::Brick : ModuleKind::ActiveHinge;
            m.grid_pos = target;
            m.heading = heading;
            m.parent = cursor;
            m.attachment_face = pending;
            m.source_index = static_cast<int>(i);
            if (m.kind == ModuleKind::ActiveHinge)
                m.joint_index = body.n_joints++;
            const int id = static_cast<int>(body.modules.size());
            body.modules[static_cast<std::size_t>(cursor)].children.push_back(id);
            body.modules.push_back(std::move(m));
            cursor = id;
            pending = Face::Front;
            break;
        }
        }
    }

    body.bounding_box = bounds(body);
    result.degenerate = requested && body.modules.size() == 1;
    return result;
}

int max_limbs(int modules) {
    if (modules >= 6)
        return 2 * ((modules - 6) / 3) + (modules - 6) % 3 + 4;
    return modules - 1;
}

DescriptorVector descriptors(const BodyPlan& body) {
    DescriptorVector d;
    const int m = static_cast<int>(body.modules.size());
    d.absolute_size = m;
    d.width = body.bounding_box.width;
    const int shortest = std::min(body.bounding_box.width, body.bounding_box.length);
    const int longest = std::max(body.bounding_box.width, body.bounding_box.length);
    d.proportion = static_cast<double>(shortest) / static_cast<double>(longest);

    int limbs = 0;
    for (const auto& mod : body.modules) {
        if (mod.kind == ModuleKind::Brick)
            ++d.n_bricks;
        else if (mod.kind == ModuleKind::ActiveHinge)
            ++d.n_active_hinges;
        if (mod.kind != ModuleKind::Core && mod.children.empty())
            ++limbs;
    }
    const int limit = max_limbs(m);
    d.rel_limbs = limit > 0 ? static_cast<double>(limbs) / static_cast<double>(limit) : 0.0;
    return d;
}

void write_body(std::ostream& out, const BodyPlan& body) {
    for (std::size_t i = 0; i < body.modules.size(); ++i) {
        const auto& m = body.modules[i];
        out << i << ' ' << to_string(m.kind) << ' ' << m.grid_pos.x << ' ' << m.grid_pos.y << ' '
            << (m.parent ? *m.parent : -1) << ' '
            << (m.attachment_face ? to_string(*m.attachment_face) : std::string_view{"-"}) << '\n';
    }
}

std::string to_text(const BodyPlan& body) {
    std::ostringstream out;
    write_body(out, body);
    return out.str();
}

} // namespace bodybrain::morphology
