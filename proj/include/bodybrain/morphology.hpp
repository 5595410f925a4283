#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "bodybrain/lsystem.hpp"

namespace bodybrain::morphology {

inline constexpr std::size_t kMaxModules = 15;

enum class ModuleKind { Core, Brick, ActiveHinge };
enum class Face { Front, Left, Right };

std::string_view to_string(ModuleKind kind);
std::string_view to_string(Face face);

struct Cell {
    int x = 0;
    int y = 0;

    friend bool operator==(const Cell&, const Cell&) = default;
};

/// Grid heading, counter-clockwise quarter turns from +y (the core's front).
/// 0 = +y, 1 = -x, 2 = -y, 3 = +x.
struct Heading {
    int quarter_turns = 0;

    Cell step() const;
    Heading turned(Face face) const;

    friend bool operator==(const Heading&, const Heading&) = default;
};

struct Module {
    ModuleKind kind = ModuleKind::Core;
    Cell grid_pos;
    Heading heading;  // points away from the parent
    std::optional<int> parent;
    std::optional<Face> attachment_face;
    std::optional<int> joint_index;
    int source_index = -1;  // position of the producing symbol in the decoded word
    std::vector<int> children;
};

struct BoundingBox {
    int width = 1;   // extent along x, perpendicular to the core heading
    int length = 1;  // extent along y
};

/// Tree of modules on the planar grid; modules are stored parents-first with
/// the core at index 0.
struct BodyPlan {
    std::vector<Module> modules;
    int n_joints = 0;
    BoundingBox bounding_box;

    std::size_t size() const { return modules.size(); }
    /// Module index driven by joint `j`.
    std::vector<int> joint_modules() const;
};

struct DecodeResult {
    BodyPlan body;
    // the word asked for further modules but none besides the core could be placed
    bool degenerate = false;
};

DecodeResult decode(std::span<const lsystem::RobotSymbol> symbols, std::size_t max_modules = kMaxModules);

struct DescriptorVector {
    int absolute_size = 1;
    int width = 1;
    double proportion = 1.0;
    int n_bricks = 0;
    double rel_limbs = 0.0;
    int n_active_hinges = 0;
};

/// Largest number of one-face-attached modules a body of `modules` modules can have.
int max_limbs(int modules);

DescriptorVector descriptors(const BodyPlan& body);

/// One module per line: id kind x y parent face. Parent is -1 and face "-" for the core.
void write_body(std::ostream& out, const BodyPlan& body);
std::string to_text(const BodyPlan& body);

} // namespace bodybrain::morphology
