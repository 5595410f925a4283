#include "bodybrain/controller.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace bodybrain::controller {

CpgNetwork::CpgNetwork(std::size_t n_joints, std::vector<double> weights)
    : weights_(std::move(weights)) {
    if (weights_.size() != 3 * n_joints)
        throw DimensionMismatch(
            fmt::format("CPG network for {} joints needs {} weights, got {}", n_joints, 3 * n_joints, weights_.size()));
    const double s = std::sqrt(2.0) / 2.0;
    x_.assign(n_joints, s);
    y_.assign(n_joints, s);
    out_.assign(n_joints, 0.0);
    refresh_outputs();
}

void CpgNetwork::refresh_outputs() {
    for (std::size_t i = 0; i < x_.size(); ++i)
        out_[i] = std::tanh(weights_[3 * i + 2] * x_[i]);
}

std::span<const double> CpgNetwork::step(double dt) {
    if (!(dt > 0.0))
        throw std::invalid_argument("CpgNetwork::step: dt must be positive");
    for (std::size_t i = 0; i < x_.size(); ++i) {
        const double w_xy = weights_[3 * i];
        const double w_yx = weights_[3 * i + 1];
        const double x = x_[i];
        const double y = y_[i];
        x_[i] = std::clamp(x + dt * w_yx * y, -kStateLimit, kStateLimit);
        y_[i] = std::clamp(y + dt * w_xy * x, -kStateLimit, kStateLimit);
    }
    refresh_outputs();
    return out_;
}

CpgNetwork init_network(const morphology::BodyPlan& body, std::vector<double> weights) {
    return CpgNetwork(static_cast<std::size_t>(body.n_joints), std::move(weights));
}

} // namespace bodybrain::controller
