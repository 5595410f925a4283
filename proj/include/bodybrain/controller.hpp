#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "bodybrain/morphology.hpp"

namespace bodybrain::controller {

inline constexpr double kStateLimit = 10.0;

class DimensionMismatch : public std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// One uncoupled two-neuron oscillator per active hinge. Weights are laid out
/// per joint as (w_xy, w_yx, w_out): w_xy feeds x into y, w_yx feeds y into x.
class CpgNetwork {
public:
    CpgNetwork(std::size_t n_joints, std::vector<double> weights);

    std::size_t joints() const { return x_.size(); }
    std::span<const double> weights() const { return weights_; }
    std::span<const double> x() const { return x_; }
    std::span<const double> y() const { return y_; }

    /// Current joint outputs tanh(w_out * x), each in [-1, 1].
    std::span<const double> outputs() const { return out_; }

    /// One explicit Euler step; y is updated from the pre-step x.
    std::span<const double> step(double dt);

private:
    void refresh_outputs();

    std::vector<double> weights_;
    std::vector<double> x_;
    std::vector<double> y_;
    std::vector<double> out_;
};

CpgNetwork init_network(const morphology::BodyPlan& body, std::vector<double> weights);

} // namespace bodybrain::controller
