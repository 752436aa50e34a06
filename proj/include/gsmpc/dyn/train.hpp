#pragma once

#include <string>

#include "gsmpc/dyn/dynamics.hpp"

namespace gsmpc::dyn {

struct Transition {
    SplatScene before;
    sim::Action action;
    SplatScene after;
};

struct TrainConfig {
    double lr = 0.001;
    int epochs = 100;
    int batch = 1;         // transitions accumulated per optimizer step
    double lambda = 0.1;   // rotation weight in the Chamfer term
    double omega = kDefaultOmega;
    std::uint64_t seed = 0;
    ChamferMatch match = ChamferMatch::FullMetric;
    bool shuffle = true;
    // Adam moments
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
};

struct TrainResult {
    std::vector<double> loss_curve;  // per-epoch mean training loss
};

/// One transition's loss and its gradient w.r.t. the model weights.
double transition_loss(const DynamicsModel& model, const Transition& transition,
                       const TrainConfig& config, ModelGrad* grad_out = nullptr);

/// Adam on chamfer_loss(apply(before, forward(...)), after) over the dataset.
TrainResult train(DynamicsModel& model, const std::vector<Transition>& dataset,
                  const TrainConfig& config);

/// Model parameters as one flat vector (declaration order), and back.
VecX flatten_parameters(const DynamicsModel& model);
void unflatten_parameters(const VecX& params, DynamicsModel& model);
VecX flatten_gradient(const ModelGrad& grad);

void save_loss_curve(const std::vector<double>& curve, const std::string& path);

} // namespace gsmpc::dyn
