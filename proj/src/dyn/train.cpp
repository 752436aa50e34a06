#include "gsmpc/dyn/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <random>

namespace gsmpc::dyn {

namespace {

template <typename LayerRange, typename Fn>
void visit_layer_blocks(LayerRange&& layers, Fn&& fn) {
    for (auto* layer : layers) {
        fn(layer->w_self);
        fn(layer->w_neigh);
        fn(layer->bias);
    }
}

} // namespace

VecX flatten_parameters(const DynamicsModel& model) {
    VecX flat(model.parameter_count());
    Eigen::Index offset = 0;
    visit_layer_blocks(model.layers(), [&](const auto& block) {
        flat.segment(offset, block.size()) = Eigen::Map<const VecX>(block.data(), block.size());
        offset += block.size();
    });
    return flat;
}

void unflatten_parameters(const VecX& params, DynamicsModel& model) {
    if (params.size() != static_cast<Eigen::Index>(model.parameter_count()))
        throw ShapeMismatch("parameter vector does not match model size");
    Eigen::Index offset = 0;
    visit_layer_blocks(model.layers(), [&](auto& block) {
        Eigen::Map<VecX>(block.data(), block.size()) = params.segment(offset, block.size());
        offset += block.size();
    });
}

VecX flatten_gradient(const ModelGrad& grad) {
    Eigen::Index total = 0;
    for (const auto& l : grad.layers)
        total += l.w_self.size() + l.w_neigh.size() + l.bias.size();
    VecX flat(total);
    Eigen::Index offset = 0;
    for (const auto& l : grad.layers) {
        for (const MatX* block : {&l.w_self, &l.w_neigh}) {
            flat.segment(offset, block->size()) =
                Eigen::Map<const VecX>(block->data(), block->size());
            offset += block->size();
        }
        flat.segment(offset, l.bias.size()) = l.bias;
        offset += l.bias.size();
    }
    return flat;
}

double transition_loss(const DynamicsModel& model, const Transition& transition,
                       const TrainConfig& config, ModelGrad* grad_out) {
    const SceneGraph graph = build_graph(transition.before, config.omega);
    ForwardCache cache;
    const Deltas deltas = forward(model, graph, transition.action, grad_out ? &cache : nullptr);
    const SplatScene pred = apply(transition.before, deltas);
    const double loss = chamfer_loss(pred, transition.after, config.lambda, config.match);
    if (grad_out) {
        const splat::SceneGrad d_pred =
            chamfer_loss_backward(pred, transition.after, config.lambda, config.match);
        const ApplyGrads apply_grads = apply_backward(transition.before, deltas, d_pred);
        const ForwardGrads fwd_grads =
            forward_backward(model, cache, apply_grads.d_delta_g, apply_grads.d_delta_r);
        grad_out->accumulate(fwd_grads.weights);
    }
    return loss;
}

TrainResult train(DynamicsModel& model, const std::vector<Transition>& dataset,
                  const TrainConfig& config) {
    if (dataset.empty())
        throw EmptyDataset("train needs a non-empty dataset");

    TrainResult result;
    VecX params = flatten_parameters(model);
    VecX m = VecX::Zero(params.size());
    VecX v = VecX::Zero(params.size());
    long step_count = 0;

    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);

    const int batch = std::max(1, config.batch);
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        if (config.shuffle)
            std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        std::size_t cursor = 0;
        while (cursor < order.size()) {
            ModelGrad grad = ModelGrad::zeros_like(model);
            int in_batch = 0;
            for (; in_batch < batch && cursor < order.size(); ++in_batch, ++cursor)
                epoch_loss += transition_loss(model, dataset[order[cursor]], config, &grad);
            grad.scale(1.0 / in_batch);

            ++step_count;
            const VecX g = flatten_gradient(grad);
            const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(step_count));
            const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(step_count));
            for (Eigen::Index k = 0; k < params.size(); ++k) {
                m[k] = config.beta1 * m[k] + (1.0 - config.beta1) * g[k];
                v[k] = config.beta2 * v[k] + (1.0 - config.beta2) * g[k] * g[k];
                params[k] -= config.lr * (m[k] / bc1) / (std::sqrt(v[k] / bc2) + config.adam_eps);
            }
            unflatten_parameters(params, model);
        }
        result.loss_curve.push_back(epoch_loss / dataset.size());
    }
    return result;
}

void save_loss_curve(const std::vector<double>& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << "epoch,mean_loss\n";
    for (std::size_t i = 0; i < curve.size(); ++i)
        out << i + 1 << "," << std::setprecision(17) << curve[i] << "\n";
}

} // namespace gsmpc::dyn
