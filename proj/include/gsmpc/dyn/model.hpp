#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gsmpc/dyn/graph.hpp"
#include "gsmpc/sim/sim.hpp"

namespace gsmpc::dyn {

/// h_i' = act(W_self h_i + W_neigh mean_{j in N(i)} h_j + b); the mean over an
/// empty neighborhood is the zero vector.
struct SageLayer {
    MatX w_self;   // out x in
    MatX w_neigh;  // out x in
    VecX bias;     // out
    bool relu = true;

    int in_dim() const { return static_cast<int>(w_self.cols()); }
    int out_dim() const { return static_cast<int>(w_self.rows()); }
};

struct SageLayerGrad {
    MatX w_self, w_neigh;
    VecX bias;
};

/// Encoder (2 layers), recursive message-passing module (2 layers applied
/// gamma times), and a linear decoder emitting (delta_g, delta_r_raw) per node.
struct DynamicsModel {
    int hidden = 256;
    int gamma = 2;  // recursive message-passing steps
    SageLayer enc1, enc2, msg1, msg2, dec;

    std::array<SageLayer*, 5> layers() { return {&enc1, &enc2, &msg1, &msg2, &dec}; }
    std::array<const SageLayer*, 5> layers() const { return {&enc1, &enc2, &msg1, &msg2, &dec}; }

    std::size_t parameter_count() const;

    /// Weights uniform in +-1/sqrt(fan_in), decoder zero-initialized so the
    /// model starts as the identity dynamics.
    static DynamicsModel create(int hidden, int gamma, std::uint64_t seed);
};

struct ModelGrad {
    std::array<SageLayerGrad, 5> layers;

    static ModelGrad zeros_like(const DynamicsModel& model);
    void accumulate(const ModelGrad& other);
    void scale(double factor);
};

/// Per-node output of the dynamics model.
struct Deltas {
    std::vector<Vec3> delta_g;
    std::vector<Vec4> delta_r;  // unit quaternions
};

struct LayerCache {
    MatX input;    // n x in
    MatX mean;     // n x in, neighbor means of the input
    MatX pre_act;  // n x out
};

struct ForwardCache {
    const SceneGraph* graph = nullptr;
    MatX x0;  // n x (feature + action)
    std::vector<LayerCache> layer_caches;
    std::vector<int> layer_ids;  // index into model.layers() per application
    MatX dec_out;                // n x 7
};

/// v_bar = enc(features ++ action); q^{0} = v_bar;
/// q^{g+1} = msg(q^{g}); (delta_g, delta_r) = dec(q^{gamma}).
Deltas forward(const DynamicsModel& model, const SceneGraph& graph, const sim::Action& action,
               ForwardCache* cache = nullptr);

struct ForwardGrads {
    ModelGrad weights;
    MatX d_features;            // n x 14
    Eigen::Vector4d d_action;
};

/// Backprop dL/d(deltas) through decoder, message passing, and encoder.
ForwardGrads forward_backward(const DynamicsModel& model, const ForwardCache& cache,
                              const std::vector<Vec3>& d_delta_g,
                              const std::vector<Vec4>& d_delta_r);

/// Checkpoint: magic "GSDYN1", little-endian u32 dims, then f32 weights in
/// declaration order.
void save_checkpoint(const DynamicsModel& model, const std::string& path);
DynamicsModel load_checkpoint(const std::string& path);

} // namespace gsmpc::dyn
