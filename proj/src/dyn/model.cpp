#include "gsmpc/dyn/model.hpp"

#include <cstring>
#include <fstream>
#include <random>

namespace gsmpc::dyn {

namespace {

constexpr char kMagic[6] = {'G', 'S', 'D', 'Y', 'N', '1'};
constexpr int kDecoderOut = 7;  // delta_g(3) + delta_r(4)

SageLayer make_layer(int in, int out, bool relu, std::mt19937_64& rng) {
    SageLayer layer;
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    layer.w_self.resize(out, in);
    layer.w_neigh.resize(out, in);
    layer.bias.resize(out);
    for (Eigen::Index r = 0; r < out; ++r) {
        for (Eigen::Index c = 0; c < in; ++c) {
            layer.w_self(r, c) = dist(rng);
            layer.w_neigh(r, c) = dist(rng);
        }
        layer.bias[r] = dist(rng);
    }
    layer.relu = relu;
    return layer;
}

MatX neighbor_mean(const MatX& x, const SceneGraph& graph) {
    MatX mean = MatX::Zero(x.rows(), x.cols());
    for (int i = 0; i < graph.node_count(); ++i) {
        const auto& nbrs = graph.neighbors[i];
        if (nbrs.empty())
            continue;
        for (int j : nbrs)
            mean.row(i) += x.row(j);
        mean.row(i) /= static_cast<double>(nbrs.size());
    }
    return mean;
}

MatX apply_layer(const SageLayer& layer, const MatX& x, const SceneGraph& graph,
                 LayerCache* cache) {
    MatX mean = neighbor_mean(x, graph);
    MatX pre = x * layer.w_self.transpose() + mean * layer.w_neigh.transpose();
    pre.rowwise() += layer.bias.transpose();
    if (cache) {
        cache->input = x;
        cache->mean = std::move(mean);
        cache->pre_act = pre;
    }
    if (layer.relu)
        return pre.cwiseMax(0.0);
    return pre;
}

/// Returns dL/d(input) and fills the layer gradient.
MatX layer_backward(const SageLayer& layer, const LayerCache& cache, const SceneGraph& graph,
                    const MatX& d_out, SageLayerGrad& grad) {
    MatX delta = d_out;
    if (layer.relu)
        delta = delta.cwiseProduct((cache.pre_act.array() > 0.0).cast<double>().matrix());

    grad.w_self += delta.transpose() * cache.input;
    grad.w_neigh += delta.transpose() * cache.mean;
    grad.bias += delta.colwise().sum().transpose();

    MatX d_input = delta * layer.w_self;
    const MatX d_mean = delta * layer.w_neigh;
    for (int i = 0; i < graph.node_count(); ++i) {
        const auto& nbrs = graph.neighbors[i];
        if (nbrs.empty())
            continue;
        const double inv = 1.0 / static_cast<double>(nbrs.size());
        for (int j : nbrs)
            d_input.row(j) += inv * d_mean.row(i);
    }
    return d_input;
}

} // namespace

std::size_t DynamicsModel::parameter_count() const {
    std::size_t n = 0;
    for (const SageLayer* l : layers())
        n += 2 * static_cast<std::size_t>(l->w_self.size()) + l->bias.size();
    return n;
}

DynamicsModel DynamicsModel::create(int hidden, int gamma, std::uint64_t seed) {
    if (hidden < 1 || gamma < 0)
        throw InvalidArgument("dynamics model needs hidden >= 1 and gamma >= 0");
    std::mt19937_64 rng(seed);
    DynamicsModel model;
    model.hidden = hidden;
    model.gamma = gamma;
    const int in = kNodeFeatureDim + kActionDim;
    model.enc1 = make_layer(in, hidden, true, rng);
    model.enc2 = make_layer(hidden, hidden, true, rng);
    model.msg1 = make_layer(hidden, hidden, true, rng);
    model.msg2 = make_layer(hidden, hidden, true, rng);
    model.dec = make_layer(hidden, kDecoderOut, false, rng);
    model.dec.w_self.setZero();
    model.dec.w_neigh.setZero();
    model.dec.bias.setZero();
    return model;
}

ModelGrad ModelGrad::zeros_like(const DynamicsModel& model) {
    ModelGrad grad;
    const auto layers = model.layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
        grad.layers[k].w_self = MatX::Zero(layers[k]->w_self.rows(), layers[k]->w_self.cols());
        grad.layers[k].w_neigh = MatX::Zero(layers[k]->w_neigh.rows(), layers[k]->w_neigh.cols());
        grad.layers[k].bias = VecX::Zero(layers[k]->bias.size());
    }
    return grad;
}

void ModelGrad::accumulate(const ModelGrad& other) {
    for (std::size_t k = 0; k < layers.size(); ++k) {
        layers[k].w_self += other.layers[k].w_self;
        layers[k].w_neigh += other.layers[k].w_neigh;
        layers[k].bias += other.layers[k].bias;
    }
}

void ModelGrad::scale(double factor) {
    for (auto& l : layers) {
        l.w_self *= factor;
        l.w_neigh *= factor;
        l.bias *= factor;
    }
}

Deltas forward(const DynamicsModel& model, const SceneGraph& graph, const sim::Action& action,
               ForwardCache* cache) {
    const int n = graph.node_count();
    if (n == 0)
        throw EmptyScene("forward on an empty graph");
    if (graph.features.cols() != kNodeFeatureDim)
        throw ShapeMismatch("graph features must have 14 columns");

    MatX x0(n, kNodeFeatureDim + kActionDim);
    x0.leftCols(kNodeFeatureDim) = graph.features;
    Eigen::RowVector4d u(action.start.x(), action.start.y(), action.end.x(), action.end.y());
    x0.rightCols(kActionDim) = u.replicate(n, 1);

    if (cache) {
        cache->graph = &graph;
        cache->x0 = x0;
        cache->layer_caches.clear();
        cache->layer_ids.clear();
    }

    const auto run_layer = [&](const SageLayer& layer, int layer_id, const MatX& x) {
        LayerCache local;
        MatX out = apply_layer(layer, x, graph, cache ? &local : nullptr);
        if (cache) {
            cache->layer_caches.push_back(std::move(local));
            cache->layer_ids.push_back(layer_id);
        }
        return out;
    };

    MatX h = run_layer(model.enc1, 0, x0);
    h = run_layer(model.enc2, 1, h);
    for (int g = 0; g < model.gamma; ++g) {
        h = run_layer(model.msg1, 2, h);
        h = run_layer(model.msg2, 3, h);
    }
    MatX out = run_layer(model.dec, 4, h);
    if (cache)
        cache->dec_out = out;

    Deltas deltas;
    deltas.delta_g.resize(n);
    deltas.delta_r.resize(n);
    for (int i = 0; i < n; ++i) {
        deltas.delta_g[i] = out.row(i).segment<3>(0).transpose();
        Vec4 raw = out.row(i).segment<4>(3).transpose();
        raw[0] += 1.0;  // zero network output decodes to the identity rotation
        deltas.delta_r[i] = quat::normalized(raw);
    }
    return deltas;
}

ForwardGrads forward_backward(const DynamicsModel& model, const ForwardCache& cache,
                              const std::vector<Vec3>& d_delta_g,
                              const std::vector<Vec4>& d_delta_r) {
    const SceneGraph& graph = *cache.graph;
    const int n = graph.node_count();
    if (static_cast<int>(d_delta_g.size()) != n || static_cast<int>(d_delta_r.size()) != n)
        throw ShapeMismatch("delta gradients do not match node count");

    ForwardGrads grads;
    grads.weights = ModelGrad::zeros_like(model);

    MatX d_out(n, kDecoderOut);
    for (int i = 0; i < n; ++i) {
        d_out.row(i).segment<3>(0) = d_delta_g[i].transpose();
        Vec4 raw = cache.dec_out.row(i).segment<4>(3).transpose();
        raw[0] += 1.0;
        d_out.row(i).segment<4>(3) = quat::normalize_backward(raw, d_delta_r[i]).transpose();
    }

    MatX d_h = std::move(d_out);
    const auto layers = model.layers();
    for (std::size_t k = cache.layer_ids.size(); k-- > 0;) {
        const int id = cache.layer_ids[k];
        d_h = layer_backward(*layers[id], cache.layer_caches[k], graph, d_h,
                             grads.weights.layers[id]);
    }

    grads.d_features = d_h.leftCols(kNodeFeatureDim);
    grads.d_action = d_h.rightCols(kActionDim).colwise().sum().transpose();
    return grads;
}

namespace {

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_matrix(std::ofstream& out, const MatX& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            const float f = static_cast<float>(m(r, c));
            out.write(reinterpret_cast<const char*>(&f), sizeof(f));
        }
}

void read_matrix(std::ifstream& in, MatX& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            float f = 0.0f;
            in.read(reinterpret_cast<char*>(&f), sizeof(f));
            m(r, c) = f;
        }
}

} // namespace

void save_checkpoint(const DynamicsModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out.write(kMagic, sizeof(kMagic));
    write_u32(out, static_cast<std::uint32_t>(model.hidden));
    write_u32(out, static_cast<std::uint32_t>(model.gamma));
    for (const SageLayer* layer : model.layers()) {
        write_u32(out, static_cast<std::uint32_t>(layer->out_dim()));
        write_u32(out, static_cast<std::uint32_t>(layer->in_dim()));
        write_matrix(out, layer->w_self);
        write_matrix(out, layer->w_neigh);
        MatX bias = layer->bias;
        write_matrix(out, bias);
    }
    if (!out)
        throw IoError("checkpoint write failed for " + path);
}

DynamicsModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path);
    char magic[6];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw ParseError(path + ": not a dynamics checkpoint");

    DynamicsModel model;
    model.hidden = static_cast<int>(read_u32(in));
    model.gamma = static_cast<int>(read_u32(in));
    for (SageLayer* layer : model.layers()) {
        const int out = static_cast<int>(read_u32(in));
        const int in_dim = static_cast<int>(read_u32(in));
        layer->w_self.resize(out, in_dim);
        layer->w_neigh.resize(out, in_dim);
        layer->bias.resize(out);
        read_matrix(in, layer->w_self);
        read_matrix(in, layer->w_neigh);
        MatX bias(out, 1);
        read_matrix(in, bias);
        layer->bias = bias;
        layer->relu = layer != &model.dec;
        if (!in)
            throw ParseError(path + ": truncated checkpoint");
    }
    return model;
}

} // namespace gsmpc::dyn
