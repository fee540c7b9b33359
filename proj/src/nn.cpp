#include "law/nn.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "law/error.hpp"
#include "law/io.hpp"
#include "law/kernels.hpp"

namespace law::nn {

using json = nlohmann::ordered_json;

const char* activation_name(Activation a) {
    switch (a) {
        case Activation::kIdentity: return "identity";
        case Activation::kRelu: return "relu";
        case Activation::kTanh: return "tanh";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::kIdentity;
    if (name == "relu") return Activation::kRelu;
    if (name == "tanh") return Activation::kTanh;
    throw ConfigError("unknown activation: " + name);
}

DenseNet::DenseNet(std::vector<int> dims, Activation hidden_act, Activation output_act)
    : dims_(std::move(dims)) {
    if (dims_.size() < 2) throw Error("network needs at least input and output dims");
    size_t offset = 0;
    for (size_t l = 1; l < dims_.size(); ++l) {
        if (dims_[l - 1] <= 0 || dims_[l] <= 0) throw Error("layer dims must be positive");
        LayerLayout layer;
        layer.in = dims_[l - 1];
        layer.out = dims_[l];
        layer.act = (l + 1 == dims_.size()) ? output_act : hidden_act;
        layer.weight_offset = offset;
        offset += static_cast<size_t>(layer.in) * layer.out;
        layer.bias_offset = offset;
        offset += static_cast<size_t>(layer.out);
        layers_.push_back(layer);
    }
    params_.assign(offset, 0.0);
}

void DenseNet::init_he_uniform(Rng& rng) {
    for (const auto& layer : layers_) {
        const double bound = std::sqrt(6.0 / layer.in);
        double* w = params_.data() + layer.weight_offset;
        for (size_t k = 0; k < static_cast<size_t>(layer.in) * layer.out; ++k) {
            w[k] = rng.uniform(-bound, bound);
        }
        double* b = params_.data() + layer.bias_offset;
        for (int o = 0; o < layer.out; ++o) b[o] = 0.0;
    }
}

void DenseNet::init_layer_uniform(int layer, Rng& rng, double bound) {
    const auto& ll = layers_.at(static_cast<size_t>(layer));
    double* w = params_.data() + ll.weight_offset;
    for (size_t k = 0; k < static_cast<size_t>(ll.in) * ll.out; ++k) w[k] = rng.uniform(-bound, bound);
    double* b = params_.data() + ll.bias_offset;
    for (int o = 0; o < ll.out; ++o) b[o] = rng.uniform(-bound, bound);
}

void DenseNet::zero_layer(int layer) {
    const auto& ll = layers_.at(static_cast<size_t>(layer));
    double* w = params_.data() + ll.weight_offset;
    for (size_t k = 0; k < static_cast<size_t>(ll.in) * ll.out; ++k) w[k] = 0.0;
    double* b = params_.data() + ll.bias_offset;
    for (int o = 0; o < ll.out; ++o) b[o] = 0.0;
}

namespace {

void apply_activation(Activation act, Matrix& m) {
    switch (act) {
        case Activation::kIdentity: break;
        case Activation::kRelu: kernels::relu_inplace(m.data.data(), m.size()); break;
        case Activation::kTanh: kernels::tanh_inplace(m.data.data(), m.size()); break;
    }
}

void apply_activation_backward(Activation act, Matrix& grad, const Matrix& act_values) {
    switch (act) {
        case Activation::kIdentity: break;
        case Activation::kRelu:
            kernels::relu_backward_inplace(grad.data.data(), act_values.data.data(), grad.size());
            break;
        case Activation::kTanh:
            kernels::tanh_backward_inplace(grad.data.data(), act_values.data.data(), grad.size());
            break;
    }
}

}  // namespace

Matrix DenseNet::forward(const Matrix& x) const {
    ForwardCache cache;
    return forward(x, cache);
}

Matrix DenseNet::forward(const Matrix& x, ForwardCache& cache) const {
    if (x.cols != input_dim()) {
        std::ostringstream msg;
        msg << "forward: input has " << x.cols << " columns, network expects " << input_dim();
        throw Error(msg.str());
    }
    if (x.rows < 1) throw Error("forward: empty batch");

    cache.acts.clear();
    cache.acts.reserve(layers_.size() + 1);
    cache.acts.push_back(x);
    for (const auto& layer : layers_) {
        const Matrix& in = cache.acts.back();
        Matrix out(in.rows, layer.out);
        kernels::dense_forward(in.data.data(), params_.data() + layer.weight_offset,
                               params_.data() + layer.bias_offset, out.data.data(), in.rows,
                               layer.in, layer.out);
        apply_activation(layer.act, out);
        cache.acts.push_back(std::move(out));
    }
    return cache.acts.back();
}

std::vector<double> DenseNet::forward_one(const std::vector<double>& x) const {
    Matrix in(1, static_cast<int>(x.size()));
    in.data = x;
    Matrix out = forward(in);
    return out.data;
}

std::vector<double> DenseNet::backward(const ForwardCache& cache, const Matrix& output_grad,
                                       Matrix* input_grad) const {
    if (cache.acts.size() != layers_.size() + 1) throw Error("backward: cache does not match network");
    if (output_grad.rows != cache.acts.back().rows || output_grad.cols != output_dim()) {
        throw Error("backward: output gradient shape mismatch");
    }

    std::vector<double> grads(params_.size(), 0.0);
    Matrix delta = output_grad;
    for (int l = static_cast<int>(layers_.size()) - 1; l >= 0; --l) {
        const auto& layer = layers_[static_cast<size_t>(l)];
        const Matrix& layer_out = cache.acts[static_cast<size_t>(l) + 1];
        const Matrix& layer_in = cache.acts[static_cast<size_t>(l)];
        apply_activation_backward(layer.act, delta, layer_out);

        kernels::dense_grad_weights(delta.data.data(), layer_in.data.data(),
                                    grads.data() + layer.weight_offset, delta.rows, layer.in,
                                    layer.out);
        kernels::dense_grad_bias(delta.data.data(), grads.data() + layer.bias_offset, delta.rows,
                                 layer.out);

        const bool need_input = l > 0 || input_grad != nullptr;
        if (!need_input) break;
        Matrix prev(delta.rows, layer.in);
        kernels::dense_grad_input(delta.data.data(), params_.data() + layer.weight_offset,
                                  prev.data.data(), delta.rows, layer.in, layer.out);
        delta = std::move(prev);
    }
    if (input_grad != nullptr) *input_grad = std::move(delta);
    return grads;
}

bool DenseNet::same_architecture(const DenseNet& other) const {
    if (dims_ != other.dims_) return false;
    for (size_t l = 0; l < layers_.size(); ++l) {
        if (layers_[l].act != other.layers_[l].act) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------

Matrix softmax(const Matrix& logits) {
    Matrix probs(logits.rows, logits.cols);
    for (int r = 0; r < logits.rows; ++r) {
        const double* z = logits.row(r);
        double zmax = z[0];
        for (int c = 1; c < logits.cols; ++c) zmax = std::max(zmax, z[c]);
        double sum = 0.0;
        double* p = probs.row(r);
        for (int c = 0; c < logits.cols; ++c) {
            p[c] = std::exp(z[c] - zmax);
            sum += p[c];
        }
        const double inv = 1.0 / sum;
        for (int c = 0; c < logits.cols; ++c) p[c] *= inv;
    }
    return probs;
}

LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels) {
    if (static_cast<int>(labels.size()) != logits.rows) {
        throw Error("cross-entropy: label count does not match batch size");
    }
    LossResult res;
    res.probs = Matrix(logits.rows, logits.cols);
    res.losses.resize(static_cast<size_t>(logits.rows));
    for (int r = 0; r < logits.rows; ++r) {
        const int y = labels[static_cast<size_t>(r)];
        if (y < 0 || y >= logits.cols) {
            std::ostringstream msg;
            msg << "cross-entropy: label " << y << " out of range [0, " << logits.cols << ")";
            throw Error(msg.str());
        }
        const double* z = logits.row(r);
        double zmax = z[0];
        for (int c = 1; c < logits.cols; ++c) zmax = std::max(zmax, z[c]);
        double sum = 0.0;
        double* p = res.probs.row(r);
        for (int c = 0; c < logits.cols; ++c) {
            p[c] = std::exp(z[c] - zmax);
            sum += p[c];
        }
        const double inv = 1.0 / sum;
        for (int c = 0; c < logits.cols; ++c) p[c] *= inv;
        // -log p_y computed in log-sum-exp form to stay finite for big logits.
        res.losses[static_cast<size_t>(r)] = std::log(sum) - (z[y] - zmax);
    }
    return res;
}

LossResult focal_loss(const Matrix& logits, const std::vector<int>& labels, double gamma) {
    if (gamma < 0.0) throw Error("focal loss: gamma must be nonnegative");
    if (gamma == 0.0) return softmax_cross_entropy(logits, labels);
    LossResult res = softmax_cross_entropy(logits, labels);
    for (int r = 0; r < logits.rows; ++r) {
        const int y = labels[static_cast<size_t>(r)];
        const double pt = res.probs.at(r, y);
        res.losses[static_cast<size_t>(r)] *= std::pow(1.0 - pt, gamma);
    }
    return res;
}

Matrix ce_logit_grad(const Matrix& probs, const std::vector<int>& labels,
                     const std::vector<double>& weights) {
    if (labels.size() != weights.size() || static_cast<int>(labels.size()) != probs.rows) {
        throw Error("ce_logit_grad: batch size mismatch");
    }
    const double inv_batch = 1.0 / probs.rows;
    Matrix grad(probs.rows, probs.cols);
    for (int r = 0; r < probs.rows; ++r) {
        const double scale = weights[static_cast<size_t>(r)] * inv_batch;
        const double* p = probs.row(r);
        double* g = grad.row(r);
        for (int c = 0; c < probs.cols; ++c) g[c] = scale * p[c];
        g[labels[static_cast<size_t>(r)]] -= scale;
    }
    return grad;
}

Matrix focal_logit_grad(const Matrix& probs, const std::vector<int>& labels, double gamma,
                        const std::vector<double>& weights) {
    if (gamma == 0.0) return ce_logit_grad(probs, labels, weights);
    if (labels.size() != weights.size() || static_cast<int>(labels.size()) != probs.rows) {
        throw Error("focal_logit_grad: batch size mismatch");
    }
    const double inv_batch = 1.0 / probs.rows;
    Matrix grad(probs.rows, probs.cols);
    for (int r = 0; r < probs.rows; ++r) {
        const int y = labels[static_cast<size_t>(r)];
        double pt = probs.at(r, y);
        // Keep (1-pt) away from zero; the gamma<1 branch of dL/dp diverges there.
        pt = std::min(pt, 1.0 - 1e-12);
        const double one_m = 1.0 - pt;
        // dL/dp_t for L = -(1-p_t)^g log p_t
        const double dl_dpt =
            gamma * std::pow(one_m, gamma - 1.0) * std::log(pt) - std::pow(one_m, gamma) / pt;
        const double scale = weights[static_cast<size_t>(r)] * inv_batch * dl_dpt;
        const double* p = probs.row(r);
        double* g = grad.row(r);
        // dp_t/dz_c = p_t (delta_{cy} - p_c)
        for (int c = 0; c < probs.cols; ++c) g[c] = scale * pt * (-p[c]);
        g[y] += scale * pt;
    }
    return grad;
}

std::vector<double> backward_weighted(const DenseNet& net, const Matrix& inputs,
                                      const std::vector<int>& labels,
                                      const std::vector<double>& weights) {
    if (weights.size() != labels.size()) throw Error("backward_weighted: weights/labels mismatch");
    for (double w : weights) {
        if (!std::isfinite(w)) throw Error("backward_weighted: non-finite sample weight");
    }
    ForwardCache cache;
    Matrix logits = net.forward(inputs, cache);
    LossResult loss = softmax_cross_entropy(logits, labels);
    Matrix dlogits = ce_logit_grad(loss.probs, labels, weights);
    return net.backward(cache, dlogits);
}

// ---------------------------------------------------------------------------

const char* optimizer_kind_name(OptimizerKind k) {
    return k == OptimizerKind::kSgdMomentum ? "sgd-momentum" : "adam";
}

OptimizerKind optimizer_kind_from_name(const std::string& name) {
    if (name == "sgd-momentum") return OptimizerKind::kSgdMomentum;
    if (name == "adam") return OptimizerKind::kAdam;
    throw ConfigError("unknown optimizer kind: " + name);
}

OptimizerState OptimizerState::sgd_momentum(double lr, double momentum, double weight_decay) {
    OptimizerState s;
    s.kind = OptimizerKind::kSgdMomentum;
    s.learning_rate = lr;
    s.momentum = momentum;
    s.weight_decay = weight_decay;
    return s;
}

OptimizerState OptimizerState::adam(double lr, double beta1, double beta2, double epsilon,
                                    double weight_decay) {
    OptimizerState s;
    s.kind = OptimizerKind::kAdam;
    s.learning_rate = lr;
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    s.weight_decay = weight_decay;
    return s;
}

void OptimizerState::reset() {
    step_count = 0;
    m.clear();
    v.clear();
}

void optimizer_step(OptimizerState& state, std::vector<double>& params,
                    const std::vector<double>& grads) {
    if (grads.size() != params.size()) throw Error("optimizer_step: gradient shape mismatch");
    for (double g : grads) {
        if (!std::isfinite(g)) {
            throw Error("optimizer_step: non-finite gradient (training diverged)");
        }
    }
    const size_t n = params.size();
    if (state.m.size() != n) state.m.assign(n, 0.0);
    state.step_count += 1;

    if (state.kind == OptimizerKind::kSgdMomentum) {
        for (size_t k = 0; k < n; ++k) {
            const double g = grads[k] + state.weight_decay * params[k];
            state.m[k] = state.momentum * state.m[k] + g;
            params[k] -= state.learning_rate * state.m[k];
        }
    } else {
        if (state.v.size() != n) state.v.assign(n, 0.0);
        const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
        const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
        for (size_t k = 0; k < n; ++k) {
            const double g = grads[k] + state.weight_decay * params[k];
            state.m[k] = state.beta1 * state.m[k] + (1.0 - state.beta1) * g;
            state.v[k] = state.beta2 * state.v[k] + (1.0 - state.beta2) * g * g;
            const double mhat = state.m[k] / bc1;
            const double vhat = state.v[k] / bc2;
            params[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kCheckpointMagic[8] = {'L', 'A', 'W', 'N', 'E', 'T', '0', '1'};
}

void save_checkpoint(const std::string& path, const DenseNet& net, const OptimizerState* opt) {
    json header;
    header["dims"] = net.dims();
    std::vector<std::string> acts;
    for (const auto& layer : net.layout()) acts.push_back(activation_name(layer.act));
    header["activations"] = acts;
    header["param_count"] = net.param_count();
    if (opt != nullptr) {
        header["optimizer"] = {
            {"kind", optimizer_kind_name(opt->kind)},
            {"learning_rate", opt->learning_rate},
            {"momentum", opt->momentum},
            {"beta1", opt->beta1},
            {"beta2", opt->beta2},
            {"epsilon", opt->epsilon},
            {"weight_decay", opt->weight_decay},
            {"step_count", opt->step_count},
            {"m_size", opt->m.size()},
            {"v_size", opt->v.size()},
        };
    }
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    io::write_bytes(out, kCheckpointMagic, sizeof(kCheckpointMagic));
    io::write_u64(out, header_str.size());
    io::write_bytes(out, header_str.data(), header_str.size());
    io::write_f64_block(out, net.params().data(), net.param_count());
    if (opt != nullptr) {
        io::write_f64_block(out, opt->m.data(), opt->m.size());
        io::write_f64_block(out, opt->v.data(), opt->v.size());
    }
}

void load_checkpoint(const std::string& path, DenseNet& net, OptimizerState* opt) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint for reading: " + path);
    char magic[8];
    io::read_bytes(in, magic, sizeof(magic), "checkpoint magic");
    if (std::string(magic, 8) != std::string(kCheckpointMagic, 8)) {
        throw IoError("not a network checkpoint: " + path);
    }
    const uint64_t header_len = io::read_u64(in, "checkpoint header length");
    if (header_len > (1ULL << 24)) throw IoError("implausible checkpoint header size: " + path);
    std::string header_str(header_len, '\0');
    io::read_bytes(in, header_str.data(), header_len, "checkpoint header");

    json header;
    try {
        header = json::parse(header_str);
    } catch (const std::exception& e) {
        throw IoError("malformed checkpoint header in " + path + ": " + e.what());
    }

    std::vector<int> dims = header.at("dims").get<std::vector<int>>();
    std::vector<std::string> acts = header.at("activations").get<std::vector<std::string>>();
    if (acts.size() + 1 != dims.size()) throw IoError("inconsistent checkpoint header: " + path);
    Activation hidden = acts.size() > 1 ? activation_from_name(acts.front()) : Activation::kRelu;
    Activation output = activation_from_name(acts.back());
    DenseNet loaded(dims, hidden, output);
    // Layer-specific activations beyond the hidden/output pattern are not
    // produced by this codebase; verify the header matches what we built.
    for (size_t l = 0; l < acts.size(); ++l) {
        if (activation_from_name(acts[l]) != loaded.layout()[l].act) {
            throw IoError("unsupported activation pattern in checkpoint: " + path);
        }
    }
    if (header.at("param_count").get<size_t>() != loaded.param_count()) {
        throw IoError("parameter count mismatch in checkpoint: " + path);
    }
    io::read_f64_block(in, loaded.params().data(), loaded.param_count(), "checkpoint parameters");

    if (opt != nullptr) {
        if (!header.contains("optimizer")) {
            throw IoError("checkpoint has no optimizer state: " + path);
        }
        const auto& oj = header.at("optimizer");
        OptimizerState state;
        state.kind = optimizer_kind_from_name(oj.at("kind").get<std::string>());
        state.learning_rate = oj.at("learning_rate").get<double>();
        state.momentum = oj.at("momentum").get<double>();
        state.beta1 = oj.at("beta1").get<double>();
        state.beta2 = oj.at("beta2").get<double>();
        state.epsilon = oj.at("epsilon").get<double>();
        state.weight_decay = oj.at("weight_decay").get<double>();
        state.step_count = oj.at("step_count").get<long>();
        state.m.resize(oj.at("m_size").get<size_t>());
        state.v.resize(oj.at("v_size").get<size_t>());
        io::read_f64_block(in, state.m.data(), state.m.size(), "optimizer m buffer");
        io::read_f64_block(in, state.v.data(), state.v.size(), "optimizer v buffer");
        *opt = std::move(state);
    }
    net = std::move(loaded);
}

bool all_finite(const std::vector<double>& values) {
    for (double v : values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace law::nn
