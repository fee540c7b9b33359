#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "law/matrix.hpp"
#include "law/rng.hpp"

namespace law::nn {

enum class Activation { kIdentity, kRelu, kTanh };

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct LayerLayout {
    int in = 0;
    int out = 0;
    Activation act = Activation::kIdentity;
    size_t weight_offset = 0;  // into the flat parameter vector, row-major out x in
    size_t bias_offset = 0;
};

// Cached per-layer post-activation values from a forward pass.
// acts[0] is the input batch, acts[l] the output of layer l.
struct ForwardCache {
    std::vector<Matrix> acts;
};

// Fully-connected float64 network with a flat parameter vector. Hidden layers
// share one activation; the last layer gets its own (identity for logits).
class DenseNet {
public:
    DenseNet() = default;
    DenseNet(std::vector<int> dims, Activation hidden_act = Activation::kRelu,
             Activation output_act = Activation::kIdentity);

    int input_dim() const { return dims_.front(); }
    int output_dim() const { return dims_.back(); }
    int layer_count() const { return static_cast<int>(layers_.size()); }
    const std::vector<int>& dims() const { return dims_; }
    const std::vector<LayerLayout>& layout() const { return layers_; }

    std::vector<double>& params() { return params_; }
    const std::vector<double>& params() const { return params_; }
    size_t param_count() const { return params_.size(); }

    // He-uniform weights, zero biases; the usual start for ReLU stacks.
    void init_he_uniform(Rng& rng);
    // Re-draws one layer's weights and biases from U(-bound, bound).
    void init_layer_uniform(int layer, Rng& rng, double bound);
    void zero_layer(int layer);

    Matrix forward(const Matrix& x) const;
    Matrix forward(const Matrix& x, ForwardCache& cache) const;
    // Convenience for single-sample inputs.
    std::vector<double> forward_one(const std::vector<double>& x) const;

    // Backpropagates d(objective)/d(output) through the cached pass. Returns
    // the gradient aligned with params(); fills input_grad when non-null.
    std::vector<double> backward(const ForwardCache& cache, const Matrix& output_grad,
                                 Matrix* input_grad = nullptr) const;

    bool same_architecture(const DenseNet& other) const;

private:
    std::vector<int> dims_;
    std::vector<LayerLayout> layers_;
    std::vector<double> params_;
};

// ---------------------------------------------------------------------------
// Losses. All losses are per-sample; batch objectives are (1/B) sum w_i l_i.

struct LossResult {
    std::vector<double> losses;  // one per sample
    Matrix probs;                // B x C softmax probabilities
};

// Row-wise softmax with max-subtraction.
Matrix softmax(const Matrix& logits);

// loss_i = -log softmax(logits_i)[label_i]
LossResult softmax_cross_entropy(const Matrix& logits, const std::vector<int>& labels);

// loss_i = -(1 - p_t)^gamma * log p_t. gamma == 0 dispatches to cross-entropy
// so the two are bit-identical in that case.
LossResult focal_loss(const Matrix& logits, const std::vector<int>& labels, double gamma);

// d[(1/B) sum_i w_i * ce_i]/d logits = w_i/B * (p - onehot)
Matrix ce_logit_grad(const Matrix& probs, const std::vector<int>& labels,
                     const std::vector<double>& weights);

Matrix focal_logit_grad(const Matrix& probs, const std::vector<int>& labels, double gamma,
                        const std::vector<double>& weights);

// Gradient of (1/B) sum_i weights_i * ce_loss_i with respect to all parameters.
std::vector<double> backward_weighted(const DenseNet& net, const Matrix& inputs,
                                      const std::vector<int>& labels,
                                      const std::vector<double>& weights);

// ---------------------------------------------------------------------------
// Optimizers.

enum class OptimizerKind { kSgdMomentum, kAdam };

const char* optimizer_kind_name(OptimizerKind k);
OptimizerKind optimizer_kind_from_name(const std::string& name);

struct OptimizerState {
    OptimizerKind kind = OptimizerKind::kSgdMomentum;
    double learning_rate = 0.01;
    double momentum = 0.9;  // sgd-momentum only
    double beta1 = 0.9;     // adam only
    double beta2 = 0.999;
    double epsilon = 1e-8;
    double weight_decay = 0.0;
    long step_count = 0;
    std::vector<double> m;  // velocity (sgd) or first moment (adam)
    std::vector<double> v;  // second moment (adam)

    static OptimizerState sgd_momentum(double lr, double momentum, double weight_decay = 0.0);
    static OptimizerState adam(double lr, double beta1 = 0.9, double beta2 = 0.999,
                               double epsilon = 1e-8, double weight_decay = 0.0);

    void reset();
};

// In-place parameter update. sgd-momentum: v <- m*v + g + wd*w; w <- w - lr*v.
// adam: bias-corrected moment update. Throws on non-finite gradients.
void optimizer_step(OptimizerState& state, std::vector<double>& params,
                    const std::vector<double>& grads);

// ---------------------------------------------------------------------------
// Checkpointing: JSON header plus little-endian float64 blob.

void save_checkpoint(const std::string& path, const DenseNet& net,
                     const OptimizerState* opt = nullptr);
void load_checkpoint(const std::string& path, DenseNet& net, OptimizerState* opt = nullptr);

bool all_finite(const std::vector<double>& values);

}  // namespace law::nn
