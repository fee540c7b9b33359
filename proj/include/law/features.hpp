#pragma once

#include <vector>

#include "law/matrix.hpp"

namespace law::features {

// Shannon entropy in nats per probability row, with 0*ln(0) := 0.
std::vector<double> compute_entropy(const Matrix& probabilities);

// Mean pairwise logit dot product against the other samples in the batch.
// A batch of one has no peers and gets density 0.
std::vector<double> compute_density(const Matrix& logits, bool include_diagonal = false);

// Raw label feature before batch normalization.
double label_feature(int y, int class_count);

// Stacks [loss, entropy, density, label] and z-scores each column within the
// batch. Columns with standard deviation below kConstantEps become all zeros.
Matrix assemble_features(const std::vector<double>& losses, const Matrix& probabilities,
                         const Matrix& logits, const std::vector<int>& labels,
                         bool include_density_diagonal = false);

// In-place per-column z-scoring used by assemble_features; exposed for tests.
void zscore_columns(Matrix& m);

inline constexpr double kConstantEps = 1e-8;
inline constexpr int kItemFeatureCount = 4;

// Per-episode smoothed training state. The first observation of each quantity
// initializes the smoothed value directly.
struct PhaseDescriptor {
    double smooth_loss = 0.0;
    double smooth_acc = 0.0;
    bool has_loss = false;
    bool has_acc = false;
    double loss_beta = 0.95;
    double acc_beta = 0.8;

    void observe_loss(double batch_mean_loss) {
        smooth_loss = has_loss ? loss_beta * smooth_loss + (1.0 - loss_beta) * batch_mean_loss
                               : batch_mean_loss;
        has_loss = true;
    }
    void observe_accuracy(double val_acc) {
        smooth_acc = has_acc ? acc_beta * smooth_acc + (1.0 - acc_beta) * val_acc : val_acc;
        has_acc = true;
    }
};

// Row lookup into the trainable stage embedding table (stage is 1-based).
std::vector<double> stage_embedding_lookup(const Matrix& table, int stage);

}  // namespace law::features
