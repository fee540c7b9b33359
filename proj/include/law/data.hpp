#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "law/matrix.hpp"
#include "law/rng.hpp"

namespace law::data {

enum class Generator { kGaussianBlobs, kTwoSpirals };

const char* generator_name(Generator g);
Generator generator_from_name(const std::string& name);

struct DatasetSpec {
    Generator generator = Generator::kGaussianBlobs;
    int class_count = 4;
    int input_dim = 2;
    int per_class_count = 500;  // training examples per class before corruption
    int val_size = 500;
    int test_size = 2000;
    double noise_rate = 0.0;                  // uniform label noise p, train split only
    std::vector<double> imbalance_fractions;  // per-class keep fraction; empty = balanced
    uint64_t seed = 1;

    // gaussian-blobs shape
    double blob_sigma = 1.0;
    double blob_separation = 6.0;  // adjacent inter-mean distance in units of sigma

    // two-spirals shape
    double spiral_turns = 1.75;
    double spiral_noise = 0.2;

    void validate() const;  // throws ConfigError on degenerate values
};

// Immutable after construction. y is the observed (possibly corrupted) label,
// y_true the generating label kept for analysis only.
struct Dataset {
    Matrix x;
    std::vector<int> y;
    std::vector<int> y_true;
    std::vector<int64_t> id;
    int class_count = 0;

    int size() const { return x.rows; }
    bool corrupted(int i) const { return y[static_cast<size_t>(i)] != y_true[static_cast<size_t>(i)]; }
    int corrupted_count() const;
    std::vector<int> label_histogram() const;
};

struct DatasetBundle {
    Dataset train;
    Dataset val;
    Dataset test;
};

// Draws the three splits with disjoint ids; applies imbalance subsampling and
// then label noise to the training split when the spec asks for them.
DatasetBundle generate(const DatasetSpec& spec);

// Each training example independently has its label redrawn from
// Uniform{0..C-1} with probability p; the draw may repeat the original class.
Dataset inject_label_noise(const Dataset& dataset, double p, uint64_t seed);

// Keeps exactly round(fractions[c] * count_c) examples of each class, chosen
// by seeded sampling without replacement. A class shrunk to zero is an error.
Dataset make_imbalanced(const Dataset& dataset, const std::vector<double>& fractions,
                        uint64_t seed);

struct Batch {
    std::vector<int> indices;  // positions in the source dataset
    Matrix x;
    std::vector<int> y;
};

// Deterministic epoch iterator: epoch e uses the permutation seeded by
// (seed, e), batches are consecutive slices, the final short batch is kept.
class BatchStream {
public:
    BatchStream(const Dataset& dataset, int batch_size, uint64_t seed);

    Batch next();
    int batches_per_epoch() const { return batches_per_epoch_; }

private:
    void start_epoch();

    const Dataset* dataset_;
    int batch_size_;
    uint64_t seed_;
    int epoch_ = -1;
    int cursor_ = 0;
    int batches_per_epoch_ = 0;
    std::vector<int> order_;
};

// Columnar binary format: JSON header + float64/int64 blocks per split.
void save_dataset(const std::string& path, const DatasetBundle& bundle, const DatasetSpec& spec);
DatasetBundle load_dataset(const std::string& path, DatasetSpec* spec_out = nullptr);

}  // namespace law::data
