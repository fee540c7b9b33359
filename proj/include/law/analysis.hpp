#pragma once

#include <string>
#include <vector>

#include "law/data.hpp"
#include "law/episode.hpp"

namespace law::analysis {

enum class BaselineKind { kUniform, kFocal };

const char* baseline_kind_name(BaselineKind k);
BaselineKind baseline_kind_from_name(const std::string& name);

struct BaselineResult {
    double test_accuracy = 0.0;
    double val_accuracy = 0.0;
    bool failed = false;
    nn::DenseNet net;
};

// Standard unweighted training over the same step budget, batch stream,
// initialization and lr schedule as an episode's reference network; the focal
// variant only swaps the per-sample loss.
BaselineResult train_baseline(const episode::EpisodeConfig& config,
                              const data::DatasetBundle& bundle, BaselineKind kind,
                              double focal_gamma, const episode::EpisodeSeeds& seeds);

struct LossGapPoint {
    int episode = 0;
    int stage = 0;
    double gap = 0.0;
};

struct WeightMeanPoint {
    int episode = 0;
    int stage = 0;
    double minority_mean = 0.0;  // NaN when no minority sample appeared
    double other_mean = 0.0;     // NaN when no other-class sample appeared
};

std::vector<LossGapPoint> loss_gap(const std::vector<episode::StageRecord>& trace);

std::vector<WeightMeanPoint> weight_means(const std::vector<episode::StageRecord>& trace,
                                          const std::vector<int>& minority_classes);

struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation
};
MeanStd mean_std(const std::vector<double>& values);

// --- CSV artifacts ---------------------------------------------------------

void save_trace_csv(const std::string& path, const std::vector<episode::StageRecord>& trace,
                    int class_count);
std::vector<episode::StageRecord> load_trace_csv(const std::string& path,
                                                 int* class_count_out = nullptr);

void save_batch_log_csv(const std::string& path, const std::vector<episode::BatchRecord>& log,
                        int class_count);
std::vector<episode::BatchRecord> load_batch_log_csv(const std::string& path,
                                                     int* class_count_out = nullptr);

void save_loss_gap_csv(const std::string& path, const std::vector<LossGapPoint>& points);
void save_weight_means_csv(const std::string& path, const std::vector<WeightMeanPoint>& points);

}  // namespace law::analysis
