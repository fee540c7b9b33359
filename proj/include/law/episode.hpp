#pragma once

#include <array>
#include <optional>
#include <vector>

#include "law/data.hpp"
#include "law/features.hpp"
#include "law/nn.hpp"
#include "law/strategy.hpp"

namespace law::episode {

struct ClassifierSpec {
    std::vector<int> hidden_dims = {32};
};

// Step schedule indexed by stage: the base rate is multiplied by decay_factor
// once for every decay stage at or below the current one.
struct LrSchedule {
    double base = 0.1;
    double decay_factor = 0.1;
    std::vector<int> decay_stages = {10, 13, 16};

    double at_stage(int stage) const;
};

struct EpisodeConfig {
    int stage_count = 20;      // T_max
    int steps_per_stage = 25;  // t_max
    int batch_size = 32;
    int warmup_stages = 4;
    ClassifierSpec classifier;
    double momentum = 0.9;
    double weight_decay = 2e-5;
    LrSchedule lr;
    double reward_k = 1.0;
    double reward_s = 1.0;
    double failure_reward = -1.0;
    double loss_smooth_beta = 0.95;
    double acc_smooth_beta = 0.8;
    bool include_density_diagonal = false;
    bool fixed_bias = false;     // must mirror the strategy model's setting
    bool log_batches = false;
    bool track_twin_equality = false;  // per-step bitwise target/reference compare

    void validate() const;
    int total_steps() const { return stage_count * steps_per_stage; }
};

struct EpisodeSeeds {
    uint64_t init = 0;
    uint64_t data_order = 0;
    uint64_t exploration = 0;
};

enum class EpisodeMode { kSearch, kEval };

struct StageRecord {
    int episode = 0;
    int stage = 0;
    double acc_target = 0.0;
    double acc_reference = 0.0;
    double reward = 0.0;
    std::array<double, strategy::kThetaDim> theta{};
    double mean_loss_gap = 0.0;
    std::vector<double> weight_mean_per_class;  // NaN where the class never appeared
    std::vector<long> weight_count_per_class;
};

struct BatchRecord {
    int stage = 0;
    int step = 0;  // global step index, 1-based
    double target_loss_mean = 0.0;
    double reference_loss_mean = 0.0;
    std::vector<double> class_weight_sum;
    std::vector<long> class_count;
};

struct StageOutcome {
    StageRecord record;
    std::optional<strategy::Transition> transition;
    bool failed = false;
};

struct EpisodeResult {
    int episode_id = 0;
    std::vector<StageRecord> trace;
    std::vector<strategy::Transition> transitions;
    std::vector<BatchRecord> batch_log;
    bool failed = false;
    bool twin_params_identical = true;
    double final_acc_target = 0.0;
    double final_acc_reference = 0.0;
};

// Fraction of argmax-correct predictions; argmax ties resolve to the lowest
// class index.
double evaluate_accuracy(const nn::DenseNet& net, const data::Dataset& split);

// reward = exp(k * T / T_max) * s * (acc_target - acc_reference)
double compute_reward(double acc_target, double acc_reference, int stage, int stage_count,
                      double k, double s);

// True exactly at the last step of each stage (t counts from 1).
bool is_stage_boundary(int step, int steps_per_stage);

// One twin-network training episode, advanced one stage at a time so a
// coordinator can interleave strategy updates at the boundaries. Both
// networks start from the same initialization event and consume the same
// batch stream; only the loss weighting differs.
class EpisodeRun {
public:
    EpisodeRun(const EpisodeConfig& config, const data::Dataset& train, const data::Dataset& val,
               EpisodeMode mode, double sigma, const EpisodeSeeds& seeds, int episode_id = 0);

    bool finished() const { return failed_ || stage_ >= config_.stage_count; }
    bool failed() const { return failed_; }
    int completed_stages() const { return stage_; }

    StageOutcome run_stage(const strategy::StrategyModel& strategy);
    StageOutcome run_stage(const strategy::StaticSchedule& schedule);

    EpisodeResult take_result();

    const nn::DenseNet& target_net() const { return target_; }
    const nn::DenseNet& reference_net() const { return reference_; }

private:
    StageOutcome run_stage_impl(const strategy::StrategyModel* strategy,
                                const strategy::StaticSchedule* schedule);

    EpisodeConfig config_;
    const data::Dataset* train_;
    const data::Dataset* val_;
    EpisodeMode mode_;
    double sigma_;
    int episode_id_;

    nn::DenseNet target_;
    nn::DenseNet reference_;
    nn::OptimizerState target_opt_;
    nn::OptimizerState reference_opt_;
    data::BatchStream stream_;
    Rng explore_rng_;
    features::PhaseDescriptor phase_;
    int stage_ = 0;
    int global_step_ = 0;
    bool failed_ = false;
    EpisodeResult result_;
};

EpisodeResult run_episode(const EpisodeConfig& config, const strategy::StrategyModel& strategy,
                          const data::Dataset& train, const data::Dataset& val, EpisodeMode mode,
                          double sigma, const EpisodeSeeds& seeds, int episode_id = 0);

EpisodeResult run_episode(const EpisodeConfig& config, const strategy::StaticSchedule& schedule,
                          const data::Dataset& train, const data::Dataset& val,
                          const EpisodeSeeds& seeds, int episode_id = 0);

}  // namespace law::episode
