#include "law/episode.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>

#include "law/error.hpp"

namespace law::episode {

double LrSchedule::at_stage(int stage) const {
    double lr = base;
    for (int s : decay_stages) {
        if (stage >= s) lr *= decay_factor;
    }
    return lr;
}

void EpisodeConfig::validate() const {
    if (stage_count < 1) throw ConfigError("episode: stage_count must be >= 1");
    if (steps_per_stage < 1) throw ConfigError("episode: steps_per_stage must be >= 1");
    if (batch_size < 1) throw ConfigError("episode: batch_size must be >= 1");
    if (warmup_stages < 0 || warmup_stages >= stage_count) {
        throw ConfigError("episode: warmup_stages must be in [0, stage_count)");
    }
    for (int h : classifier.hidden_dims) {
        if (h < 1) throw ConfigError("episode: classifier hidden dims must be positive");
    }
    if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("episode: momentum must be in [0,1)");
    if (weight_decay < 0.0) throw ConfigError("episode: weight_decay must be nonnegative");
    if (lr.base <= 0.0) throw ConfigError("episode: learning rate must be positive");
    if (loss_smooth_beta < 0.0 || loss_smooth_beta >= 1.0 || acc_smooth_beta < 0.0 ||
        acc_smooth_beta >= 1.0) {
        throw ConfigError("episode: smoothing betas must be in [0,1)");
    }
}

double evaluate_accuracy(const nn::DenseNet& net, const data::Dataset& split) {
    if (split.size() == 0) throw Error("evaluate_accuracy: empty split");
    const Matrix logits = net.forward(split.x);
    int correct = 0;
    for (int r = 0; r < logits.rows; ++r) {
        const double* z = logits.row(r);
        int best = 0;
        for (int c = 1; c < logits.cols; ++c) {
            if (z[c] > z[best]) best = c;
        }
        if (best == split.y[static_cast<size_t>(r)]) ++correct;
    }
    return static_cast<double>(correct) / split.size();
}

double compute_reward(double acc_target, double acc_reference, int stage, int stage_count,
                      double k, double s) {
    const double rate = std::exp(k * static_cast<double>(stage) / stage_count) * s;
    return rate * (acc_target - acc_reference);
}

bool is_stage_boundary(int step, int steps_per_stage) { return step % steps_per_stage == 0; }

namespace {

std::vector<int> classifier_dims(const EpisodeConfig& config, const data::Dataset& train) {
    std::vector<int> dims;
    dims.push_back(train.x.cols);
    for (int h : config.classifier.hidden_dims) dims.push_back(h);
    dims.push_back(train.class_count);
    return dims;
}

double mean_of(const std::vector<double>& v) {
    double acc = 0.0;
    for (double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

}  // namespace

EpisodeRun::EpisodeRun(const EpisodeConfig& config, const data::Dataset& train,
                       const data::Dataset& val, EpisodeMode mode, double sigma,
                       const EpisodeSeeds& seeds, int episode_id)
    : config_(config),
      train_(&train),
      val_(&val),
      mode_(mode),
      sigma_(mode == EpisodeMode::kEval ? 0.0 : sigma),
      episode_id_(episode_id),
      target_(classifier_dims(config, train), nn::Activation::kRelu, nn::Activation::kIdentity),
      stream_(train, config.batch_size, seeds.data_order),
      explore_rng_(seeds.exploration) {
    config_.validate();
    if (val.size() == 0) throw ConfigError("episode: validation split is empty");
    if (train.class_count != val.class_count) throw ConfigError("episode: split class counts differ");

    Rng init_rng(seeds.init);
    target_.init_he_uniform(init_rng);
    reference_ = target_;  // one initialization event shared by both twins

    target_opt_ = nn::OptimizerState::sgd_momentum(config_.lr.base, config_.momentum,
                                                   config_.weight_decay);
    reference_opt_ = target_opt_;

    phase_.loss_beta = config_.loss_smooth_beta;
    phase_.acc_beta = config_.acc_smooth_beta;

    result_.episode_id = episode_id;
}

StageOutcome EpisodeRun::run_stage(const strategy::StrategyModel& strategy) {
    return run_stage_impl(&strategy, nullptr);
}

StageOutcome EpisodeRun::run_stage(const strategy::StaticSchedule& schedule) {
    if (schedule.stage_count() != config_.stage_count) {
        throw ConfigError("static schedule stage count does not match the episode");
    }
    return run_stage_impl(nullptr, &schedule);
}

StageOutcome EpisodeRun::run_stage_impl(const strategy::StrategyModel* strategy,
                                        const strategy::StaticSchedule* schedule) {
    if (finished()) throw Error("run_stage called on a finished episode");

    const int stage = stage_ + 1;
    const bool warmup = stage <= config_.warmup_stages;
    const double start_smooth_loss = phase_.smooth_loss;
    const double start_smooth_acc = phase_.smooth_acc;

    std::vector<double> theta(strategy::kThetaDim, 0.0);
    if (!warmup) {
        if (strategy != nullptr) {
            theta = strategy->actor_forward(
                strategy->state_vector(stage, start_smooth_loss, start_smooth_acc));
            if (mode_ == EpisodeMode::kSearch) {
                strategy::add_exploration_noise(theta, sigma_, explore_rng_);
            }
        } else {
            const auto& row = schedule->theta[static_cast<size_t>(stage - 1)];
            theta.assign(row.begin(), row.end());
        }
    }

    const double lr = config_.lr.at_stage(stage);
    target_opt_.learning_rate = lr;
    reference_opt_.learning_rate = lr;

    const int class_count = train_->class_count;
    double gap_sum = 0.0;
    int steps_done = 0;
    std::vector<double> weight_sum(static_cast<size_t>(class_count), 0.0);
    std::vector<long> weight_count(static_cast<size_t>(class_count), 0);
    bool stage_failed = false;

    for (int step = 1; step <= config_.steps_per_stage && !stage_failed; ++step) {
        data::Batch batch = stream_.next();
        global_step_ += 1;

        nn::ForwardCache ref_cache;
        const Matrix ref_logits = reference_.forward(batch.x, ref_cache);
        const nn::LossResult ref_loss = nn::softmax_cross_entropy(ref_logits, batch.y);

        nn::ForwardCache tgt_cache;
        const Matrix tgt_logits = target_.forward(batch.x, tgt_cache);
        const nn::LossResult tgt_loss = nn::softmax_cross_entropy(tgt_logits, batch.y);

        const double ref_mean = mean_of(ref_loss.losses);
        const double tgt_mean = mean_of(tgt_loss.losses);
        if (!std::isfinite(ref_mean) || !std::isfinite(tgt_mean)) {
            stage_failed = true;
            break;
        }

        std::vector<double> weights;
        if (warmup) {
            weights.assign(static_cast<size_t>(batch.x.rows), 1.0);
        } else {
            const Matrix f = features::assemble_features(tgt_loss.losses, tgt_loss.probs,
                                                         tgt_logits, batch.y,
                                                         config_.include_density_diagonal);
            weights = strategy::weights_from_features(f, theta, config_.fixed_bias);
        }

        const std::vector<double> ref_weights(static_cast<size_t>(batch.x.rows), 1.0);
        const Matrix ref_dlogits = nn::ce_logit_grad(ref_loss.probs, batch.y, ref_weights);
        const Matrix tgt_dlogits = nn::ce_logit_grad(tgt_loss.probs, batch.y, weights);

        const std::vector<double> ref_grads = reference_.backward(ref_cache, ref_dlogits);
        const std::vector<double> tgt_grads = target_.backward(tgt_cache, tgt_dlogits);
        try {
            nn::optimizer_step(reference_opt_, reference_.params(), ref_grads);
            nn::optimizer_step(target_opt_, target_.params(), tgt_grads);
        } catch (const Error&) {
            stage_failed = true;
            break;
        }

        phase_.observe_loss(tgt_mean);
        gap_sum += tgt_mean - ref_mean;
        steps_done += 1;
        for (int i = 0; i < batch.x.rows; ++i) {
            const auto cls = static_cast<size_t>(batch.y[static_cast<size_t>(i)]);
            weight_sum[cls] += weights[static_cast<size_t>(i)];
            weight_count[cls] += 1;
        }

        if (config_.track_twin_equality && result_.twin_params_identical) {
            const auto& a = target_.params();
            const auto& b = reference_.params();
            result_.twin_params_identical =
                std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
        }
        if (config_.log_batches) {
            BatchRecord rec;
            rec.stage = stage;
            rec.step = global_step_;
            rec.target_loss_mean = tgt_mean;
            rec.reference_loss_mean = ref_mean;
            rec.class_weight_sum.assign(static_cast<size_t>(class_count), 0.0);
            rec.class_count.assign(static_cast<size_t>(class_count), 0);
            for (int i = 0; i < batch.x.rows; ++i) {
                const auto cls = static_cast<size_t>(batch.y[static_cast<size_t>(i)]);
                rec.class_weight_sum[cls] += weights[static_cast<size_t>(i)];
                rec.class_count[cls] += 1;
            }
            result_.batch_log.push_back(std::move(rec));
        }
    }

    const double acc_target = evaluate_accuracy(target_, *val_);
    const double acc_reference = evaluate_accuracy(reference_, *val_);
    phase_.observe_accuracy(acc_target);

    StageOutcome outcome;
    outcome.failed = stage_failed;
    StageRecord& rec = outcome.record;
    rec.episode = episode_id_;
    rec.stage = stage;
    rec.acc_target = acc_target;
    rec.acc_reference = acc_reference;
    if (stage_failed) {
        rec.reward = config_.failure_reward;
    } else {
        rec.reward = warmup ? 0.0
                            : compute_reward(acc_target, acc_reference, stage,
                                             config_.stage_count, config_.reward_k,
                                             config_.reward_s);
    }
    std::copy(theta.begin(), theta.end(), rec.theta.begin());
    rec.mean_loss_gap = steps_done > 0 ? gap_sum / steps_done : 0.0;
    rec.weight_mean_per_class.resize(static_cast<size_t>(class_count));
    rec.weight_count_per_class = weight_count;
    for (int c = 0; c < class_count; ++c) {
        rec.weight_mean_per_class[static_cast<size_t>(c)] =
            weight_count[static_cast<size_t>(c)] > 0
                ? weight_sum[static_cast<size_t>(c)] / weight_count[static_cast<size_t>(c)]
                : std::numeric_limits<double>::quiet_NaN();
    }

    if (!warmup && strategy != nullptr) {
        strategy::Transition tr;
        tr.stage = stage;
        tr.next_stage = std::min(stage + 1, config_.stage_count);
        tr.smooth_loss = start_smooth_loss;
        tr.smooth_acc = start_smooth_acc;
        tr.next_smooth_loss = phase_.smooth_loss;
        tr.next_smooth_acc = phase_.smooth_acc;
        tr.s = strategy->state_vector(stage, start_smooth_loss, start_smooth_acc);
        tr.s_next = strategy->state_vector(tr.next_stage, tr.next_smooth_loss, tr.next_smooth_acc);
        tr.theta = theta;
        tr.reward = rec.reward;
        tr.done = stage_failed || stage == config_.stage_count;
        outcome.transition = std::move(tr);
    }

    stage_ = stage;
    failed_ = stage_failed;
    result_.failed = result_.failed || stage_failed;
    result_.trace.push_back(rec);
    if (outcome.transition.has_value()) result_.transitions.push_back(*outcome.transition);
    result_.final_acc_target = acc_target;
    result_.final_acc_reference = acc_reference;
    return outcome;
}

EpisodeResult EpisodeRun::take_result() { return std::move(result_); }

EpisodeResult run_episode(const EpisodeConfig& config, const strategy::StrategyModel& strategy,
                          const data::Dataset& train, const data::Dataset& val, EpisodeMode mode,
                          double sigma, const EpisodeSeeds& seeds, int episode_id) {
    EpisodeRun run(config, train, val, mode, sigma, seeds, episode_id);
    while (!run.finished()) run.run_stage(strategy);
    return run.take_result();
}

EpisodeResult run_episode(const EpisodeConfig& config, const strategy::StaticSchedule& schedule,
                          const data::Dataset& train, const data::Dataset& val,
                          const EpisodeSeeds& seeds, int episode_id) {
    EpisodeRun run(config, train, val, EpisodeMode::kEval, 0.0, seeds, episode_id);
    while (!run.finished()) run.run_stage(schedule);
    return run.take_result();
}

}  // namespace law::episode
