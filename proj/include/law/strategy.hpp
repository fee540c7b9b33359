#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "law/matrix.hpp"
#include "law/nn.hpp"
#include "law/rng.hpp"

namespace law::strategy {

// theta = four feature coefficients plus the weighting bias b.
inline constexpr int kThetaDim = 5;

struct StrategyConfig {
    int stage_count = 20;  // embedding table rows (T_max)
    int embedding_dim = 8;
    std::vector<int> hidden_dims = {64, 64, 32};
    double actor_lr = 1e-5;
    double critic_lr = 1e-4;
    double embedding_lr = 1e-4;
    double discount = 0.99;
    int buffer_capacity = 2048;
    int fdu_epochs = 4;      // En
    int fdu_batch_size = 32; // B_rl
    bool fixed_bias = false; // hold b = 0 instead of learning it as theta[4]
    bool use_soft_target = false;
    double soft_target_tau = 0.01;
    double embedding_init_std = 0.01;
    double final_layer_init_bound = 3e-3;

    void validate() const;
    int state_dim() const { return embedding_dim + 2; }
};

// One replay record: the phase descriptor the policy saw, the (noisy) action
// it took, the stage reward, and the follow-up descriptor. Stage indices are
// kept alongside the materialized vectors so the embedding slice of the state
// can be reassembled from the live table during updates.
struct Transition {
    int stage = 0;
    int next_stage = 0;
    double smooth_loss = 0.0;
    double smooth_acc = 0.0;
    double next_smooth_loss = 0.0;
    double next_smooth_acc = 0.0;
    std::vector<double> s;       // [e_T, l_smooth, acc_smooth] at push time
    std::vector<double> s_next;
    std::vector<double> theta;   // kThetaDim
    double reward = 0.0;
    bool done = false;
};

// Fixed-capacity ring with strict oldest-first eviction.
class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity);

    void push(Transition t);
    int size() const { return size_; }
    int capacity() const { return capacity_; }
    int64_t total_pushed() const { return total_; }
    bool empty() const { return size_ == 0; }
    // i = 0 is the oldest retained transition.
    const Transition& at(int i) const;

private:
    std::vector<Transition> slots_;
    int capacity_;
    int write_ = 0;
    int size_ = 0;
    int64_t total_ = 0;
};

// Optional instrumentation filled by fdu_update for tests.
struct FduStepRecord {
    std::vector<int> indices;   // buffer positions in the mini-batch
    std::vector<double> targets;  // TD targets y_i used for the critic loss
};

struct FduStats {
    long critic_steps = 0;
    long actor_steps = 0;
    std::vector<long> participation;  // per buffer position
    std::vector<FduStepRecord> steps;
};

// Actor, critic, and stage-embedding table with their optimizers. Parameters
// are immutable between fdu_update calls, which is what lets episode workers
// read the model concurrently.
class StrategyModel {
public:
    StrategyModel() = default;
    StrategyModel(const StrategyConfig& config, Rng& rng);

    const StrategyConfig& config() const { return config_; }
    int state_dim() const { return config_.state_dim(); }

    std::vector<double> state_vector(int stage, double smooth_loss, double smooth_acc) const;

    std::vector<double> actor_forward(const std::vector<double>& s) const;
    Matrix actor_forward_batch(const Matrix& s) const;
    double critic_forward(const std::vector<double>& s, const std::vector<double>& theta) const;

    // Zeroes the actor's output layer: theta == 0 for every state.
    void zero_actor();

    // Full Data Update: fdu_epochs sweeps over the whole buffer in shuffled
    // mini-batches of fdu_batch_size; one critic and one actor step per
    // mini-batch. num_workers is the gradient-averaging fan-in (identical
    // synchronized contributions, so the average equals one worker's gradient).
    void fdu_update(const ReplayBuffer& buffer, Rng& shuffle_rng, int num_workers,
                    FduStats* stats = nullptr);

    nn::DenseNet& actor() { return actor_; }
    const nn::DenseNet& actor() const { return actor_; }
    nn::DenseNet& critic() { return critic_; }
    const nn::DenseNet& critic() const { return critic_; }
    Matrix& embedding() { return embedding_; }
    const Matrix& embedding() const { return embedding_; }
    nn::OptimizerState& actor_optimizer() { return actor_opt_; }
    nn::OptimizerState& critic_optimizer() { return critic_opt_; }

    bool all_parameters_finite() const;
    uint64_t param_checksum() const;

    // Search bookkeeping carried in checkpoints.
    int64_t episodes_completed = 0;
    double sigma_position = 0.0;

    void save(const std::string& path) const;
    static StrategyModel load(const std::string& path);

private:
    Matrix assemble_states(const std::vector<const Transition*>& batch, bool next) const;
    void apply_embedding_gradient(const Matrix& state_grad,
                                  const std::vector<const Transition*>& batch, bool next);
    void soft_update_targets();

    StrategyConfig config_;
    nn::DenseNet actor_;
    nn::DenseNet critic_;
    Matrix embedding_;
    nn::DenseNet actor_target_;   // used only when config_.use_soft_target
    nn::DenseNet critic_target_;
    nn::OptimizerState actor_opt_;
    nn::OptimizerState critic_opt_;
    nn::OptimizerState embedding_opt_;
};

// K_i = 1 + tanh(theta[0:4] . f_i + b). Results are clamped into the open
// interval (0, 2); theta == 0 yields exactly 1.
std::vector<double> weights_from_features(const Matrix& features, const std::vector<double>& theta,
                                          bool fixed_bias = false);

// Componentwise additive N(0, sigma^2) noise.
void add_exploration_noise(std::vector<double>& theta, double sigma, Rng& rng);

// Linear anneal from sigma0 at round 0 down to sigma_min at the final round.
double exploration_sigma(int round, int total_rounds, double sigma0, double sigma_min);

// Arithmetic mean of same-shaped gradient vectors, summed in argument order.
std::vector<double> average_parameter_vectors(const std::vector<const std::vector<double>*>& grads);

// Per-stage theta table exported for strategy transfer without the model.
struct StaticSchedule {
    std::vector<std::array<double, kThetaDim>> theta;  // index 0 = stage 1

    int stage_count() const { return static_cast<int>(theta.size()); }
    void save_csv(const std::string& path) const;
    static StaticSchedule load_csv(const std::string& path);
};

}  // namespace law::strategy
