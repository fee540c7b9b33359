#include "law/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "law/error.hpp"
#include "law/features.hpp"
#include "law/io.hpp"

namespace law::strategy {

using json = nlohmann::ordered_json;

void StrategyConfig::validate() const {
    if (stage_count < 1) throw ConfigError("strategy: stage_count must be >= 1");
    if (embedding_dim < 1) throw ConfigError("strategy: embedding_dim must be >= 1");
    if (hidden_dims.empty()) throw ConfigError("strategy: hidden_dims must not be empty");
    for (int h : hidden_dims) {
        if (h < 1) throw ConfigError("strategy: hidden dims must be positive");
    }
    if (actor_lr <= 0.0 || critic_lr <= 0.0 || embedding_lr <= 0.0) {
        throw ConfigError("strategy: learning rates must be positive");
    }
    if (discount < 0.0 || discount > 1.0) throw ConfigError("strategy: discount must be in [0,1]");
    if (buffer_capacity < 1) throw ConfigError("strategy: buffer_capacity must be >= 1");
    if (fdu_epochs < 1) throw ConfigError("strategy: fdu_epochs must be >= 1");
    if (fdu_batch_size < 1) throw ConfigError("strategy: fdu_batch_size must be >= 1");
    if (embedding_init_std <= 0.0) throw ConfigError("strategy: embedding_init_std must be positive");
}

// ---------------------------------------------------------------------------

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("replay buffer capacity must be >= 1");
    slots_.resize(static_cast<size_t>(capacity));
}

void ReplayBuffer::push(Transition t) {
    slots_[static_cast<size_t>(write_)] = std::move(t);
    write_ = (write_ + 1) % capacity_;
    if (size_ < capacity_) size_ += 1;
    total_ += 1;
}

const Transition& ReplayBuffer::at(int i) const {
    if (i < 0 || i >= size_) throw Error("replay buffer index out of range");
    const int start = size_ == capacity_ ? write_ : 0;
    return slots_[static_cast<size_t>((start + i) % capacity_)];
}

// ---------------------------------------------------------------------------

StrategyModel::StrategyModel(const StrategyConfig& config, Rng& rng) : config_(config) {
    config_.validate();

    std::vector<int> actor_dims;
    actor_dims.push_back(config_.state_dim());
    for (int h : config_.hidden_dims) actor_dims.push_back(h);
    actor_dims.push_back(kThetaDim);
    actor_ = nn::DenseNet(actor_dims, nn::Activation::kRelu, nn::Activation::kIdentity);

    std::vector<int> critic_dims;
    critic_dims.push_back(config_.state_dim() + kThetaDim);
    for (int h : config_.hidden_dims) critic_dims.push_back(h);
    critic_dims.push_back(1);
    critic_ = nn::DenseNet(critic_dims, nn::Activation::kRelu, nn::Activation::kIdentity);

    actor_.init_he_uniform(rng);
    actor_.init_layer_uniform(actor_.layer_count() - 1, rng, config_.final_layer_init_bound);
    critic_.init_he_uniform(rng);
    critic_.init_layer_uniform(critic_.layer_count() - 1, rng, config_.final_layer_init_bound);

    embedding_ = Matrix(config_.stage_count, config_.embedding_dim);
    for (double& v : embedding_.data) v = rng.normal(0.0, config_.embedding_init_std);

    actor_opt_ = nn::OptimizerState::adam(config_.actor_lr);
    critic_opt_ = nn::OptimizerState::adam(config_.critic_lr);
    embedding_opt_ = nn::OptimizerState::adam(config_.embedding_lr);

    if (config_.use_soft_target) {
        actor_target_ = actor_;
        critic_target_ = critic_;
    }
}

std::vector<double> StrategyModel::state_vector(int stage, double smooth_loss,
                                                double smooth_acc) const {
    std::vector<double> s = features::stage_embedding_lookup(embedding_, stage);
    s.push_back(smooth_loss);
    s.push_back(smooth_acc);
    return s;
}

std::vector<double> StrategyModel::actor_forward(const std::vector<double>& s) const {
    if (static_cast<int>(s.size()) != state_dim()) throw Error("actor_forward: bad state length");
    return actor_.forward_one(s);
}

Matrix StrategyModel::actor_forward_batch(const Matrix& s) const { return actor_.forward(s); }

double StrategyModel::critic_forward(const std::vector<double>& s,
                                     const std::vector<double>& theta) const {
    if (static_cast<int>(s.size()) != state_dim()) throw Error("critic_forward: bad state length");
    if (static_cast<int>(theta.size()) != kThetaDim) throw Error("critic_forward: bad theta length");
    std::vector<double> joint = s;
    joint.insert(joint.end(), theta.begin(), theta.end());
    return critic_.forward_one(joint)[0];
}

void StrategyModel::zero_actor() {
    actor_.zero_layer(actor_.layer_count() - 1);
    if (config_.use_soft_target) actor_target_ = actor_;
}

Matrix StrategyModel::assemble_states(const std::vector<const Transition*>& batch,
                                      bool next) const {
    Matrix s(static_cast<int>(batch.size()), state_dim());
    for (size_t i = 0; i < batch.size(); ++i) {
        const Transition& tr = *batch[i];
        const int stage = next ? tr.next_stage : tr.stage;
        const std::vector<double> row = state_vector(
            stage, next ? tr.next_smooth_loss : tr.smooth_loss,
            next ? tr.next_smooth_acc : tr.smooth_acc);
        std::copy(row.begin(), row.end(), s.row(static_cast<int>(i)));
    }
    return s;
}

void StrategyModel::apply_embedding_gradient(const Matrix& state_grad,
                                             const std::vector<const Transition*>& batch,
                                             bool next) {
    std::vector<double> grad(embedding_.size(), 0.0);
    const int d = config_.embedding_dim;
    for (size_t i = 0; i < batch.size(); ++i) {
        const int stage = next ? batch[i]->next_stage : batch[i]->stage;
        double* row = grad.data() + static_cast<size_t>(stage - 1) * d;
        const double* g = state_grad.row(static_cast<int>(i));
        for (int k = 0; k < d; ++k) row[k] += g[k];
    }
    nn::optimizer_step(embedding_opt_, embedding_.data, grad);
}

void StrategyModel::soft_update_targets() {
    const double tau = config_.soft_target_tau;
    auto blend = [tau](std::vector<double>& target, const std::vector<double>& live) {
        for (size_t k = 0; k < target.size(); ++k) {
            target[k] = (1.0 - tau) * target[k] + tau * live[k];
        }
    };
    blend(actor_target_.params(), actor_.params());
    blend(critic_target_.params(), critic_.params());
}

void StrategyModel::fdu_update(const ReplayBuffer& buffer, Rng& shuffle_rng, int num_workers,
                               FduStats* stats) {
    if (num_workers < 1) throw Error("fdu_update: num_workers must be >= 1");
    if (buffer.empty()) return;

    const int n = buffer.size();
    const int d = config_.embedding_dim;
    const int sdim = state_dim();
    if (stats != nullptr && stats->participation.empty()) {
        stats->participation.assign(static_cast<size_t>(n), 0);
    }

    std::vector<int> order(static_cast<size_t>(n));
    for (int epoch = 0; epoch < config_.fdu_epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        shuffle_rng.shuffle(order);

        for (int start = 0; start < n; start += config_.fdu_batch_size) {
            const int count = std::min(config_.fdu_batch_size, n - start);
            std::vector<const Transition*> batch;
            batch.reserve(static_cast<size_t>(count));
            for (int k = 0; k < count; ++k) {
                batch.push_back(&buffer.at(order[static_cast<size_t>(start + k)]));
            }

            // --- critic step -------------------------------------------------
            const Matrix s_next = assemble_states(batch, true);
            const nn::DenseNet& target_actor = config_.use_soft_target ? actor_target_ : actor_;
            const nn::DenseNet& target_critic = config_.use_soft_target ? critic_target_ : critic_;
            const Matrix theta_next = target_actor.forward(s_next);
            Matrix joint_next(count, sdim + kThetaDim);
            for (int i = 0; i < count; ++i) {
                std::copy(s_next.row(i), s_next.row(i) + sdim, joint_next.row(i));
                std::copy(theta_next.row(i), theta_next.row(i) + kThetaDim,
                          joint_next.row(i) + sdim);
            }
            const Matrix q_next = target_critic.forward(joint_next);

            std::vector<double> targets(static_cast<size_t>(count));
            for (int i = 0; i < count; ++i) {
                const Transition& tr = *batch[i];
                targets[static_cast<size_t>(i)] =
                    tr.done ? tr.reward : tr.reward + config_.discount * q_next.at(i, 0);
            }

            const Matrix s_cur = assemble_states(batch, false);
            Matrix joint(count, sdim + kThetaDim);
            for (int i = 0; i < count; ++i) {
                std::copy(s_cur.row(i), s_cur.row(i) + sdim, joint.row(i));
                std::copy(batch[static_cast<size_t>(i)]->theta.begin(),
                          batch[static_cast<size_t>(i)]->theta.end(), joint.row(i) + sdim);
            }
            nn::ForwardCache critic_cache;
            const Matrix q = critic_.forward(joint, critic_cache);

            double critic_loss = 0.0;
            Matrix dq(count, 1);
            for (int i = 0; i < count; ++i) {
                const double err = q.at(i, 0) - targets[static_cast<size_t>(i)];
                critic_loss += err * err;
                dq.at(i, 0) = 2.0 * err / count;
            }
            critic_loss /= count;
            if (!std::isfinite(critic_loss)) {
                throw Error("fdu_update: non-finite critic loss, strategy search diverged");
            }

            Matrix d_joint;
            const std::vector<double> critic_grads = critic_.backward(critic_cache, dq, &d_joint);
            nn::optimizer_step(critic_opt_, critic_.params(), critic_grads);
            Matrix d_state(count, sdim);
            for (int i = 0; i < count; ++i) {
                std::copy(d_joint.row(i), d_joint.row(i) + d, d_state.row(i));
            }
            apply_embedding_gradient(d_state, batch, false);

            // --- actor step --------------------------------------------------
            // Rebuilt so the actor sees the embedding the critic step produced.
            const Matrix s_cur2 = assemble_states(batch, false);
            nn::ForwardCache actor_cache;
            const Matrix theta_cur = actor_.forward(s_cur2, actor_cache);
            Matrix joint2(count, sdim + kThetaDim);
            for (int i = 0; i < count; ++i) {
                std::copy(s_cur2.row(i), s_cur2.row(i) + sdim, joint2.row(i));
                std::copy(theta_cur.row(i), theta_cur.row(i) + kThetaDim, joint2.row(i) + sdim);
            }
            nn::ForwardCache critic_cache2;
            (void)critic_.forward(joint2, critic_cache2);
            Matrix dq2(count, 1, -1.0 / count);  // ascend mean Q
            Matrix d_joint2;
            (void)critic_.backward(critic_cache2, dq2, &d_joint2);

            Matrix d_theta(count, kThetaDim);
            for (int i = 0; i < count; ++i) {
                std::copy(d_joint2.row(i) + sdim, d_joint2.row(i) + sdim + kThetaDim,
                          d_theta.row(i));
            }
            Matrix d_actor_in;
            const std::vector<double> actor_grads = actor_.backward(actor_cache, d_theta, &d_actor_in);
            nn::optimizer_step(actor_opt_, actor_.params(), actor_grads);
            Matrix d_state2(count, sdim);
            for (int i = 0; i < count; ++i) {
                std::copy(d_actor_in.row(i), d_actor_in.row(i) + d, d_state2.row(i));
            }
            apply_embedding_gradient(d_state2, batch, false);

            if (config_.use_soft_target) soft_update_targets();

            if (stats != nullptr) {
                stats->critic_steps += 1;
                stats->actor_steps += 1;
                FduStepRecord rec;
                for (int k = 0; k < count; ++k) {
                    rec.indices.push_back(order[static_cast<size_t>(start + k)]);
                    stats->participation[static_cast<size_t>(order[static_cast<size_t>(start + k)])] += 1;
                }
                rec.targets = targets;
                stats->steps.push_back(std::move(rec));
            }
        }
    }
}

bool StrategyModel::all_parameters_finite() const {
    return nn::all_finite(actor_.params()) && nn::all_finite(critic_.params()) &&
           nn::all_finite(embedding_.data);
}

uint64_t StrategyModel::param_checksum() const {
    uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::vector<double>& vals) {
        for (double v : vals) {
            uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xFFu;
                h *= 1099511628211ULL;
            }
        }
    };
    mix(actor_.params());
    mix(critic_.params());
    mix(embedding_.data);
    return h;
}

// ---------------------------------------------------------------------------

std::vector<double> weights_from_features(const Matrix& features, const std::vector<double>& theta,
                                          bool fixed_bias) {
    if (static_cast<int>(theta.size()) != kThetaDim) {
        throw Error("weights_from_features: theta must have length 5");
    }
    if (features.cols != kThetaDim - 1) {
        throw Error("weights_from_features: features must have 4 columns");
    }
    // Open-interval clamp: float64 tanh saturates to exactly +-1 for |z| >~ 19.
    static const double kMax = std::nextafter(2.0, 0.0);
    static const double kMin = std::numeric_limits<double>::min();
    const double bias = fixed_bias ? 0.0 : theta[kThetaDim - 1];

    std::vector<double> weights(static_cast<size_t>(features.rows));
    for (int r = 0; r < features.rows; ++r) {
        const double* f = features.row(r);
        double z = bias;
        for (int c = 0; c < features.cols; ++c) z += theta[static_cast<size_t>(c)] * f[c];
        double w = 1.0 + std::tanh(z);
        if (w > kMax) w = kMax;
        if (w < kMin) w = kMin;
        weights[static_cast<size_t>(r)] = w;
    }
    return weights;
}

void add_exploration_noise(std::vector<double>& theta, double sigma, Rng& rng) {
    if (sigma < 0.0) throw Error("exploration sigma must be nonnegative");
    if (sigma == 0.0) return;
    for (double& v : theta) v += rng.normal(0.0, sigma);
}

double exploration_sigma(int round, int total_rounds, double sigma0, double sigma_min) {
    if (total_rounds < 1) return sigma_min;
    double progress = static_cast<double>(round) / total_rounds;
    progress = std::clamp(progress, 0.0, 1.0);
    return sigma0 + (sigma_min - sigma0) * progress;
}

std::vector<double> average_parameter_vectors(const std::vector<const std::vector<double>*>& grads) {
    if (grads.empty()) throw Error("average_parameter_vectors: nothing to average");
    std::vector<double> out(grads.front()->size(), 0.0);
    for (const auto* g : grads) {
        if (g->size() != out.size()) throw Error("average_parameter_vectors: shape mismatch");
        for (size_t k = 0; k < out.size(); ++k) out[k] += (*g)[k];
    }
    const double inv = 1.0 / static_cast<double>(grads.size());
    for (double& v : out) v *= inv;
    return out;
}

// ---------------------------------------------------------------------------

namespace {
constexpr char kStrategyMagic[8] = {'L', 'A', 'W', 'S', 'T', 'R', '0', '1'};

json optimizer_to_json(const nn::OptimizerState& opt) {
    return json{{"kind", nn::optimizer_kind_name(opt.kind)},
                {"learning_rate", opt.learning_rate},
                {"momentum", opt.momentum},
                {"beta1", opt.beta1},
                {"beta2", opt.beta2},
                {"epsilon", opt.epsilon},
                {"weight_decay", opt.weight_decay},
                {"step_count", opt.step_count},
                {"m_size", opt.m.size()},
                {"v_size", opt.v.size()}};
}

nn::OptimizerState optimizer_from_json(const json& j) {
    nn::OptimizerState opt;
    opt.kind = nn::optimizer_kind_from_name(j.at("kind").get<std::string>());
    opt.learning_rate = j.at("learning_rate").get<double>();
    opt.momentum = j.at("momentum").get<double>();
    opt.beta1 = j.at("beta1").get<double>();
    opt.beta2 = j.at("beta2").get<double>();
    opt.epsilon = j.at("epsilon").get<double>();
    opt.weight_decay = j.at("weight_decay").get<double>();
    opt.step_count = j.at("step_count").get<long>();
    opt.m.resize(j.at("m_size").get<size_t>());
    opt.v.resize(j.at("v_size").get<size_t>());
    return opt;
}

void write_opt_buffers(std::ostream& out, const nn::OptimizerState& opt) {
    io::write_f64_block(out, opt.m.data(), opt.m.size());
    io::write_f64_block(out, opt.v.data(), opt.v.size());
}

void read_opt_buffers(std::istream& in, nn::OptimizerState& opt, const std::string& what) {
    io::read_f64_block(in, opt.m.data(), opt.m.size(), what + " m buffer");
    io::read_f64_block(in, opt.v.data(), opt.v.size(), what + " v buffer");
}

}  // namespace

void StrategyModel::save(const std::string& path) const {
    json header;
    header["config"] = {{"stage_count", config_.stage_count},
                        {"embedding_dim", config_.embedding_dim},
                        {"hidden_dims", config_.hidden_dims},
                        {"actor_lr", config_.actor_lr},
                        {"critic_lr", config_.critic_lr},
                        {"embedding_lr", config_.embedding_lr},
                        {"discount", config_.discount},
                        {"buffer_capacity", config_.buffer_capacity},
                        {"fdu_epochs", config_.fdu_epochs},
                        {"fdu_batch_size", config_.fdu_batch_size},
                        {"fixed_bias", config_.fixed_bias},
                        {"use_soft_target", config_.use_soft_target},
                        {"soft_target_tau", config_.soft_target_tau},
                        {"embedding_init_std", config_.embedding_init_std},
                        {"final_layer_init_bound", config_.final_layer_init_bound}};
    header["episodes_completed"] = episodes_completed;
    header["sigma_position"] = sigma_position;
    header["actor_optimizer"] = optimizer_to_json(actor_opt_);
    header["critic_optimizer"] = optimizer_to_json(critic_opt_);
    header["embedding_optimizer"] = optimizer_to_json(embedding_opt_);
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open strategy checkpoint for writing: " + path);
    io::write_bytes(out, kStrategyMagic, sizeof(kStrategyMagic));
    io::write_u64(out, header_str.size());
    io::write_bytes(out, header_str.data(), header_str.size());
    io::write_f64_block(out, actor_.params().data(), actor_.param_count());
    write_opt_buffers(out, actor_opt_);
    io::write_f64_block(out, critic_.params().data(), critic_.param_count());
    write_opt_buffers(out, critic_opt_);
    io::write_f64_block(out, embedding_.data.data(), embedding_.size());
    write_opt_buffers(out, embedding_opt_);
    if (config_.use_soft_target) {
        io::write_f64_block(out, actor_target_.params().data(), actor_target_.param_count());
        io::write_f64_block(out, critic_target_.params().data(), critic_target_.param_count());
    }
}

StrategyModel StrategyModel::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open strategy checkpoint for reading: " + path);
    char magic[8];
    io::read_bytes(in, magic, sizeof(magic), "strategy magic");
    if (std::string(magic, 8) != std::string(kStrategyMagic, 8)) {
        throw IoError("not a strategy checkpoint: " + path);
    }
    const uint64_t header_len = io::read_u64(in, "strategy header length");
    if (header_len > (1ULL << 24)) throw IoError("implausible strategy header size: " + path);
    std::string header_str(header_len, '\0');
    io::read_bytes(in, header_str.data(), header_len, "strategy header");

    json header;
    try {
        header = json::parse(header_str);
    } catch (const std::exception& e) {
        throw IoError("malformed strategy header in " + path + ": " + e.what());
    }

    const auto& cj = header.at("config");
    StrategyConfig cfg;
    cfg.stage_count = cj.at("stage_count").get<int>();
    cfg.embedding_dim = cj.at("embedding_dim").get<int>();
    cfg.hidden_dims = cj.at("hidden_dims").get<std::vector<int>>();
    cfg.actor_lr = cj.at("actor_lr").get<double>();
    cfg.critic_lr = cj.at("critic_lr").get<double>();
    cfg.embedding_lr = cj.at("embedding_lr").get<double>();
    cfg.discount = cj.at("discount").get<double>();
    cfg.buffer_capacity = cj.at("buffer_capacity").get<int>();
    cfg.fdu_epochs = cj.at("fdu_epochs").get<int>();
    cfg.fdu_batch_size = cj.at("fdu_batch_size").get<int>();
    cfg.fixed_bias = cj.at("fixed_bias").get<bool>();
    cfg.use_soft_target = cj.at("use_soft_target").get<bool>();
    cfg.soft_target_tau = cj.at("soft_target_tau").get<double>();
    cfg.embedding_init_std = cj.at("embedding_init_std").get<double>();
    cfg.final_layer_init_bound = cj.at("final_layer_init_bound").get<double>();

    Rng scratch(0);
    StrategyModel model(cfg, scratch);
    model.episodes_completed = header.at("episodes_completed").get<int64_t>();
    model.sigma_position = header.at("sigma_position").get<double>();
    model.actor_opt_ = optimizer_from_json(header.at("actor_optimizer"));
    model.critic_opt_ = optimizer_from_json(header.at("critic_optimizer"));
    model.embedding_opt_ = optimizer_from_json(header.at("embedding_optimizer"));

    io::read_f64_block(in, model.actor_.params().data(), model.actor_.param_count(),
                       "actor parameters");
    read_opt_buffers(in, model.actor_opt_, "actor optimizer");
    io::read_f64_block(in, model.critic_.params().data(), model.critic_.param_count(),
                       "critic parameters");
    read_opt_buffers(in, model.critic_opt_, "critic optimizer");
    io::read_f64_block(in, model.embedding_.data.data(), model.embedding_.size(),
                       "embedding table");
    read_opt_buffers(in, model.embedding_opt_, "embedding optimizer");
    if (cfg.use_soft_target) {
        io::read_f64_block(in, model.actor_target_.params().data(),
                           model.actor_target_.param_count(), "actor target parameters");
        io::read_f64_block(in, model.critic_target_.params().data(),
                           model.critic_target_.param_count(), "critic target parameters");
    }
    return model;
}

// ---------------------------------------------------------------------------

void StaticSchedule::save_csv(const std::string& path) const {
    std::ostringstream out;
    out << "stage,theta_0,theta_1,theta_2,theta_3,theta_4\n";
    for (size_t t = 0; t < theta.size(); ++t) {
        out << (t + 1);
        for (double v : theta[t]) out << ',' << io::format_double(v);
        out << '\n';
    }
    io::write_text_file(path, out.str());
}

StaticSchedule StaticSchedule::load_csv(const std::string& path) {
    std::istringstream in(io::read_text_file(path));
    std::string line;
    if (!std::getline(in, line) || line != "stage,theta_0,theta_1,theta_2,theta_3,theta_4") {
        throw IoError("not a static schedule CSV: " + path);
    }
    StaticSchedule schedule;
    int expected_stage = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        std::vector<double> values;
        while (std::getline(row, field, ',')) {
            try {
                values.push_back(std::stod(field));
            } catch (const std::exception&) {
                throw IoError("malformed static schedule row in " + path + ": " + line);
            }
        }
        if (values.size() != 1 + kThetaDim || static_cast<int>(values[0]) != expected_stage) {
            throw IoError("malformed static schedule row in " + path + ": " + line);
        }
        std::array<double, kThetaDim> row_theta{};
        for (int k = 0; k < kThetaDim; ++k) row_theta[static_cast<size_t>(k)] = values[static_cast<size_t>(k + 1)];
        schedule.theta.push_back(row_theta);
        expected_stage += 1;
    }
    if (schedule.theta.empty()) throw IoError("static schedule has no rows: " + path);
    return schedule;
}

}  // namespace law::strategy
