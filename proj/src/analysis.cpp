#include "law/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "law/error.hpp"
#include "law/io.hpp"

namespace law::analysis {

const char* baseline_kind_name(BaselineKind k) {
    return k == BaselineKind::kUniform ? "uniform" : "focal";
}

BaselineKind baseline_kind_from_name(const std::string& name) {
    if (name == "uniform") return BaselineKind::kUniform;
    if (name == "focal") return BaselineKind::kFocal;
    throw ConfigError("unknown baseline kind: " + name);
}

BaselineResult train_baseline(const episode::EpisodeConfig& config,
                              const data::DatasetBundle& bundle, BaselineKind kind,
                              double focal_gamma, const episode::EpisodeSeeds& seeds) {
    config.validate();
    if (kind == BaselineKind::kFocal && focal_gamma < 0.0) {
        throw ConfigError("focal gamma must be nonnegative");
    }
    const data::Dataset& train = bundle.train;

    std::vector<int> dims;
    dims.push_back(train.x.cols);
    for (int h : config.classifier.hidden_dims) dims.push_back(h);
    dims.push_back(train.class_count);

    nn::DenseNet net(dims, nn::Activation::kRelu, nn::Activation::kIdentity);
    Rng init_rng(seeds.init);
    net.init_he_uniform(init_rng);
    nn::OptimizerState opt = nn::OptimizerState::sgd_momentum(config.lr.base, config.momentum,
                                                              config.weight_decay);
    data::BatchStream stream(train, config.batch_size, seeds.data_order);

    BaselineResult out;
    for (int stage = 1; stage <= config.stage_count && !out.failed; ++stage) {
        opt.learning_rate = config.lr.at_stage(stage);
        for (int step = 0; step < config.steps_per_stage; ++step) {
            data::Batch batch = stream.next();
            nn::ForwardCache cache;
            const Matrix logits = net.forward(batch.x, cache);
            const nn::LossResult loss = kind == BaselineKind::kUniform
                                            ? nn::softmax_cross_entropy(logits, batch.y)
                                            : nn::focal_loss(logits, batch.y, focal_gamma);
            double mean = 0.0;
            for (double l : loss.losses) mean += l;
            mean /= static_cast<double>(loss.losses.size());
            if (!std::isfinite(mean)) {
                out.failed = true;
                break;
            }
            const std::vector<double> unit(static_cast<size_t>(batch.x.rows), 1.0);
            const Matrix dlogits = kind == BaselineKind::kUniform
                                       ? nn::ce_logit_grad(loss.probs, batch.y, unit)
                                       : nn::focal_logit_grad(loss.probs, batch.y, focal_gamma, unit);
            const std::vector<double> grads = net.backward(cache, dlogits);
            try {
                nn::optimizer_step(opt, net.params(), grads);
            } catch (const Error&) {
                out.failed = true;
                break;
            }
        }
    }

    if (!out.failed) {
        out.val_accuracy = episode::evaluate_accuracy(net, bundle.val);
        out.test_accuracy = episode::evaluate_accuracy(net, bundle.test);
    }
    out.net = std::move(net);
    return out;
}

std::vector<LossGapPoint> loss_gap(const std::vector<episode::StageRecord>& trace) {
    std::vector<LossGapPoint> out;
    out.reserve(trace.size());
    for (const auto& rec : trace) {
        out.push_back({rec.episode, rec.stage, rec.mean_loss_gap});
    }
    return out;
}

std::vector<WeightMeanPoint> weight_means(const std::vector<episode::StageRecord>& trace,
                                          const std::vector<int>& minority_classes) {
    std::vector<WeightMeanPoint> out;
    out.reserve(trace.size());
    for (const auto& rec : trace) {
        const int class_count = static_cast<int>(rec.weight_mean_per_class.size());
        std::vector<bool> is_minority(static_cast<size_t>(class_count), false);
        for (int c : minority_classes) {
            if (c < 0 || c >= class_count) throw ConfigError("minority class index out of range");
            is_minority[static_cast<size_t>(c)] = true;
        }
        double min_sum = 0.0, other_sum = 0.0;
        long min_count = 0, other_count = 0;
        for (int c = 0; c < class_count; ++c) {
            const long n = rec.weight_count_per_class[static_cast<size_t>(c)];
            if (n == 0) continue;
            const double total = rec.weight_mean_per_class[static_cast<size_t>(c)] * n;
            if (is_minority[static_cast<size_t>(c)]) {
                min_sum += total;
                min_count += n;
            } else {
                other_sum += total;
                other_count += n;
            }
        }
        WeightMeanPoint p;
        p.episode = rec.episode;
        p.stage = rec.stage;
        p.minority_mean = min_count > 0 ? min_sum / min_count
                                        : std::numeric_limits<double>::quiet_NaN();
        p.other_mean = other_count > 0 ? other_sum / other_count
                                       : std::numeric_limits<double>::quiet_NaN();
        out.push_back(p);
    }
    return out;
}

MeanStd mean_std(const std::vector<double>& values) {
    MeanStd out;
    if (values.empty()) return out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double acc = 0.0;
        for (double v : values) {
            const double d = v - out.mean;
            acc += d * d;
        }
        out.stddev = std::sqrt(acc / static_cast<double>(values.size() - 1));
    }
    return out;
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

double parse_double(const std::string& s, const std::string& path) {
    try {
        return std::stod(s);
    } catch (const std::exception&) {
        throw IoError("malformed numeric field '" + s + "' in " + path);
    }
}

long parse_long(const std::string& s, const std::string& path) {
    try {
        return std::stol(s);
    } catch (const std::exception&) {
        throw IoError("malformed integer field '" + s + "' in " + path);
    }
}

}  // namespace

void save_trace_csv(const std::string& path, const std::vector<episode::StageRecord>& trace,
                    int class_count) {
    std::ostringstream out;
    out << "episode,stage,acc_target,acc_reference,reward";
    for (int k = 0; k < strategy::kThetaDim; ++k) out << ",theta_" << k;
    out << ",mean_loss_gap";
    for (int c = 0; c < class_count; ++c) out << ",weight_mean_c" << c;
    for (int c = 0; c < class_count; ++c) out << ",weight_count_c" << c;
    out << '\n';
    for (const auto& rec : trace) {
        out << rec.episode << ',' << rec.stage << ',' << io::format_double(rec.acc_target) << ','
            << io::format_double(rec.acc_reference) << ',' << io::format_double(rec.reward);
        for (double t : rec.theta) out << ',' << io::format_double(t);
        out << ',' << io::format_double(rec.mean_loss_gap);
        for (int c = 0; c < class_count; ++c) {
            out << ',' << io::format_double(rec.weight_mean_per_class[static_cast<size_t>(c)]);
        }
        for (int c = 0; c < class_count; ++c) {
            out << ',' << rec.weight_count_per_class[static_cast<size_t>(c)];
        }
        out << '\n';
    }
    io::write_text_file(path, out.str());
}

std::vector<episode::StageRecord> load_trace_csv(const std::string& path, int* class_count_out) {
    std::istringstream in(io::read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trace file: " + path);
    const auto header = split_csv_line(line);
    int class_count = 0;
    for (const auto& h : header) {
        if (h.rfind("weight_mean_c", 0) == 0) ++class_count;
    }
    const size_t expected = 6 + strategy::kThetaDim + 2 * static_cast<size_t>(class_count);
    if (header.size() != expected || header[0] != "episode" || header[1] != "stage") {
        throw IoError("unrecognized trace header in " + path);
    }

    std::vector<episode::StageRecord> trace;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != expected) throw IoError("malformed trace row in " + path + ": " + line);
        episode::StageRecord rec;
        size_t k = 0;
        rec.episode = static_cast<int>(parse_long(f[k++], path));
        rec.stage = static_cast<int>(parse_long(f[k++], path));
        rec.acc_target = parse_double(f[k++], path);
        rec.acc_reference = parse_double(f[k++], path);
        rec.reward = parse_double(f[k++], path);
        for (int t = 0; t < strategy::kThetaDim; ++t) {
            rec.theta[static_cast<size_t>(t)] = parse_double(f[k++], path);
        }
        rec.mean_loss_gap = parse_double(f[k++], path);
        rec.weight_mean_per_class.resize(static_cast<size_t>(class_count));
        rec.weight_count_per_class.resize(static_cast<size_t>(class_count));
        for (int c = 0; c < class_count; ++c) {
            rec.weight_mean_per_class[static_cast<size_t>(c)] = parse_double(f[k++], path);
        }
        for (int c = 0; c < class_count; ++c) {
            rec.weight_count_per_class[static_cast<size_t>(c)] = parse_long(f[k++], path);
        }
        trace.push_back(std::move(rec));
    }
    if (class_count_out != nullptr) *class_count_out = class_count;
    return trace;
}

void save_batch_log_csv(const std::string& path, const std::vector<episode::BatchRecord>& log,
                        int class_count) {
    std::ostringstream out;
    out << "stage,step,target_loss_mean,reference_loss_mean";
    for (int c = 0; c < class_count; ++c) out << ",weight_sum_c" << c;
    for (int c = 0; c < class_count; ++c) out << ",count_c" << c;
    out << '\n';
    for (const auto& rec : log) {
        out << rec.stage << ',' << rec.step << ',' << io::format_double(rec.target_loss_mean)
            << ',' << io::format_double(rec.reference_loss_mean);
        for (int c = 0; c < class_count; ++c) {
            out << ',' << io::format_double(rec.class_weight_sum[static_cast<size_t>(c)]);
        }
        for (int c = 0; c < class_count; ++c) {
            out << ',' << rec.class_count[static_cast<size_t>(c)];
        }
        out << '\n';
    }
    io::write_text_file(path, out.str());
}

std::vector<episode::BatchRecord> load_batch_log_csv(const std::string& path,
                                                     int* class_count_out) {
    std::istringstream in(io::read_text_file(path));
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty batch log: " + path);
    const auto header = split_csv_line(line);
    int class_count = 0;
    for (const auto& h : header) {
        if (h.rfind("weight_sum_c", 0) == 0) ++class_count;
    }
    const size_t expected = 4 + 2 * static_cast<size_t>(class_count);
    if (header.size() != expected || header[0] != "stage") {
        throw IoError("unrecognized batch log header in " + path);
    }
    std::vector<episode::BatchRecord> log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != expected) throw IoError("malformed batch log row in " + path);
        episode::BatchRecord rec;
        size_t k = 0;
        rec.stage = static_cast<int>(parse_long(f[k++], path));
        rec.step = static_cast<int>(parse_long(f[k++], path));
        rec.target_loss_mean = parse_double(f[k++], path);
        rec.reference_loss_mean = parse_double(f[k++], path);
        rec.class_weight_sum.resize(static_cast<size_t>(class_count));
        rec.class_count.resize(static_cast<size_t>(class_count));
        for (int c = 0; c < class_count; ++c) {
            rec.class_weight_sum[static_cast<size_t>(c)] = parse_double(f[k++], path);
        }
        for (int c = 0; c < class_count; ++c) {
            rec.class_count[static_cast<size_t>(c)] = parse_long(f[k++], path);
        }
        log.push_back(std::move(rec));
    }
    if (class_count_out != nullptr) *class_count_out = class_count;
    return log;
}

void save_loss_gap_csv(const std::string& path, const std::vector<LossGapPoint>& points) {
    std::ostringstream out;
    out << "episode,stage,gap\n";
    for (const auto& p : points) {
        out << p.episode << ',' << p.stage << ',' << io::format_double(p.gap) << '\n';
    }
    io::write_text_file(path, out.str());
}

void save_weight_means_csv(const std::string& path, const std::vector<WeightMeanPoint>& points) {
    std::ostringstream out;
    out << "episode,stage,minority_mean,other_mean\n";
    for (const auto& p : points) {
        out << p.episode << ',' << p.stage << ',' << io::format_double(p.minority_mean) << ','
            << io::format_double(p.other_mean) << '\n';
    }
    io::write_text_file(path, out.str());
}

}  // namespace law::analysis
