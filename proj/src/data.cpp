#include "law/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "law/error.hpp"
#include "law/io.hpp"

namespace law::data {

using json = nlohmann::ordered_json;

const char* generator_name(Generator g) {
    return g == Generator::kGaussianBlobs ? "gaussian-blobs" : "two-spirals";
}

Generator generator_from_name(const std::string& name) {
    if (name == "gaussian-blobs") return Generator::kGaussianBlobs;
    if (name == "two-spirals") return Generator::kTwoSpirals;
    throw ConfigError("unknown dataset generator: " + name);
}

void DatasetSpec::validate() const {
    if (class_count < 2) throw ConfigError("dataset: class_count must be >= 2");
    if (input_dim < 2) throw ConfigError("dataset: input_dim must be >= 2");
    if (per_class_count < 1) throw ConfigError("dataset: per_class_count must be >= 1");
    if (val_size < 1 || test_size < 1) throw ConfigError("dataset: empty split");
    if (noise_rate < 0.0 || noise_rate > 1.0) throw ConfigError("dataset: noise_rate must be in [0,1]");
    if (!imbalance_fractions.empty()) {
        if (static_cast<int>(imbalance_fractions.size()) != class_count) {
            throw ConfigError("dataset: imbalance_fractions must have one entry per class");
        }
        for (double f : imbalance_fractions) {
            if (!(f > 0.0) || f > 1.0) {
                throw ConfigError("dataset: imbalance fractions must lie in (0, 1]");
            }
        }
    }
    if (blob_sigma <= 0.0) throw ConfigError("dataset: blob_sigma must be positive");
}

int Dataset::corrupted_count() const {
    int n = 0;
    for (int i = 0; i < size(); ++i) n += corrupted(i) ? 1 : 0;
    return n;
}

std::vector<int> Dataset::label_histogram() const {
    std::vector<int> hist(static_cast<size_t>(class_count), 0);
    for (int v : y) hist[static_cast<size_t>(v)] += 1;
    return hist;
}

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::vector<double>> blob_means(const DatasetSpec& spec) {
    // Class means evenly spaced on a circle in the first two dimensions; the
    // circle radius realizes the requested adjacent inter-mean distance.
    const int c_count = spec.class_count;
    const double dist = spec.blob_separation * spec.blob_sigma;
    const double radius = dist / (2.0 * std::sin(kPi / c_count));
    std::vector<std::vector<double>> means;
    for (int c = 0; c < c_count; ++c) {
        std::vector<double> mu(static_cast<size_t>(spec.input_dim), 0.0);
        const double angle = 2.0 * kPi * c / c_count;
        mu[0] = radius * std::cos(angle);
        mu[1] = radius * std::sin(angle);
        means.push_back(std::move(mu));
    }
    return means;
}

void draw_example(const DatasetSpec& spec, const std::vector<std::vector<double>>& means, int cls,
                  Rng& rng, double* out) {
    if (spec.generator == Generator::kGaussianBlobs) {
        const auto& mu = means[static_cast<size_t>(cls)];
        for (int d = 0; d < spec.input_dim; ++d) {
            out[d] = mu[static_cast<size_t>(d)] + spec.blob_sigma * rng.normal();
        }
        return;
    }
    // Interleaved spiral arms, one per class, in the first two dimensions.
    const double u = rng.uniform();
    const double angle = 2.0 * kPi * (spec.spiral_turns * u + static_cast<double>(cls) / spec.class_count);
    const double radius = 0.25 + 3.75 * u;
    out[0] = radius * std::cos(angle) + spec.spiral_noise * rng.normal();
    out[1] = radius * std::sin(angle) + spec.spiral_noise * rng.normal();
    for (int d = 2; d < spec.input_dim; ++d) out[d] = spec.spiral_noise * rng.normal();
}

Dataset draw_split(const DatasetSpec& spec, const std::vector<int>& per_class, uint64_t seed,
                   int64_t id_base) {
    const auto means = blob_means(spec);
    int total = 0;
    for (int n : per_class) total += n;

    Dataset ds;
    ds.class_count = spec.class_count;
    ds.x = Matrix(total, spec.input_dim);
    ds.y.reserve(static_cast<size_t>(total));
    ds.y_true.reserve(static_cast<size_t>(total));
    ds.id.reserve(static_cast<size_t>(total));

    Rng rng(seed);
    int row = 0;
    for (int c = 0; c < spec.class_count; ++c) {
        for (int k = 0; k < per_class[static_cast<size_t>(c)]; ++k) {
            draw_example(spec, means, c, rng, ds.x.row(row));
            ds.y.push_back(c);
            ds.y_true.push_back(c);
            ds.id.push_back(id_base + row);
            ++row;
        }
    }
    return ds;
}

std::vector<int> balanced_counts(int total, int class_count) {
    std::vector<int> counts(static_cast<size_t>(class_count), total / class_count);
    // Remainder goes to the lowest class indices so the draw stays deterministic.
    for (int c = 0; c < total % class_count; ++c) counts[static_cast<size_t>(c)] += 1;
    return counts;
}

}  // namespace

DatasetBundle generate(const DatasetSpec& spec) {
    spec.validate();

    const std::vector<int> train_counts(static_cast<size_t>(spec.class_count), spec.per_class_count);
    const std::vector<int> val_counts = balanced_counts(spec.val_size, spec.class_count);
    const std::vector<int> test_counts = balanced_counts(spec.test_size, spec.class_count);

    DatasetBundle bundle;
    const int64_t train_total = static_cast<int64_t>(spec.per_class_count) * spec.class_count;
    bundle.train = draw_split(spec, train_counts, derive_seed(spec.seed, 1), 0);
    bundle.val = draw_split(spec, val_counts, derive_seed(spec.seed, 2), train_total);
    bundle.test = draw_split(spec, test_counts, derive_seed(spec.seed, 3), train_total + spec.val_size);

    if (!spec.imbalance_fractions.empty()) {
        bundle.train = make_imbalanced(bundle.train, spec.imbalance_fractions, derive_seed(spec.seed, 4));
    }
    if (spec.noise_rate > 0.0) {
        bundle.train = inject_label_noise(bundle.train, spec.noise_rate, derive_seed(spec.seed, 5));
    }
    return bundle;
}

Dataset inject_label_noise(const Dataset& dataset, double p, uint64_t seed) {
    if (p < 0.0 || p > 1.0) throw ConfigError("noise rate must be in [0,1]");
    Dataset out = dataset;
    Rng rng(seed);
    for (int i = 0; i < out.size(); ++i) {
        if (rng.uniform() < p) {
            out.y[static_cast<size_t>(i)] = rng.next_int(out.class_count);
        }
    }
    return out;
}

Dataset make_imbalanced(const Dataset& dataset, const std::vector<double>& fractions,
                        uint64_t seed) {
    if (static_cast<int>(fractions.size()) != dataset.class_count) {
        throw ConfigError("imbalance fractions must have one entry per class");
    }
    std::vector<std::vector<int>> by_class(static_cast<size_t>(dataset.class_count));
    for (int i = 0; i < dataset.size(); ++i) {
        by_class[static_cast<size_t>(dataset.y[static_cast<size_t>(i)])].push_back(i);
    }

    Rng rng(seed);
    std::vector<bool> keep(static_cast<size_t>(dataset.size()), false);
    for (int c = 0; c < dataset.class_count; ++c) {
        auto& rows = by_class[static_cast<size_t>(c)];
        const double frac = fractions[static_cast<size_t>(c)];
        if (!(frac > 0.0) || frac > 1.0) throw ConfigError("imbalance fractions must lie in (0, 1]");
        const int want = static_cast<int>(std::llround(frac * static_cast<double>(rows.size())));
        if (want <= 0) {
            std::ostringstream msg;
            msg << "imbalance would leave class " << c << " empty";
            throw ConfigError(msg.str());
        }
        // Partial Fisher-Yates: the first `want` slots are a uniform sample
        // without replacement.
        for (int k = 0; k < want; ++k) {
            const int j = k + rng.next_int(static_cast<int>(rows.size()) - k);
            std::swap(rows[static_cast<size_t>(k)], rows[static_cast<size_t>(j)]);
            keep[static_cast<size_t>(rows[static_cast<size_t>(k)])] = true;
        }
    }

    Dataset out;
    out.class_count = dataset.class_count;
    int kept = 0;
    for (bool k : keep) kept += k ? 1 : 0;
    out.x = Matrix(kept, dataset.x.cols);
    out.y.reserve(static_cast<size_t>(kept));
    out.y_true.reserve(static_cast<size_t>(kept));
    out.id.reserve(static_cast<size_t>(kept));
    int row = 0;
    for (int i = 0; i < dataset.size(); ++i) {
        if (!keep[static_cast<size_t>(i)]) continue;
        std::copy(dataset.x.row(i), dataset.x.row(i) + dataset.x.cols, out.x.row(row));
        out.y.push_back(dataset.y[static_cast<size_t>(i)]);
        out.y_true.push_back(dataset.y_true[static_cast<size_t>(i)]);
        out.id.push_back(dataset.id[static_cast<size_t>(i)]);
        ++row;
    }
    return out;
}

BatchStream::BatchStream(const Dataset& dataset, int batch_size, uint64_t seed)
    : dataset_(&dataset), batch_size_(batch_size), seed_(seed) {
    if (batch_size_ < 1) throw ConfigError("batch size must be >= 1");
    if (batch_size_ > dataset.size()) throw ConfigError("batch size exceeds dataset size");
    batches_per_epoch_ = (dataset.size() + batch_size_ - 1) / batch_size_;
    order_.resize(static_cast<size_t>(dataset.size()));
    start_epoch();
}

void BatchStream::start_epoch() {
    epoch_ += 1;
    cursor_ = 0;
    std::iota(order_.begin(), order_.end(), 0);
    Rng rng(derive_seed(seed_, static_cast<uint64_t>(epoch_)));
    rng.shuffle(order_);
}

Batch BatchStream::next() {
    if (cursor_ >= dataset_->size()) start_epoch();
    const int count = std::min(batch_size_, dataset_->size() - cursor_);
    Batch batch;
    batch.indices.reserve(static_cast<size_t>(count));
    batch.x = Matrix(count, dataset_->x.cols);
    batch.y.reserve(static_cast<size_t>(count));
    for (int k = 0; k < count; ++k) {
        const int idx = order_[static_cast<size_t>(cursor_ + k)];
        batch.indices.push_back(idx);
        std::copy(dataset_->x.row(idx), dataset_->x.row(idx) + dataset_->x.cols, batch.x.row(k));
        batch.y.push_back(dataset_->y[static_cast<size_t>(idx)]);
    }
    cursor_ += count;
    return batch;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kDatasetMagic[8] = {'L', 'A', 'W', 'D', 'A', 'T', '0', '1'};

json spec_to_json(const DatasetSpec& spec) {
    json j;
    j["generator"] = generator_name(spec.generator);
    j["class_count"] = spec.class_count;
    j["input_dim"] = spec.input_dim;
    j["per_class_count"] = spec.per_class_count;
    j["val_size"] = spec.val_size;
    j["test_size"] = spec.test_size;
    j["noise_rate"] = spec.noise_rate;
    j["imbalance_fractions"] = spec.imbalance_fractions;
    j["seed"] = spec.seed;
    j["blob_sigma"] = spec.blob_sigma;
    j["blob_separation"] = spec.blob_separation;
    j["spiral_turns"] = spec.spiral_turns;
    j["spiral_noise"] = spec.spiral_noise;
    return j;
}

DatasetSpec spec_from_json(const json& j) {
    DatasetSpec spec;
    spec.generator = generator_from_name(j.at("generator").get<std::string>());
    spec.class_count = j.at("class_count").get<int>();
    spec.input_dim = j.at("input_dim").get<int>();
    spec.per_class_count = j.at("per_class_count").get<int>();
    spec.val_size = j.at("val_size").get<int>();
    spec.test_size = j.at("test_size").get<int>();
    spec.noise_rate = j.at("noise_rate").get<double>();
    spec.imbalance_fractions = j.at("imbalance_fractions").get<std::vector<double>>();
    spec.seed = j.at("seed").get<uint64_t>();
    spec.blob_sigma = j.at("blob_sigma").get<double>();
    spec.blob_separation = j.at("blob_separation").get<double>();
    spec.spiral_turns = j.at("spiral_turns").get<double>();
    spec.spiral_noise = j.at("spiral_noise").get<double>();
    return spec;
}

void write_split(std::ostream& out, const Dataset& ds) {
    io::write_f64_block(out, ds.x.data.data(), ds.x.size());
    std::vector<int64_t> col(static_cast<size_t>(ds.size()));
    for (int i = 0; i < ds.size(); ++i) col[static_cast<size_t>(i)] = ds.y[static_cast<size_t>(i)];
    io::write_i64_block(out, col.data(), col.size());
    for (int i = 0; i < ds.size(); ++i) col[static_cast<size_t>(i)] = ds.y_true[static_cast<size_t>(i)];
    io::write_i64_block(out, col.data(), col.size());
    io::write_i64_block(out, ds.id.data(), ds.id.size());
}

Dataset read_split(std::istream& in, int rows, int cols, int class_count, const std::string& name) {
    Dataset ds;
    ds.class_count = class_count;
    ds.x = Matrix(rows, cols);
    io::read_f64_block(in, ds.x.data.data(), ds.x.size(), name + " features");
    std::vector<int64_t> col(static_cast<size_t>(rows));
    io::read_i64_block(in, col.data(), col.size(), name + " labels");
    ds.y.assign(col.begin(), col.end());
    io::read_i64_block(in, col.data(), col.size(), name + " true labels");
    ds.y_true.assign(col.begin(), col.end());
    ds.id.resize(static_cast<size_t>(rows));
    io::read_i64_block(in, ds.id.data(), ds.id.size(), name + " ids");
    for (int v : ds.y) {
        if (v < 0 || v >= class_count) throw IoError("dataset file has out-of-range label");
    }
    return ds;
}

}  // namespace

void save_dataset(const std::string& path, const DatasetBundle& bundle, const DatasetSpec& spec) {
    json header;
    header["spec"] = spec_to_json(spec);
    header["input_dim"] = bundle.train.x.cols;
    header["class_count"] = bundle.train.class_count;
    header["splits"] = {
        {"train", bundle.train.size()}, {"val", bundle.val.size()}, {"test", bundle.test.size()}};
    const std::string header_str = header.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open dataset for writing: " + path);
    io::write_bytes(out, kDatasetMagic, sizeof(kDatasetMagic));
    io::write_u64(out, header_str.size());
    io::write_bytes(out, header_str.data(), header_str.size());
    write_split(out, bundle.train);
    write_split(out, bundle.val);
    write_split(out, bundle.test);
}

DatasetBundle load_dataset(const std::string& path, DatasetSpec* spec_out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset for reading: " + path);
    char magic[8];
    io::read_bytes(in, magic, sizeof(magic), "dataset magic");
    if (std::string(magic, 8) != std::string(kDatasetMagic, 8)) {
        throw IoError("not a dataset file: " + path);
    }
    const uint64_t header_len = io::read_u64(in, "dataset header length");
    if (header_len > (1ULL << 24)) throw IoError("implausible dataset header size: " + path);
    std::string header_str(header_len, '\0');
    io::read_bytes(in, header_str.data(), header_len, "dataset header");

    json header;
    try {
        header = json::parse(header_str);
    } catch (const std::exception& e) {
        throw IoError("malformed dataset header in " + path + ": " + e.what());
    }
    const int input_dim = header.at("input_dim").get<int>();
    const int class_count = header.at("class_count").get<int>();
    const auto& splits = header.at("splits");

    DatasetBundle bundle;
    bundle.train = read_split(in, splits.at("train").get<int>(), input_dim, class_count, "train");
    bundle.val = read_split(in, splits.at("val").get<int>(), input_dim, class_count, "val");
    bundle.test = read_split(in, splits.at("test").get<int>(), input_dim, class_count, "test");
    if (spec_out != nullptr) *spec_out = spec_from_json(header.at("spec"));
    return bundle;
}

}  // namespace law::data
