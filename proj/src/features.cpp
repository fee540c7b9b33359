#include "law/features.hpp"

#include <cmath>
#include <sstream>

#include "law/error.hpp"

namespace law::features {

std::vector<double> compute_entropy(const Matrix& probabilities) {
    std::vector<double> out(static_cast<size_t>(probabilities.rows), 0.0);
    for (int r = 0; r < probabilities.rows; ++r) {
        const double* p = probabilities.row(r);
        double h = 0.0;
        for (int c = 0; c < probabilities.cols; ++c) {
            if (p[c] > 0.0) h -= p[c] * std::log(p[c]);
        }
        out[static_cast<size_t>(r)] = h;
    }
    return out;
}

std::vector<double> compute_density(const Matrix& logits, bool include_diagonal) {
    const int b = logits.rows;
    std::vector<double> out(static_cast<size_t>(b), 0.0);
    if (b == 1 && !include_diagonal) return out;
    for (int i = 0; i < b; ++i) {
        double acc = 0.0;
        for (int j = 0; j < b; ++j) {
            if (j == i && !include_diagonal) continue;
            double dot = 0.0;
            const double* zi = logits.row(i);
            const double* zj = logits.row(j);
            for (int c = 0; c < logits.cols; ++c) dot += zi[c] * zj[c];
            acc += dot;
        }
        const int peers = include_diagonal ? b : b - 1;
        out[static_cast<size_t>(i)] = acc / peers;
    }
    return out;
}

double label_feature(int y, int class_count) {
    return static_cast<double>(y) / (class_count - 1);
}

void zscore_columns(Matrix& m) {
    for (int c = 0; c < m.cols; ++c) {
        double mean = 0.0;
        for (int r = 0; r < m.rows; ++r) mean += m.at(r, c);
        mean /= m.rows;
        double var = 0.0;
        for (int r = 0; r < m.rows; ++r) {
            const double d = m.at(r, c) - mean;
            var += d * d;
        }
        var /= m.rows;
        const double sd = std::sqrt(var);
        if (sd < kConstantEps) {
            for (int r = 0; r < m.rows; ++r) m.at(r, c) = 0.0;
        } else {
            const double inv = 1.0 / sd;
            for (int r = 0; r < m.rows; ++r) m.at(r, c) = (m.at(r, c) - mean) * inv;
        }
    }
}

Matrix assemble_features(const std::vector<double>& losses, const Matrix& probabilities,
                         const Matrix& logits, const std::vector<int>& labels,
                         bool include_density_diagonal) {
    const int b = probabilities.rows;
    if (static_cast<int>(losses.size()) != b || static_cast<int>(labels.size()) != b ||
        logits.rows != b) {
        throw Error("assemble_features: inconsistent batch dimension");
    }
    const std::vector<double> entropy = compute_entropy(probabilities);
    const std::vector<double> density = compute_density(logits, include_density_diagonal);

    Matrix f(b, kItemFeatureCount);
    for (int r = 0; r < b; ++r) {
        f.at(r, 0) = losses[static_cast<size_t>(r)];
        f.at(r, 1) = entropy[static_cast<size_t>(r)];
        f.at(r, 2) = density[static_cast<size_t>(r)];
        f.at(r, 3) = label_feature(labels[static_cast<size_t>(r)], probabilities.cols);
    }
    zscore_columns(f);
    return f;
}

std::vector<double> stage_embedding_lookup(const Matrix& table, int stage) {
    if (stage < 1 || stage > table.rows) {
        std::ostringstream msg;
        msg << "stage " << stage << " outside embedding table [1, " << table.rows << "]";
        throw Error(msg.str());
    }
    const double* row = table.row(stage - 1);
    return std::vector<double>(row, row + table.cols);
}

}  // namespace law::features
