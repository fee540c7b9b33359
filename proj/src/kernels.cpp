#include "law/kernels.hpp"

#include <cmath>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace law::kernels {

namespace serial {

void dense_forward(const double* x, const double* w, const double* bias, double* y,
                   int batch, int in_dim, int out_dim) {
    for (int b = 0; b < batch; ++b) {
        const double* xb = x + static_cast<size_t>(b) * in_dim;
        double* yb = y + static_cast<size_t>(b) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wo = w + static_cast<size_t>(o) * in_dim;
            double acc = bias[o];
            for (int i = 0; i < in_dim; ++i) acc += xb[i] * wo[i];
            yb[o] = acc;
        }
    }
}

void dense_grad_weights(const double* dy, const double* x, double* dw,
                        int batch, int in_dim, int out_dim) {
    for (int o = 0; o < out_dim; ++o) {
        double* dwo = dw + static_cast<size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) dwo[i] = 0.0;
        for (int b = 0; b < batch; ++b) {
            const double g = dy[static_cast<size_t>(b) * out_dim + o];
            if (g == 0.0) continue;
            const double* xb = x + static_cast<size_t>(b) * in_dim;
            for (int i = 0; i < in_dim; ++i) dwo[i] += g * xb[i];
        }
    }
}

void dense_grad_bias(const double* dy, double* db, int batch, int out_dim) {
    for (int o = 0; o < out_dim; ++o) {
        double acc = 0.0;
        for (int b = 0; b < batch; ++b) acc += dy[static_cast<size_t>(b) * out_dim + o];
        db[o] = acc;
    }
}

void dense_grad_input(const double* dy, const double* w, double* dx,
                      int batch, int in_dim, int out_dim) {
    for (int b = 0; b < batch; ++b) {
        const double* dyb = dy + static_cast<size_t>(b) * out_dim;
        double* dxb = dx + static_cast<size_t>(b) * in_dim;
        for (int i = 0; i < in_dim; ++i) dxb[i] = 0.0;
        for (int o = 0; o < out_dim; ++o) {
            const double g = dyb[o];
            if (g == 0.0) continue;
            const double* wo = w + static_cast<size_t>(o) * in_dim;
            for (int i = 0; i < in_dim; ++i) dxb[i] += g * wo[i];
        }
    }
}

void relu_inplace(double* v, size_t n) {
    for (size_t k = 0; k < n; ++k) {
        if (v[k] < 0.0) v[k] = 0.0;
    }
}

void relu_backward_inplace(double* grad, const double* act, size_t n) {
    for (size_t k = 0; k < n; ++k) {
        if (act[k] <= 0.0) grad[k] = 0.0;
    }
}

void tanh_inplace(double* v, size_t n) {
    for (size_t k = 0; k < n; ++k) v[k] = std::tanh(v[k]);
}

void tanh_backward_inplace(double* grad, const double* act, size_t n) {
    for (size_t k = 0; k < n; ++k) grad[k] *= 1.0 - act[k] * act[k];
}

}  // namespace serial

namespace {
// Element-op count below which the parallel pragmas are skipped.
constexpr long long kGrain = 1 << 15;
}

void dense_forward(const double* x, const double* w, const double* bias, double* y,
                   int batch, int in_dim, int out_dim) {
    const long long work = 1LL * batch * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int b = 0; b < batch; ++b) {
        const double* xb = x + static_cast<size_t>(b) * in_dim;
        double* yb = y + static_cast<size_t>(b) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const double* wo = w + static_cast<size_t>(o) * in_dim;
            double acc = bias[o];
            for (int i = 0; i < in_dim; ++i) acc += xb[i] * wo[i];
            yb[o] = acc;
        }
    }
}

void dense_grad_weights(const double* dy, const double* x, double* dw,
                        int batch, int in_dim, int out_dim) {
    const long long work = 1LL * batch * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int o = 0; o < out_dim; ++o) {
        double* dwo = dw + static_cast<size_t>(o) * in_dim;
        for (int i = 0; i < in_dim; ++i) dwo[i] = 0.0;
        for (int b = 0; b < batch; ++b) {
            const double g = dy[static_cast<size_t>(b) * out_dim + o];
            if (g == 0.0) continue;
            const double* xb = x + static_cast<size_t>(b) * in_dim;
            for (int i = 0; i < in_dim; ++i) dwo[i] += g * xb[i];
        }
    }
}

void dense_grad_bias(const double* dy, double* db, int batch, int out_dim) {
    const long long work = 1LL * batch * out_dim;
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int o = 0; o < out_dim; ++o) {
        double acc = 0.0;
        for (int b = 0; b < batch; ++b) acc += dy[static_cast<size_t>(b) * out_dim + o];
        db[o] = acc;
    }
}

void dense_grad_input(const double* dy, const double* w, double* dx,
                      int batch, int in_dim, int out_dim) {
    const long long work = 1LL * batch * in_dim * out_dim;
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (int b = 0; b < batch; ++b) {
        const double* dyb = dy + static_cast<size_t>(b) * out_dim;
        double* dxb = dx + static_cast<size_t>(b) * in_dim;
        for (int i = 0; i < in_dim; ++i) dxb[i] = 0.0;
        for (int o = 0; o < out_dim; ++o) {
            const double g = dyb[o];
            if (g == 0.0) continue;
            const double* wo = w + static_cast<size_t>(o) * in_dim;
            for (int i = 0; i < in_dim; ++i) dxb[i] += g * wo[i];
        }
    }
}

void relu_inplace(double* v, size_t n) {
    const long long work = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (long long k = 0; k < work; ++k) {
        if (v[k] < 0.0) v[k] = 0.0;
    }
}

void relu_backward_inplace(double* grad, const double* act, size_t n) {
    const long long work = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (long long k = 0; k < work; ++k) {
        if (act[k] <= 0.0) grad[k] = 0.0;
    }
}

void tanh_inplace(double* v, size_t n) {
    const long long work = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (long long k = 0; k < work; ++k) v[k] = std::tanh(v[k]);
}

void tanh_backward_inplace(double* grad, const double* act, size_t n) {
    const long long work = static_cast<long long>(n);
#pragma omp parallel for schedule(static) if (work >= kGrain)
    for (long long k = 0; k < work; ++k) grad[k] *= 1.0 - act[k] * act[k];
}

}  // namespace law::kernels
