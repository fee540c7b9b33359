#pragma once

#include <cstddef>

namespace law::kernels {

// Serial reference kernels. These are the ground truth the parallel variants
// are tested against and the fallback when OpenMP is unavailable.
namespace serial {

// y[b, o] = sum_i x[b, i] * w[o, i] + bias[o]
// x: batch x in_dim, w: out_dim x in_dim (row-major), y: batch x out_dim.
void dense_forward(const double* x, const double* w, const double* bias, double* y,
                   int batch, int in_dim, int out_dim);

// dw[o, i] = sum_b dy[b, o] * x[b, i]
void dense_grad_weights(const double* dy, const double* x, double* dw,
                        int batch, int in_dim, int out_dim);

// db[o] = sum_b dy[b, o]
void dense_grad_bias(const double* dy, double* db, int batch, int out_dim);

// dx[b, i] = sum_o dy[b, o] * w[o, i]
void dense_grad_input(const double* dy, const double* w, double* dx,
                      int batch, int in_dim, int out_dim);

void relu_inplace(double* v, size_t n);
// grad[k] *= (act[k] > 0). act holds the post-activation values.
void relu_backward_inplace(double* grad, const double* act, size_t n);

void tanh_inplace(double* v, size_t n);
// grad[k] *= (1 - act[k]^2). act holds the post-activation values.
void tanh_backward_inplace(double* grad, const double* act, size_t n);

}  // namespace serial

// OpenMP-parallel kernels. Each output element is owned by exactly one thread
// and accumulated in a fixed order, so results are bit-identical to the
// serial reference for any thread count.
void dense_forward(const double* x, const double* w, const double* bias, double* y,
                   int batch, int in_dim, int out_dim);
void dense_grad_weights(const double* dy, const double* x, double* dw,
                        int batch, int in_dim, int out_dim);
void dense_grad_bias(const double* dy, double* db, int batch, int out_dim);
void dense_grad_input(const double* dy, const double* w, double* dx,
                      int batch, int in_dim, int out_dim);
void relu_inplace(double* v, size_t n);
void relu_backward_inplace(double* grad, const double* act, size_t n);
void tanh_inplace(double* v, size_t n);
void tanh_backward_inplace(double* grad, const double* act, size_t n);

}  // namespace law::kernels
