#include "clef/kernels.hpp"

#include <cmath>

// Scalar reference kernels. Loop structure deliberately mirrors the AVX2
// variants so elementwise paths stay bit-identical between backends.

namespace clef::kernels {
namespace {

double k_dot(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double k_sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i];
    return acc;
}

double k_max_value(const double* x, std::size_t n) {
    double m = x[0];
    for (std::size_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

void k_axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void k_scale(double a, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

void k_relu(const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void k_relu_grad_accum(const double* x, const double* dy, double* dx, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) dx[i] += x[i] > 0.0 ? dy[i] : 0.0;
}

void k_matmul_nt_affine(const double* a, const double* b, const double* bias, double* c,
                        std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (std::size_t j = 0; j < n; ++j) {
            crow[j] = (bias ? bias[j] : 0.0) + k_dot(arow, b + j * k, k);
        }
    }
}

void k_matmul_nn_accum(const double* a, const double* b, double* c,
                       std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        double* crow = c + i * n;
        for (std::size_t l = 0; l < k; ++l) {
            k_axpy(a[i * k + l], b + l * n, crow, n);
        }
    }
}

void k_matmul_tn_accum(const double* a, const double* b, double* c,
                       std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t r = 0; r < k; ++r) {
        const double* brow = b + r * n;
        for (std::size_t i = 0; i < m; ++i) {
            k_axpy(a[r * m + i], brow, c + i * n, n);
        }
    }
}

void k_colsum_accum(const double* a, double* out, std::size_t m, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const double* arow = a + i * n;
        for (std::size_t j = 0; j < n; ++j) out[j] += arow[j];
    }
}

void k_sgd_step(double* p, const double* g, std::size_t n, double lr) {
    for (std::size_t i = 0; i < n; ++i) p[i] -= lr * g[i];
}

void k_momentum_step(double* p, double* vel, const double* g, std::size_t n, double lr, double mu) {
    for (std::size_t i = 0; i < n; ++i) {
        vel[i] = mu * vel[i] + g[i];
        p[i] -= lr * vel[i];
    }
}

void k_adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double beta1_pow_t, double beta2_pow_t) {
    for (std::size_t i = 0; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        double mhat = m[i] / (1.0 - beta1_pow_t);
        double vhat = v[i] / (1.0 - beta2_pow_t);
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Table& scalar_table() {
    static const Table t = {
        k_dot,        k_sum,   k_max_value,       k_axpy,
        k_scale,      k_relu,  k_relu_grad_accum, k_matmul_nt_affine,
        k_matmul_nn_accum,     k_matmul_tn_accum, k_colsum_accum,
        k_sgd_step,   k_momentum_step,            k_adam_step,
    };
    return t;
}

}  // namespace clef::kernels
