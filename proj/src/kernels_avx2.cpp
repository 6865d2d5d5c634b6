#include "clef/kernels.hpp"

// AVX2 kernel variants. This translation unit is compiled with -mavx2 (and
// nothing else target-specific); on other architectures it degrades to a
// stub that reports the backend as unavailable.
//
// Elementwise kernels perform the exact per-element operation sequence of the
// scalar reference, so they are bit-identical. Reductions use four
// accumulator lanes and are only equivalent up to rounding.

#if defined(__AVX2__)

#include <immintrin.h>

#include <cmath>

namespace clef::kernels {
namespace {

inline double hsum4(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    __m128d s = _mm_add_pd(lo, hi);
    __m128d swapped = _mm_unpackhi_pd(s, s);
    return _mm_cvtsd_f64(_mm_add_sd(s, swapped));
}

double k_dot(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    __m256d acc2 = _mm256_setzero_pd();
    __m256d acc3 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4)));
        acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(_mm256_loadu_pd(x + i + 8), _mm256_loadu_pd(y + i + 8)));
        acc3 = _mm256_add_pd(acc3, _mm256_mul_pd(_mm256_loadu_pd(x + i + 12), _mm256_loadu_pd(y + i + 12)));
    }
    for (; i + 4 <= n; i += 4) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    double acc = hsum4(_mm256_add_pd(_mm256_add_pd(acc0, acc1), _mm256_add_pd(acc2, acc3)));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double k_sum(const double* x, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    for (; i + 4 <= n; i += 4) acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    double acc = hsum4(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

double k_max_value(const double* x, std::size_t n) {
    std::size_t i = 0;
    double m = x[0];
    if (n >= 4) {
        __m256d vm = _mm256_loadu_pd(x);
        i = 4;
        for (; i + 4 <= n; i += 4) vm = _mm256_max_pd(vm, _mm256_loadu_pd(x + i));
        __m128d lo = _mm256_castpd256_pd128(vm);
        __m128d hi = _mm256_extractf128_pd(vm, 1);
        __m128d mx = _mm_max_pd(lo, hi);
        __m128d swapped = _mm_unpackhi_pd(mx, mx);
        m = _mm_cvtsd_f64(_mm_max_sd(mx, swapped));
    }
    for (; i < n; ++i) m = x[i] > m ? x[i] : m;
    return m;
}

void k_axpy(double a, const double* x, double* y, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void k_scale(double a, double* x, std::size_t n) {
    __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(x + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), va));
    }
    for (; i < n; ++i) x[i] *= a;
}

void k_relu(const double* x, double* y, std::size_t n) {
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        // max_pd(x, 0) returns +0 for both +/-0 inputs, matching the scalar branch.
        _mm256_storeu_pd(y + i, _mm256_max_pd(_mm256_loadu_pd(x + i), zero));
    }
    for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void k_relu_grad_accum(const double* x, const double* dy, double* dx, std::size_t n) {
    __m256d zero = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(x + i), zero, _CMP_GT_OQ);
        __m256d contrib = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
        _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), contrib));
    }
    for (; i < n; ++i) dx[i] += x[i] > 0.0 ? dy[i] : 0.0;
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
        std::size_t j = 0;
        for (; j + 4 <= n; j += 4) {
            _mm256_storeu_pd(out + j, _mm256_add_pd(_mm256_loadu_pd(out + j), _mm256_loadu_pd(arow + j)));
        }
        for (; j < n; ++j) out[j] += arow[j];
    }
}

void k_sgd_step(double* p, const double* g, std::size_t n, double lr) {
    __m256d vlr = _mm256_set1_pd(lr);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vp = _mm256_loadu_pd(p + i);
        vp = _mm256_sub_pd(vp, _mm256_mul_pd(vlr, _mm256_loadu_pd(g + i)));
        _mm256_storeu_pd(p + i, vp);
    }
    for (; i < n; ++i) p[i] -= lr * g[i];
}

void k_momentum_step(double* p, double* vel, const double* g, std::size_t n, double lr, double mu) {
    __m256d vlr = _mm256_set1_pd(lr);
    __m256d vmu = _mm256_set1_pd(mu);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vv = _mm256_add_pd(_mm256_mul_pd(vmu, _mm256_loadu_pd(vel + i)), _mm256_loadu_pd(g + i));
        _mm256_storeu_pd(vel + i, vv);
        __m256d vp = _mm256_sub_pd(_mm256_loadu_pd(p + i), _mm256_mul_pd(vlr, vv));
        _mm256_storeu_pd(p + i, vp);
    }
    for (; i < n; ++i) {
        vel[i] = mu * vel[i] + g[i];
        p[i] -= lr * vel[i];
    }
}

void k_adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
                 double lr, double beta1, double beta2, double eps,
                 double beta1_pow_t, double beta2_pow_t) {
    __m256d vb1 = _mm256_set1_pd(beta1);
    __m256d vb2 = _mm256_set1_pd(beta2);
    __m256d vomb1 = _mm256_set1_pd(1.0 - beta1);
    __m256d vomb2 = _mm256_set1_pd(1.0 - beta2);
    __m256d vbc1 = _mm256_set1_pd(1.0 - beta1_pow_t);
    __m256d vbc2 = _mm256_set1_pd(1.0 - beta2_pow_t);
    __m256d vlr = _mm256_set1_pd(lr);
    __m256d veps = _mm256_set1_pd(eps);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vg = _mm256_loadu_pd(g + i);
        __m256d vm = _mm256_add_pd(_mm256_mul_pd(vb1, _mm256_loadu_pd(m + i)), _mm256_mul_pd(vomb1, vg));
        __m256d vv = _mm256_add_pd(_mm256_mul_pd(vb2, _mm256_loadu_pd(v + i)),
                                   _mm256_mul_pd(vomb2, _mm256_mul_pd(vg, vg)));
        _mm256_storeu_pd(m + i, vm);
        _mm256_storeu_pd(v + i, vv);
        __m256d mhat = _mm256_div_pd(vm, vbc1);
        __m256d vhat = _mm256_div_pd(vv, vbc2);
        __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(vhat), veps);
        __m256d vp = _mm256_sub_pd(_mm256_loadu_pd(p + i),
                                   _mm256_div_pd(_mm256_mul_pd(vlr, mhat), denom));
        _mm256_storeu_pd(p + i, vp);
    }
    for (; i < n; ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * (g[i] * g[i]);
        double mhat = m[i] / (1.0 - beta1_pow_t);
        double vhat = v[i] / (1.0 - beta2_pow_t);
        p[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
}

}  // namespace

const Table* avx2_table() {
    static const Table t = {
        k_dot,        k_sum,   k_max_value,       k_axpy,
        k_scale,      k_relu,  k_relu_grad_accum, k_matmul_nt_affine,
        k_matmul_nn_accum,     k_matmul_tn_accum, k_colsum_accum,
        k_sgd_step,   k_momentum_step,            k_adam_step,
    };
    return &t;
}

}  // namespace clef::kernels

#else  // !defined(__AVX2__)

namespace clef::kernels {

const Table* avx2_table() { return nullptr; }

}  // namespace clef::kernels

#endif
