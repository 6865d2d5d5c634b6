#ifndef CLEF_KERNELS_HPP
#define CLEF_KERNELS_HPP

#include <cstddef>
#include <string>

namespace clef::kernels {

// Dense double-precision inner loops behind the tensor engine. Every entry
// point has a scalar reference implementation and an AVX2 variant; the active
// table is picked once at startup (CPUID, overridable via set_backend or the
// CLEF_KERNELS=scalar|avx2 environment variable). Elementwise kernels are
// bit-identical across backends; reductions (dot/sum and the matmul_nt row
// dots) reassociate and are equivalence-tested to tight tolerances instead.
enum class Backend { scalar, avx2 };

Backend active_backend();
bool backend_supported(Backend b);
void set_backend(Backend b);  // throws ValidationError if unsupported
std::string backend_name(Backend b);

// Reductions.
double dot(const double* x, const double* y, std::size_t n);
double sum(const double* x, std::size_t n);
double max_value(const double* x, std::size_t n);  // n >= 1

// Elementwise.
void axpy(double a, const double* x, double* y, std::size_t n);  // y += a*x
void scale(double a, double* x, std::size_t n);                  // x *= a
void relu(const double* x, double* y, std::size_t n);
void relu_grad_accum(const double* x, const double* dy, double* dx, std::size_t n);  // dx += dy * (x > 0)

// Matrix blocks, row-major.
// c[m x n] = a[m x k] * b[n x k]^T (+ bias per column when bias != nullptr)
void matmul_nt_affine(const double* a, const double* b, const double* bias, double* c,
                      std::size_t m, std::size_t n, std::size_t k);
// c[m x n] += a[m x k] * b[k x n]
void matmul_nn_accum(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t n, std::size_t k);
// c[m x n] += a[k x m]^T * b[k x n]
void matmul_tn_accum(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t n, std::size_t k);
// out[n] += column sums of a[m x n]
void colsum_accum(const double* a, double* out, std::size_t m, std::size_t n);

// Optimizer updates.
void sgd_step(double* p, const double* g, std::size_t n, double lr);
void momentum_step(double* p, double* vel, const double* g, std::size_t n, double lr, double mu);
void adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double beta1, double beta2, double eps,
               double beta1_pow_t, double beta2_pow_t);

// Full kernel table, used by the dispatcher and the equivalence tests.
struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*sum)(const double*, std::size_t);
    double (*max_value)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scale)(double, double*, std::size_t);
    void (*relu)(const double*, double*, std::size_t);
    void (*relu_grad_accum)(const double*, const double*, double*, std::size_t);
    void (*matmul_nt_affine)(const double*, const double*, const double*, double*,
                             std::size_t, std::size_t, std::size_t);
    void (*matmul_nn_accum)(const double*, const double*, double*,
                            std::size_t, std::size_t, std::size_t);
    void (*matmul_tn_accum)(const double*, const double*, double*,
                            std::size_t, std::size_t, std::size_t);
    void (*colsum_accum)(const double*, double*, std::size_t, std::size_t);
    void (*sgd_step)(double*, const double*, std::size_t, double);
    void (*momentum_step)(double*, double*, const double*, std::size_t, double, double);
    void (*adam_step)(double*, double*, double*, const double*, std::size_t,
                      double, double, double, double, double, double);
};

const Table& scalar_table();
const Table* avx2_table();  // nullptr when not compiled in / unsupported

}  // namespace clef::kernels

#endif  // CLEF_KERNELS_HPP
