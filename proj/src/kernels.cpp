#include "clef/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <cstring>

#include "clef/errors.hpp"

namespace clef::kernels {
namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(_M_X64)
    return __builtin_cpu_supports("avx2") != 0;
#else
    return false;
#endif
}

Backend detect() {
    if (const char* env = std::getenv("CLEF_KERNELS")) {
        if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
        if (std::strcmp(env, "avx2") == 0 && backend_supported(Backend::avx2)) return Backend::avx2;
    }
    return backend_supported(Backend::avx2) ? Backend::avx2 : Backend::scalar;
}

struct State {
    const Table* table;
    Backend backend;
};

State& state() {
    static State s = [] {
        Backend b = detect();
        return State{b == Backend::avx2 ? avx2_table() : &scalar_table(), b};
    }();
    return s;
}

}  // namespace

Backend active_backend() { return state().backend; }

bool backend_supported(Backend b) {
    switch (b) {
        case Backend::scalar: return true;
        case Backend::avx2: return avx2_table() != nullptr && cpu_has_avx2();
    }
    return false;
}

void set_backend(Backend b) {
    if (!backend_supported(b)) {
        throw ValidationError("kernel backend not supported on this machine: " + backend_name(b));
    }
    state().table = b == Backend::avx2 ? avx2_table() : &scalar_table();
    state().backend = b;
}

std::string backend_name(Backend b) {
    return b == Backend::scalar ? "scalar" : "avx2";
}

double dot(const double* x, const double* y, std::size_t n) { return state().table->dot(x, y, n); }
double sum(const double* x, std::size_t n) { return state().table->sum(x, n); }
double max_value(const double* x, std::size_t n) { return state().table->max_value(x, n); }
void axpy(double a, const double* x, double* y, std::size_t n) { state().table->axpy(a, x, y, n); }
void scale(double a, double* x, std::size_t n) { state().table->scale(a, x, n); }
void relu(const double* x, double* y, std::size_t n) { state().table->relu(x, y, n); }
void relu_grad_accum(const double* x, const double* dy, double* dx, std::size_t n) {
    state().table->relu_grad_accum(x, dy, dx, n);
}
void matmul_nt_affine(const double* a, const double* b, const double* bias, double* c,
                      std::size_t m, std::size_t n, std::size_t k) {
    state().table->matmul_nt_affine(a, b, bias, c, m, n, k);
}
void matmul_nn_accum(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t n, std::size_t k) {
    state().table->matmul_nn_accum(a, b, c, m, n, k);
}
void matmul_tn_accum(const double* a, const double* b, double* c,
                     std::size_t m, std::size_t n, std::size_t k) {
    state().table->matmul_tn_accum(a, b, c, m, n, k);
}
void colsum_accum(const double* a, double* out, std::size_t m, std::size_t n) {
    state().table->colsum_accum(a, out, m, n);
}
void sgd_step(double* p, const double* g, std::size_t n, double lr) {
    state().table->sgd_step(p, g, n, lr);
}
void momentum_step(double* p, double* vel, const double* g, std::size_t n, double lr, double mu) {
    state().table->momentum_step(p, vel, g, n, lr, mu);
}
void adam_step(double* p, double* m, double* v, const double* g, std::size_t n,
               double lr, double beta1, double beta2, double eps,
               double beta1_pow_t, double beta2_pow_t) {
    state().table->adam_step(p, m, v, g, n, lr, beta1, beta2, eps, beta1_pow_t, beta2_pow_t);
}

}  // namespace clef::kernels
