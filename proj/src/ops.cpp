#include "clef/ops.hpp"

#include <cmath>
#include <string>

#include "clef/errors.hpp"
#include "clef/kernels.hpp"

namespace clef::diff::ops {
namespace {

void check_finite(const Tensor& t, const char* op) {
    for (double v : t.values()) {
        if (!std::isfinite(v)) {
            throw DivergenceError(std::string("non-finite value produced by ") + op);
        }
    }
}

bool recording(Tape* tape, std::initializer_list<const Tensor*> inputs) {
    if (!tape) return false;
    for (const Tensor* t : inputs) {
        if (t->requires_grad()) return true;
    }
    return false;
}

Tensor output_like(const Tensor& x, bool needs_grad) {
    return Tensor::zeros(x.dims(), needs_grad);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.dims() != b.dims()) throw ShapeError(std::string(op) + ": shape mismatch");
}

}  // namespace

double sigmoid_value(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid_value(double x) {
    // log sigma(x) = min(x, 0) - log1p(exp(-|x|))
    double m = x < 0.0 ? x : 0.0;
    return m - std::log1p(std::exp(-std::abs(x)));
}

double log1mexp_value(double f) {
    if (!(f < 0.0)) throw DivergenceError("log1mexp: log-probability reached zero");
    static const double ln2 = 0.6931471805599453;
    if (f < -ln2) return std::log1p(-std::exp(f));
    return std::log(-std::expm1(f));
}

Tensor matmul_affine(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b) {
    if (w.rank() != 2) throw ShapeError("matmul_affine: weight must be 2-D");
    const std::size_t out = w.rows();
    const std::size_t in = w.cols();
    if (x.cols() != in) throw ShapeError("matmul_affine: input width mismatch");
    if (b.size() != out) throw ShapeError("matmul_affine: bias width mismatch");
    const std::size_t rows = x.rows();

    bool needs_grad = recording(tape, {&x, &w, &b});
    Tensor y = x.rank() >= 2 ? Tensor::zeros({rows, out}, needs_grad)
                             : Tensor::zeros({out}, needs_grad);
    kernels::matmul_nt_affine(x.values().data(), w.values().data(), b.values().data(),
                              y.values().data(), rows, out, in);
    check_finite(y, "matmul_affine");

    if (needs_grad) {
        Tensor xc = x, wc = w, bc = b, yc = y;
        tape->record([xc, wc, bc, yc, rows, out, in]() mutable {
            auto dy = yc.grad();
            if (xc.requires_grad()) {
                kernels::matmul_nn_accum(dy.data(), wc.values().data(), xc.grad().data(),
                                         rows, in, out);
            }
            if (wc.requires_grad()) {
                kernels::matmul_tn_accum(dy.data(), xc.values().data(), wc.grad().data(),
                                         out, in, rows);
            }
            if (bc.requires_grad()) {
                kernels::colsum_accum(dy.data(), bc.grad().data(), rows, out);
            }
        });
    }
    return y;
}

Tensor relu(Tape* tape, const Tensor& x) {
    bool needs_grad = recording(tape, {&x});
    Tensor y = output_like(x, needs_grad);
    kernels::relu(x.values().data(), y.values().data(), x.size());
    check_finite(y, "relu");
    if (needs_grad) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc]() mutable {
            kernels::relu_grad_accum(xc.values().data(), yc.grad().data(), xc.grad().data(),
                                     xc.size());
        });
    }
    return y;
}

Tensor sigmoid(Tape* tape, const Tensor& x) {
    bool needs_grad = recording(tape, {&x});
    Tensor y = output_like(x, needs_grad);
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = sigmoid_value(xv[i]);
    check_finite(y, "sigmoid");
    if (needs_grad) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc]() mutable {
            auto dy = yc.grad();
            auto s = yc.values();
            auto dx = xc.grad();
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * s[i] * (1.0 - s[i]);
        });
    }
    return y;
}

Tensor log_sigmoid(Tape* tape, const Tensor& x) {
    bool needs_grad = recording(tape, {&x});
    Tensor y = output_like(x, needs_grad);
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = log_sigmoid_value(xv[i]);
    check_finite(y, "log_sigmoid");
    if (needs_grad) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc]() mutable {
            auto dy = yc.grad();
            auto xs = xc.values();
            auto dx = xc.grad();
            // d/dx log sigma(x) = sigma(-x)
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * sigmoid_value(-xs[i]);
        });
    }
    return y;
}

Tensor softmax_logprobs(Tape* tape, const Tensor& x) {
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    if (cols == 0) throw ShapeError("softmax_logprobs: empty score vector");
    bool needs_grad = recording(tape, {&x});
    Tensor y = output_like(x, needs_grad);
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const double* row = xv.data() + r * cols;
        double* out = yv.data() + r * cols;
        double m = kernels::max_value(row, cols);
        double acc = 0.0;
        for (std::size_t j = 0; j < cols; ++j) acc += std::exp(row[j] - m);
        double lse = m + std::log(acc);
        for (std::size_t j = 0; j < cols; ++j) out[j] = row[j] - lse;
    }
    check_finite(y, "softmax_logprobs");
    if (needs_grad) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc, rows, cols]() mutable {
            auto dy = yc.grad();
            auto lp = yc.values();
            auto dx = xc.grad();
            for (std::size_t r = 0; r < rows; ++r) {
                double total = kernels::sum(dy.data() + r * cols, cols);
                for (std::size_t j = 0; j < cols; ++j) {
                    std::size_t i = r * cols + j;
                    dx[i] += dy[i] - std::exp(lp[i]) * total;
                }
            }
        });
    }
    return y;
}

Tensor exp_elem(Tape* tape, const Tensor& x) {
    bool needs_grad = recording(tape, {&x});
    Tensor y = output_like(x, needs_grad);
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < xv.size(); ++i) yv[i] = std::exp(xv[i]);
    check_finite(y, "exp_elem");
    if (needs_grad) {
        Tensor xc = x, yc = y;
        tape->record([xc, yc]() mutable {
            auto dy = yc.grad();
            auto ex = yc.values();
            auto dx = xc.grad();
            for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i] * ex[i];
        });
    }
    return y;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    bool needs_grad = recording(tape, {&a, &b});
    Tensor y = output_like(a, needs_grad);
    auto av = a.values();
    auto bv = b.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] + bv[i];
    check_finite(y, "add");
    if (needs_grad) {
        Tensor ac = a, bc = b, yc = y;
        tape->record([ac, bc, yc]() mutable {
            auto dy = yc.grad();
            if (ac.requires_grad()) kernels::axpy(1.0, dy.data(), ac.grad().data(), dy.size());
            if (bc.requires_grad()) kernels::axpy(1.0, dy.data(), bc.grad().data(), dy.size());
        });
    }
    return y;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    bool needs_grad = recording(tape, {&a, &b});
    Tensor y = output_like(a, needs_grad);
    auto av = a.values();
    auto bv = b.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] - bv[i];
    check_finite(y, "sub");
    if (needs_grad) {
        Tensor ac = a, bc = b, yc = y;
        tape->record([ac, bc, yc]() mutable {
            auto dy = yc.grad();
            if (ac.requires_grad()) kernels::axpy(1.0, dy.data(), ac.grad().data(), dy.size());
            if (bc.requires_grad()) kernels::axpy(-1.0, dy.data(), bc.grad().data(), dy.size());
        });
    }
    return y;
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    bool needs_grad = recording(tape, {&a, &b});
    Tensor y = output_like(a, needs_grad);
    auto av = a.values();
    auto bv = b.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = av[i] * bv[i];
    check_finite(y, "mul");
    if (needs_grad) {
        Tensor ac = a, bc = b, yc = y;
        tape->record([ac, bc, yc]() mutable {
            auto dy = yc.grad();
            if (ac.requires_grad()) {
                auto da = ac.grad();
                auto bv2 = bc.values();
                for (std::size_t i = 0; i < da.size(); ++i) da[i] += dy[i] * bv2[i];
            }
            if (bc.requires_grad()) {
                auto db = bc.grad();
                auto av2 = ac.values();
                for (std::size_t i = 0; i < db.size(); ++i) db[i] += dy[i] * av2[i];
            }
        });
    }
    return y;
}

Tensor scale(Tape* tape, const Tensor& a, double s) {
    bool needs_grad = recording(tape, {&a});
    Tensor y = output_like(a, needs_grad);
    auto av = a.values();
    auto yv = y.values();
    for (std::size_t i = 0; i < yv.size(); ++i) yv[i] = s * av[i];
    check_finite(y, "scale");
    if (needs_grad) {
        Tensor ac = a, yc = y;
        tape->record([ac, yc, s]() mutable {
            kernels::axpy(s, yc.grad().data(), ac.grad().data(), ac.size());
        });
    }
    return y;
}

Tensor sum(Tape* tape, const Tensor& a) {
    bool needs_grad = recording(tape, {&a});
    Tensor y = Tensor::zeros({1}, needs_grad);
    y.values()[0] = kernels::sum(a.values().data(), a.size());
    check_finite(y, "sum");
    if (needs_grad) {
        Tensor ac = a, yc = y;
        tape->record([ac, yc]() mutable {
            double g = yc.grad()[0];
            auto da = ac.grad();
            for (std::size_t i = 0; i < da.size(); ++i) da[i] += g;
        });
    }
    return y;
}

Tensor mean(Tape* tape, const Tensor& a) {
    if (a.size() == 0) throw ShapeError("mean: empty tensor");
    Tensor s = sum(tape, a);
    return scale(tape, s, 1.0 / static_cast<double>(a.size()));
}

Tensor concat_cols(Tape* tape, const Tensor& a, const Tensor& b) {
    const std::size_t rows = a.rows();
    if (b.rows() != rows) throw ShapeError("concat_cols: row count mismatch");
    const std::size_t ac = a.cols();
    const std::size_t bc_w = b.cols();
    bool needs_grad = recording(tape, {&a, &b});
    Tensor y = a.rank() >= 2 ? Tensor::zeros({rows, ac + bc_w}, needs_grad)
                             : Tensor::zeros({ac + bc_w}, needs_grad);
    auto av = a.values();
    auto bv = b.values();
    auto yv = y.values();
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t j = 0; j < ac; ++j) yv[r * (ac + bc_w) + j] = av[r * ac + j];
        for (std::size_t j = 0; j < bc_w; ++j) yv[r * (ac + bc_w) + ac + j] = bv[r * bc_w + j];
    }
    check_finite(y, "concat_cols");
    if (needs_grad) {
        Tensor acp = a, bcp = b, yc = y;
        tape->record([acp, bcp, yc, rows, ac, bc_w]() mutable {
            auto dy = yc.grad();
            if (acp.requires_grad()) {
                auto da = acp.grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < ac; ++j)
                        da[r * ac + j] += dy[r * (ac + bc_w) + j];
            }
            if (bcp.requires_grad()) {
                auto db = bcp.grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t j = 0; j < bc_w; ++j)
                        db[r * bc_w + j] += dy[r * (ac + bc_w) + ac + j];
            }
        });
    }
    return y;
}

Tensor tile_rows(Tape* tape, const Tensor& v, std::size_t rows) {
    if (v.rank() != 1) throw ShapeError("tile_rows: expects a 1-D tensor");
    const std::size_t cols = v.size();
    bool needs_grad = recording(tape, {&v});
    Tensor y = Tensor::zeros({rows, cols}, needs_grad);
    auto vv = v.values();
    auto yv = y.values();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t j = 0; j < cols; ++j) yv[r * cols + j] = vv[j];
    check_finite(y, "tile_rows");
    if (needs_grad) {
        Tensor vc = v, yc = y;
        tape->record([vc, yc, rows, cols]() mutable {
            kernels::colsum_accum(yc.grad().data(), vc.grad().data(), rows, cols);
        });
    }
    return y;
}

Tensor gather_labels(Tape* tape, const Tensor& x, const std::vector<int>& labels) {
    const std::size_t rows = x.rows();
    const std::size_t cols = x.cols();
    if (labels.size() != rows) throw ShapeError("gather_labels: label count mismatch");
    for (int l : labels) {
        if (l < 0 || static_cast<std::size_t>(l) >= cols) {
            throw ValidationError("gather_labels: label out of range");
        }
    }
    bool needs_grad = recording(tape, {&x});
    Tensor y = Tensor::zeros({rows}, needs_grad);
    auto xv = x.values();
    auto yv = y.values();
    for (std::size_t r = 0; r < rows; ++r) yv[r] = xv[r * cols + static_cast<std::size_t>(labels[r])];
    check_finite(y, "gather_labels");
    if (needs_grad) {
        Tensor xc = x, yc = y;
        std::vector<int> ls = labels;
        tape->record([xc, yc, ls, cols]() mutable {
            auto dy = yc.grad();
            auto dx = xc.grad();
            for (std::size_t r = 0; r < dy.size(); ++r) {
                dx[r * cols + static_cast<std::size_t>(ls[r])] += dy[r];
            }
        });
    }
    return y;
}

Tensor cross_entropy_mean(Tape* tape, const Tensor& logits, const std::vector<int>& labels) {
    Tensor lp = softmax_logprobs(tape, logits);
    Tensor picked = gather_labels(tape, lp, labels);
    Tensor total = sum(tape, picked);
    return scale(tape, total, -1.0 / static_cast<double>(logits.rows()));
}

Tensor multilabel_nll_mean(Tape* tape, const Tensor& logp,
                           const std::vector<std::vector<int>>& positives) {
    const std::size_t rows = logp.rows();
    const std::size_t cols = logp.cols();
    if (positives.size() != rows) throw ShapeError("multilabel_nll_mean: label count mismatch");
    std::vector<double> mask(rows * cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
        for (int l : positives[r]) {
            if (l < 0 || static_cast<std::size_t>(l) >= cols) {
                throw ValidationError("multilabel_nll_mean: label out of range");
            }
            mask[r * cols + static_cast<std::size_t>(l)] = 1.0;
        }
    }
    bool needs_grad = recording(tape, {&logp});
    Tensor y = Tensor::zeros({1}, needs_grad);
    auto fv = logp.values();
    double acc = 0.0;
    for (std::size_t i = 0; i < fv.size(); ++i) {
        acc += mask[i] > 0.5 ? -fv[i] : -log1mexp_value(fv[i]);
    }
    y.values()[0] = acc / static_cast<double>(rows);
    check_finite(y, "multilabel_nll_mean");
    if (needs_grad) {
        Tensor fc = logp, yc = y;
        auto m = std::make_shared<std::vector<double>>(std::move(mask));
        tape->record([fc, yc, m, rows]() mutable {
            double g = yc.grad()[0] / static_cast<double>(rows);
            auto df = fc.grad();
            auto f = fc.values();
            for (std::size_t i = 0; i < df.size(); ++i) {
                if ((*m)[i] > 0.5) {
                    df[i] -= g;
                } else {
                    // d/df [-log(1 - e^f)] = e^f / (1 - e^f) = 1 / (e^{-f} - 1)
                    df[i] += g / (std::exp(-f[i]) - 1.0);
                }
            }
        });
    }
    return y;
}

}  // namespace clef::diff::ops
