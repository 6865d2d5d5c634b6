#ifndef CLEF_OPS_HPP
#define CLEF_OPS_HPP

#include <vector>

#include "clef/tensor.hpp"

namespace clef::diff::ops {

// Stable scalar forms shared by the differentiable ops and the plain-vector
// evaluation path, so both routes produce bit-identical numbers.
double log_sigmoid_value(double x);  // -softplus(-x)
double sigmoid_value(double x);
double log1mexp_value(double f);  // log(1 - e^f), f < 0

// Primitive differentiable operations. All compute eagerly; when `tape` is
// non-null and an input carries gradients, a backward step is recorded.
// Inputs are [rows x cols] row-major (a 1-D tensor acts as a single row).

// y = x * w^T + b, w is [out x in], b is [out]
Tensor matmul_affine(Tape* tape, const Tensor& x, const Tensor& w, const Tensor& b);
Tensor relu(Tape* tape, const Tensor& x);
Tensor sigmoid(Tape* tape, const Tensor& x);
Tensor log_sigmoid(Tape* tape, const Tensor& x);
// Row-wise max-shifted log-softmax.
Tensor softmax_logprobs(Tape* tape, const Tensor& x);
Tensor exp_elem(Tape* tape, const Tensor& x);
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& a, double s);
Tensor sum(Tape* tape, const Tensor& a);
Tensor mean(Tape* tape, const Tensor& a);
Tensor concat_cols(Tape* tape, const Tensor& a, const Tensor& b);
// Broadcast a vector to `rows` identical rows; gradients sum back over rows.
Tensor tile_rows(Tape* tape, const Tensor& v, std::size_t rows);
// y[b] = x[b][labels[b]]
Tensor gather_labels(Tape* tape, const Tensor& x, const std::vector<int>& labels);

// Mean over rows of -logprob[label]; logits are arbitrary per-class scores.
Tensor cross_entropy_mean(Tape* tape, const Tensor& logits, const std::vector<int>& labels);
// Mean over rows of the per-class Bernoulli NLL consuming log-probabilities
// directly: positives contribute -f, negatives -log(1 - e^f).
Tensor multilabel_nll_mean(Tape* tape, const Tensor& logp,
                           const std::vector<std::vector<int>>& positives);

}  // namespace clef::diff::ops

#endif  // CLEF_OPS_HPP
