#include "clef/tensor.hpp"

#include <numeric>

#include "clef/errors.hpp"

namespace clef::diff {
namespace {

std::size_t product(const std::vector<std::size_t>& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) {
        if (d == 0) throw ShapeError("tensor extents must be positive");
        n *= d;
    }
    return n;
}

}  // namespace

Tensor Tensor::zeros(std::vector<std::size_t> dims, bool requires_grad) {
    return full(std::move(dims), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<std::size_t> dims, double value, bool requires_grad) {
    Tensor t;
    t.d_ = std::make_shared<Data>();
    t.d_->dims = std::move(dims);
    t.d_->values.assign(product(t.d_->dims), value);
    t.d_->requires_grad = requires_grad;
    if (requires_grad) t.d_->grad.assign(t.d_->values.size(), 0.0);
    return t;
}

Tensor Tensor::from_values(std::vector<std::size_t> dims, std::vector<double> values,
                           bool requires_grad) {
    Tensor t;
    t.d_ = std::make_shared<Data>();
    t.d_->dims = std::move(dims);
    if (values.size() != product(t.d_->dims)) {
        throw ShapeError("value count does not match tensor dims");
    }
    t.d_->values = std::move(values);
    t.d_->requires_grad = requires_grad;
    if (requires_grad) t.d_->grad.assign(t.d_->values.size(), 0.0);
    return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return from_values({1}, {value}, requires_grad);
}

Tensor Tensor::row_vector(std::vector<double> values, bool requires_grad) {
    std::size_t n = values.size();
    return from_values({n}, std::move(values), requires_grad);
}

const std::vector<std::size_t>& Tensor::dims() const {
    if (!d_) throw ContractError("use of undefined tensor");
    return d_->dims;
}

std::size_t Tensor::size() const { return dims().empty() ? 0 : d_->values.size(); }

std::size_t Tensor::rank() const { return dims().size(); }

std::size_t Tensor::rows() const {
    const auto& d = dims();
    return d.size() >= 2 ? d[0] : 1;
}

std::size_t Tensor::cols() const {
    const auto& d = dims();
    return d.size() >= 2 ? d[1] : d[0];
}

std::span<double> Tensor::values() {
    if (!d_) throw ContractError("use of undefined tensor");
    return d_->values;
}

std::span<const double> Tensor::values() const {
    if (!d_) throw ContractError("use of undefined tensor");
    return d_->values;
}

std::span<double> Tensor::grad() {
    if (!d_ || !d_->requires_grad) throw ContractError("tensor has no gradient buffer");
    return d_->grad;
}

std::span<const double> Tensor::grad() const {
    if (!d_ || !d_->requires_grad) throw ContractError("tensor has no gradient buffer");
    return d_->grad;
}

bool Tensor::requires_grad() const { return d_ && d_->requires_grad; }

void Tensor::zero_grad() {
    if (d_ && d_->requires_grad) d_->grad.assign(d_->grad.size(), 0.0);
}

double Tensor::item() const {
    if (size() != 1) throw ContractError("item() requires a scalar tensor");
    return d_->values[0];
}

Tensor Tensor::detach() const {
    if (!d_) return {};
    Tensor t;
    t.d_ = std::make_shared<Data>();
    t.d_->dims = d_->dims;
    t.d_->values = d_->values;
    t.d_->requires_grad = false;
    return t;
}

Tensor Tensor::clone_values() const { return detach(); }

void Tape::backward(const Tensor& loss) {
    if (loss.size() != 1) throw ContractError("backward() requires a scalar loss");
    if (!loss.requires_grad()) {
        throw ContractError("backward() loss does not participate in gradient recording");
    }
    Tensor seed = loss;
    seed.grad()[0] += 1.0;
    for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

}  // namespace clef::diff
