#ifndef CLEF_TENSOR_HPP
#define CLEF_TENSOR_HPP

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

namespace clef::diff {

// Dense row-major tensor of 64-bit reals with an optional gradient buffer.
// Value-semantic handle over shared storage; values are treated as immutable
// once an op has consumed them, grads accumulate additively until zeroed.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(std::vector<std::size_t> dims, bool requires_grad = false);
    static Tensor full(std::vector<std::size_t> dims, double value, bool requires_grad = false);
    static Tensor from_values(std::vector<std::size_t> dims, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);
    static Tensor row_vector(std::vector<double> values, bool requires_grad = false);

    bool defined() const { return static_cast<bool>(d_); }
    const std::vector<std::size_t>& dims() const;
    std::size_t size() const;
    std::size_t rank() const;
    // 2-D helpers; a 1-D tensor is treated as a single row.
    std::size_t rows() const;
    std::size_t cols() const;

    std::span<double> values();
    std::span<const double> values() const;
    std::span<double> grad();
    std::span<const double> grad() const;
    bool requires_grad() const;
    void zero_grad();

    // Scalar extraction; ContractError unless size() == 1.
    double item() const;

    // Same value buffer, gradient-free. Used to gate gradient flow.
    Tensor detach() const;

    // Deep copy of values (no grad state); used for checkpoint snapshots.
    Tensor clone_values() const;

    friend bool same_storage(const Tensor& a, const Tensor& b) { return a.d_ == b.d_; }

private:
    struct Data {
        std::vector<std::size_t> dims;
        std::vector<double> values;
        std::vector<double> grad;  // sized iff requires_grad
        bool requires_grad = false;
    };
    std::shared_ptr<Data> d_;
};

// Ordered record of backward steps for the primitive ops of one forward pass.
// backward() seeds d(loss)/d(loss) += 1 and replays the record in reverse,
// visiting each recorded op exactly once.
class Tape {
public:
    void record(std::function<void()> step) { steps_.push_back(std::move(step)); }
    void backward(const Tensor& loss);
    std::size_t size() const { return steps_.size(); }
    void clear() { steps_.clear(); }

private:
    std::vector<std::function<void()>> steps_;
};

}  // namespace clef::diff

#endif  // CLEF_TENSOR_HPP
