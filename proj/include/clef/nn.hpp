#ifndef CLEF_NN_HPP
#define CLEF_NN_HPP

#include <string>
#include <vector>

#include "clef/ops.hpp"
#include "clef/rng.hpp"
#include "clef/tensor.hpp"

namespace clef::diff {

enum class Activation { identity, relu, sigmoid };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Fully connected layer: activation(weight * x + bias).
struct DenseLayer {
    Tensor weight;  // [out x in]
    Tensor bias;    // [out]
    Activation activation = Activation::identity;

    // Weights ~ U(-1/sqrt(in), 1/sqrt(in)), bias zero.
    static DenseLayer init(std::size_t in, std::size_t out, Activation act, Rng& rng);

    std::size_t in_width() const { return weight.cols(); }
    std::size_t out_width() const { return weight.rows(); }

    Tensor forward(Tape* tape, const Tensor& x) const;
};

Tensor dense_forward(Tape* tape, const DenseLayer& layer, const Tensor& input);

// Plain layer stack.
struct Mlp {
    std::vector<DenseLayer> layers;

    // `depth` hidden relu layers of width `width`, then a linear head to `out`.
    static Mlp init(std::size_t in, std::size_t width, std::size_t depth, std::size_t out,
                    Rng& rng);

    // `depth` relu layers of width `width`, no head.
    static Mlp relu_stack(std::size_t in, std::size_t width, std::size_t depth, Rng& rng);

    std::size_t in_width() const { return layers.front().in_width(); }
    std::size_t out_width() const { return layers.back().out_width(); }

    Tensor forward(Tape* tape, const Tensor& x) const;
    std::vector<Tensor> parameters() const;
};

}  // namespace clef::diff

#endif  // CLEF_NN_HPP
