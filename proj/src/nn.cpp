#include "clef/nn.hpp"

#include <cmath>

#include "clef/errors.hpp"

namespace clef::diff {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::sigmoid: return "sigmoid";
    }
    return "identity";
}

Activation activation_from_name(const std::string& name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "sigmoid") return Activation::sigmoid;
    throw ValidationError("unknown activation: " + name);
}

DenseLayer DenseLayer::init(std::size_t in, std::size_t out, Activation act, Rng& rng) {
    if (in == 0 || out == 0) throw ShapeError("dense layer widths must be positive");
    DenseLayer layer;
    double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::vector<double> w(out * in);
    for (double& v : w) v = rng.uniform(-bound, bound);
    layer.weight = Tensor::from_values({out, in}, std::move(w), /*requires_grad=*/true);
    layer.bias = Tensor::zeros({out}, /*requires_grad=*/true);
    layer.activation = act;
    return layer;
}

Tensor DenseLayer::forward(Tape* tape, const Tensor& x) const {
    Tensor pre = ops::matmul_affine(tape, x, weight, bias);
    switch (activation) {
        case Activation::identity: return pre;
        case Activation::relu: return ops::relu(tape, pre);
        case Activation::sigmoid: return ops::sigmoid(tape, pre);
    }
    return pre;
}

Tensor dense_forward(Tape* tape, const DenseLayer& layer, const Tensor& input) {
    return layer.forward(tape, input);
}

Mlp Mlp::init(std::size_t in, std::size_t width, std::size_t depth, std::size_t out, Rng& rng) {
    Mlp mlp;
    std::size_t prev = in;
    for (std::size_t i = 0; i < depth; ++i) {
        mlp.layers.push_back(DenseLayer::init(prev, width, Activation::relu, rng));
        prev = width;
    }
    mlp.layers.push_back(DenseLayer::init(prev, out, Activation::identity, rng));
    return mlp;
}

Mlp Mlp::relu_stack(std::size_t in, std::size_t width, std::size_t depth, Rng& rng) {
    if (depth == 0) throw ShapeError("relu_stack: depth must be positive");
    Mlp mlp;
    std::size_t prev = in;
    for (std::size_t i = 0; i < depth; ++i) {
        mlp.layers.push_back(DenseLayer::init(prev, width, Activation::relu, rng));
        prev = width;
    }
    return mlp;
}

Tensor Mlp::forward(Tape* tape, const Tensor& x) const {
    Tensor h = x;
    for (const DenseLayer& layer : layers) h = layer.forward(tape, h);
    return h;
}

std::vector<Tensor> Mlp::parameters() const {
    std::vector<Tensor> params;
    for (const DenseLayer& layer : layers) {
        params.push_back(layer.weight);
        params.push_back(layer.bias);
    }
    return params;
}

}  // namespace clef::diff
