#ifndef CLEF_OPTIM_HPP
#define CLEF_OPTIM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "clef/tensor.hpp"

namespace clef::diff {

enum class OptimizerKind { sgd, momentum, adam };

std::string optimizer_name(OptimizerKind k);
OptimizerKind optimizer_from_name(const std::string& name);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double learning_rate = 1e-3;
    double momentum = 0.9;    // momentum kind only
    double beta1 = 0.9;       // adam
    double beta2 = 0.999;     // adam
    double eps = 1e-8;        // adam
};

// Deterministic first-order updates over a fixed parameter list.
class Optimizer {
public:
    Optimizer(std::vector<Tensor> params, OptimizerConfig config);

    void step();       // applies one update from current grads
    void zero_grad();  // zeroes all parameter grads

    const OptimizerConfig& config() const { return config_; }
    std::int64_t steps_taken() const { return t_; }

private:
    std::vector<Tensor> params_;
    OptimizerConfig config_;
    std::vector<std::vector<double>> m_;  // momentum / first moment
    std::vector<std::vector<double>> v_;  // second moment (adam)
    std::int64_t t_ = 0;
};

}  // namespace clef::diff

#endif  // CLEF_OPTIM_HPP
