#include "clef/optim.hpp"

#include <cmath>

#include "clef/errors.hpp"
#include "clef/kernels.hpp"

namespace clef::diff {

std::string optimizer_name(OptimizerKind k) {
    switch (k) {
        case OptimizerKind::sgd: return "sgd";
        case OptimizerKind::momentum: return "momentum";
        case OptimizerKind::adam: return "adam";
    }
    return "adam";
}

OptimizerKind optimizer_from_name(const std::string& name) {
    if (name == "sgd") return OptimizerKind::sgd;
    if (name == "momentum") return OptimizerKind::momentum;
    if (name == "adam") return OptimizerKind::adam;
    throw ValidationError("unknown optimizer: " + name);
}

Optimizer::Optimizer(std::vector<Tensor> params, OptimizerConfig config)
    : params_(std::move(params)), config_(config) {
    for (const Tensor& p : params_) {
        if (!p.requires_grad()) throw ContractError("optimizer parameter lacks a gradient buffer");
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
    }
}

void Optimizer::step() {
    ++t_;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        Tensor& p = params_[i];
        const double* g = p.grad().data();
        double* pv = p.values().data();
        std::size_t n = p.size();
        switch (config_.kind) {
            case OptimizerKind::sgd:
                kernels::sgd_step(pv, g, n, config_.learning_rate);
                break;
            case OptimizerKind::momentum:
                kernels::momentum_step(pv, m_[i].data(), g, n, config_.learning_rate,
                                       config_.momentum);
                break;
            case OptimizerKind::adam: {
                double b1t = std::pow(config_.beta1, static_cast<double>(t_));
                double b2t = std::pow(config_.beta2, static_cast<double>(t_));
                kernels::adam_step(pv, m_[i].data(), v_[i].data(), g, n, config_.learning_rate,
                                   config_.beta1, config_.beta2, config_.eps, b1t, b2t);
                break;
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!std::isfinite(pv[j])) throw DivergenceError("non-finite parameter after optimizer step");
        }
    }
}

void Optimizer::zero_grad() {
    for (Tensor& p : params_) p.zero_grad();
}

}  // namespace clef::diff
