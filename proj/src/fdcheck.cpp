#include "clef/fdcheck.hpp"

#include <cmath>

#include "clef/errors.hpp"

namespace clef::diff {

std::vector<double> finite_diff_grad_at(const std::function<double()>& f, Tensor theta, double h,
                                        const std::vector<std::size_t>& coords) {
    if (!(h > 0.0)) throw ValidationError("finite_diff_grad: h must be positive");
    auto vals = theta.values();
    std::vector<double> grad;
    grad.reserve(coords.size());
    for (std::size_t i : coords) {
        double saved = vals[i];
        vals[i] = saved + h;
        double up = f();
        vals[i] = saved - h;
        double down = f();
        vals[i] = saved;
        grad.push_back((up - down) / (2.0 * h));
    }
    return grad;
}

std::vector<double> finite_diff_grad(const std::function<double()>& f, Tensor theta, double h) {
    std::vector<std::size_t> coords(theta.size());
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = i;
    return finite_diff_grad_at(f, theta, h, coords);
}

double relative_error(double a, double b, double floor) {
    double denom = std::max(std::max(std::abs(a), std::abs(b)), floor);
    return std::abs(a - b) / denom;
}

}  // namespace clef::diff
