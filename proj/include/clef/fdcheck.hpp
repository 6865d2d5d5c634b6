#ifndef CLEF_FDCHECK_HPP
#define CLEF_FDCHECK_HPP

#include <functional>
#include <vector>

#include "clef/tensor.hpp"

namespace clef::diff {

// Central-difference gradient of a scalar function with respect to every
// coordinate of `theta`: (f(theta + h e_i) - f(theta - h e_i)) / (2h).
// Independent of the tape machinery; used as the gradient oracle.
std::vector<double> finite_diff_grad(const std::function<double()>& f, Tensor theta, double h);

// Same, but only for the listed coordinates (cheaper on large models).
std::vector<double> finite_diff_grad_at(const std::function<double()>& f, Tensor theta, double h,
                                        const std::vector<std::size_t>& coords);

// |a - b| / max(|a|, |b|, floor)
double relative_error(double a, double b, double floor = 1e-8);

}  // namespace clef::diff

#endif  // CLEF_FDCHECK_HPP
