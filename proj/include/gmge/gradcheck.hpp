#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "gmge/tape.hpp"
#include "gmge/tensor.hpp"

namespace gmge {

// Central finite-difference check for reverse-mode gradients.
//
// `f` is a scalar-valued tensor function taking a Tape<double>* and
// reading `point` through its handle; it must be re-evaluable (the
// harness perturbs point's entries in place). Returns
// max_i |autodiff_i - centraldiff_i| / max(1, |centraldiff_i|).
template <typename F>
double grad_check(F&& f, Tensor<double> point, double step = 1e-5) {
    point.set_requires_grad(true);
    point.zero_grad();
    {
        Tape<double> tape;
        Tensor<double> loss = f(&tape);
        if (loss.numel() != 1) throw ValueError("grad_check requires a scalar-valued function");
        tape.backward(loss);
    }
    std::vector<double> autodiff = point.grad_vec();

    double max_err = 0.0;
    for (std::size_t i = 0; i < point.numel(); ++i) {
        const double orig = point.data()[i];
        point.data()[i] = orig + step;
        const double fp = f(static_cast<Tape<double>*>(nullptr)).item();
        point.data()[i] = orig - step;
        const double fm = f(static_cast<Tape<double>*>(nullptr)).item();
        point.data()[i] = orig;
        const double fd = (fp - fm) / (2.0 * step);
        const double err = std::abs(autodiff[i] - fd) / std::max(1.0, std::abs(fd));
        max_err = std::max(max_err, err);
    }
    return max_err;
}

}  // namespace gmge
