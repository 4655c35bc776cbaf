#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gmge/errors.hpp"
#include "gmge/tensor.hpp"

namespace gmge {

// Adadelta: per-parameter running averages of squared gradients and
// squared updates.
//
//   E[g^2]  <- rho E[g^2]  + (1-rho) g^2
//   dx       = -sqrt(E[dx^2]+eps) / sqrt(E[g^2]+eps) * g
//   E[dx^2] <- rho E[dx^2] + (1-rho) dx^2
//   x       += dx
template <typename T>
class AdadeltaState {
public:
    AdadeltaState(const std::vector<Tensor<T>*>& params, T rho = T(0.95), T eps = T(1e-6))
        : rho_(rho), eps_(eps) {
        if (!(rho > T(0) && rho < T(1))) throw ValueError("adadelta rho must be in (0,1)");
        if (!(eps > T(0))) throw ValueError("adadelta eps must be > 0");
        acc_grad_sq_.reserve(params.size());
        acc_update_sq_.reserve(params.size());
        for (const Tensor<T>* p : params) {
            acc_grad_sq_.emplace_back(p->numel(), T(0));
            acc_update_sq_.emplace_back(p->numel(), T(0));
        }
    }

    T rho() const { return rho_; }
    T eps() const { return eps_; }
    const std::vector<T>& acc_grad_sq(std::size_t i) const { return acc_grad_sq_[i]; }
    const std::vector<T>& acc_update_sq(std::size_t i) const { return acc_update_sq_[i]; }

    // Applies one update from the gradients accumulated on the params.
    // Parameters without a populated gradient are treated as g = 0.
    void step(const std::vector<Tensor<T>*>& params) {
        if (params.size() != acc_grad_sq_.size())
            throw DimError("adadelta step: parameter count changed");
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            Tensor<T>& p = *params[pi];
            if (p.numel() != acc_grad_sq_[pi].size())
                throw DimError("adadelta step: parameter " + std::to_string(pi) +
                               " changed shape");
            const bool has_grad = p.has_grad();
            std::vector<T>& eg2 = acc_grad_sq_[pi];
            std::vector<T>& ed2 = acc_update_sq_[pi];
            for (std::size_t i = 0; i < p.numel(); ++i) {
                const T g = has_grad ? p.grad_vec()[i] : T(0);
                if (!std::isfinite(static_cast<double>(g)))
                    throw NumericError("non-finite gradient in parameter " + std::to_string(pi) +
                                       " at element " + std::to_string(i));
                eg2[i] = rho_ * eg2[i] + (T(1) - rho_) * g * g;
                const T dx = -std::sqrt(ed2[i] + eps_) / std::sqrt(eg2[i] + eps_) * g;
                ed2[i] = rho_ * ed2[i] + (T(1) - rho_) * dx * dx;
                p.data()[i] += dx;
            }
        }
    }

private:
    T rho_, eps_;
    std::vector<std::vector<T>> acc_grad_sq_;
    std::vector<std::vector<T>> acc_update_sq_;
};

}  // namespace gmge
