#pragma once

#include <functional>
#include <memory>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gmge/tensor.hpp"

namespace gmge {

// Reverse-mode tape. Ops append one record per executed operation; the
// records replayed in reverse order form a valid reverse topological
// order of the data-dependency DAG. A tape and its tensors belong to a
// single training run; no concurrent mutation.
template <typename T>
class Tape {
public:
    using Adjoints = std::unordered_map<const TensorImpl<T>*, std::vector<T>>;

    struct Record {
        // Shared ownership keeps saved tensors alive until backward.
        std::vector<std::shared_ptr<TensorImpl<T>>> tensors;
        const TensorImpl<T>* output = nullptr;
        // Receives the adjoint of `output` and accumulates into the
        // adjoints of its inputs.
        std::function<void(const std::vector<T>& grad_out, Adjoints& adj)> backward;
    };

    void record(Record r) { records_.push_back(std::move(r)); }

    std::size_t size() const { return records_.size(); }
    void clear() { records_.clear(); }

    // Adjoint accessor for op backward closures; allocates zeros on
    // first touch so every reachable tensor ends with a populated entry.
    static std::vector<T>& adj_of(Adjoints& adj, const TensorImpl<T>* t) {
        auto it = adj.find(t);
        if (it == adj.end())
            it = adj.emplace(t, std::vector<T>(t->data.size(), T(0))).first;
        return it->second;
    }

    // Seeds d(loss)/d(loss) = 1, replays the records in reverse and then
    // accumulates adjoints into .grad of every requires_grad tensor
    // reachable from the loss. Repeated calls without zero_grad add up.
    void backward(const Tensor<T>& loss) {
        if (!loss.defined() || loss.numel() != 1)
            throw ValueError("backward requires a scalar loss tensor");
        Adjoints adj;
        adj.emplace(loss.impl(), std::vector<T>{T(1)});

        for (auto it = records_.rbegin(); it != records_.rend(); ++it) {
            auto found = adj.find(it->output);
            if (found == adj.end()) continue;  // not reachable from the loss
            it->backward(found->second, adj);
        }

        std::unordered_set<TensorImpl<T>*> seen;
        auto flush = [&](const std::shared_ptr<TensorImpl<T>>& t) {
            if (!t || !t->requires_grad || !seen.insert(t.get()).second) return;
            auto found = adj.find(t.get());
            if (found == adj.end()) return;
            if (t->grad.empty()) t->grad.assign(t->data.size(), T(0));
            for (std::size_t i = 0; i < t->grad.size(); ++i) t->grad[i] += found->second[i];
        };
        flush(loss.impl_ptr());
        for (const auto& rec : records_)
            for (const auto& t : rec.tensors) flush(t);
    }

private:
    std::vector<Record> records_;
};

// Recording happens when a tape is supplied and at least one input is
// part of the graph.
template <typename T>
inline bool should_record(const Tape<T>* tape, std::initializer_list<const Tensor<T>*> ins) {
    if (!tape) return false;
    for (const Tensor<T>* t : ins)
        if (t && t->defined() && t->tracked()) return true;
    return false;
}

}  // namespace gmge
