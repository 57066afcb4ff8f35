#pragma once

#include <deque>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace msse {

// One learnable tensor: flat values plus a paired gradient buffer and Adam
// moment state, all the same length. dims carries the logical shape
// (conv kernels {oc, ic/groups, kh, kw}, FC weights {in, out}, biases {c}).
template <class T>
struct Param {
    std::string name;
    std::vector<int> dims;
    std::vector<T> value;
    std::vector<T> grad;
    std::vector<T> adam_m;
    std::vector<T> adam_v;

    std::size_t size() const { return value.size(); }
};

// Named parameter set with stable insertion order (checkpoints and Adam walk
// entries in this order) and stable addresses (layers hold Param pointers).
template <class T>
class ParamStore {
public:
    Param<T> &add(const std::string &name, std::vector<int> dims) {
        if (index_.count(name))
            throw std::invalid_argument("ParamStore: duplicate parameter name " + name);
        std::size_t total = 1;
        for (int d : dims) {
            if (d < 1) throw std::invalid_argument("ParamStore: bad dim for " + name);
            total *= static_cast<std::size_t>(d);
        }
        entries_.emplace_back();
        Param<T> &p = entries_.back();
        p.name = name;
        p.dims = std::move(dims);
        p.value.assign(total, T(0));
        p.grad.assign(total, T(0));
        p.adam_m.assign(total, T(0));
        p.adam_v.assign(total, T(0));
        index_[name] = entries_.size() - 1;
        return p;
    }

    Param<T> &at(const std::string &name) {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::invalid_argument("ParamStore: no parameter " + name);
        return entries_[it->second];
    }

    const Param<T> &at(const std::string &name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw std::invalid_argument("ParamStore: no parameter " + name);
        return entries_[it->second];
    }

    Param<T> *find(const std::string &name) {
        auto it = index_.find(name);
        return it == index_.end() ? nullptr : &entries_[it->second];
    }

    void zero_grads() {
        for (auto &p : entries_) std::fill(p.grad.begin(), p.grad.end(), T(0));
    }

    std::size_t count() const { return entries_.size(); }

    std::size_t total_values() const {
        std::size_t t = 0;
        for (const auto &p : entries_) t += p.size();
        return t;
    }

    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }
    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }

private:
    std::deque<Param<T>> entries_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace msse
