// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/optim/param_store.hpp"

#include <algorithm>
#include <cmath>

namespace chartsurf::optim {

size_t ParamStore::add_group(const std::string& name, std::vector<double> initial, double lr) {
    CHARTSURF_CHECK_MSG(!has_group(name), "duplicate parameter group " << name);
    Group g;
    g.name = name;
    g.grads.assign(initial.size(), 0.0);
    g.values = std::move(initial);
    g.lr = lr;
    groups_.push_back(std::move(g));
    return groups_.size() - 1;
}

size_t ParamStore::index_of(const std::string& name) const {
    for (size_t i = 0; i < groups_.size(); ++i)
        if (groups_[i].name == name) return i;
    throw Error("unknown parameter group " + name);
}

bool ParamStore::has_group(const std::string& name) const {
    return std::any_of(groups_.begin(), groups_.end(),
                       [&](const Group& g) { return g.name == name; });
}

void ParamStore::zero_grads() {
    for (auto& g : groups_) std::fill(g.grads.begin(), g.grads.end(), 0.0);
}

size_t ParamStore::total_size() const {
    size_t n = 0;
    for (const auto& g : groups_) n += g.values.size();
    return n;
}

double ParamStore::grad_norm() const {
    double s = 0.0;
    for (const auto& g : groups_)
        for (double v : g.grads) s += v * v;
    return std::sqrt(s);
}

void ParamStore::clip_grad_norm(double max_norm) {
    const double n = grad_norm();
    if (n <= max_norm || n == 0.0) return;
    const double scale = max_norm / n;
    for (auto& g : groups_)
        for (double& v : g.grads) v *= scale;
}

}  // namespace chartsurf::optim
