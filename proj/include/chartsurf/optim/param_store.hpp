// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <string>
#include <vector>

#include "chartsurf/core/error.hpp"

namespace chartsurf::optim {

/// Named flat arrays of learnable scalars with per-group learning rates.
/// Shapes are immutable after registration; values and gradient buffers
/// are mutable.
class ParamStore {
  public:
    struct Group {
        std::string name;
        std::vector<double> values;
        std::vector<double> grads;
        double lr = 1e-3;
    };

    /// Registers a group; throws on duplicate names.
    size_t add_group(const std::string& name, std::vector<double> initial, double lr);

    size_t group_count() const { return groups_.size(); }
    const Group& group(size_t i) const { return groups_[i]; }
    Group& group(size_t i) { return groups_[i]; }
    size_t index_of(const std::string& name) const;
    bool has_group(const std::string& name) const;

    std::span<double> values(size_t i) { return groups_[i].values; }
    std::span<const double> values(size_t i) const { return groups_[i].values; }
    std::span<double> grads(size_t i) { return groups_[i].grads; }

    std::span<double> values(const std::string& name) { return values(index_of(name)); }
    std::span<double> grads(const std::string& name) { return grads(index_of(name)); }

    void zero_grads();
    size_t total_size() const;

    /// Global gradient L2 norm across all groups.
    double grad_norm() const;

    /// Scales all gradients so the global norm is at most `max_norm`.
    void clip_grad_norm(double max_norm);

  private:
    std::vector<Group> groups_;
};

}  // namespace chartsurf::optim
