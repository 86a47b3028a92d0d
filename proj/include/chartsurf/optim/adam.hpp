// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "chartsurf/optim/param_store.hpp"

namespace chartsurf::optim {

/// Bias-corrected Adam over a ParamStore. Moments are keyed by group index,
/// so the update is independent of registration order for fixed shapes.
class Adam {
  public:
    struct Config {
        double beta1 = 0.9;
        double beta2 = 0.999;
        double eps = 1e-8;
    };

    Adam() : Adam(Config{}) {}
    explicit Adam(Config cfg) : cfg_(cfg) {}

    /// One update using store.grads(). Throws Error naming the group on a
    /// non-finite gradient.
    void step(ParamStore& store);

    int64_t steps_taken() const { return step_; }
    void reset();

  private:
    Config cfg_;
    int64_t step_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

}  // namespace chartsurf::optim
