// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

#include "chartsurf/optim/param_store.hpp"

namespace chartsurf::optim {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;   // "group[index]"
    size_t checked = 0;
};

/// Central-difference verification of analytic gradients.
///
/// `loss_fn` must be deterministic: it evaluates the loss from the current
/// store values and fills store.grads(). A random subset of parameters
/// (fraction `subset`, at least min_per_group per group) is perturbed by
/// +-h and the finite-difference slope compared against the analytic value.
GradCheckResult check_gradients(const std::function<double(ParamStore&)>& loss_fn,
                                ParamStore& store, double h = 1e-5,
                                double subset = 0.05, uint64_t seed = 0,
                                size_t min_per_group = 4);

}  // namespace chartsurf::optim
