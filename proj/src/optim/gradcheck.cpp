// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/optim/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "chartsurf/core/rng.hpp"

namespace chartsurf::optim {

GradCheckResult check_gradients(const std::function<double(ParamStore&)>& loss_fn,
                                ParamStore& store, double h, double subset,
                                uint64_t seed, size_t min_per_group) {
    // Analytic gradients at the base point.
    store.zero_grads();
    loss_fn(store);
    std::vector<std::vector<double>> analytic(store.group_count());
    for (size_t gi = 0; gi < store.group_count(); ++gi) {
        const auto& g = store.group(gi);
        analytic[gi].assign(g.grads.begin(), g.grads.end());
    }

    core::Rng rng(seed * 7919 + 13);
    GradCheckResult res;
    for (size_t gi = 0; gi < store.group_count(); ++gi) {
        auto& g = store.group(gi);
        const size_t n = g.values.size();
        if (n == 0) continue;
        size_t take = std::max<size_t>(min_per_group, static_cast<size_t>(subset * n));
        take = std::min(take, n);
        for (size_t s = 0; s < take; ++s) {
            const size_t i = take == n ? s : rng.below(n);
            const double orig = g.values[i];
            g.values[i] = orig + h;
            store.zero_grads();
            const double lp = loss_fn(store);
            g.values[i] = orig - h;
            store.zero_grads();
            const double lm = loss_fn(store);
            g.values[i] = orig;
            const double fd = (lp - lm) / (2.0 * h);
            const double an = analytic[gi][i];
            const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-6});
            const double rel = std::fabs(fd - an) / denom;
            ++res.checked;
            if (rel > res.max_rel_error) {
                res.max_rel_error = rel;
                res.worst_param = g.name + "[" + std::to_string(i) + "]";
            }
        }
    }
    // Restore analytic gradients for the caller.
    store.zero_grads();
    loss_fn(store);
    return res;
}

}  // namespace chartsurf::optim
