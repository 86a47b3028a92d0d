// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/optim/adam.hpp"

#include <cmath>

namespace chartsurf::optim {

void Adam::step(ParamStore& store) {
    if (m_.size() != store.group_count()) {
        m_.resize(store.group_count());
        v_.resize(store.group_count());
        for (size_t gi = 0; gi < store.group_count(); ++gi) {
            m_[gi].assign(store.group(gi).values.size(), 0.0);
            v_[gi].assign(store.group(gi).values.size(), 0.0);
        }
    }
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
    for (size_t gi = 0; gi < store.group_count(); ++gi) {
        auto& g = store.group(gi);
        auto& m = m_[gi];
        auto& v = v_[gi];
        CHARTSURF_CHECK_MSG(m.size() == g.values.size(),
                            "group " << g.name << " resized after first step");
        for (size_t i = 0; i < g.values.size(); ++i) {
            const double grad = g.grads[i];
            if (!std::isfinite(grad))
                throw Error("non-finite gradient in parameter group " + g.name);
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * grad;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * grad * grad;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            g.values[i] -= g.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
    }
}

void Adam::reset() {
    step_ = 0;
    m_.clear();
    v_.clear();
}

}  // namespace chartsurf::optim
