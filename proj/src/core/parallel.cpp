// Copyright 2026 The chartsurf Authors
// SPDX-License-Identifier: Apache-2.0
#include "chartsurf/core/parallel.hpp"

#include <atomic>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace chartsurf::core {

namespace {

int g_thread_count = 0;

int effective_threads() {
    if (g_thread_count > 0) return g_thread_count;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Minimal persistent pool. Workers pull chunk indices from a shared atomic
// counter; which worker runs which chunk never affects results because
// chunks write to disjoint state.
class Pool {
  public:
    static Pool& instance() {
        // Intentionally leaked: workers block on the condition variable for
        // the process lifetime and must never outlive their mutex.
        static Pool* p = new Pool();
        return *p;
    }

    void run(int workers, size_t chunks, const std::function<void(size_t)>& job) {
        ensure_workers(workers - 1);
        std::unique_lock<std::mutex> lk(m_);
        job_ = &job;
        next_ = 0;
        total_ = chunks;
        pending_ = chunks;
        active_helpers_ = std::min<size_t>(static_cast<size_t>(workers - 1), chunks);
        ++generation_;
        lk.unlock();
        cv_.notify_all();

        work_loop();  // caller participates

        std::unique_lock<std::mutex> lk2(m_);
        done_cv_.wait(lk2, [&] { return pending_ == 0; });
        job_ = nullptr;
    }

  private:
    Pool() = default;

    void ensure_workers(int n) {
        while (static_cast<int>(threads_.size()) < n) {
            threads_.emplace_back([this] { helper_loop(); });
            threads_.back().detach();
        }
    }

    void work_loop() {
        for (;;) {
            const size_t i = next_.fetch_add(1, std::memory_order_relaxed);
            if (i >= total_) break;
            (*job_)(i);
            if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                std::lock_guard<std::mutex> lk(m_);
                done_cv_.notify_all();
            }
        }
    }

    void helper_loop() {
        uint64_t seen = 0;
        for (;;) {
            std::unique_lock<std::mutex> lk(m_);
            cv_.wait(lk, [&] { return generation_ != seen; });
            seen = generation_;
            const std::function<void(size_t)>* job = job_;
            lk.unlock();
            if (job != nullptr) {
                for (;;) {
                    const size_t i = next_.fetch_add(1, std::memory_order_relaxed);
                    if (i >= total_) break;
                    (*job)(i);
                    if (pending_.fetch_sub(1, std::memory_order_acq_rel) == 1) {
                        std::lock_guard<std::mutex> lk2(m_);
                        done_cv_.notify_all();
                    }
                }
            }
        }
    }

    std::vector<std::thread> threads_;
    std::mutex m_;
    std::condition_variable cv_, done_cv_;
    const std::function<void(size_t)>* job_ = nullptr;
    std::atomic<size_t> next_{0};
    size_t total_ = 0;
    std::atomic<size_t> pending_{0};
    size_t active_helpers_ = 0;
    uint64_t generation_ = 0;
};

}  // namespace

void set_thread_count(int n) { g_thread_count = n < 0 ? 0 : n; }

int thread_count() { return effective_threads(); }

void parallel_chunks(size_t n, size_t chunks,
                     const std::function<void(size_t, size_t, size_t)>& fn) {
    if (n == 0) return;
    if (chunks == 0) chunks = 1;
    if (chunks > n) chunks = n;
    const size_t base = n / chunks, rem = n % chunks;
    auto bounds = [&](size_t c) {
        const size_t b = c * base + std::min(c, rem);
        const size_t e = b + base + (c < rem ? 1 : 0);
        return std::pair<size_t, size_t>(b, e);
    };
    const int workers = effective_threads();
    if (workers <= 1 || chunks == 1) {
        for (size_t c = 0; c < chunks; ++c) {
            auto [b, e] = bounds(c);
            fn(c, b, e);
        }
        return;
    }
    std::function<void(size_t)> job = [&](size_t c) {
        auto [b, e] = bounds(c);
        fn(c, b, e);
    };
    Pool::instance().run(workers, chunks, job);
}

void parallel_for(size_t n, const std::function<void(size_t, size_t, size_t)>& fn) {
    // Fixed chunk count so results never depend on the worker count.
    parallel_chunks(n, 64, fn);
}

double parallel_sum(size_t n, size_t chunks,
                    const std::function<double(size_t, size_t, size_t)>& fn) {
    if (n == 0) return 0.0;
    if (chunks == 0) chunks = 1;
    if (chunks > n) chunks = n;
    std::vector<double> partial(chunks, 0.0);
    parallel_chunks(n, chunks, [&](size_t c, size_t b, size_t e) { partial[c] = fn(c, b, e); });
    double total = 0.0;
    for (double p : partial) total += p;
    return total;
}

}  // namespace chartsurf::core
