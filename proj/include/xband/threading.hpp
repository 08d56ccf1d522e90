// SPDX-License-Identifier: Apache-2.0
//
// xband - cross-band radio channel prediction toolkit
// Copyright (C) 2026 the xband contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <atomic>
#include <condition_variable>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

#include "common.hpp"

namespace xband {

// Work partitioning is always by fixed index ranges and reductions combine
// fixed-size blocks in index order, so every result is bitwise independent
// of the worker count and of scheduling.
class ThreadPool {
  public:
    static ThreadPool &instance()
    {
        static ThreadPool pool;
        return pool;
    }

    void set_workers(int n)
    {
        std::lock_guard<std::mutex> api(api_mutex_);
        if (n < 1)
            n = 1;
        if (n == workers_)
            return;
        stop_threads();
        workers_ = n;
        start_threads();
    }

    int workers() const { return workers_; }

    // Runs fn(i) for i in [0, n_tasks). Task claims are tagged with a job
    // serial so stale workers can never claim into a newer job.
    void run_tasks(int n_tasks, const std::function<void(int)> &fn)
    {
        if (n_tasks <= 0)
            return;
        if (n_tasks >= (1 << kIdxBits))
            throw NumericError("run_tasks: task count too large");
        std::lock_guard<std::mutex> api(api_mutex_);
        if (workers_ == 1 || n_tasks == 1 || threads_.empty()) {
            for (int i = 0; i < n_tasks; ++i)
                fn(i);
            return;
        }
        uint64_t my_job;
        {
            std::unique_lock<std::mutex> g(m_);
            my_job = ++job_serial_;
            job_fn_ = &fn;
            job_total_ = n_tasks;
            job_done_ = 0;
            claim_.store(my_job << kIdxBits, std::memory_order_release);
        }
        cv_work_.notify_all();
        participate(my_job, &fn, n_tasks);
        std::unique_lock<std::mutex> g(m_);
        cv_done_.wait(g, [&] { return job_done_ == job_total_; });
        job_fn_ = nullptr;
    }

  private:
    static constexpr int kIdxBits = 20;

    ThreadPool()
    {
        unsigned hc = std::thread::hardware_concurrency();
        workers_ = int(hc == 0 ? 1 : (hc > 16 ? 16 : hc));
        start_threads();
    }

    ~ThreadPool()
    {
        std::lock_guard<std::mutex> api(api_mutex_);
        stop_threads();
    }

    void start_threads()
    {
        if (workers_ <= 1)
            return;
        exiting_ = false;
        for (int i = 0; i < workers_ - 1; ++i)
            threads_.emplace_back([this] { worker_main(); });
    }

    void stop_threads()
    {
        {
            std::unique_lock<std::mutex> g(m_);
            exiting_ = true;
        }
        cv_work_.notify_all();
        for (auto &t : threads_)
            t.join();
        threads_.clear();
    }

    void participate(uint64_t my_job, const std::function<void(int)> *fn, int total)
    {
        int done_here = 0;
        for (;;) {
            uint64_t cur = claim_.load(std::memory_order_acquire);
            if ((cur >> kIdxBits) != my_job)
                break;
            uint32_t idx = uint32_t(cur & ((1u << kIdxBits) - 1));
            if (int(idx) >= total)
                break;
            if (!claim_.compare_exchange_weak(cur, (my_job << kIdxBits) | (idx + 1),
                                              std::memory_order_acq_rel))
                continue;
            (*fn)(int(idx));
            ++done_here;
        }
        if (done_here > 0) {
            std::unique_lock<std::mutex> g(m_);
            // The job cannot have been replaced while we held unreported
            // tasks, so this always refers to my_job.
            job_done_ += done_here;
            if (job_done_ == job_total_)
                cv_done_.notify_all();
        }
    }

    void worker_main()
    {
        uint64_t seen = 0;
        for (;;) {
            const std::function<void(int)> *fn = nullptr;
            int total = 0;
            uint64_t my_job = 0;
            {
                std::unique_lock<std::mutex> g(m_);
                cv_work_.wait(g, [&] { return exiting_ || job_serial_ != seen; });
                if (exiting_)
                    return;
                seen = job_serial_;
                my_job = job_serial_;
                fn = job_fn_;
                total = job_total_;
            }
            if (fn)
                participate(my_job, fn, total);
        }
    }

    std::mutex api_mutex_; // serializes run_tasks callers and reconfiguration
    std::mutex m_;
    std::condition_variable cv_work_, cv_done_;
    std::vector<std::thread> threads_;
    int workers_ = 1;
    bool exiting_ = false;
    uint64_t job_serial_ = 0;
    const std::function<void(int)> *job_fn_ = nullptr;
    int job_total_ = 0;
    int job_done_ = 0;
    std::atomic<uint64_t> claim_{0};
};

inline void set_worker_count(int n) { ThreadPool::instance().set_workers(n); }
inline int worker_count() { return ThreadPool::instance().workers(); }

// Splits [0, n) into chunks of at most `grain` and runs f(begin, end) on the
// pool. Chunk boundaries depend only on n and grain.
template <class F> void parallel_for(int64_t n, int64_t grain, F &&f)
{
    if (n <= 0)
        return;
    if (grain < 1)
        grain = 1;
    while ((n + grain - 1) / grain >= (1 << 20))
        grain *= 2;
    const int n_chunks = int((n + grain - 1) / grain);
    if (n_chunks == 1) {
        f(int64_t(0), n);
        return;
    }
    std::function<void(int)> task = [&](int c) {
        int64_t b = int64_t(c) * grain;
        int64_t e = std::min(n, b + grain);
        f(b, e);
    };
    ThreadPool::instance().run_tasks(n_chunks, task);
}

// Deterministic parallel reduction: fixed 8192-element blocks are summed
// independently, then combined in block order.
template <class F> double parallel_sum(int64_t n, F &&term)
{
    if (n <= 0)
        return 0.0;
    const int64_t block = 8192;
    const int n_blocks = int((n + block - 1) / block);
    std::vector<double> partial(size_t(n_blocks), 0.0);
    std::function<void(int)> task = [&](int c) {
        int64_t b = int64_t(c) * block;
        int64_t e = std::min(n, b + block);
        double s = 0.0;
        for (int64_t i = b; i < e; ++i)
            s += term(i);
        partial[size_t(c)] = s;
    };
    ThreadPool::instance().run_tasks(n_blocks, task);
    double s = 0.0;
    for (double p : partial)
        s += p;
    return s;
}

} // namespace xband
