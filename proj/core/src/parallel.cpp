#include "apde/parallel.hpp"

#include <algorithm>
#include <condition_variable>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace apde {
namespace {

// Persistent pool with passive waiting; oversubscribed runs (8 workers on one
// core) must not spin.
class WorkerPool {
public:
    ~WorkerPool() { resize(0); }

    void resize(unsigned workers)
    {
        {
            std::unique_lock lock(mutex_);
            stopping_ = true;
        }
        cv_.notify_all();
        for (auto& t : threads_) t.join();
        threads_.clear();
        stopping_ = false;
        for (unsigned w = 0; w < workers; ++w)
            threads_.emplace_back([this, w] { loop(w + 1); });
    }

    unsigned size() const { return static_cast<unsigned>(threads_.size()); }

    void run(unsigned chunks, const std::function<void(unsigned)>& job)
    {
        std::exception_ptr error;
        {
            std::unique_lock lock(mutex_);
            job_ = &job;
            chunks_ = chunks;
            pending_ = size();
            error_ = nullptr;
            ++generation_;
        }
        cv_.notify_all();
        try {
            job(0);
        } catch (...) {
            error = std::current_exception();
        }
        std::unique_lock lock(mutex_);
        done_cv_.wait(lock, [this] { return pending_ == 0; });
        job_ = nullptr;
        if (!error) error = error_;
        if (error) std::rethrow_exception(error);
    }

private:
    void loop(unsigned id)
    {
        std::size_t seen = 0;
        for (;;) {
            const std::function<void(unsigned)>* job = nullptr;
            unsigned chunks = 0;
            {
                std::unique_lock lock(mutex_);
                cv_.wait(lock, [&] { return stopping_ || generation_ != seen; });
                if (stopping_) return;
                seen = generation_;
                job = job_;
                chunks = chunks_;
            }
            std::exception_ptr error;
            if (id < chunks) {
                try {
                    (*job)(id);
                } catch (...) {
                    error = std::current_exception();
                }
            }
            std::unique_lock lock(mutex_);
            if (error && !error_) error_ = error;
            if (--pending_ == 0) done_cv_.notify_one();
        }
    }

    std::vector<std::thread> threads_;
    std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable done_cv_;
    const std::function<void(unsigned)>* job_ = nullptr;
    unsigned chunks_ = 0;
    unsigned pending_ = 0;
    std::size_t generation_ = 0;
    bool stopping_ = false;
    std::exception_ptr error_;
};

unsigned g_threads = 1;
std::mutex g_config_mutex;

WorkerPool& pool()
{
    static WorkerPool p;
    return p;
}

} // namespace

void set_thread_count(unsigned n)
{
    if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
    std::lock_guard lock(g_config_mutex);
    g_threads = n;
    pool().resize(n - 1);
}

unsigned thread_count()
{
    std::lock_guard lock(g_config_mutex);
    return g_threads;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body)
{
    const unsigned threads = thread_count();
    // Small ranges are not worth a wake-up.
    if (threads <= 1 || n < 2048) {
        if (n > 0) body(0, n);
        return;
    }
    const unsigned chunks = threads;
    const std::size_t base = n / chunks;
    const std::size_t extra = n % chunks;
    auto bounds = [&](unsigned c) {
        const std::size_t begin = c * base + std::min<std::size_t>(c, extra);
        return std::pair{begin, begin + base + (c < extra ? 1 : 0)};
    };
    pool().run(chunks, [&](unsigned c) {
        auto [b, e] = bounds(c);
        if (b < e) body(b, e);
    });
}

} // namespace apde
