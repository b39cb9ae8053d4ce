#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

namespace odin {

// Time source for assessment loops. SimNet supplies a virtual implementation;
// production uses WallClock. All durations are fractional milliseconds.
class Clock {
public:
    virtual ~Clock() = default;
    virtual double now_ms() = 0;
    // Sleeps for ms (or until cancel() on clocks that support it).
    virtual void sleep_ms(double ms) = 0;
};

class WallClock final : public Clock {
public:
    double now_ms() override {
        auto t = std::chrono::steady_clock::now().time_since_epoch();
        return std::chrono::duration<double, std::milli>(t).count();
    }

    void sleep_ms(double ms) override {
        std::unique_lock<std::mutex> lock(mutex_);
        cv_.wait_for(lock, std::chrono::duration<double, std::milli>(ms),
                     [this] { return cancelled_.load(); });
    }

    void cancel() {
        cancelled_.store(true);
        cv_.notify_all();
    }

    bool cancelled() const { return cancelled_.load(); }

private:
    std::mutex mutex_;
    std::condition_variable cv_;
    std::atomic<bool> cancelled_{false};
};

}  // namespace odin
