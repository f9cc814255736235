#pragma once

#include <condition_variable>
#include <deque>
#include <mutex>
#include <optional>
#include <stdexcept>

#include "ctc/tensor.hpp"

namespace ctc {

// Blocking single-producer/single-consumer hand-off with a hard capacity so a
// batch-preparation thread can run at most `capacity` batches ahead.
template <typename T>
class BoundedQueue {
  public:
    explicit BoundedQueue(Extent capacity) : capacity_(capacity) {
        if (capacity < 2) throw std::invalid_argument("bounded_queue: capacity must be >= 2");
    }

    // blocks while full; false if the queue was closed
    bool push(T item) {
        std::unique_lock lock(mutex_);
        not_full_.wait(lock, [this] {
            return closed_ || static_cast<Extent>(items_.size()) < capacity_;
        });
        if (closed_) return false;
        items_.push_back(std::move(item));
        not_empty_.notify_one();
        return true;
    }

    // blocks while empty; nullopt once closed and drained
    std::optional<T> pop() {
        std::unique_lock lock(mutex_);
        not_empty_.wait(lock, [this] { return closed_ || !items_.empty(); });
        if (items_.empty()) return std::nullopt;
        T item = std::move(items_.front());
        items_.pop_front();
        not_full_.notify_one();
        return item;
    }

    void close() {
        std::lock_guard lock(mutex_);
        closed_ = true;
        not_empty_.notify_all();
        not_full_.notify_all();
    }

    Extent capacity() const { return capacity_; }

    Extent size() const {
        std::lock_guard lock(mutex_);
        return static_cast<Extent>(items_.size());
    }

  private:
    const Extent capacity_;
    mutable std::mutex mutex_;
    std::condition_variable not_empty_, not_full_;
    std::deque<T> items_;
    bool closed_ = false;
};

}  // namespace ctc
