#pragma once

#include <condition_variable>
#include <cstddef>
#include <deque>
#include <mutex>
#include <optional>

namespace lcsim {

/// One-way FIFO between two actors. capacity 0 means unbounded, which the
/// sequential scheduler needs since producers run to completion first.
template <class T>
class Channel {
public:
  explicit Channel(std::size_t capacity = 0) : capacity_{capacity} {}

  Channel(const Channel&) = delete;
  Channel& operator=(const Channel&) = delete;

  void send(T value) {
    std::unique_lock lock(mu_);
    not_full_.wait(lock, [&] { return capacity_ == 0 || queue_.size() < capacity_; });
    queue_.push_back(std::move(value));
    not_empty_.notify_one();
  }

  /// Blocks until a value arrives; nullopt once the channel is closed and drained.
  std::optional<T> receive() {
    std::unique_lock lock(mu_);
    not_empty_.wait(lock, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    T value = std::move(queue_.front());
    queue_.pop_front();
    not_full_.notify_one();
    return value;
  }

  void close() {
    std::lock_guard lock(mu_);
    closed_ = true;
    not_empty_.notify_all();
  }

private:
  std::size_t capacity_;
  std::mutex mu_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
  std::deque<T> queue_;
  bool closed_ = false;
};

}  // namespace lcsim
