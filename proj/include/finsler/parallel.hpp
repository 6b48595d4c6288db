#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

#include "finsler/errors.hpp"

namespace finsler {

namespace detail {

// thread body: evaluate every stride-th index; first exception wins
template <typename Fn>
struct strided_eval {
  std::size_t begin = 0, stride = 1, count = 0;
  const Fn* fn = nullptr;
  double* slot = nullptr;
  std::exception_ptr* err = nullptr;

  void operator()() const {
    try {
      for (std::size_t i = begin; i < count; i += stride) slot[i] = (*fn)(i);
    } catch (...) {
      *err = std::current_exception();
    }
  }
};

}  // namespace detail

// Evaluate fn(i) for i in [0, n) with the requested worker count and sum the
// results in index order, so reruns are bit-stable at any worker count.
template <typename Fn>
double parallel_sum(std::size_t n, int workers, const Fn& fn) {
  if (workers < 1) throw invalid_input("parallel_sum: worker count must be positive");
  std::vector<double> slot(n, 0.0);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) slot[i] = fn(i);
  } else {
    std::size_t stride = static_cast<std::size_t>(workers);
    std::vector<std::exception_ptr> errs(stride);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < stride; ++w)
      pool.emplace_back(
          detail::strided_eval<Fn>{w, stride, n, &fn, slot.data(), &errs[w]});
    for (std::thread& th : pool) th.join();
    for (const std::exception_ptr& e : errs)
      if (e) std::rethrow_exception(e);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) total += slot[i];
  return total;
}

}  // namespace finsler
