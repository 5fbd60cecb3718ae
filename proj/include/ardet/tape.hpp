#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "ardet/tensor.hpp"

namespace ardet {

// Ordered record of executed operations. Each node owns a closure that pulls
// the output gradient and accumulates into the input gradients; backward()
// visits nodes exactly once, in reverse execution order.
//
// A tape is single-threaded by contract. Independent tapes may run
// concurrently over shared read-only parameters.
class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  bool recording() const { return recording_; }

  void record(std::function<void()> backward_fn) { nodes_.push_back(std::move(backward_fn)); }

  std::size_t size() const { return nodes_.size(); }

  // Activation accounting: total elements allocated by ops on this tape.
  void note_alloc(std::size_t elems) { alloc_elems_ += elems; }
  std::uint64_t alloc_elems() const { return alloc_elems_; }

  // Seeds d(loss)/d(loss) = 1 and runs the reverse traversal. The loss must
  // be a scalar produced by an op recorded on this tape.
  void backward(const TensorPtr& loss);

 private:
  bool recording_;
  std::vector<std::function<void()>> nodes_;
  std::uint64_t alloc_elems_ = 0;
};

}  // namespace ardet
