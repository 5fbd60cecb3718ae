#include "ardet/tape.hpp"

#include <stdexcept>

namespace ardet {

void Tape::backward(const TensorPtr& loss) {
  if (!loss || !loss->is_scalar())
    throw std::invalid_argument("backward requires a scalar loss tensor");
  if (!loss->requires_grad)
    throw std::invalid_argument("backward requires a loss that participates in the tape");
  if (nodes_.empty()) throw std::runtime_error("backward on an empty tape");
  loss->ensure_grad();
  loss->grad[0] = 1.0;
  for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) (*it)();
}

}  // namespace ardet
