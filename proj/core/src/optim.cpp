#include "spikelink/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace spikelink::ag {

void Adam::step(std::vector<Tensor>& params) {
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("Adam: parameter list changed between steps");
  ++step_;
  const double b1 = options_.beta1;
  const double b2 = options_.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto values = params[i].mutable_values();
    const auto grads = params[i].grad();
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      m[j] = b1 * m[j] + (1.0 - b1) * grads[j];
      v[j] = b2 * v[j] + (1.0 - b2) * grads[j] * grads[j];
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= options_.learning_rate * m_hat / (std::sqrt(v_hat) + options_.epsilon);
    }
  }
}

void zero_grad(std::vector<Tensor>& params) {
  for (auto& p : params) p.zero_grad();
}

}  // namespace spikelink::ag
