#include "spikelink/tensor.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>
#include <utility>

namespace spikelink::ag {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::vector<double>& Node::ensure_grad() {
  if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  return grad;
}

namespace {

void check_shape(const Shape& shape) {
  if (shape.empty() || shape.size() > 4) {
    throw std::invalid_argument("tensor rank must be between 1 and 4, got " + shape_string(shape));
  }
}

const Node& require(const std::shared_ptr<Node>& node) {
  if (!node) throw std::logic_error("use of an undefined tensor");
  return *node;
}

}  // namespace

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return filled(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  check_shape(shape);
  const std::size_t n = shape_size(shape);
  return from_values(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from_values(Shape shape, std::vector<double> values, bool requires_grad) {
  check_shape(shape);
  if (shape_size(shape) != values.size()) {
    throw std::invalid_argument("value count " + std::to_string(values.size()) + " does not match shape " +
                                shape_string(shape));
  }
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from_values({1}, {value}, requires_grad); }

const Shape& Tensor::shape() const { return require(node_).shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  const Shape& s = shape();
  if (axis >= s.size()) throw std::out_of_range("axis out of range for shape " + shape_string(s));
  return s[axis];
}

std::size_t Tensor::size() const { return require(node_).value.size(); }

std::span<const double> Tensor::values() const { return require(node_).value; }

std::span<double> Tensor::mutable_values() {
  require(node_);
  return node_->value;
}

std::span<const double> Tensor::grad() const {
  require(node_);
  return node_->ensure_grad();
}

std::span<double> Tensor::mutable_grad() {
  require(node_);
  return node_->ensure_grad();
}

bool Tensor::requires_grad() const { return require(node_).requires_grad; }

double Tensor::item() const {
  if (size() != 1) throw std::logic_error("item() on tensor of shape " + shape_string(shape()));
  return node_->value[0];
}

void Tensor::backward() const {
  if (size() != 1) throw std::logic_error("backward() requires a scalar, got shape " + shape_string(shape()));
  if (!node_->requires_grad) return;

  // Iterative post-order DFS; graphs unrolled over many timesteps are deep.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* n : order) {
    if (n->backward) n->grad.assign(n->value.size(), 0.0);
  }
  node_->ensure_grad()[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward) n->backward(*n);
  }
}

void Tensor::zero_grad() {
  require(node_);
  std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return from_values(shape(), std::vector<double>(values().begin(), values().end())); }

Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->value = std::move(value);
  const bool needs = std::any_of(parents.begin(), parents.end(), [](const Tensor& p) { return p.requires_grad(); });
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (auto& p : parents) node->parents.push_back(p.node_ptr());
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

}  // namespace spikelink::ag
