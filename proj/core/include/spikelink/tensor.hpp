#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace spikelink::ag {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// One vertex of the reverse-mode graph. Op outputs own their parents, so a
/// graph lives exactly as long as some tensor still refers to its root.
struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  /// Reads this->grad and accumulates into parents that require grad.
  std::function<void(Node&)> backward;

  std::vector<double>& ensure_grad();
};

/// Dense tensor handle (up to 4 dims) with shared ownership of its node.
/// Copying a Tensor aliases the same storage.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  [[nodiscard]] bool defined() const noexcept { return node_ != nullptr; }
  [[nodiscard]] const Shape& shape() const;
  [[nodiscard]] std::size_t dim(std::size_t axis) const;
  [[nodiscard]] std::size_t rank() const { return shape().size(); }
  [[nodiscard]] std::size_t size() const;

  [[nodiscard]] std::span<const double> values() const;
  /// Direct write access for leaves (initialisation, optimiser updates).
  [[nodiscard]] std::span<double> mutable_values();
  /// Accumulated gradient; zeros if nothing has been accumulated yet.
  [[nodiscard]] std::span<const double> grad() const;
  [[nodiscard]] std::span<double> mutable_grad();

  [[nodiscard]] bool requires_grad() const;
  [[nodiscard]] double item() const;

  /// Reverse sweep from this scalar. Intermediate gradients are reset first;
  /// leaf gradients accumulate across calls until zero_grad().
  void backward() const;
  void zero_grad();

  /// Same values, cut from the graph.
  [[nodiscard]] Tensor detach() const;

  [[nodiscard]] Node* node() const noexcept { return node_.get(); }
  [[nodiscard]] const std::shared_ptr<Node>& node_ptr() const noexcept { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Builds an op result. If no parent requires grad the result is a constant
/// and the parents/backward closure are dropped.
Tensor make_result(Shape shape, std::vector<double> value, std::vector<Tensor> parents,
                   std::function<void(Node&)> backward);

}  // namespace spikelink::ag
