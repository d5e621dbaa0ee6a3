#pragma once

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace rfdfin::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// Row-major f32 array. `grad` is allocated lazily for trainable tensors.
struct Tensor {
  Shape shape;
  std::vector<float> data;
  std::vector<float> grad;

  Tensor() = default;
  explicit Tensor(Shape s, float fill = 0.0f) : shape(std::move(s)), data(numel(shape), fill) {}
  Tensor(Shape s, std::vector<float> values);

  std::size_t size() const noexcept { return data.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t rank() const noexcept { return shape.size(); }

  void zero_grad() { grad.assign(data.size(), 0.0f); }
};

// Trainable tensor with a stable dotted name ("ridge.fc1.weight").
struct Parameter {
  std::string name;
  Tensor value;
};

// Non-trainable persistent state (batch-norm running statistics).
struct Buffer {
  std::string name;
  std::vector<float>* data;
};

enum class Mode { Train, Eval };

}  // namespace rfdfin::nn
