#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "signembed/common.hpp"

namespace signembed::nn {

struct TensorSpec {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return rows * cols; }
};

// Names, shapes and offsets of every parameter tensor, in declaration
// order. The flat blob stores each tensor column-major at its offset.
class ParamSchema {
 public:
  std::size_t add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (index_.count(name)) throw ValidationError("duplicate tensor '" + name + "'");
    TensorSpec spec{name, rows, cols, total_};
    total_ += spec.size();
    index_[name] = tensors_.size();
    tensors_.push_back(std::move(spec));
    return tensors_.size() - 1;
  }

  std::size_t total() const { return total_; }
  const std::vector<TensorSpec>& tensors() const { return tensors_; }
  const TensorSpec& tensor(std::size_t i) const { return tensors_[i]; }
  std::size_t index_of(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ValidationError("unknown tensor '" + name + "'");
    return it->second;
  }

 private:
  std::vector<TensorSpec> tensors_;
  std::map<std::string, std::size_t> index_;
  std::size_t total_ = 0;
};

// One contiguous buffer of all trainable weights (or their gradients),
// viewed through the shared schema.
template <typename S>
class ParamStore {
 public:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
  using MapMat = Eigen::Map<Mat>;
  using ConstMapMat = Eigen::Map<const Mat>;

  ParamStore() = default;
  explicit ParamStore(std::shared_ptr<const ParamSchema> schema)
      : schema_(std::move(schema)), data_(schema_->total(), S(0)) {}

  const ParamSchema& schema() const { return *schema_; }
  std::shared_ptr<const ParamSchema> schema_ptr() const { return schema_; }

  std::vector<S>& data() { return data_; }
  const std::vector<S>& data() const { return data_; }

  MapMat view(std::size_t tensor_idx) {
    const auto& t = schema_->tensor(tensor_idx);
    return MapMat(data_.data() + t.offset, t.rows, t.cols);
  }
  ConstMapMat view(std::size_t tensor_idx) const {
    const auto& t = schema_->tensor(tensor_idx);
    return ConstMapMat(data_.data() + t.offset, t.rows, t.cols);
  }
  MapMat view(const std::string& name) { return view(schema_->index_of(name)); }
  ConstMapMat view(const std::string& name) const {
    return view(schema_->index_of(name));
  }

  void zero() { std::fill(data_.begin(), data_.end(), S(0)); }

  void add_scaled(const ParamStore& other, S scale) {
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += scale * other.data_[i];
  }

  bool all_finite() const {
    for (S v : data_)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  template <typename T>
  ParamStore<T> cast() const {
    ParamStore<T> out(schema_);
    for (std::size_t i = 0; i < data_.size(); ++i)
      out.data()[i] = static_cast<T>(data_[i]);
    return out;
  }

 private:
  std::shared_ptr<const ParamSchema> schema_;
  std::vector<S> data_;
};

}  // namespace signembed::nn
