#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "elasticflow/tensor.h"

namespace elasticflow {

// Named trainable tensors with a parallel gradient per entry. Iteration is in
// lexicographic name order.
class ParameterStore {
 public:
  struct Entry {
    Tensor value;
    Tensor grad;
  };

  void add(const std::string& name, Tensor value);
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  const Tensor& value(const std::string& name) const;
  Tensor& value(const std::string& name);
  const Tensor& grad(const std::string& name) const;
  Tensor& grad(const std::string& name);

  void zero_grad();
  std::vector<std::string> names() const;
  std::size_t parameter_count() const;

  // FNV-1a over names and value bytes, in iteration order.
  std::uint64_t checksum() const;

  std::map<std::string, Entry>& entries() { return entries_; }
  const std::map<std::string, Entry>& entries() const { return entries_; }

 private:
  Entry& entry(const std::string& name);
  const Entry& entry(const std::string& name) const;

  std::map<std::string, Entry> entries_;
};

bool bitwise_equal(const ParameterStore& a, const ParameterStore& b);

}  // namespace elasticflow
