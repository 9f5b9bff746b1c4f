#include "elasticflow/parameter_store.h"

#include <cstring>

#include "elasticflow/error.h"

namespace elasticflow {

void ParameterStore::add(const std::string& name, Tensor value) {
  if (contains(name)) throw PreconditionError("ParameterStore: duplicate parameter '" + name + "'");
  Tensor grad(value.shape());
  entries_.emplace(name, Entry{std::move(value), std::move(grad)});
}

ParameterStore::Entry& ParameterStore::entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw PreconditionError("ParameterStore: no parameter '" + name + "'");
  return it->second;
}

const ParameterStore::Entry& ParameterStore::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw PreconditionError("ParameterStore: no parameter '" + name + "'");
  return it->second;
}

const Tensor& ParameterStore::value(const std::string& name) const { return entry(name).value; }
Tensor& ParameterStore::value(const std::string& name) { return entry(name).value; }
const Tensor& ParameterStore::grad(const std::string& name) const { return entry(name).grad; }
Tensor& ParameterStore::grad(const std::string& name) { return entry(name).grad; }

void ParameterStore::zero_grad() {
  for (auto& [name, e] : entries_) e.grad.fill(Real(0));
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) n += e.value.size();
  return n;
}

std::uint64_t ParameterStore::checksum() const {
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const void* bytes, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(bytes);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ull;
    }
  };
  for (const auto& [name, e] : entries_) {
    mix(name.data(), name.size());
    mix(e.value.data(), e.value.size() * sizeof(Real));
  }
  return h;
}

bool bitwise_equal(const ParameterStore& a, const ParameterStore& b) {
  if (a.size() != b.size()) return false;
  auto ia = a.entries().begin();
  auto ib = b.entries().begin();
  for (; ia != a.entries().end(); ++ia, ++ib) {
    if (ia->first != ib->first || !bitwise_equal(ia->second.value, ib->second.value)) return false;
  }
  return true;
}

}  // namespace elasticflow
