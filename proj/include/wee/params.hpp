#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "wee/diff.hpp"

namespace wee {

// Named parameter arrays with a trainable/frozen flag per entry. The store
// owns the leaf nodes that training graphs hang off; values are updated in
// place between steps (graphs are rebuilt every step).
class ParamStore {
 public:
  DiffArray create(const std::string& name, Shape shape, std::vector<double> values,
                   bool trainable);
  const DiffArray& get(const std::string& name) const;
  bool contains(const std::string& name) const;
  bool trainable(const std::string& name) const;

  // Names in sorted order, for deterministic iteration.
  std::vector<std::string> names() const;
  std::vector<std::string> trainable_names() const;
  std::vector<std::string> frozen_names() const;

  std::size_t total_values() const;
  void zero_grads();

  // FNV-1a over the raw value bytes; used by the freezing audit.
  std::uint64_t value_hash(const std::string& name) const;
  std::map<std::string, std::uint64_t> hashes(bool frozen_only = true) const;

  // Versioned little-endian binary checkpoint of every entry.
  void save(const std::string& path) const;
  static ParamStore load(const std::string& path);

 private:
  struct Entry {
    DiffArray array;
    bool trainable = false;
  };
  std::map<std::string, Entry> entries_;
};

}  // namespace wee
