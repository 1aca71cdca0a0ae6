#include "wee/params.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace wee {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is defined little-endian");

namespace {
constexpr char kMagic[8] = {'W', 'E', 'E', 'P', 'A', 'R', 'M', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw InvalidInputError("checkpoint: truncated file");
  return v;
}
}  // namespace

DiffArray ParamStore::create(const std::string& name, Shape shape, std::vector<double> values,
                             bool trainable) {
  if (entries_.count(name)) throw ConfigError("parameter already exists: " + name);
  DiffArray a = trainable ? DiffArray::param(std::move(shape), std::move(values))
                          : DiffArray::constant(std::move(shape), std::move(values));
  entries_[name] = Entry{a, trainable};
  return a;
}

const DiffArray& ParamStore::get(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second.array;
}

bool ParamStore::contains(const std::string& name) const { return entries_.count(name) > 0; }

bool ParamStore::trainable(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second.trainable;
}

std::vector<std::string> ParamStore::names() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

std::vector<std::string> ParamStore::trainable_names() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) {
    if (e.trainable) out.push_back(k);
  }
  return out;
}

std::vector<std::string> ParamStore::frozen_names() const {
  std::vector<std::string> out;
  for (const auto& [k, e] : entries_) {
    if (!e.trainable) out.push_back(k);
  }
  return out;
}

std::size_t ParamStore::total_values() const {
  std::size_t n = 0;
  for (const auto& [_, e] : entries_) n += e.array.size();
  return n;
}

void ParamStore::zero_grads() {
  for (auto& [_, e] : entries_) {
    DiffArray a = e.array;
    a.zero_grad();
  }
}

std::uint64_t ParamStore::value_hash(const std::string& name) const {
  const auto& v = get(name).values();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const unsigned char* bytes = reinterpret_cast<const unsigned char*>(v.data());
  for (std::size_t i = 0; i < v.size() * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::map<std::string, std::uint64_t> ParamStore::hashes(bool frozen_only) const {
  std::map<std::string, std::uint64_t> out;
  for (const auto& [k, e] : entries_) {
    if (frozen_only && e.trainable) continue;
    out[k] = value_hash(k);
  }
  return out;
}

void ParamStore::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open checkpoint for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    write_pod(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod(out, static_cast<std::uint8_t>(e.trainable ? 1 : 0));
    const Shape& s = e.array.shape();
    write_pod(out, static_cast<std::uint32_t>(s.size()));
    for (int d : s) write_pod(out, static_cast<std::int32_t>(d));
    const auto& v = e.array.values();
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
  }
  if (!out) throw ConfigError("checkpoint write failed: " + path);
}

ParamStore ParamStore::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw InvalidInputError("checkpoint: bad magic in " + path);
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw InvalidInputError("checkpoint: unsupported version " + std::to_string(version));
  }
  const auto count = read_pod<std::uint32_t>(in);
  ParamStore store;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<std::uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto trainable = read_pod<std::uint8_t>(in);
    const auto ndim = read_pod<std::uint32_t>(in);
    Shape shape;
    for (std::uint32_t d = 0; d < ndim; ++d) shape.push_back(read_pod<std::int32_t>(in));
    std::vector<double> values(shape_size(shape));
    in.read(reinterpret_cast<char*>(values.data()),
            static_cast<std::streamsize>(values.size() * sizeof(double)));
    if (!in) throw InvalidInputError("checkpoint: truncated tensor data in " + path);
    store.create(name, std::move(shape), std::move(values), trainable != 0);
  }
  return store;
}

}  // namespace wee
