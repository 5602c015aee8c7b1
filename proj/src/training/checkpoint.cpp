// Copyright 2026 The vdeblur Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cstring>
#include <map>
#include <sstream>

#include "vdb/errors.hpp"
#include "vdb/training.hpp"

namespace vdb::training {

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written in host byte order");

namespace {

constexpr const char* kMagic = "vdeblur-checkpoint 1";

template <class T>
const char* dtype_name() {
  return sizeof(T) == 4 ? "f32" : "f64";
}

void write_blob(std::ostream& out, const std::string& name, const void* data,
                std::size_t count, std::size_t elem) {
  out << name << ' ' << count << '\n';
  out.write(static_cast<const char*>(data),
            static_cast<std::streamsize>(count * elem));
}

struct Blob {
  std::size_t count = 0;
  std::string bytes;
};

struct Parsed {
  CheckpointHeader header;
  std::map<std::string, Blob> blobs;
};

std::string read_line(std::istream& in, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(in, line))
    throw UsageError("checkpoint " + path.string() + ": truncated header");
  return line;
}

Parsed parse(const std::filesystem::path& path, bool header_only) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open checkpoint " + path.string());
  if (read_line(in, path) != kMagic)
    throw UsageError(path.string() + " is not a vdeblur checkpoint");
  Parsed p;
  std::size_t blobs = 0;
  for (std::string line = read_line(in, path); line != "end";
       line = read_line(in, path)) {
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    std::string rest;
    std::getline(ls >> std::ws, rest);
    if (key == "config_hash") p.header.config_hash = rest;
    else if (key == "step") p.header.step = std::stoull(rest);
    else if (key == "rng") p.header.rng = rest;
    else if (key == "dtype") p.header.dtype = rest;
    else if (key == "blobs") blobs = std::stoull(rest);
    else throw UsageError("checkpoint " + path.string() + ": unknown header key '" + key + "'");
  }
  const std::size_t elem = p.header.dtype == "f64" ? 8 : 4;
  for (std::size_t b = 0; b < blobs; ++b) {
    std::istringstream ls(read_line(in, path));
    std::string name;
    Blob blob;
    if (!(ls >> name >> blob.count))
      throw UsageError("checkpoint " + path.string() + ": bad blob header");
    const std::size_t bytes = name == "config" ? blob.count : blob.count * elem;
    blob.bytes.resize(bytes);
    if (!in.read(blob.bytes.data(), static_cast<std::streamsize>(bytes)))
      throw UsageError("checkpoint " + path.string() + ": truncated blob " + name);
    if (name == "config") {
      p.header.config_text = blob.bytes;
      if (header_only) break;
    }
    p.blobs.emplace(name, std::move(blob));
  }
  return p;
}

template <class T>
void copy_blob(const Parsed& p, const std::string& name, Tensor<T>& dst,
               const std::filesystem::path& path) {
  const auto it = p.blobs.find(name);
  if (it == p.blobs.end())
    throw UsageError("checkpoint " + path.string() + " lacks " + name);
  if (it->second.count != dst.size())
    throw UsageError("checkpoint " + path.string() + ": " + name + " has " +
                     std::to_string(it->second.count) + " values, model needs " +
                     std::to_string(dst.size()));
  std::memcpy(dst.ptr(), it->second.bytes.data(), dst.size() * sizeof(T));
}

}  // namespace

template <class T>
void save_checkpoint(const std::filesystem::path& path, const TrainState<T>& s,
                     const std::string& config_text,
                     const std::string& config_hash) {
  const auto& items = s.net.parameters().items();
  std::vector<const nn::NamedParam<T>*> trainable;
  for (const auto& p : items)
    if (s.net.is_trainable(p.kind)) trainable.push_back(&p);

  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw UsageError("cannot write checkpoint " + path.string());
    out << kMagic << '\n'
        << "config_hash " << config_hash << '\n'
        << "step " << s.step << '\n'
        << "rng " << s.rng.serialize() << '\n'
        << "dtype " << dtype_name<T>() << '\n'
        << "blobs " << 1 + items.size() + 2 * trainable.size() << '\n'
        << "end\n";
    write_blob(out, "config", config_text.data(), config_text.size(), 1);
    for (const auto& p : items)
      write_blob(out, "param/" + p.name, p.var.value().ptr(), p.var.size(),
                 sizeof(T));
    const auto& m = s.adam.first_moments();
    const auto& v = s.adam.second_moments();
    for (std::size_t k = 0; k < trainable.size(); ++k)
      write_blob(out, "adam.m/" + trainable[k]->name, m[k].ptr(), m[k].size(),
                 sizeof(T));
    for (std::size_t k = 0; k < trainable.size(); ++k)
      write_blob(out, "adam.v/" + trainable[k]->name, v[k].ptr(), v[k].size(),
                 sizeof(T));
    if (!out) throw Error("failed writing checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointHeader read_checkpoint_header(const std::filesystem::path& path) {
  return parse(path, true).header;
}

template <class T>
void load_checkpoint(const std::filesystem::path& path, TrainState<T>& s) {
  const Parsed p = parse(path, false);
  if (p.header.dtype != dtype_name<T>())
    throw UsageError("checkpoint " + path.string() + " stores " +
                     p.header.dtype + " values, expected " + dtype_name<T>());
  std::size_t k = 0;
  auto& m = s.adam.first_moments();
  auto& v = s.adam.second_moments();
  for (const auto& item : s.net.parameters().items()) {
    Var<T> var = item.var;
    copy_blob(p, "param/" + item.name, var.mutable_value(), path);
    if (!s.net.is_trainable(item.kind)) continue;
    copy_blob(p, "adam.m/" + item.name, m.at(k), path);
    copy_blob(p, "adam.v/" + item.name, v.at(k), path);
    ++k;
  }
  s.step = p.header.step;
  s.adam.set_steps_taken(p.header.step);
  s.rng = Rng::deserialize(p.header.rng);
}

#define VDB_INSTANTIATE(T)                                                   \
  template void save_checkpoint<T>(const std::filesystem::path&,             \
                                   const TrainState<T>&, const std::string&, \
                                   const std::string&);                      \
  template void load_checkpoint<T>(const std::filesystem::path&, TrainState<T>&);

VDB_INSTANTIATE(float)
VDB_INSTANTIATE(double)
#undef VDB_INSTANTIATE

}  // namespace vdb::training
