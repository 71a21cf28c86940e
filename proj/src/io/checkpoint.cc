/* Copyright 2026 The geosyn Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "io/checkpoint.h"

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace geosyn {
namespace {

constexpr char kMagic[8] = {'G', 'E', 'O', 'S', 'Y', 'N', 'C', 'K'};
constexpr uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is, const std::string& path) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("checkpoint truncated: " + path);
  return v;
}

}  // namespace

void Checkpoint::add(const std::string& name, const Tensor<float>& t) {
  if (!t.defined())
    throw std::invalid_argument("checkpoint: undefined tensor " + name);
  if (find(name))
    throw std::invalid_argument("checkpoint: duplicate tensor " + name);
  tensors.emplace_back(name, t.clone());
}

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return &t;
  return nullptr;
}

void Checkpoint::save(const std::string& path) const {
  std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot open " + tmp);
    os.write(kMagic, sizeof(kMagic));
    put(os, kVersion);
    std::string meta = metadata.dump();
    put(os, static_cast<uint64_t>(meta.size()));
    os.write(meta.data(), static_cast<std::streamsize>(meta.size()));
    put(os, static_cast<uint64_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
      put(os, static_cast<uint16_t>(name.size()));
      os.write(name.data(), static_cast<std::streamsize>(name.size()));
      put(os, static_cast<uint8_t>(t.rank()));
      for (int64_t d = 0; d < t.rank(); ++d)
        put(os, static_cast<int64_t>(t.dim(d)));
      os.write(reinterpret_cast<const char*>(t.data()),
               static_cast<std::streamsize>(t.numel() * sizeof(float)));
    }
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("checkpoint: rename failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path);
  uint32_t version = get<uint32_t>(is, path);
  if (version != kVersion)
    throw std::runtime_error("checkpoint: unsupported version " +
                             std::to_string(version) + " in " + path);
  Checkpoint ck;
  uint64_t meta_len = get<uint64_t>(is, path);
  std::string meta(meta_len, '\0');
  is.read(meta.data(), static_cast<std::streamsize>(meta_len));
  if (!is) throw std::runtime_error("checkpoint truncated: " + path);
  ck.metadata = nlohmann::json::parse(meta);
  uint64_t count = get<uint64_t>(is, path);
  for (uint64_t i = 0; i < count; ++i) {
    uint16_t name_len = get<uint16_t>(is, path);
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    if (!is) throw std::runtime_error("checkpoint truncated: " + path);
    uint8_t rank = get<uint8_t>(is, path);
    std::vector<int64_t> dims(rank);
    for (uint8_t d = 0; d < rank; ++d) dims[d] = get<int64_t>(is, path);
    Tensor<float> t(dims);
    is.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!is) throw std::runtime_error("checkpoint truncated: " + path);
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  return ck;
}

void pack_state(const StateDict<float>& sd, Checkpoint* ck) {
  for (const auto& [name, var] : sd.params) ck->add(name, var->value);
  for (const auto& [name, buf] : sd.buffers) {
    if (buf->defined()) ck->add(name, *buf);
  }
}

void unpack_state(const Checkpoint& ck, StateDict<float>* sd) {
  auto restore = [&](const std::string& name, Tensor<float>& dst) {
    const Tensor<float>* src = ck.find(name);
    if (!src)
      throw std::runtime_error("checkpoint: missing tensor " + name);
    if (!src->same_shape(dst))
      throw std::runtime_error("checkpoint: shape mismatch for " + name +
                               ", file " + src->shape_str() + " vs model " +
                               dst.shape_str());
    std::copy(src->data(), src->data() + src->numel(), dst.data());
  };
  for (auto& [name, var] : sd->params) restore(name, var->value);
  for (auto& [name, buf] : sd->buffers) {
    if (buf->defined()) restore(name, *buf);
  }
}

void pack_adam(Adam<float>& opt, const std::string& prefix, Checkpoint* ck) {
  for (auto& slot : opt.slots()) {
    ck->add(prefix + "." + slot.name + ".m", slot.m);
    ck->add(prefix + "." + slot.name + ".v", slot.v);
  }
  Tensor<float> t({1});
  t[0] = static_cast<float>(opt.step_count());
  ck->add(prefix + ".t", t);
}

void unpack_adam(const Checkpoint& ck, const std::string& prefix,
                 Adam<float>* opt) {
  auto restore = [&](const std::string& name, Tensor<float>& dst) {
    const Tensor<float>* src = ck.find(name);
    if (!src)
      throw std::runtime_error("checkpoint: missing tensor " + name);
    if (!src->same_shape(dst))
      throw std::runtime_error("checkpoint: shape mismatch for " + name);
    std::copy(src->data(), src->data() + src->numel(), dst.data());
  };
  for (auto& slot : opt->slots()) {
    restore(prefix + "." + slot.name + ".m", slot.m);
    restore(prefix + "." + slot.name + ".v", slot.v);
  }
  const Tensor<float>* t = ck.find(prefix + ".t");
  if (!t) throw std::runtime_error("checkpoint: missing tensor " + prefix + ".t");
  opt->step_count() = static_cast<int64_t>((*t)[0]);
}

}  // namespace geosyn
