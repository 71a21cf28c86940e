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

#ifndef GEOSYN_IO_CHECKPOINT_H_
#define GEOSYN_IO_CHECKPOINT_H_

#include <string>
#include <utility>
#include <vector>

#include "core/tensor.h"
#include "json.hpp"
#include "nn/module.h"
#include "train/adam.h"

namespace geosyn {

// On-disk training state: a JSON metadata blob plus a named float32 tensor
// table. Files are written to a temporary name and renamed into place so a
// crash never leaves a half-written checkpoint behind.
struct Checkpoint {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor<float>>> tensors;

  void add(const std::string& name, const Tensor<float>& t);
  const Tensor<float>* find(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

// Copies every parameter and buffer of a collected state dict into / out of
// the tensor table. Unpacking is strict: a missing name or shape mismatch
// raises, extra tensors in the file are ignored.
void pack_state(const StateDict<float>& sd, Checkpoint* ck);
void unpack_state(const Checkpoint& ck, StateDict<float>* sd);

// Adam moments land as "<prefix>.<param>.m" / ".v"; the step count is the
// one-element tensor "<prefix>.t".
void pack_adam(Adam<float>& opt, const std::string& prefix, Checkpoint* ck);
void unpack_adam(const Checkpoint& ck, const std::string& prefix,
                 Adam<float>* opt);

}  // namespace geosyn

#endif  // GEOSYN_IO_CHECKPOINT_H_
