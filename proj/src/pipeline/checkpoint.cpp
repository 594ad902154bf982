// Copyright (c) the wavefr authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include "wavefr/pipeline/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "wavefr/error.hpp"
#include "wavefr/pipeline/ppm.hpp"

namespace wfr::pipeline {

namespace {

constexpr char kMagic[4] = {'W', 'F', 'C', 'K'};
constexpr std::uint8_t kDtypeF32 = 0;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  template <class U>
  void le(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  void f32(float v) { le(std::bit_cast<std::uint32_t>(v)); }
  std::vector<std::uint8_t> take() { return std::move(out_); }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& b, const std::string& origin)
      : b_(b), origin_(origin) {}

  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw IoError(origin_ + ": truncated checkpoint");
  }
  template <class U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<U>(static_cast<U>(b_[pos_++]) << (8 * i));
    }
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(b_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  b_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(le<std::uint32_t>()); }
  bool done() const { return pos_ == b_.size(); }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& b_;
  const std::string& origin_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  std::vector<const CheckpointTensor*> order;
  for (const auto& t : ckpt.tensors) order.push_back(&t);
  std::sort(order.begin(), order.end(),
            [](auto* a, auto* b) { return a->name < b->name; });
  for (std::size_t i = 1; i < order.size(); ++i) {
    if (order[i]->name == order[i - 1]->name) {
      throw ContractError("checkpoint: duplicate tensor name '" + order[i]->name + "'");
    }
  }
  Writer w;
  w.bytes(kMagic, 4);
  w.le<std::uint32_t>(kCheckpointVersion);
  const std::string meta = ckpt.metadata.dump();
  w.le<std::uint64_t>(meta.size());
  w.bytes(meta.data(), meta.size());
  w.le<std::uint32_t>(static_cast<std::uint32_t>(order.size()));
  for (const auto* t : order) {
    if (nn::numel(t->shape) != t->data.size()) {
      throw ContractError("checkpoint: tensor '" + t->name + "' has " +
                          std::to_string(t->data.size()) + " values for shape " +
                          nn::shape_string(t->shape));
    }
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t->name.size()));
    w.bytes(t->name.data(), t->name.size());
    w.le<std::uint8_t>(kDtypeF32);
    w.le<std::uint32_t>(static_cast<std::uint32_t>(t->shape.size()));
    for (std::size_t d : t->shape) w.le<std::uint64_t>(d);
    for (float v : t->data) w.f32(v);
  }
  return w.take();
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes,
                             const std::string& origin) {
  Reader r(bytes, origin);
  if (r.str(4) != std::string(kMagic, 4)) {
    throw IoError(origin + ": not a WFCK checkpoint");
  }
  const auto version = r.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw IoError(origin + ": checkpoint version " + std::to_string(version) +
                  ", this build reads version " + std::to_string(kCheckpointVersion));
  }
  Checkpoint ck;
  const auto meta_len = r.le<std::uint64_t>();
  if (meta_len > r.remaining()) throw IoError(origin + ": truncated checkpoint");
  try {
    ck.metadata = nlohmann::json::parse(r.str(meta_len));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(origin + ": bad checkpoint metadata: " + e.what());
  }
  const auto count = r.le<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointTensor t;
    t.name = r.str(r.le<std::uint32_t>());
    if (!ck.tensors.empty() && !(ck.tensors.back().name < t.name)) {
      throw IoError(origin + ": tensor names not strictly sorted at '" + t.name + "'");
    }
    if (r.le<std::uint8_t>() != kDtypeF32) {
      throw IoError(origin + ": tensor '" + t.name + "' has an unsupported dtype");
    }
    const auto rank = r.le<std::uint32_t>();
    std::size_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto dim = r.le<std::uint64_t>();
      if (dim != 0 && n > r.remaining() / dim) {
        throw IoError(origin + ": tensor '" + t.name + "' larger than the file");
      }
      t.shape.push_back(static_cast<std::size_t>(dim));
      n *= static_cast<std::size_t>(dim);
    }
    r.need(4 * n);
    t.data.resize(n);
    for (float& v : t.data) v = r.f32();
    ck.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw IoError(origin + ": trailing bytes after checkpoint");
  return ck;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path), path.string());
}

Checkpoint make_checkpoint(const nn::ParameterStore<float>& params,
                           nlohmann::json metadata) {
  Checkpoint ck;
  ck.metadata = std::move(metadata);
  for (const auto& [name, t] : params) {
    ck.tensors.push_back({name, t.shape(), t.values()});
  }
  return ck;
}

nn::ParameterStore<float> checkpoint_params(const Checkpoint& ckpt) {
  nn::ParameterStore<float> ps;
  for (const auto& t : ckpt.tensors) ps.add(t.name, nn::Tensor<float>(t.shape, t.data));
  return ps;
}

}  // namespace wfr::pipeline
