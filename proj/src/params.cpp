/* Copyright 2026 The Relimp Authors. All Rights Reserved.

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

#include "relimp/params.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace relimp {

ParamId ParamStore::add(const std::string& name, Tensor value) {
  if (index_.count(name)) throw std::invalid_argument("param store: duplicate parameter '" + name + "'");
  const ParamId id = values_.size();
  names_.push_back(name);
  values_.push_back(std::move(value));
  index_.emplace(name, id);
  return id;
}

ParamId ParamStore::add_weight(const std::string& name, std::size_t fan_in, std::size_t fan_out,
                               std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor w(Shape{fan_in, fan_out}, 0.0);
  for (auto& v : w.values()) v = dist(rng);
  return add(name, std::move(w));
}

ParamId ParamStore::add_bias(const std::string& name, std::size_t width, double fill) {
  return add(name, Tensor(Shape{width}, fill));
}

ParamId ParamStore::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("param store: no parameter '" + name + "'");
  return it->second;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

void ParamStore::fill(double v) {
  for (auto& t : values_) t.fill(v);
}

BoundParams::BoundParams(ad::Tape& tape, const ParamStore& store, bool trainable) : tape_(&tape) {
  vars_.reserve(store.size());
  for (ParamId i = 0; i < store.size(); ++i) {
    vars_.push_back(trainable ? tape.param(store.value(i)) : tape.constant(store.value(i)));
  }
}

std::vector<Tensor> BoundParams::gradients() const {
  std::vector<Tensor> out;
  out.reserve(vars_.size());
  for (const auto& v : vars_) out.push_back(tape_->grad(v));
  return out;
}

void Adam::step(ParamStore& params, const std::vector<Tensor>& grads) {
  if (grads.size() != params.size()) {
    throw std::invalid_argument("adam: " + std::to_string(grads.size()) + " gradients for " +
                                std::to_string(params.size()) + " parameters");
  }
  if (m_.empty()) {
    for (ParamId i = 0; i < params.size(); ++i) {
      m_.push_back(Tensor::zeros_like(params.value(i)));
      v_.push_back(Tensor::zeros_like(params.value(i)));
    }
  }
  if (m_.size() != params.size()) throw std::invalid_argument("adam: parameter set changed between steps");
  for (ParamId i = 0; i < params.size(); ++i) {
    if (grads[i].shape() != params.value(i).shape() || m_[i].shape() != params.value(i).shape()) {
      throw std::invalid_argument("adam: shape mismatch for '" + params.name(i) + "': param " +
                                  shape_to_string(params.value(i).shape()) + " vs grad " +
                                  shape_to_string(grads[i].shape()));
    }
  }
  ++step_;
  const auto& o = options_;
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(step_));
  for (ParamId i = 0; i < params.size(); ++i) {
    Tensor& p = params.value(i);
    Tensor& m = m_[i];
    Tensor& v = v_[i];
    const Tensor& g = grads[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = o.beta1 * m[k] + (1.0 - o.beta1) * g[k];
      v[k] = o.beta2 * v[k] + (1.0 - o.beta2) * g[k] * g[k];
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      p[k] -= o.lr * mhat / (std::sqrt(vhat) + o.eps);
    }
  }
}

namespace {

void write_le(std::ostream& os, double v) {
  std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  unsigned char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>(bits >> (8 * i));
  os.write(reinterpret_cast<const char*>(buf), 8);
}

double read_le(const unsigned char* buf) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  return std::bit_cast<double>(bits);
}

struct ManifestEntry {
  std::string name;
  Shape shape;
  std::size_t offset;
};

std::pair<std::vector<ManifestEntry>, std::vector<unsigned char>> read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open " + path.string());
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("checkpoint: missing manifest in " + path.string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error("checkpoint: malformed manifest in " + path.string() + ": " + e.what());
  }
  if (!manifest.is_array()) throw std::runtime_error("checkpoint: manifest must be a JSON list");
  std::vector<ManifestEntry> entries;
  for (const auto& e : manifest) {
    ManifestEntry m;
    m.name = e.at("name").get<std::string>();
    m.shape = e.at("shape").get<Shape>();
    m.offset = e.at("byte_offset").get<std::size_t>();
    entries.push_back(std::move(m));
  }
  std::vector<unsigned char> payload((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return {std::move(entries), std::move(payload)};
}

Tensor decode(const ManifestEntry& e, const std::vector<unsigned char>& payload) {
  const std::size_t n = shape_numel(e.shape);
  if (e.offset + 8 * n > payload.size()) {
    throw std::runtime_error("checkpoint: payload truncated for '" + e.name + "'");
  }
  std::vector<double> data(n);
  for (std::size_t i = 0; i < n; ++i) data[i] = read_le(payload.data() + e.offset + 8 * i);
  return Tensor(e.shape, std::move(data));
}

}  // namespace

void save_checkpoint(const ParamStore& params, const std::filesystem::path& path) {
  nlohmann::json manifest = nlohmann::json::array();
  std::size_t offset = 0;
  for (ParamId i = 0; i < params.size(); ++i) {
    manifest.push_back({{"name", params.name(i)}, {"shape", params.value(i).shape()}, {"byte_offset", offset}});
    offset += 8 * params.value(i).size();
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  out << manifest.dump() << '\n';
  for (ParamId i = 0; i < params.size(); ++i)
    for (double v : params.value(i).values()) write_le(out, v);
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  auto [entries, payload] = read_raw(path);
  ParamStore store;
  for (const auto& e : entries) store.add(e.name, decode(e, payload));
  return store;
}

void load_checkpoint_into(ParamStore& params, const std::filesystem::path& path) {
  auto [entries, payload] = read_raw(path);
  if (entries.size() != params.size()) {
    throw std::runtime_error("checkpoint: " + std::to_string(entries.size()) + " tensors, model expects " +
                             std::to_string(params.size()));
  }
  for (const auto& e : entries) {
    const ParamId id = params.find(e.name);
    if (params.value(id).shape() != e.shape) {
      throw std::runtime_error("checkpoint: shape mismatch for '" + e.name + "': file " + shape_to_string(e.shape) +
                               " vs model " + shape_to_string(params.value(id).shape()));
    }
    params.value(id) = decode(e, payload);
  }
}

}  // namespace relimp
