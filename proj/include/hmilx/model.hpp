// Copyright 2026 The Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hmilx/encode.hpp"
#include "hmilx/error.hpp"
#include "hmilx/sample.hpp"
#include "hmilx/schema.hpp"

namespace hmilx {

// Weights (out x in, row-major) followed by the bias, inside the flat
// parameter vector.
struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::size_t offset = 0;

  std::size_t weights() const { return offset; }
  std::size_t bias() const { return offset + in * out; }
  std::size_t size() const { return in * out + out; }
};

// Parameters attached to one schema node.
struct ModelBlock {
  SchemaKind kind = SchemaKind::Atomic;
  std::string path;

  // Atomic: encoder followed by a dense ReLU layer to k.
  EncoderSpec encoder;
  DenseLayer embed;

  // Dictionary: per-key phi (k -> k) and imputation, then a dense ReLU layer
  // over the concatenation of all keys in sorted order.
  std::vector<std::string> keys;
  std::vector<std::size_t> child_blocks;
  std::vector<DenseLayer> phi;
  std::vector<std::size_t> key_imputation;
  DenseLayer combine;

  // List: [max || mean] over items, then a dense ReLU layer; an imputation
  // stands in when no item is present.
  std::optional<std::size_t> item_block;
  DenseLayer aggregate;
  std::size_t list_imputation = 0;
};

struct ParamTensor {
  std::string name;
  std::size_t offset = 0;
  std::vector<std::size_t> shape;

  std::size_t size() const {
    std::size_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

struct CounterSnapshot {
  std::uint64_t inferences = 0;
  std::uint64_t gradients = 0;

  friend CounterSnapshot operator-(const CounterSnapshot& a, const CounterSnapshot& b) {
    return {a.inferences - b.inferences, a.gradients - b.gradients};
  }
  friend bool operator==(const CounterSnapshot&, const CounterSnapshot&) = default;
};

// Monotone, thread-safe call counters.
class EvalCounters {
 public:
  EvalCounters() = default;
  EvalCounters(const EvalCounters& other) { *this = other; }
  EvalCounters& operator=(const EvalCounters& other) {
    inferences_.store(other.inferences_.load());
    gradients_.store(other.gradients_.load());
    return *this;
  }

  void add_inference() { inferences_.fetch_add(1, std::memory_order_relaxed); }
  void add_gradient() { gradients_.fetch_add(1, std::memory_order_relaxed); }
  CounterSnapshot snapshot() const { return {inferences_.load(), gradients_.load()}; }

 private:
  std::atomic<std::uint64_t> inferences_{0};
  std::atomic<std::uint64_t> gradients_{0};
};

struct Prediction {
  double logit_pos = 0.0;
  double logit_neg = 0.0;
  double confidence = 0.0;  // softmax(pos) - softmax(neg)

  bool positive() const { return confidence >= 0.0; }
};

// softmax(a, b)[0] - softmax(a, b)[1]
inline double confidence_from_logits(double pos, double neg) { return std::tanh(0.5 * (pos - neg)); }

// A sample resolved against a model: schema block per node, encoded leaves and
// the dictionary slot each child occupies.
struct BoundSample {
  Sample sample;
  std::vector<std::uint32_t> block;
  std::vector<std::vector<NodeId>> slot_child;  // dictionaries: child per key slot
  std::vector<SparseVector> input;              // leaves
};

class Model;

namespace detail {

inline void dense_forward(std::span<const double> p, const DenseLayer& l, std::span<const double> x,
                          std::span<double> z) {
  const double* w = p.data() + l.weights();
  const double* b = p.data() + l.bias();
  for (std::size_t o = 0; o < l.out; ++o) {
    double acc = b[o];
    const double* row = w + o * l.in;
    for (std::size_t i = 0; i < l.in; ++i) acc += row[i] * x[i];
    z[o] = acc;
  }
}

inline void sparse_forward(std::span<const double> p, const DenseLayer& l, const SparseVector& x,
                           std::span<double> z) {
  const double* w = p.data() + l.weights();
  const double* b = p.data() + l.bias();
  for (std::size_t o = 0; o < l.out; ++o) {
    double acc = b[o];
    const double* row = w + o * l.in;
    for (const auto& [i, v] : x) acc += row[i] * v;
    z[o] = acc;
  }
}

// Accumulates dW, db (when `grad` is non-empty) and dx (when `dx` is non-empty).
inline void dense_backward(std::span<const double> p, const DenseLayer& l, std::span<const double> x,
                           std::span<const double> dz, std::span<double> grad, std::span<double> dx) {
  const double* w = p.data() + l.weights();
  for (std::size_t o = 0; o < l.out; ++o) {
    const double d = dz[o];
    if (d == 0.0) continue;
    if (!grad.empty()) {
      double* gw = grad.data() + l.weights() + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) gw[i] += d * x[i];
      grad[l.bias() + o] += d;
    }
    if (!dx.empty()) {
      const double* row = w + o * l.in;
      for (std::size_t i = 0; i < l.in; ++i) dx[i] += row[i] * d;
    }
  }
}

inline void sparse_backward(const DenseLayer& l, const SparseVector& x, std::span<const double> dz,
                            std::span<double> grad) {
  if (grad.empty()) return;
  for (std::size_t o = 0; o < l.out; ++o) {
    const double d = dz[o];
    if (d == 0.0) continue;
    double* gw = grad.data() + l.weights() + o * l.in;
    for (const auto& [i, v] : x) gw[i] += d * v;
    grad[l.bias() + o] += d;
  }
}

inline void relu(std::span<const double> z, std::span<double> h) {
  for (std::size_t i = 0; i < z.size(); ++i) h[i] = z[i] > 0.0 ? z[i] : 0.0;
}

inline void relu_backward(std::span<const double> z, std::span<const double> dh, std::span<double> dz) {
  for (std::size_t i = 0; i < z.size(); ++i) dz[i] = z[i] > 0.0 ? dh[i] : 0.0;
}

// Buffers of one forward/backward pass; reused across calls on the same sample.
struct Workspace {
  std::vector<char> active;
  std::vector<double> h, z;            // node embedding and its pre-activation
  std::vector<double> phi_z, phi_out;  // dictionary children: phi of the parent key
  std::vector<double> concat;
  std::vector<std::size_t> concat_offset;
  std::vector<double> agg;             // lists: [max || mean]
  std::vector<NodeId> items;
  std::vector<std::size_t> item_offset, item_count;
  std::vector<char> list_empty;
  std::vector<double> hidden_z, hidden_a;
  double logits[2] = {0.0, 0.0};
  std::vector<double> dh;
  std::vector<double> scratch_a, scratch_b;

  void prepare(const BoundSample& b, std::size_t k, std::span<const ModelBlock> blocks) {
    const std::size_t n = b.sample.size();
    active.assign(n, 0);
    h.assign(n * k, 0.0);
    z.assign(n * k, 0.0);
    phi_z.assign(n * k, 0.0);
    phi_out.assign(n * k, 0.0);
    agg.assign(n * 2 * k, 0.0);
    item_offset.assign(n, 0);
    item_count.assign(n, 0);
    list_empty.assign(n, 0);
    concat_offset.assign(n, 0);
    std::size_t total = 0;
    for (NodeId i = 0; i < n; ++i) {
      if (b.sample.node(i).kind == NodeKind::Dictionary) {
        concat_offset[i] = total;
        total += blocks[b.block[i]].keys.size() * k;
      }
    }
    concat.assign(total, 0.0);
    items.clear();
    hidden_z.assign(k, 0.0);
    hidden_a.assign(k, 0.0);
    dh.assign(n * k, 0.0);
    scratch_a.assign(std::max<std::size_t>(total, 2 * k) + k, 0.0);
    scratch_b.assign(std::max<std::size_t>(total, 2 * k) + k, 0.0);
  }
};

struct EmbeddingOverride {
  NodeId node = kNoNode;
  std::span<const double> value;
};

}  // namespace detail

class Model {
 public:
  Model() = default;

  std::size_t k() const { return k_; }
  const SchemaNode& schema() const { return schema_; }
  const std::string& fingerprint() const { return fingerprint_; }
  const std::vector<ModelBlock>& blocks() const { return blocks_; }
  const DenseLayer& head_hidden() const { return head_hidden_; }
  const DenseLayer& head_output() const { return head_output_; }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }

  const ParamTensor* tensor(const std::string& name) const {
    for (const auto& t : tensors_) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  EvalCounters& counters() const { return counters_; }

  BoundSample bind(const Sample& sample) const {
    BoundSample b;
    b.sample = sample;
    const std::size_t n = sample.size();
    b.block.assign(n, 0);
    b.slot_child.assign(n, {});
    b.input.assign(n, {});
    for (NodeId i = 0; i < n; ++i) {
      const auto& node = sample.node(i);
      const ModelBlock& blk = blocks_[b.block[i]];
      const std::string where = sample.path_string(i).empty() ? "<root>" : sample.path_string(i);
      switch (node.kind) {
        case NodeKind::Leaf:
          if (blk.kind != SchemaKind::Atomic) {
            throw SchemaMismatch("atomic value at " + where + " where schema has " + std::string(to_string(blk.kind)));
          }
          try {
            b.input[i] = encode_sparse(*node.value, blk.encoder);
          } catch (const KindMismatch& e) {
            throw SchemaMismatch(where + ": " + e.what());
          }
          break;
        case NodeKind::Dictionary:
          if (blk.kind != SchemaKind::Dictionary) {
            throw SchemaMismatch("dictionary at " + where + " where schema has " + std::string(to_string(blk.kind)));
          }
          b.slot_child[i].assign(blk.keys.size(), kNoNode);
          for (NodeId c : node.children) {
            auto it = std::lower_bound(blk.keys.begin(), blk.keys.end(), sample.node(c).key);
            if (it == blk.keys.end() || *it != sample.node(c).key) {
              throw SchemaMismatch("unknown key '" + sample.node(c).key + "' at " + where);
            }
            const auto slot = static_cast<std::size_t>(it - blk.keys.begin());
            b.slot_child[i][slot] = c;
            b.block[c] = static_cast<std::uint32_t>(blk.child_blocks[slot]);
          }
          break;
        case NodeKind::List:
          if (blk.kind != SchemaKind::List) {
            throw SchemaMismatch("list at " + where + " where schema has " + std::string(to_string(blk.kind)));
          }
          if (!node.children.empty() && !blk.item_block) {
            throw SchemaMismatch("list items at " + where + " but schema has no item type");
          }
          for (NodeId c : node.children) b.block[c] = static_cast<std::uint32_t>(*blk.item_block);
          break;
      }
    }
    return b;
  }

  // Runs the masked forward pass. `mask` empty means every node; `weights`
  // (one per node, the weight of its incoming edge) empty means unweighted.
  Prediction forward(const BoundSample& b, detail::Workspace& ws, const std::vector<bool>* mask,
                     std::span<const double> weights = {}, const detail::EmbeddingOverride& over = {}) const {
    const std::size_t k = k_;
    const std::span<const double> p(params_);
    const Sample& s = b.sample;
    const std::size_t n = s.size();
    ws.prepare(b, k, blocks_);
    ws.active[0] = 1;
    for (NodeId i = 1; i < n; ++i) {
      ws.active[i] = (!mask || (*mask)[i]) && ws.active[s.node(i).parent];
    }
    for (NodeId i = static_cast<NodeId>(n); i-- > 0;) {
      if (!ws.active[i]) continue;
      const auto& node = s.node(i);
      const ModelBlock& blk = blocks_[b.block[i]];
      std::span<double> hi(ws.h.data() + i * k, k);
      std::span<double> zi(ws.z.data() + i * k, k);
      switch (node.kind) {
        case NodeKind::Leaf:
          detail::sparse_forward(p, blk.embed, b.input[i], zi);
          detail::relu(zi, hi);
          break;
        case NodeKind::Dictionary: {
          const std::size_t keys = blk.keys.size();
          std::span<double> cat(ws.concat.data() + ws.concat_offset[i], keys * k);
          for (std::size_t j = 0; j < keys; ++j) {
            std::span<double> slot = cat.subspan(j * k, k);
            const double* imp = params_.data() + blk.key_imputation[j];
            const NodeId c = b.slot_child[i][j];
            if (c == kNoNode || !ws.active[c]) {
              std::copy(imp, imp + k, slot.begin());
              continue;
            }
            std::span<double> pz(ws.phi_z.data() + c * k, k);
            std::span<double> po(ws.phi_out.data() + c * k, k);
            detail::dense_forward(p, blk.phi[j], std::span<const double>(ws.h.data() + c * k, k), pz);
            detail::relu(pz, po);
            if (weights.empty()) {
              std::copy(po.begin(), po.end(), slot.begin());
            } else {
              const double m = weights[c];
              for (std::size_t d = 0; d < k; ++d) slot[d] = m * po[d] + (1.0 - m) * imp[d];
            }
          }
          detail::dense_forward(p, blk.combine, cat, zi);
          detail::relu(zi, hi);
          break;
        }
        case NodeKind::List: {
          ws.item_offset[i] = ws.items.size();
          for (NodeId c : node.children) {
            if (ws.active[c]) ws.items.push_back(c);
          }
          ws.item_count[i] = ws.items.size() - ws.item_offset[i];
          if (ws.item_count[i] == 0) {
            ws.list_empty[i] = 1;
            const double* imp = params_.data() + blk.list_imputation;
            std::copy(imp, imp + k, hi.begin());
            break;
          }
          std::span<double> a(ws.agg.data() + i * 2 * k, 2 * k);
          const double inv = 1.0 / static_cast<double>(ws.item_count[i]);
          for (std::size_t d = 0; d < k; ++d) {
            a[d] = -std::numeric_limits<double>::infinity();
            a[k + d] = 0.0;
          }
          for (std::size_t t = 0; t < ws.item_count[i]; ++t) {
            const NodeId c = ws.items[ws.item_offset[i] + t];
            const double m = weights.empty() ? 1.0 : weights[c];
            for (std::size_t d = 0; d < k; ++d) {
              const double u = m * ws.h[c * k + d];
              if (u > a[d]) a[d] = u;
              a[k + d] += u * inv;
            }
          }
          detail::dense_forward(p, blk.aggregate, a, zi);
          detail::relu(zi, hi);
          break;
        }
      }
      if (over.node == i) std::copy(over.value.begin(), over.value.end(), hi.begin());
    }
    detail::dense_forward(p, head_hidden_, std::span<const double>(ws.h.data(), k), ws.hidden_z);
    detail::relu(ws.hidden_z, ws.hidden_a);
    detail::dense_forward(p, head_output_, ws.hidden_a, std::span<double>(ws.logits, 2));
    return {ws.logits[0], ws.logits[1], confidence_from_logits(ws.logits[0], ws.logits[1])};
  }

  // Reverse pass after `forward` on the same workspace. Fills ws.dh with the
  // gradient of the scalar whose logit gradient is `dlogits` with respect to
  // every active node embedding; accumulates parameter gradients into `grad`
  // and edge-weight gradients into `weight_grad` when those are non-empty.
  void backward(const BoundSample& b, detail::Workspace& ws, const double dlogits[2], std::span<double> grad,
                std::span<const double> weights = {}, std::span<double> weight_grad = {},
                NodeId frozen = kNoNode) const {
    const std::size_t k = k_;
    const std::span<const double> p(params_);
    const Sample& s = b.sample;
    const std::size_t n = s.size();
    std::fill(ws.dh.begin(), ws.dh.end(), 0.0);

    std::vector<double> da(k, 0.0), dz(k, 0.0);
    detail::dense_backward(p, head_output_, ws.hidden_a, std::span<const double>(dlogits, 2), grad, da);
    detail::relu_backward(ws.hidden_z, da, dz);
    detail::dense_backward(p, head_hidden_, std::span<const double>(ws.h.data(), k), dz, grad,
                           std::span<double>(ws.dh.data(), k));

    for (NodeId i = 0; i < n; ++i) {
      if (!ws.active[i] || i == frozen) continue;
      const auto& node = s.node(i);
      const ModelBlock& blk = blocks_[b.block[i]];
      std::span<const double> dhi(ws.dh.data() + i * k, k);
      std::span<const double> zi(ws.z.data() + i * k, k);
      switch (node.kind) {
        case NodeKind::Leaf:
          detail::relu_backward(zi, dhi, dz);
          detail::sparse_backward(blk.embed, b.input[i], dz, grad);
          break;
        case NodeKind::Dictionary: {
          const std::size_t keys = blk.keys.size();
          std::span<const double> cat(ws.concat.data() + ws.concat_offset[i], keys * k);
          std::span<double> dcat(ws.scratch_a.data(), keys * k);
          std::fill(dcat.begin(), dcat.end(), 0.0);
          detail::relu_backward(zi, dhi, dz);
          detail::dense_backward(p, blk.combine, cat, dz, grad, dcat);
          for (std::size_t j = 0; j < keys; ++j) {
            std::span<const double> dslot = dcat.subspan(j * k, k);
            const NodeId c = b.slot_child[i][j];
            const std::size_t imp = blk.key_imputation[j];
            if (c == kNoNode || !ws.active[c]) {
              if (!grad.empty()) {
                for (std::size_t d = 0; d < k; ++d) grad[imp + d] += dslot[d];
              }
              continue;
            }
            std::span<const double> po(ws.phi_out.data() + c * k, k);
            std::span<const double> pz(ws.phi_z.data() + c * k, k);
            std::vector<double> dpo(dslot.begin(), dslot.end());
            if (!weights.empty()) {
              const double m = weights[c];
              double dm = 0.0;
              for (std::size_t d = 0; d < k; ++d) {
                dm += dslot[d] * (po[d] - params_[imp + d]);
                dpo[d] = m * dslot[d];
                if (!grad.empty()) grad[imp + d] += (1.0 - m) * dslot[d];
              }
              if (!weight_grad.empty()) weight_grad[c] += dm;
            }
            std::vector<double> dpz(k, 0.0);
            detail::relu_backward(pz, dpo, dpz);
            detail::dense_backward(p, blk.phi[j], std::span<const double>(ws.h.data() + c * k, k), dpz, grad,
                                   std::span<double>(ws.dh.data() + c * k, k));
          }
          break;
        }
        case NodeKind::List: {
          if (ws.list_empty[i]) {
            if (!grad.empty()) {
              for (std::size_t d = 0; d < k; ++d) grad[blk.list_imputation + d] += dhi[d];
            }
            break;
          }
          std::span<const double> a(ws.agg.data() + i * 2 * k, 2 * k);
          std::span<double> dagg(ws.scratch_a.data(), 2 * k);
          std::fill(dagg.begin(), dagg.end(), 0.0);
          detail::relu_backward(zi, dhi, dz);
          detail::dense_backward(p, blk.aggregate, a, dz, grad, dagg);
          // Tied maxima share the max gradient evenly.
          std::span<double> ties(ws.scratch_b.data(), k);
          std::fill(ties.begin(), ties.end(), 0.0);
          for (std::size_t t = 0; t < ws.item_count[i]; ++t) {
            const NodeId c = ws.items[ws.item_offset[i] + t];
            const double m = weights.empty() ? 1.0 : weights[c];
            for (std::size_t d = 0; d < k; ++d) {
              if (m * ws.h[c * k + d] == a[d]) ties[d] += 1.0;
            }
          }
          const double inv = 1.0 / static_cast<double>(ws.item_count[i]);
          for (std::size_t t = 0; t < ws.item_count[i]; ++t) {
            const NodeId c = ws.items[ws.item_offset[i] + t];
            const double m = weights.empty() ? 1.0 : weights[c];
            double dm = 0.0;
            for (std::size_t d = 0; d < k; ++d) {
              double du = dagg[k + d] * inv;
              if (m * ws.h[c * k + d] == a[d]) du += dagg[d] / ties[d];
              dm += du * ws.h[c * k + d];
              ws.dh[c * k + d] += m * du;
            }
            if (!weights.empty() && !weight_grad.empty()) weight_grad[c] += dm;
          }
          break;
        }
      }
    }
  }

  json to_json() const {
    json j;
    j["format"] = "hmilx-model";
    j["version"] = 1;
    j["k"] = k_;
    j["schema_fingerprint"] = fingerprint_;
    j["schema"] = hmilx::to_json(schema_);
    json enc = json::object();
    for (const auto& blk : blocks_) {
      if (blk.kind == SchemaKind::Atomic) enc[blk.path] = hmilx::to_json(blk.encoder);
    }
    j["encoders"] = std::move(enc);
    json params = json::object();
    for (const auto& t : tensors_) {
      json tj;
      tj["shape"] = t.shape;
      tj["data"] = std::vector<double>(params_.begin() + static_cast<std::ptrdiff_t>(t.offset),
                                       params_.begin() + static_cast<std::ptrdiff_t>(t.offset + t.size()));
      params[t.name] = std::move(tj);
    }
    j["params"] = std::move(params);
    return j;
  }

  // Verifies the embedded fingerprint, and `expected` when given.
  static Model from_json(const json& j, const SchemaNode* expected = nullptr);

  friend Model build_model(const SchemaNode& schema, std::size_t k, std::uint64_t seed,
                           const CategoricalRule& rule);

 private:
  template <class EncoderFor>
  void layout(const SchemaNode& schema, std::size_t k, EncoderFor&& encoder_for) {
    k_ = k;
    schema_ = schema;
    fingerprint_ = structural_fingerprint(schema);
    blocks_.clear();
    tensors_.clear();
    std::size_t cursor = 0;
    auto dense = [&](const std::string& name, std::size_t in, std::size_t out) {
      DenseLayer l{in, out, cursor};
      tensors_.push_back({name + ".W", cursor, {out, in}});
      tensors_.push_back({name + ".b", cursor + in * out, {out}});
      cursor += l.size();
      return l;
    };
    auto vec = [&](const std::string& name) {
      tensors_.push_back({name, cursor, {k}});
      const std::size_t off = cursor;
      cursor += k;
      return off;
    };
    auto build = [&](auto&& self, const SchemaNode& s, const std::string& path) -> std::size_t {
      const std::size_t id = blocks_.size();
      blocks_.push_back({});
      blocks_[id].kind = s.kind;
      blocks_[id].path = path;
      switch (s.kind) {
        case SchemaKind::Atomic: {
          EncoderSpec spec = encoder_for(path, s);
          const std::size_t dim = spec.dim();
          blocks_[id].encoder = std::move(spec);
          blocks_[id].embed = dense(path + "#embed", dim, k);
          break;
        }
        case SchemaKind::Dictionary: {
          std::vector<std::size_t> child_blocks;
          for (const auto& [key, child] : s.children) child_blocks.push_back(self(self, *child, path + "/" + key));
          ModelBlock& blk = blocks_[id];
          blk.child_blocks = std::move(child_blocks);
          for (const auto& [key, child] : s.children) {
            blk.keys.push_back(key);
            blk.phi.push_back(dense(path + "#phi[" + key + "]", k, k));
            blk.key_imputation.push_back(vec(path + "#imputation[" + key + "]"));
          }
          blk.combine = dense(path + "#combine", blk.keys.size() * k, k);
          break;
        }
        case SchemaKind::List: {
          std::optional<std::size_t> item;
          if (s.item) item = self(self, *s.item, path + "/[]");
          ModelBlock& blk = blocks_[id];
          blk.item_block = item;
          blk.aggregate = dense(path + "#aggregate", 2 * k, k);
          blk.list_imputation = vec(path + "#imputation");
          break;
        }
      }
      return id;
    };
    build(build, schema, "$");
    head_hidden_ = dense("head.hidden", k, k);
    head_output_ = dense("head.output", k, 2);
    params_.assign(cursor, 0.0);
  }

  std::size_t k_ = 0;
  SchemaNode schema_;
  std::string fingerprint_;
  std::vector<ModelBlock> blocks_;
  DenseLayer head_hidden_, head_output_;
  std::vector<ParamTensor> tensors_;
  std::vector<double> params_;
  mutable EvalCounters counters_;
};

// One parameter block per schema node. Weights are glorot-uniform with limit
// sqrt(6 / (fan_in + fan_out)); biases and imputations start at zero.
inline Model build_model(const SchemaNode& schema, std::size_t k, std::uint64_t seed,
                         const CategoricalRule& rule = {}) {
  if (k == 0) throw Error("k must be positive");
  Model m;
  m.layout(schema, k, [&](const std::string&, const SchemaNode& s) { return choose_encoder(s, rule); });
  std::mt19937_64 rng(seed);
  for (const auto& t : m.tensors_) {
    if (t.shape.size() != 2) continue;
    const double fan_out = static_cast<double>(t.shape[0]);
    const double fan_in = static_cast<double>(t.shape[1]);
    if (fan_in + fan_out == 0.0) continue;
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (std::size_t i = 0; i < t.size(); ++i) m.params_[t.offset + i] = dist(rng);
  }
  return m;
}

inline Model Model::from_json(const json& j, const SchemaNode* expected) {
  try {
    if (j.at("format").get<std::string>() != "hmilx-model") throw ModelFormatError("not a model file");
    SchemaNode schema = schema_from_json(j.at("schema"));
    const auto stored = j.at("schema_fingerprint").get<std::string>();
    if (structural_fingerprint(schema) != stored) {
      throw ModelFormatError("schema fingerprint mismatch inside model file");
    }
    if (expected && structural_fingerprint(*expected) != stored) {
      throw ModelFormatError("model was built for a different schema");
    }
    const json& encoders = j.at("encoders");
    Model m;
    m.layout(schema, j.at("k").get<std::size_t>(), [&](const std::string& path, const SchemaNode&) {
      return encoder_from_json(encoders.at(path));
    });
    const json& params = j.at("params");
    for (const auto& t : m.tensors_) {
      const json& tj = params.at(t.name);
      if (tj.at("shape").get<std::vector<std::size_t>>() != t.shape) {
        throw ModelFormatError("shape mismatch for " + t.name);
      }
      const auto data = tj.at("data").get<std::vector<double>>();
      if (data.size() != t.size()) throw ModelFormatError("size mismatch for " + t.name);
      std::copy(data.begin(), data.end(), m.params_.begin() + static_cast<std::ptrdiff_t>(t.offset));
    }
    return m;
  } catch (const json::exception& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  } catch (const ParseError& e) {
    throw ModelFormatError(std::string("malformed model file: ") + e.what());
  }
}

// Per-sample evaluation session. Binds once, reuses buffers, and counts its own
// inferences and gradient passes in addition to the model-wide counters.
class Evaluator {
 public:
  Evaluator(const Model& model, const Sample& sample) : model_(&model), bound_(model.bind(sample)) {}

  const Model& model() const { return *model_; }
  const Sample& sample() const { return bound_.sample; }
  const BoundSample& bound() const { return bound_; }
  CounterSnapshot counters() const { return local_; }

  Prediction classify(const NodeSet& mask) {
    count_inference();
    return model_->forward(bound_, ws_, &mask.bits());
  }

  Prediction classify_full() {
    count_inference();
    return model_->forward(bound_, ws_, nullptr);
  }

  double confidence(const NodeSet& mask) { return classify(mask).confidence; }

  std::vector<double> embed(const NodeSet& mask) {
    count_inference();
    model_->forward(bound_, ws_, &mask.bits());
    return {ws_.h.begin(), ws_.h.begin() + static_cast<std::ptrdiff_t>(model_->k())};
  }

  // d confidence / d h(c) for every node c at the full mask, row-major n x k.
  // One gradient pass.
  std::vector<double> subtree_gradients() {
    count_gradient();
    const Prediction pr = model_->forward(bound_, ws_, nullptr);
    const double g = 0.5 * (1.0 - pr.confidence * pr.confidence);
    const double dl[2] = {g, -g};
    model_->backward(bound_, ws_, dl, {});
    return ws_.dh;
  }

  // Confidence of the edge-weighted full sample and its gradient with respect
  // to each node's incoming edge weight. One gradient pass.
  double weighted_confidence(std::span<const double> weights, std::span<double> weight_grad) {
    count_gradient();
    const Prediction pr = model_->forward(bound_, ws_, nullptr, weights);
    const double g = 0.5 * (1.0 - pr.confidence * pr.confidence);
    const double dl[2] = {g, -g};
    std::fill(weight_grad.begin(), weight_grad.end(), 0.0);
    model_->backward(bound_, ws_, dl, {}, weights, weight_grad);
    return pr.confidence;
  }

 private:
  void count_inference() {
    ++local_.inferences;
    model_->counters().add_inference();
  }
  void count_gradient() {
    ++local_.gradients;
    model_->counters().add_gradient();
  }

  const Model* model_;
  BoundSample bound_;
  detail::Workspace ws_;
  CounterSnapshot local_;
};

inline std::vector<double> embed(const Model& model, const Sample& sample, const NodeSet& mask) {
  return Evaluator(model, sample).embed(mask);
}

inline Prediction classify(const Model& model, const Sample& sample, const NodeSet& mask) {
  return Evaluator(model, sample).classify(mask);
}

inline Prediction classify(const Model& model, const Sample& sample) {
  return Evaluator(model, sample).classify_full();
}

// d confidence / d h(target) at the full mask.
inline std::vector<double> grad_wrt_subtree(const Model& model, const Sample& sample, NodeId target) {
  Evaluator ev(model, sample);
  const auto all = ev.subtree_gradients();
  const std::size_t k = model.k();
  return {all.begin() + static_cast<std::ptrdiff_t>(target * k),
          all.begin() + static_cast<std::ptrdiff_t>((target + 1) * k)};
}

// The sample with nothing in it: {} or [] depending on the root kind.
inline Sample empty_sample(const SchemaNode& schema) {
  return Sample::from_json(schema.kind == SchemaKind::List ? json::array() : json::object());
}

}  // namespace hmilx
