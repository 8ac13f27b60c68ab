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
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hmilx/error.hpp"
#include "hmilx/schema.hpp"
#include "hmilx/value.hpp"

namespace hmilx {

enum class EncoderKind { Identity, OneHot, TrigramHash, Boolean };

inline constexpr std::size_t kTrigramBuckets = 2053;

struct EncoderSpec {
  EncoderKind kind = EncoderKind::Identity;
  std::vector<std::string> vocabulary;  // OneHot only, sorted, no duplicates

  std::size_t dim() const {
    switch (kind) {
      case EncoderKind::Identity: return 1;
      case EncoderKind::Boolean: return 1;
      case EncoderKind::OneHot: return vocabulary.size() + 1;
      case EncoderKind::TrigramHash: return kTrigramBuckets;
    }
    return 0;
  }

  friend bool operator==(const EncoderSpec&, const EncoderSpec&) = default;
};

// How strings are split between one-hot and trigram encodings. The default
// counts distinct values; ObservationCount is the alternative reading where the
// node's total number of occurrences is compared against the threshold.
struct CategoricalRule {
  enum class Basis { UniqueValues, ObservationCount };
  std::size_t threshold = 100;
  Basis basis = Basis::UniqueValues;
};

inline EncoderSpec choose_encoder(const SchemaNode& atomic, const CategoricalRule& rule = {}) {
  switch (atomic.value_kind) {
    case ValueKind::Number: return {EncoderKind::Identity, {}};
    case ValueKind::Boolean: return {EncoderKind::Boolean, {}};
    case ValueKind::String: break;
  }
  const std::size_t measured =
      rule.basis == CategoricalRule::Basis::UniqueValues ? atomic.unique_count : atomic.observation_count();
  if (measured >= rule.threshold || atomic.capped) return {EncoderKind::TrigramHash, {}};
  EncoderSpec spec{EncoderKind::OneHot, {}};
  for (const auto& [value, count] : atomic.value_histogram) spec.vocabulary.push_back(value.string());
  std::sort(spec.vocabulary.begin(), spec.vocabulary.end());
  spec.vocabulary.erase(std::unique(spec.vocabulary.begin(), spec.vocabulary.end()), spec.vocabulary.end());
  return spec;
}

// (index, value) pairs with strictly increasing indices.
using SparseVector = std::vector<std::pair<std::uint32_t, double>>;

inline SparseVector encode_sparse(const Value& value, const EncoderSpec& spec) {
  auto expect = [&](ValueKind kind) {
    if (value.kind() != kind) {
      throw KindMismatch("encoder expects " + std::string(to_string(kind)) + ", got " +
                         std::string(to_string(value.kind())));
    }
  };
  switch (spec.kind) {
    case EncoderKind::Identity:
      expect(ValueKind::Number);
      return {{0u, value.number()}};
    case EncoderKind::Boolean:
      expect(ValueKind::Boolean);
      return {{0u, value.boolean() ? 1.0 : 0.0}};
    case EncoderKind::OneHot: {
      expect(ValueKind::String);
      auto it = std::lower_bound(spec.vocabulary.begin(), spec.vocabulary.end(), value.string());
      std::size_t index = spec.vocabulary.size();  // out of vocabulary
      if (it != spec.vocabulary.end() && *it == value.string()) {
        index = static_cast<std::size_t>(it - spec.vocabulary.begin());
      }
      return {{static_cast<std::uint32_t>(index), 1.0}};
    }
    case EncoderKind::TrigramHash: {
      expect(ValueKind::String);
      const std::string& s = value.string();
      std::vector<std::uint32_t> buckets;
      for (std::size_t i = 0; i + 2 < s.size(); ++i) {
        const std::uint32_t id = static_cast<std::uint32_t>(static_cast<unsigned char>(s[i])) * 65536u +
                                 static_cast<std::uint32_t>(static_cast<unsigned char>(s[i + 1])) * 256u +
                                 static_cast<std::uint32_t>(static_cast<unsigned char>(s[i + 2]));
        buckets.push_back(id % kTrigramBuckets);
      }
      std::sort(buckets.begin(), buckets.end());
      SparseVector out;
      for (auto b : buckets) {
        if (!out.empty() && out.back().first == b) {
          out.back().second += 1.0;
        } else {
          out.emplace_back(b, 1.0);
        }
      }
      return out;
    }
  }
  return {};
}

inline std::vector<double> encode(const Value& value, const EncoderSpec& spec) {
  std::vector<double> dense(spec.dim(), 0.0);
  for (const auto& [index, x] : encode_sparse(value, spec)) dense[index] = x;
  return dense;
}

inline json to_json(const EncoderSpec& spec) {
  json j;
  switch (spec.kind) {
    case EncoderKind::Identity: j["kind"] = "identity"; break;
    case EncoderKind::Boolean: j["kind"] = "boolean"; break;
    case EncoderKind::TrigramHash: j["kind"] = "trigram"; break;
    case EncoderKind::OneHot:
      j["kind"] = "onehot";
      j["vocabulary"] = spec.vocabulary;
      break;
  }
  j["dim"] = spec.dim();
  return j;
}

inline EncoderSpec encoder_from_json(const json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "identity") return {EncoderKind::Identity, {}};
  if (kind == "boolean") return {EncoderKind::Boolean, {}};
  if (kind == "trigram") return {EncoderKind::TrigramHash, {}};
  if (kind == "onehot") return {EncoderKind::OneHot, j.at("vocabulary").get<std::vector<std::string>>()};
  throw ParseError("unknown encoder kind '" + kind + "'");
}

}  // namespace hmilx
