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

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <nlohmann/json.hpp>

namespace hmilx {

using json = nlohmann::json;

enum class ValueKind { Number, String, Boolean };

inline std::string_view to_string(ValueKind kind) {
  switch (kind) {
    case ValueKind::Number: return "Number";
    case ValueKind::String: return "String";
    case ValueKind::Boolean: return "Boolean";
  }
  return "?";
}

inline std::optional<ValueKind> value_kind_from_string(std::string_view s) {
  if (s == "Number") return ValueKind::Number;
  if (s == "String") return ValueKind::String;
  if (s == "Boolean") return ValueKind::Boolean;
  return std::nullopt;
}

// An atomic JSON value. Integers and floats share the Number kind and compare
// by numeric value.
class Value {
 public:
  Value() : data_(0.0) {}
  explicit Value(double number) : data_(number) {}
  explicit Value(std::string text) : data_(std::move(text)) {}
  explicit Value(const char* text) : data_(std::string(text)) {}
  explicit Value(bool flag) : data_(flag) {}

  ValueKind kind() const {
    switch (data_.index()) {
      case 0: return ValueKind::Number;
      case 1: return ValueKind::String;
      default: return ValueKind::Boolean;
    }
  }

  double number() const { return std::get<double>(data_); }
  const std::string& string() const { return std::get<std::string>(data_); }
  bool boolean() const { return std::get<bool>(data_); }

  // Returns nullopt for containers and null.
  static std::optional<Value> from_json(const json& j) {
    if (j.is_boolean()) return Value(j.get<bool>());
    if (j.is_number()) return Value(j.get<double>());
    if (j.is_string()) return Value(j.get<std::string>());
    return std::nullopt;
  }

  // Integral numbers are written as JSON integers.
  json to_json() const {
    switch (kind()) {
      case ValueKind::Number: {
        const double x = number();
        if (std::isfinite(x) && std::floor(x) == x && std::fabs(x) < 9.0e15) {
          return json(static_cast<std::int64_t>(x));
        }
        return json(x);
      }
      case ValueKind::String: return json(string());
      case ValueKind::Boolean: return json(boolean());
    }
    return json();
  }

  friend bool operator==(const Value& a, const Value& b) { return a.data_ == b.data_; }
  friend bool operator<(const Value& a, const Value& b) { return a.data_ < b.data_; }

 private:
  std::variant<double, std::string, bool> data_;
};

// Deep-copying owning pointer for recursive value types. May be empty.
template <class T>
class Box {
 public:
  Box() = default;
  explicit Box(T value) : ptr_(std::make_unique<T>(std::move(value))) {}
  Box(const Box& other) : ptr_(other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr) {}
  Box(Box&&) noexcept = default;
  Box& operator=(const Box& other) {
    if (this != &other) ptr_ = other.ptr_ ? std::make_unique<T>(*other.ptr_) : nullptr;
    return *this;
  }
  Box& operator=(Box&&) noexcept = default;

  explicit operator bool() const { return static_cast<bool>(ptr_); }
  T& operator*() { return *ptr_; }
  const T& operator*() const { return *ptr_; }
  T* operator->() { return ptr_.get(); }
  const T* operator->() const { return ptr_.get(); }
  T* get() { return ptr_.get(); }
  const T* get() const { return ptr_.get(); }

  friend bool operator==(const Box& a, const Box& b) {
    if (!a.ptr_ || !b.ptr_) return !a.ptr_ && !b.ptr_;
    return *a.ptr_ == *b.ptr_;
  }

 private:
  std::unique_ptr<T> ptr_;
};

}  // namespace hmilx
