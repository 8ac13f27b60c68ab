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

// Shared corpora and small helpers for the test suites.

#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hmilx/schema.hpp"
#include "hmilx/train.hpp"
#include "hmilx/value.hpp"

namespace hmilx::testing {

// Network-device inventory documents shaped like a device-identification
// scan: scalar keys, lists of dictionaries, a list of strings and a nested
// list two levels down. High-cardinality fields (ip, mac) get trigram
// encoders; the rest stay categorical.
inline std::vector<json> device_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](const std::vector<std::string>& xs) {
    return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
  };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto count = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const std::vector<std::string> classes = {"camera", "printer", "phone", "tv", "router", "speaker", "laptop"};
  const std::vector<std::string> protocols = {"tcp", "udp"};
  const std::vector<double> ports = {22, 53, 80, 443, 554, 631, 1900, 5353, 8080, 9100};
  const std::vector<std::string> mdns = {"_http._tcp", "_ipp._tcp", "_airplay._tcp", "_raop._tcp",
                                         "_googlecast._tcp", "_printer._tcp", "_ssh._tcp", "_spotify._tcp"};
  const std::vector<std::string> manufacturers = {"Sonos, Inc.", "Axis", "Hikvision", "HP", "Canon",
                                                  "Samsung", "LG", "Roku", "Netgear", "TP-Link"};
  const std::vector<std::string> models = {"Sonos Play 3", "Sonos One", "M3045", "DS-2CD", "LaserJet 400",
                                           "PIXMA", "Smart TV", "webOS TV", "Roku Ultra", "Nighthawk",
                                           "Archer C7", "Play:5"};
  const std::vector<std::string> upnp_services = {"AVTransport", "RenderingControl", "ConnectionManager",
                                                  "ContentDirectory", "Layer3Forwarding", "WANIPConnection"};
  const std::vector<std::string> classids = {"MSFT 5.0", "android-dhcp-9", "udhcp 1.19", "dhcpcd-6.8"};
  const std::vector<std::string> paramlists = {"1,3,6,15", "1,3,6,12,15,28", "1,121,3,6", "1,33,3,6,15"};

  std::vector<json> docs;
  for (std::size_t i = 0; i < n; ++i) {
    json d = json::object();
    d["device_class"] = pick(classes);
    if (coin(0.9)) {
      d["ip"] = "192.168." + std::to_string(count(0, 9)) + "." + std::to_string(count(1, 254));
    }
    {
      std::string mac;
      for (int b = 0; b < 6; ++b) {
        static constexpr char kHex[] = "0123456789abcdef";
        if (b) mac += ':';
        mac += kHex[count(0, 15)];
        mac += kHex[count(0, 15)];
      }
      d["mac"] = mac;
    }
    if (coin(0.6)) {
      json services = json::array();
      for (int s = count(0, 3); s > 0; --s) {
        json svc = json::object();
        svc["port"] = ports[std::uniform_int_distribution<std::size_t>(0, ports.size() - 1)(rng)];
        svc["protocol"] = pick(protocols);
        services.push_back(svc);
      }
      d["services"] = services;
    }
    if (coin(0.4)) {
      json names = json::array();
      for (int s = count(1, 3); s > 0; --s) names.push_back(pick(mdns));
      d["mdns_services"] = names;
    }
    if (coin(0.45)) {
      json upnp = json::array();
      for (int u = count(1, 2); u > 0; --u) {
        json dev = json::object();
        if (coin(0.95)) dev["manufacturer"] = pick(manufacturers);
        if (coin(0.9)) dev["model_name"] = pick(models);
        if (coin(0.5)) dev["secure"] = coin(0.5);
        if (coin(0.7)) {
          json svcs = json::array();
          for (int s = count(1, 2); s > 0; --s) svcs.push_back(pick(upnp_services));
          dev["services"] = svcs;
        }
        upnp.push_back(dev);
      }
      d["upnp"] = upnp;
    }
    if (coin(0.25)) {
      json dhcp = json::array();
      json lease = json::object();
      if (coin(0.5)) lease["classid"] = pick(classids);
      lease["paramlist"] = pick(paramlists);
      dhcp.push_back(lease);
      d["dhcp"] = dhcp;
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

// A compact corpus whose samples stay small enough for exhaustive oracles:
// at most a dozen maskable nodes per generated sample.
inline std::vector<json> small_corpus(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };
  auto pick = [&](const std::vector<std::string>& xs) {
    return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
  };
  const std::vector<std::string> colors = {"red", "green", "blue", "black"};
  const std::vector<std::string> shapes = {"box", "ball", "cone"};
  const std::vector<std::string> tags = {"x", "y", "z", "w"};
  std::vector<json> docs;
  for (std::size_t i = 0; i < n; ++i) {
    json d = json::object();
    if (coin(0.8)) d["color"] = pick(colors);
    if (coin(0.6)) d["shape"] = pick(shapes);
    json parts = json::array();
    const int parts_n = std::uniform_int_distribution<int>(0, 2)(rng);
    for (int p = 0; p < parts_n; ++p) {
      json part = json::object();
      if (coin(0.7)) part["tag"] = pick(tags);
      if (coin(0.5)) part["size"] = pick({"s", "m", "l"});
      parts.push_back(part);
    }
    if (parts_n > 0 || coin(0.3)) d["parts"] = parts;
    docs.push_back(std::move(d));
  }
  return docs;
}

// A model trained on the small corpus to call a sample positive iff its color
// is red. Shared by the ranking and search suites.
struct SmallTask {
  std::vector<json> docs;
  SchemaNode schema;
  Model model;
  std::vector<Sample> positives;  // classified positive by the model
};

inline SmallTask small_task(std::size_t n = 400, std::uint64_t seed = 11) {
  SmallTask t;
  t.docs = small_corpus(n, seed);
  t.schema = infer_schema(t.docs);
  std::vector<TrainingExample> data;
  for (const auto& d : t.docs) {
    data.push_back({Sample::from_json(d), d.contains("color") && d["color"] == "red"});
  }
  t.model = build_model(t.schema, 5, seed);
  TrainConfig cfg;
  cfg.steps = 600;
  cfg.seed = seed;
  train(t.model, data, cfg);
  for (const auto& ex : data) {
    if (classify(t.model, ex.sample).confidence > 0.0) t.positives.push_back(ex.sample);
  }
  return t;
}

}  // namespace hmilx::testing
