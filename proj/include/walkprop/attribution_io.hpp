#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "walkprop/dataset_io.hpp"
#include "walkprop/lrp.hpp"
#include "walkprop/model_io.hpp"

namespace walkprop {

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

inline std::string model_hash(const GnnModel& m) { return hex64(fnv1a64(save_model(m))); }

inline std::string graph_hash(const Graph& g) { return hex64(fnv1a64(graph_to_json(g).dump())); }

inline nlohmann::json attribution_to_json(const RelevanceResult& r, const std::string& model_h,
                                          const std::string& graph_h) {
  nlohmann::json j;
  j["rule"] = to_string(r.rule);
  j["gamma"] = r.config.gamma;
  j["eps"] = r.config.eps;
  j["alpha"] = r.config.alpha;
  j["subgraph"] = r.subgraph.indices();
  j["value"] = r.value;
  j["y"] = r.y;
  j["model_hash"] = model_h;
  j["graph_hash"] = graph_h;
  return j;
}

}  // namespace walkprop
