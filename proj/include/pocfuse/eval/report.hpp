#pragma once

#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "pocfuse/eval/metrics.hpp"

namespace pocfuse {

inline nlohmann::json to_json(const MetricsReport& r) {
  return {{"r1", r.r1},
          {"r2", r.r2},
          {"rl", r.rl},
          {"bleu", r.bleu},
          {"avg_tokens", r.avg_tokens},
          {"fuse_rate", r.fuse_rate},
          {"extractiveness", {r.extractiveness[0], r.extractiveness[1], r.extractiveness[2]}}};
}

inline MetricsReport metrics_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.r1 = j.at("r1").get<double>();
  r.r2 = j.at("r2").get<double>();
  r.rl = j.at("rl").get<double>();
  r.bleu = j.at("bleu").get<double>();
  r.avg_tokens = j.at("avg_tokens").get<double>();
  r.fuse_rate = j.at("fuse_rate").get<double>();
  for (std::size_t n = 0; n < 3; ++n) r.extractiveness[n] = j.at("extractiveness").at(n).get<double>();
  return r;
}

using SystemReports = std::vector<std::pair<std::string, MetricsReport>>;

// Aligned text table: R-1, R-2, R-L, BLEU, #Tkns, %Fuse, then 1/2/3-gram
// extractiveness. ROUGE, %Fuse and extractiveness are shown as percentages.
inline std::string render_table(const SystemReports& systems) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-16s %6s %6s %6s %6s %6s %6s %6s %6s %6s\n", "System", "R-1",
                "R-2", "R-L", "BLEU", "#Tkns", "%Fuse", "Ext-1", "Ext-2", "Ext-3");
  out += line;
  for (const auto& [name, r] : systems) {
    std::snprintf(line, sizeof line, "%-16s %6.1f %6.1f %6.1f %6.1f %6.1f %6.1f %6.1f %6.1f %6.1f\n",
                  name.c_str(), 100 * r.r1, 100 * r.r2, 100 * r.rl, r.bleu, r.avg_tokens,
                  100 * r.fuse_rate, 100 * r.extractiveness[0], 100 * r.extractiveness[1],
                  100 * r.extractiveness[2]);
    out += line;
  }
  return out;
}

inline nlohmann::json systems_to_json(const SystemReports& systems) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& [name, r] : systems) arr.push_back({{"system", name}, {"metrics", to_json(r)}});
  return arr;
}

}  // namespace pocfuse
