#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gvt/augment.hpp"
#include "gvt/metrics.hpp"
#include "gvt/records.hpp"
#include "gvt/sampler.hpp"
#include "gvt/tiling.hpp"
#include "gvt/zoomchain.hpp"

// Run configuration: one JSON document, unknown keys rejected at every level.
namespace gvt {

struct SubsetDecl {
  std::string name;
  std::string task;  // as written; parse_task maps it to a TaskKind
  std::filesystem::path path;  // resolved against the config file's directory
  std::string format = "jsonl";  // "jsonl" or "coco"
  double weight = 1.0;
};

struct TilingConfig {
  TilingSpec spec;
  double keep_ratio = 0.7;
  double dedup_iou = 0.5;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  PatchSpec patch;
  std::vector<SubsetDecl> subsets;
  AugmentationPolicy policy;
  ApNcProtocol metrics;
  TilingConfig tiling;
  ZoomConfig zoom;
  IngestOptions ingest;
  std::string source;  // canonical text the hash is taken over

  std::uint64_t hash() const { return fnv1a64(source); }
  nlohmann::ordered_json to_json() const;
};

// Throws ConfigError.
RunConfig config_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
RunConfig load_config(const std::filesystem::path& path);

// Records of one subset, type-checked against its task.
LoadResult<Record> load_subset(const SubsetDecl& decl, const IngestOptions& opt);

}  // namespace gvt
