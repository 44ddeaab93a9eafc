#pragma once

#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "vql/experiments.hpp"
#include "vql/sqlab.hpp"
#include "vql/whrf.hpp"

namespace vql::harness {

using nlohmann::json;

/// Shortest round-trip decimal form (std::to_chars); the only float format
/// used in emitted CSV so that outputs are byte-stable.
std::string format_double(double v);

/// FNV-1a over the canonical dump with volatile fields (threads, output_dir)
/// removed; 16 hex characters.
std::string config_digest(const json& config);

json default_config(const std::string& experiment);

struct RunSummary {
  std::string experiment;
  std::vector<RunRecord> records;
  json manifest;
  std::vector<std::filesystem::path> files;
};

/// Executes the experiment block named by `experiment` over n_runs seeds on a
/// worker pool and writes CSV outputs plus manifest.json under output_dir.
/// Output bytes depend only on (config minus threads/output_dir, base_seed).
RunSummary run_suite(const std::string& experiment, json config,
                     const std::filesystem::path& output_dir);

/// Byte-compares the data files (everything except manifest.json) of two
/// output directories; returns the mismatched relative paths.
std::vector<std::string> compare_output_dirs(const std::filesystem::path& a,
                                             const std::filesystem::path& b);

/// Applies "a.b.c=value" style overrides onto a config document. Values parse
/// as JSON when possible, else as strings.
void apply_override(json& config, const std::string& assignment);

int hardware_threads();

}  // namespace vql::harness
