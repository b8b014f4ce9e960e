#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace gaitbci::cli {

struct RecordingRef {
  std::optional<std::filesystem::path> recording;
  std::optional<std::filesystem::path> cues;
};

// Paths are resolved against the manifest's directory.
struct RunManifest {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<std::filesystem::path> synth_config;
  std::optional<std::filesystem::path> train_config;
  std::optional<std::filesystem::path> decoder_config;
  std::optional<std::filesystem::path> plant_config;
  RecordingRef training, calibration, session;
  std::optional<std::filesystem::path> model;
  std::optional<std::size_t> mc_trials;
};

// Parses the manifest and checks that every referenced file exists and
// parses; throws ConfigError naming the offending field otherwise.
RunManifest load_manifest(const std::filesystem::path& path);

} // namespace gaitbci::cli
