#pragma once

#include "gaitbci/signal.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace gaitbci::io {

// Recording container, version 1. Layouts are described in docs/formats.md.
enum class RecordingFormat { Binary, Text };

inline constexpr std::uint32_t kRecordingVersion = 1;

void write_recording(const std::filesystem::path& path, const Recording& rec,
                     RecordingFormat format = RecordingFormat::Binary);
void write_recording(std::ostream& out, const Recording& rec, RecordingFormat format);
// Detects the format from the leading magic bytes.
Recording read_recording(const std::filesystem::path& path);
Recording read_recording(std::istream& in);

void write_cues(const std::filesystem::path& path, const CueSchedule& cues);
void write_cues(std::ostream& out, const CueSchedule& cues);
CueSchedule read_cues(const std::filesystem::path& path);
CueSchedule read_cues(std::istream& in);

// Writes through a temporary sibling and renames, so a failed write never
// leaves a partial file behind.
void write_file_atomic(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// Shortest round-trip decimal form of a double.
std::string format_double(double v);

} // namespace gaitbci::io
