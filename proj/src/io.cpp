#include "gaitbci/io.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <system_error>
#include <vector>

namespace gaitbci::io {
namespace {

constexpr std::array<char, 8> kMagic{'G', 'B', 'C', 'I', 'R', 'E', 'C', '\0'};
constexpr std::string_view kTextTag = "# gaitbci recording";

static_assert(std::endian::native == std::endian::little,
              "binary container is little-endian; add byte swapping for this target");

template <typename T> void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T> T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated recording file");
  return v;
}

void check_label(const std::string& label) {
  if (label.empty()) throw FormatError("empty channel label");
  for (char c : label)
    if (std::isspace(static_cast<unsigned char>(c)))
      throw FormatError("channel label '" + label + "' contains whitespace");
}

double parse_double(std::string_view tok, const char* what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw FormatError(std::string("cannot parse ") + what + " from '" + std::string(tok) + "'");
  return v;
}

Recording read_binary(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (magic != kMagic) throw FormatError("bad recording magic");
  const auto version = get<std::uint32_t>(in);
  if (version != kRecordingVersion)
    throw FormatError("unsupported recording version " + std::to_string(version));
  const auto n_channels = get<std::uint32_t>(in);
  const auto n_samples = get<std::uint64_t>(in);
  const auto fs = get<double>(in);
  const auto t0 = get<double>(in);
  std::vector<std::string> labels(n_channels);
  for (auto& label : labels) {
    const auto len = get<std::uint32_t>(in);
    if (len > 4096) throw FormatError("channel label too long");
    label.resize(len);
    if (!in.read(label.data(), len)) throw FormatError("truncated channel label");
  }
  SignalMatrix samples(static_cast<Eigen::Index>(n_channels), static_cast<Eigen::Index>(n_samples));
  const auto bytes = static_cast<std::streamsize>(n_channels * n_samples * sizeof(double));
  if (!in.read(reinterpret_cast<char*>(samples.data()), bytes)) throw FormatError("truncated sample block");
  return Recording(std::move(samples), fs, std::move(labels), t0);
}

Recording read_text(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind(kTextTag, 0) != 0) throw FormatError("missing text recording tag");
  double fs = 0.0, t0 = 0.0;
  std::size_t n_channels = 0, n_samples = 0;
  std::uint32_t version = 0;
  std::vector<std::string> labels;
  bool have_labels = false;
  while (!have_labels && std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "version") ls >> version;
    else if (key == "fs") ls >> fs;
    else if (key == "t0") ls >> t0;
    else if (key == "n_channels") ls >> n_channels;
    else if (key == "n_samples") ls >> n_samples;
    else if (key == "labels") {
      std::string l;
      while (ls >> l) labels.push_back(l);
      have_labels = true;
      continue;
    } else throw FormatError("unknown header key '" + key + "'");
    if (ls.fail()) throw FormatError("malformed header line '" + line + "'");
  }
  if (version != kRecordingVersion) throw FormatError("unsupported recording version " + std::to_string(version));
  if (!have_labels || labels.size() != n_channels) throw FormatError("label count does not match n_channels");
  SignalMatrix samples(static_cast<Eigen::Index>(n_channels), static_cast<Eigen::Index>(n_samples));
  for (std::size_t ch = 0; ch < n_channels; ++ch) {
    if (!std::getline(in, line)) throw FormatError("missing sample row for channel " + std::to_string(ch));
    std::size_t pos = 0, i = 0;
    while (i < n_samples) {
      while (pos < line.size() && line[pos] == ' ') ++pos;
      const auto end = line.find(' ', pos);
      const auto tok = std::string_view(line).substr(pos, end == std::string::npos ? std::string::npos : end - pos);
      if (tok.empty()) throw FormatError("short sample row for channel " + std::to_string(ch));
      samples(static_cast<Eigen::Index>(ch), static_cast<Eigen::Index>(i++)) = parse_double(tok, "sample");
      pos = end == std::string::npos ? line.size() : end;
    }
  }
  return Recording(std::move(samples), fs, std::move(labels), t0);
}

} // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw FormatError("cannot format double");
  return std::string(buf.data(), ptr);
}

void write_recording(std::ostream& out, const Recording& rec, RecordingFormat format) {
  for (const auto& l : rec.channel_labels()) check_label(l);
  if (format == RecordingFormat::Binary) {
    out.write(kMagic.data(), kMagic.size());
    put<std::uint32_t>(out, kRecordingVersion);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(rec.n_channels()));
    put<std::uint64_t>(out, rec.n_samples());
    put<double>(out, rec.fs());
    put<double>(out, rec.t0());
    for (const auto& l : rec.channel_labels()) {
      put<std::uint32_t>(out, static_cast<std::uint32_t>(l.size()));
      out.write(l.data(), static_cast<std::streamsize>(l.size()));
    }
    out.write(reinterpret_cast<const char*>(rec.samples().data()),
              static_cast<std::streamsize>(rec.samples().size() * sizeof(double)));
  } else {
    out << kTextTag << '\n';
    out << "version " << kRecordingVersion << '\n';
    out << "fs " << format_double(rec.fs()) << '\n';
    out << "t0 " << format_double(rec.t0()) << '\n';
    out << "n_channels " << rec.n_channels() << '\n';
    out << "n_samples " << rec.n_samples() << '\n';
    out << "labels";
    for (const auto& l : rec.channel_labels()) out << ' ' << l;
    out << '\n';
    for (Eigen::Index ch = 0; ch < rec.samples().rows(); ++ch) {
      for (Eigen::Index i = 0; i < rec.samples().cols(); ++i) {
        if (i) out << ' ';
        out << format_double(rec.samples()(ch, i));
      }
      out << '\n';
    }
  }
  if (!out) throw FormatError("write failed");
}

void write_recording(const std::filesystem::path& path, const Recording& rec, RecordingFormat format) {
  std::ostringstream buf(std::ios::binary);
  write_recording(buf, rec, format);
  write_file_atomic(path, buf.str());
}

Recording read_recording(std::istream& in) {
  std::array<char, 8> head{};
  in.read(head.data(), head.size());
  const bool binary = in.gcount() == 8 && head == kMagic;
  in.clear();
  in.seekg(0);
  return binary ? read_binary(in) : read_text(in);
}

Recording read_recording(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open recording " + path.string());
  return read_recording(in);
}

void write_cues(std::ostream& out, const CueSchedule& cues) {
  out << "# state duration_s\n";
  for (const auto& e : cues.entries()) out << to_string(e.state) << ' ' << format_double(e.duration) << '\n';
}

void write_cues(const std::filesystem::path& path, const CueSchedule& cues) {
  std::ostringstream buf;
  write_cues(buf, cues);
  write_file_atomic(path, buf.str());
}

CueSchedule read_cues(std::istream& in) {
  std::vector<CueEntry> entries;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::string state, dur;
    if (!(ls >> state >> dur)) throw FormatError("cue line " + std::to_string(lineno) + ": expected '<state> <seconds>'");
    if (!dur.empty() && dur.back() == '\r') dur.pop_back();
    entries.push_back({parse_state(state), parse_double(dur, "cue duration")});
  }
  if (entries.empty()) throw FormatError("cue file has no entries");
  return CueSchedule(std::move(entries));
}

CueSchedule read_cues(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open cue file " + path.string());
  return read_cues(in);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw FormatError("write to " + tmp.string() + " failed");
    }
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

} // namespace gaitbci::io
