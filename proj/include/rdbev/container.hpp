#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "rdbev/core.hpp"

namespace rdbev {

// Container layout: a text header terminated by a line `end`, then a payload of
// contiguous little-endian arrays. Each `array` header line gives
// `name dtype shape offset bytes`, offsets relative to the payload start.
// dtypes: complex64 (interleaved re,im float32), float32, bits (LSB-first,
// padded to a whole byte).
inline constexpr const char* kFrameMagic = "RDBEV-FRAME";
inline constexpr int kFormatVersion = 1;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MalformedHeader : public FormatError {
 public:
  using FormatError::FormatError;
};
class ShapeMismatch : public FormatError {
 public:
  using FormatError::FormatError;
};
class TruncatedPayload : public FormatError {
 public:
  using FormatError::FormatError;
};
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Byte-level encode/decode; write_frame/read_frame wrap these with file I/O.
std::string encode_frame(const FrameRecord& record);
FrameRecord decode_frame(const std::string& bytes);

void write_frame(const FrameRecord& record, const std::filesystem::path& path);
FrameRecord read_frame(const std::filesystem::path& path);

// A prediction file carries one PredictionMap tagged with a method name, in the
// same container layout (kind `prediction`, single `prediction` array).
struct PredictionRecord {
  std::uint64_t frame_id = 0;
  std::uint64_t sequence_id = 0;
  std::string method;
  PredictionMap map;
  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

std::string encode_prediction(const PredictionRecord& record);
PredictionRecord decode_prediction(const std::string& bytes);
void write_prediction(const PredictionRecord& record, const std::filesystem::path& path);
PredictionRecord read_prediction(const std::filesystem::path& path);

enum class Split { Train, Val };
const char* split_name(Split s);

struct ManifestEntry {
  std::uint64_t frame_id = 0;
  std::uint64_t sequence_id = 0;
  Split split = Split::Train;
  std::string file;  // relative to the manifest directory
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// `manifest.txt` of a dataset directory (kind "dataset") or of a prediction
// directory (kind "predictions").
struct Manifest {
  std::string kind = "dataset";
  std::map<std::string, std::string> meta;
  std::vector<ManifestEntry> entries;

  std::vector<ManifestEntry> split(Split s) const;
  friend bool operator==(const Manifest&, const Manifest&) = default;
};

inline constexpr const char* kManifestName = "manifest.txt";

void write_manifest(const Manifest& manifest, const std::filesystem::path& dir);
Manifest read_manifest(const std::filesystem::path& dir);

struct FrameKey {
  std::uint64_t frame_id = 0;
  std::uint64_t sequence_id = 0;
};

struct SplitResult {
  std::vector<std::uint64_t> train;
  std::vector<std::uint64_t> val;
};

// Assigns whole sequences to train/val. Sequences are visited largest first
// (equal sizes in a seed-determined order); each goes to train when that moves
// the train frame count no further from ratio * total. Both splits end up
// nonempty. Throws std::invalid_argument with fewer than 2 sequences.
SplitResult split_sequences(const std::vector<FrameKey>& frames, double ratio,
                            std::uint64_t seed);

}  // namespace rdbev
