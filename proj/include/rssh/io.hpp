#pragma once

// Dataset loaders (IDX, fvecs, CSV) and the RSSHIDX1 binary index format.
// The index layout is documented in docs/index_format.md.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "rssh/eval.hpp"
#include "rssh/index.hpp"

namespace rssh {

enum class DatasetFormat { kIdx, kFvecs, kCsv };

struct DatasetDescriptor {
  std::filesystem::path path;
  DatasetFormat format = DatasetFormat::kCsv;
  /// Keep only the first `limit` points.
  std::optional<std::size_t> limit;
  /// IDX label file (ubyte, one dimension).
  std::optional<std::filesystem::path> label_path;
  bool csv_header = false;
  /// Treat the final CSV column as an integer label.
  bool csv_label_column = false;
};

struct Dataset {
  PointSet points;
  std::optional<LabelMap> labels;
};

/// Guesses the format from the file name: *.fvecs, *.csv, and IDX names
/// (*.idx, *-idx3-ubyte, *.idx3-ubyte). Throws kMalformedFile otherwise.
DatasetFormat detect_format(const std::filesystem::path& path);

/// Loads points row per point. IDX bytes are divided by 255.
Dataset load_dataset(const DatasetDescriptor& desc);

/// Writes points as CSV with 17 significant digits (exact double round trip).
void write_csv(const std::filesystem::path& path, const PointSet& points, const LabelMap* labels = nullptr);

/// Writes points as fvecs (float32, values rounded).
void write_fvecs(const std::filesystem::path& path, const PointSet& points);

inline constexpr char kIndexMagic[8] = {'R', 'S', 'S', 'H', 'I', 'D', 'X', '1'};
inline constexpr std::uint32_t kIndexVersion = 1;
inline constexpr std::size_t kIndexHeaderBytes = 88;
inline constexpr std::size_t kLevelHeaderBytes = 32;
inline constexpr std::size_t kIndexTrailerBytes = 4;

std::vector<std::uint8_t> encode_index(const IndexModel& model);
IndexModel decode_index(std::span<const std::uint8_t> bytes);

/// Exact encoded size of `model` in bytes.
std::size_t encoded_index_size(const IndexModel& model);

void save_index(const IndexModel& model, const std::filesystem::path& path);
IndexModel load_index(const std::filesystem::path& path);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

}  // namespace rssh
