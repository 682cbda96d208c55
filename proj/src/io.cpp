#include "rssh/io.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <string_view>

#include "rssh/error.hpp"

namespace rssh {
namespace {

static_assert(std::numeric_limits<double>::is_iec559, "index format stores IEEE-754 doubles");

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for " + path.string());
  return bytes;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

Error malformed(const std::filesystem::path& path, std::size_t offset, const std::string& what) {
  return Error(ErrorCode::kMalformedFile, path.string() + " at byte " + std::to_string(offset) + ": " + what);
}

std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

std::uint32_t read_le32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t{b[at]} | (std::uint32_t{b[at + 1]} << 8) | (std::uint32_t{b[at + 2]} << 16) |
         (std::uint32_t{b[at + 3]} << 24);
}

struct IdxArray {
  std::vector<std::uint32_t> dims;
  std::size_t data_offset = 0;
};

IdxArray parse_idx_header(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw malformed(path, bytes.size(), "file shorter than the IDX magic");
  if (bytes[0] != 0 || bytes[1] != 0) throw malformed(path, 0, "IDX magic must start with two zero bytes");
  if (bytes[2] != 0x08) throw malformed(path, 2, "only unsigned-byte IDX data is supported");
  const std::size_t ndims = bytes[3];
  if (ndims < 1) throw malformed(path, 3, "IDX file declares zero dimensions");
  if (bytes.size() < 4 + 4 * ndims) throw malformed(path, bytes.size(), "truncated IDX dimension list");
  IdxArray out;
  for (std::size_t i = 0; i < ndims; ++i) out.dims.push_back(read_be32(bytes, 4 + 4 * i));
  out.data_offset = 4 + 4 * ndims;
  std::size_t total = 1;
  for (const std::uint32_t dim : out.dims) total *= dim;
  if (bytes.size() < out.data_offset + total) {
    throw malformed(path, bytes.size(), "IDX payload needs " + std::to_string(total) + " bytes");
  }
  return out;
}

DenseMatrix load_idx(const DatasetDescriptor& desc) {
  const std::vector<std::uint8_t> bytes = read_file(desc.path);
  const IdxArray idx = parse_idx_header(desc.path, bytes);
  std::size_t n = idx.dims[0];
  std::size_t dim = 1;
  for (std::size_t i = 1; i < idx.dims.size(); ++i) dim *= idx.dims[i];
  if (desc.limit) n = std::min(n, *desc.limit);
  if (n == 0 || dim == 0) throw Error(ErrorCode::kEmptyDataset, desc.path.string() + " holds no points");
  DenseMatrix points(static_cast<Index>(n), static_cast<Index>(dim));
  const std::uint8_t* pixels = bytes.data() + idx.data_offset;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < dim; ++c) points(static_cast<Index>(r), static_cast<Index>(c)) = pixels[r * dim + c] / 255.0;
  }
  return points;
}

LabelMap load_idx_labels(const std::filesystem::path& path, std::size_t count) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  const IdxArray idx = parse_idx_header(path, bytes);
  if (idx.dims.size() != 1) throw malformed(path, 3, "label file must be one-dimensional");
  if (idx.dims[0] < count) {
    throw Error(ErrorCode::kDimensionInconsistency, path.string() + " has " + std::to_string(idx.dims[0]) +
                                                        " labels for " + std::to_string(count) + " points");
  }
  LabelMap labels;
  for (std::size_t i = 0; i < count; ++i) labels.emplace(static_cast<PointId>(i), bytes[idx.data_offset + i]);
  return labels;
}

DenseMatrix load_fvecs(const DatasetDescriptor& desc) {
  const std::vector<std::uint8_t> bytes = read_file(desc.path);
  const std::size_t limit = desc.limit.value_or(std::numeric_limits<std::size_t>::max());
  std::vector<std::vector<double>> rows;
  std::size_t dim = 0;
  std::size_t offset = 0;
  while (offset < bytes.size() && rows.size() < limit) {
    if (offset + 4 > bytes.size()) throw malformed(desc.path, offset, "truncated dimension header");
    const auto declared = static_cast<std::int32_t>(read_le32(bytes, offset));
    if (declared <= 0) throw malformed(desc.path, offset, "non-positive vector dimension");
    if (rows.empty()) dim = static_cast<std::size_t>(declared);
    if (static_cast<std::size_t>(declared) != dim) {
      throw Error(ErrorCode::kDimensionInconsistency, desc.path.string() + " at byte " + std::to_string(offset) +
                                                          ": vector of dimension " + std::to_string(declared) +
                                                          ", expected " + std::to_string(dim));
    }
    if (offset + 4 + 4 * dim > bytes.size()) throw malformed(desc.path, offset, "truncated vector payload");
    std::vector<double> row(dim);
    for (std::size_t c = 0; c < dim; ++c) {
      row[c] = std::bit_cast<float>(read_le32(bytes, offset + 4 + 4 * c));
    }
    rows.push_back(std::move(row));
    offset += 4 + 4 * dim;
  }
  if (rows.empty()) throw Error(ErrorCode::kEmptyDataset, desc.path.string() + " holds no vectors");
  DenseMatrix points(static_cast<Index>(rows.size()), static_cast<Index>(dim));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < dim; ++c) points(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
  }
  return points;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

Dataset load_csv(const DatasetDescriptor& desc) {
  const std::vector<std::uint8_t> bytes = read_file(desc.path);
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  const std::size_t limit = desc.limit.value_or(std::numeric_limits<std::size_t>::max());

  std::vector<double> values;
  std::vector<Label> labels;
  std::size_t columns = 0;
  std::size_t rows = 0;
  bool header_pending = desc.csv_header;
  std::size_t line_start = 0;
  while (line_start < text.size() && rows < limit) {
    std::size_t line_end = text.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = text.size();
    const std::string_view line = text.substr(line_start, line_end - line_start);
    const std::size_t offset = line_start;
    line_start = line_end + 1;
    if (trim(line).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }

    std::vector<double> row;
    std::optional<Label> label;
    std::size_t field_start = 0;
    std::vector<std::pair<std::string_view, std::size_t>> fields;
    while (true) {
      const std::size_t comma = line.find(',', field_start);
      const std::size_t field_end = comma == std::string_view::npos ? line.size() : comma;
      fields.emplace_back(line.substr(field_start, field_end - field_start), offset + field_start);
      if (comma == std::string_view::npos) break;
      field_start = comma + 1;
    }
    for (std::size_t f = 0; f < fields.size(); ++f) {
      const std::string_view field = trim(fields[f].first);
      const char* first = field.data();
      const char* last = field.data() + field.size();
      if (desc.csv_label_column && f + 1 == fields.size()) {
        Label value = 0;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last) throw malformed(desc.path, fields[f].second, "label is not an integer");
        label = value;
      } else {
        double value = 0.0;
        const auto [ptr, ec] = std::from_chars(first, last, value);
        if (ec != std::errc() || ptr != last || field.empty()) {
          throw malformed(desc.path, fields[f].second, "not a number: '" + std::string(field) + "'");
        }
        row.push_back(value);
      }
    }
    if (row.empty()) throw malformed(desc.path, offset, "row has no numeric columns");
    if (rows == 0) columns = row.size();
    if (row.size() != columns) {
      throw Error(ErrorCode::kDimensionInconsistency, desc.path.string() + " at byte " + std::to_string(offset) +
                                                          ": row has " + std::to_string(row.size()) +
                                                          " columns, expected " + std::to_string(columns));
    }
    values.insert(values.end(), row.begin(), row.end());
    if (label) labels.push_back(*label);
    ++rows;
  }
  if (rows == 0) throw Error(ErrorCode::kEmptyDataset, desc.path.string() + " holds no rows");

  DenseMatrix points = Eigen::Map<const DenseMatrix>(values.data(), static_cast<Index>(rows), static_cast<Index>(columns));
  Dataset out{PointSet(std::move(points)), std::nullopt};
  if (desc.csv_label_column) {
    LabelMap map;
    for (std::size_t i = 0; i < labels.size(); ++i) map.emplace(static_cast<PointId>(i), labels[i]);
    out.labels = std::move(map);
  }
  return out;
}

class ByteWriter {
 public:
  explicit ByteWriter(std::size_t reserve) { bytes_.reserve(reserve); }

  void raw(const void* data, std::size_t size) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + size);
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t size, const char* what) const {
    if (remaining() < size) {
      throw Error(ErrorCode::kTruncatedFile, std::string("index file ends inside ") + what + " at byte " +
                                                 std::to_string(pos_));
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  std::int64_t i64(const char* what) { return static_cast<std::int64_t>(u64(what)); }
  double f64(const char* what) { return std::bit_cast<double>(u64(what)); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

DatasetFormat detect_format(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  auto ends_with = [&](std::string_view suffix) {
    return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".fvecs")) return DatasetFormat::kFvecs;
  if (ends_with(".csv")) return DatasetFormat::kCsv;
  if (ends_with(".idx") || ends_with("-idx3-ubyte") || ends_with(".idx3-ubyte") || ends_with("-idx1-ubyte")) {
    return DatasetFormat::kIdx;
  }
  throw Error(ErrorCode::kMalformedFile, "cannot infer dataset format from " + path.string());
}

Dataset load_dataset(const DatasetDescriptor& desc) {
  Dataset out = [&] {
    switch (desc.format) {
      case DatasetFormat::kIdx: return Dataset{PointSet(load_idx(desc)), std::nullopt};
      case DatasetFormat::kFvecs: return Dataset{PointSet(load_fvecs(desc)), std::nullopt};
      case DatasetFormat::kCsv: return load_csv(desc);
    }
    throw Error(ErrorCode::kInvalidParams, "unknown dataset format");
  }();
  if (desc.label_path) out.labels = load_idx_labels(*desc.label_path, static_cast<std::size_t>(out.points.size()));
  return out;
}

void write_csv(const std::filesystem::path& path, const PointSet& points, const LabelMap* labels) {
  std::string text;
  char buffer[64];
  for (Index r = 0; r < points.size(); ++r) {
    for (Index c = 0; c < points.dim(); ++c) {
      if (c > 0) text.push_back(',');
      const auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), points.points()(r, c));
      text.append(buffer, end);
    }
    if (labels != nullptr) {
      const auto it = labels->find(points.id(r));
      if (it == labels->end()) throw Error(ErrorCode::kMissingLabel, "no label for point " + std::to_string(points.id(r)));
      text.push_back(',');
      text += std::to_string(it->second);
    }
    text.push_back('\n');
  }
  write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

void write_fvecs(const std::filesystem::path& path, const PointSet& points) {
  ByteWriter out(static_cast<std::size_t>(points.size() * (points.dim() + 1) * 4));
  for (Index r = 0; r < points.size(); ++r) {
    out.u32(static_cast<std::uint32_t>(points.dim()));
    for (Index c = 0; c < points.dim(); ++c) {
      out.u32(std::bit_cast<std::uint32_t>(static_cast<float>(points.points()(r, c))));
    }
  }
  write_file(path, out.bytes());
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = crc32(crc, bytes.data() + offset, chunk);
    offset += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::size_t encoded_index_size(const IndexModel& model) {
  std::size_t size = kIndexHeaderBytes + kIndexTrailerBytes;
  for (const PartitionLevel& level : model.levels) {
    const auto rank = static_cast<std::size_t>(level.basis.rank());
    size += kLevelHeaderBytes + 8 * rank + 8 * static_cast<std::size_t>(model.dim) * rank +
            8 * level.member_ids.size();
  }
  return size;
}

std::vector<std::uint8_t> encode_index(const IndexModel& model) {
  const BuildParams& p = model.params;
  ByteWriter out(encoded_index_size(model));
  out.raw(kIndexMagic, sizeof(kIndexMagic));
  out.u32(kIndexVersion);
  out.u32(static_cast<std::uint32_t>(model.levels.size()));
  out.u64(static_cast<std::uint64_t>(model.dim));
  out.u64(static_cast<std::uint64_t>(p.k));
  out.u64(static_cast<std::uint64_t>(model.total_points));
  out.f64(p.epsilon);
  out.f64(p.eta);
  out.f64(p.resolved_alpha());
  out.u64(p.seed);
  out.u64(p.max_levels.value_or(0));
  out.u32(static_cast<std::uint32_t>(p.krylov_depth.value_or(0)));
  out.u32(0);

  for (const PartitionLevel& level : model.levels) {
    if (level.basis.dim() != model.dim) throw Error(ErrorCode::kInvariantViolation, "level basis dimension mismatch");
    out.u32(static_cast<std::uint32_t>(level.level_id));
    out.u32(static_cast<std::uint32_t>(level.capture_mode));
    out.u64(static_cast<std::uint64_t>(level.basis.rank()));
    out.u64(level.member_ids.size());
    out.f64(level.threshold_used);
    for (const double s : level.basis.singular_values) out.f64(s);
    for (Index r = 0; r < level.basis.dim(); ++r) {
      for (Index c = 0; c < level.basis.rank(); ++c) out.f64(level.basis.basis(r, c));
    }
    for (const PointId id : level.member_ids) out.i64(id);
  }
  std::vector<std::uint8_t>& bytes = out.bytes();
  out.u32(crc32_of(std::span(bytes).subspan(kIndexHeaderBytes)));
  return std::move(bytes);
}

IndexModel decode_index(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kIndexMagic)) throw Error(ErrorCode::kTruncatedFile, "index file ends inside magic");
  if (std::memcmp(bytes.data(), kIndexMagic, sizeof(kIndexMagic)) != 0) {
    throw Error(ErrorCode::kBadMagic, "not an RSSHIDX1 index file");
  }
  ByteReader header(bytes.subspan(sizeof(kIndexMagic)));
  const std::uint32_t version = header.u32("header");
  if (version != kIndexVersion) {
    throw Error(ErrorCode::kVersionUnsupported, "index version " + std::to_string(version) + " is not supported");
  }

  IndexModel model;
  BuildParams& p = model.params;
  const std::uint32_t level_count = header.u32("header");
  model.dim = static_cast<Index>(header.u64("header"));
  p.k = static_cast<Index>(header.u64("header"));
  model.total_points = static_cast<Index>(header.u64("header"));
  p.epsilon = header.f64("header");
  p.eta = header.f64("header");
  p.alpha = header.f64("header");
  p.seed = header.u64("header");
  if (const std::uint64_t max_levels = header.u64("header"); max_levels != 0) p.max_levels = max_levels;
  if (const std::uint32_t depth = header.u32("header"); depth != 0) p.krylov_depth = static_cast<int>(depth);
  header.u32("header");
  if (model.dim < 1 || model.total_points < 1 || level_count < 1) {
    throw Error(ErrorCode::kMalformedFile, "index header has empty dimensions");
  }
  try {
    p.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kMalformedFile, std::string("index header parameters: ") + e.what());
  }

  ByteReader body(bytes.subspan(kIndexHeaderBytes));
  const auto dim = static_cast<std::size_t>(model.dim);
  std::size_t members = 0;
  for (std::uint32_t i = 0; i < level_count; ++i) {
    PartitionLevel level;
    level.level_id = body.u32("level header");
    const std::uint32_t mode = body.u32("level header");
    const std::uint64_t rank = body.u64("level header");
    const std::uint64_t count = body.u64("level header");
    level.threshold_used = body.f64("level header");
    if (mode > static_cast<std::uint32_t>(CaptureMode::kFinalSweep)) {
      throw Error(ErrorCode::kMalformedFile, "unknown capture mode " + std::to_string(mode));
    }
    if (rank < 1 || rank > dim) throw Error(ErrorCode::kMalformedFile, "level rank out of range");
    level.capture_mode = static_cast<CaptureMode>(mode);
    body.need(8 * rank * (1 + dim) + 8 * count, "level body");
    level.basis.singular_values.resize(rank);
    for (double& s : level.basis.singular_values) s = body.f64("singular values");
    level.basis.basis.resize(model.dim, static_cast<Index>(rank));
    for (std::size_t r = 0; r < dim; ++r) {
      for (std::size_t c = 0; c < rank; ++c) level.basis.basis(static_cast<Index>(r), static_cast<Index>(c)) = body.f64("basis");
    }
    level.member_ids.resize(count);
    for (PointId& id : level.member_ids) id = body.i64("member ids");
    members += count;
    model.levels.push_back(std::move(level));
  }
  const std::size_t body_size = body.position();
  const std::uint32_t stored = body.u32("checksum");
  if (body.remaining() != 0) throw Error(ErrorCode::kMalformedFile, "trailing bytes after checksum");
  if (stored != crc32_of(bytes.subspan(kIndexHeaderBytes, body_size))) {
    throw Error(ErrorCode::kChecksumMismatch, "index body checksum does not match");
  }
  if (members != static_cast<std::size_t>(model.total_points)) {
    throw Error(ErrorCode::kMalformedFile, "member count does not match total points");
  }
  return model;
}

void save_index(const IndexModel& model, const std::filesystem::path& path) {
  write_file(path, encode_index(model));
}

IndexModel load_index(const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = read_file(path);
  return decode_index(bytes);
}

}  // namespace rssh
