#pragma once

// On-disk formats.
//
// HYEB v1 embedding file, all integers and floats little-endian:
//   0   char[4] "HYEB"
//   4   u32     version (1)
//   8   u8      space (0 euclidean, 1 lorentz-spatial, 2 lorentz-full)
//   9   u32     dim (stored columns per row)
//   13  u64     row count
//   21  f64     curvature magnitude (NaN for euclidean)
//   29  f64[rows * dim], row-major
// Labels, tags and free-form metadata live in a sidecar `<stem>.meta.json`.
//
// HYDR v1 concept direction and HYAD v1 linear adapter use the same framing;
// see save_direction and save_adapter.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <bit>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hycon/adapter.hpp"
#include "hycon/embedding_set.hpp"
#include "hycon/errors.hpp"
#include "hycon/lorentz.hpp"
#include "hycon/steering.hpp"

namespace hycon {

inline constexpr std::uint32_t kHyebVersion = 1;
inline constexpr std::uint32_t kDirectionVersion = 1;
inline constexpr std::uint32_t kAdapterVersion = 1;
inline constexpr std::size_t kHyebHeaderSize = 29;

namespace io_detail {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

class ByteWriter {
 public:
  void raw(std::string_view s) { buf_.append(s); }

  template <typename T>
  void le(T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    buf_.append(reinterpret_cast<const char*>(bytes), sizeof(T));
  }

  void u8(std::uint8_t v) { le(v); }
  void u32(std::uint32_t v) { le(v); }
  void u64(std::uint64_t v) { le(v); }
  void f64(double v) { le(v); }

  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s);
  }

  template <typename Derived>
  void f64s(const Eigen::DenseBase<Derived>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) f64(m.derived().data()[i]);
  }

  const std::string& bytes() const noexcept { return buf_; }

 private:
  std::string buf_;
};

class ByteReader {
 public:
  ByteReader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }

  [[noreturn]] void fail(const std::string& msg) const { fail_at(pos_, msg); }

  [[noreturn]] void fail_at(std::size_t offset, const std::string& msg) const {
    std::ostringstream os;
    os << what_ << ": " << msg << " at byte offset " << offset;
    throw FormatError(os.str());
  }

  void need(std::size_t n) const {
    if (remaining() < n) {
      std::ostringstream os;
      os << "truncated (need " << n << " bytes, " << remaining() << " left)";
      fail(os.str());
    }
  }

  std::string_view raw(std::size_t n) {
    need(n);
    auto s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  template <typename T>
  T le() {
    need(sizeof(T));
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, data_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T v;
    std::memcpy(&v, bytes, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::uint8_t u8() { return le<std::uint8_t>(); }
  std::uint32_t u32() { return le<std::uint32_t>(); }
  std::uint64_t u64() { return le<std::uint64_t>(); }
  double f64() { return le<double>(); }

  double finite_f64() {
    const std::size_t at = pos_;
    const double v = f64();
    if (!std::isfinite(v)) fail_at(at, "non-finite value");
    return v;
  }

  Vector finite_vector(std::size_t n) {
    need(n * 8);
    Vector v(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) v(static_cast<Eigen::Index>(i)) = finite_f64();
    return v;
  }

  std::string str() {
    const std::uint32_t n = u32();
    return std::string(raw(n));
  }

  void expect_magic(std::string_view magic) {
    need(magic.size());
    if (raw(magic.size()) != magic) fail_at(0, "bad magic (expected '" + std::string(magic) + "')");
  }

  void expect_version(std::uint32_t want) {
    const std::size_t at = pos_;
    const std::uint32_t v = u32();
    if (v != want) {
      std::ostringstream os;
      os << "unsupported version " << v << " (expected " << want << ")";
      fail_at(at, os.str());
    }
  }

  void expect_end() const {
    if (remaining() != 0) fail("unexpected trailing bytes");
  }

 private:
  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read error on '" + path.string() + "'");
  return data;
}

inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError("write error on '" + path.string() + "': " + std::strerror(errno));
}

}  // namespace io_detail

// foo.hyeb -> foo.meta.json
inline std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  auto p = path;
  p.replace_extension(".meta.json");
  return p;
}

inline std::string encode_hyeb(const EmbeddingSet& set) {
  io_detail::ByteWriter w;
  w.raw("HYEB");
  w.u32(kHyebVersion);
  w.u8(static_cast<std::uint8_t>(set.space()));
  w.u32(static_cast<std::uint32_t>(set.dim()));
  w.u64(set.size());
  w.f64(set.curvature() ? set.curvature()->value() : std::numeric_limits<double>::quiet_NaN());
  w.f64s(set.rows());
  return w.bytes();
}

inline nlohmann::json encode_sidecar(const EmbeddingSet& set) {
  nlohmann::json j;
  j["labels"] = set.labels();
  j["concept_tags"] = set.tags();
  if (set.metadata().boundary_const) j["boundary_const"] = *set.metadata().boundary_const;
  j["source"] = set.metadata().source;
  return j;
}

inline void save_embeddings(const EmbeddingSet& set, const std::filesystem::path& path) {
  io_detail::write_file(path, encode_hyeb(set));
  io_detail::write_file(sidecar_path(path), encode_sidecar(set).dump(2) + "\n");
}

struct LoadOptions {
  bool check_sheet = true;
  double sheet_tolerance = kLoadSheetTolerance;
};

// Parses a HYEB body plus optional sidecar JSON (pass null when absent).
inline EmbeddingSet decode_hyeb(std::string_view bytes, const nlohmann::json& sidecar, const LoadOptions& opts = {},
                                const std::string& what = "HYEB") {
  io_detail::ByteReader r(bytes, what);
  if (bytes.empty()) r.fail("empty file");
  r.expect_magic("HYEB");
  r.expect_version(kHyebVersion);
  const std::size_t space_at = r.offset();
  const std::uint8_t tag = r.u8();
  if (tag > 2) r.fail_at(space_at, "unknown space tag " + std::to_string(tag));
  const Space space = static_cast<Space>(tag);
  const std::uint32_t dim = r.u32();
  const std::uint64_t nrows = r.u64();
  const std::size_t curv_at = r.offset();
  const double kappa = r.f64();
  std::optional<Curvature> curvature;
  if (space == Space::euclidean) {
    if (!std::isnan(kappa)) r.fail_at(curv_at, "euclidean sets must store NaN curvature");
  } else {
    if (!std::isfinite(kappa) || kappa <= 0.0) r.fail_at(curv_at, "invalid curvature");
    curvature = Curvature(kappa);
  }
  if (dim == 0 && nrows > 0) r.fail_at(9, "zero dimension with nonzero row count");
  if (dim != 0 && nrows > r.remaining() / 8 / dim) r.fail("truncated payload");
  EmbeddingSet::Matrix rows(static_cast<Eigen::Index>(nrows), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < rows.size(); ++i) rows.data()[i] = r.finite_f64();
  r.expect_end();

  std::vector<std::string> labels;
  std::vector<TagSet> tags;
  SetMetadata meta;
  if (sidecar.is_null()) {
    for (std::uint64_t i = 0; i < nrows; ++i) labels.push_back(std::to_string(i));
    tags.resize(nrows);
  } else {
    try {
      labels = sidecar.at("labels").get<std::vector<std::string>>();
      tags = sidecar.at("concept_tags").get<std::vector<TagSet>>();
      if (sidecar.contains("boundary_const") && !sidecar["boundary_const"].is_null()) {
        meta.boundary_const = sidecar["boundary_const"].get<double>();
      }
      if (sidecar.contains("source")) meta.source = sidecar["source"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(what + " sidecar: " + e.what());
    }
    if (labels.size() != nrows || tags.size() != nrows) {
      std::ostringstream os;
      os << what << " sidecar lists " << labels.size() << " labels and " << tags.size() << " tag sets for "
         << nrows << " rows";
      throw FormatError(os.str());
    }
  }
  return EmbeddingSet(space, std::move(rows), curvature, std::move(labels), std::move(tags), std::move(meta),
                      EmbeddingSet::Options{opts.check_sheet, opts.sheet_tolerance});
}

inline EmbeddingSet load_embeddings(const std::filesystem::path& path, const LoadOptions& opts = {}) {
  const std::string bytes = io_detail::read_file(path);
  nlohmann::json sidecar;
  const auto side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    try {
      sidecar = nlohmann::json::parse(io_detail::read_file(side));
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("'" + side.string() + "': " + e.what());
    }
  }
  return decode_hyeb(bytes, sidecar, opts, "'" + path.string() + "'");
}

// CSV fixture import. Header `label,tags,v0,v1,...`; tags are '|'-separated.
// Labels may not contain commas.
inline EmbeddingSet load_csv(const std::filesystem::path& path, Space space, std::optional<Curvature> curvature) {
  std::istringstream in(io_detail::read_file(path));
  std::string line;
  if (!std::getline(in, line)) throw FormatError("'" + path.string() + "': empty CSV");
  auto split = [](const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream ss(s);
    while (std::getline(ss, cur, sep)) out.push_back(cur);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
  };
  const auto header = split(line, ',');
  if (header.size() < 3) throw FormatError("'" + path.string() + "': CSV needs label, tags and >= 1 value column");
  const std::size_t dim = header.size() - 2;
  std::vector<std::vector<double>> values;
  std::vector<std::string> labels;
  std::vector<TagSet> tags;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw FormatError("'" + path.string() + "': wrong column count on line " + std::to_string(lineno));
    }
    labels.push_back(cells[0]);
    TagSet t;
    if (!cells[1].empty()) t = split(cells[1], '|');
    tags.push_back(make_tags(std::move(t)));
    std::vector<double> row;
    for (std::size_t c = 2; c < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw FormatError("'" + path.string() + "': bad number '" + cells[c] + "' on line " + std::to_string(lineno));
      }
    }
    values.push_back(std::move(row));
  }
  EmbeddingSet::Matrix m(static_cast<Eigen::Index>(values.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < values.size(); ++i) {
    for (std::size_t j = 0; j < dim; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = values[i][j];
  }
  return EmbeddingSet(space, std::move(m), curvature, std::move(labels), std::move(tags));
}

// HYDR v1:
//   char[4] "HYDR", u32 version, u32 coords per point (n+1), f64 curvature,
//   u64 config digest, f64[n+1] anchor, f64[n+1] direction,
//   f64[n+1] negative centroid, str concept, u32 count, str provenance[count]
// where str is a u32 byte length followed by UTF-8 bytes.
inline std::string encode_direction(const ConceptDirection& d, std::uint64_t config_digest = 0) {
  io_detail::ByteWriter w;
  w.raw("HYDR");
  w.u32(kDirectionVersion);
  w.u32(static_cast<std::uint32_t>(d.anchor().coords().size()));
  w.f64(d.anchor().curvature().value());
  w.u64(config_digest);
  w.f64s(d.anchor().coords());
  w.f64s(d.direction().coords());
  w.f64s(d.negative_centroid().coords());
  w.str(d.concept_name());
  w.u32(static_cast<std::uint32_t>(d.provenance().size()));
  for (const auto& s : d.provenance()) w.str(s);
  return w.bytes();
}

struct DirectionFile {
  ConceptDirection direction;
  std::uint32_t version = kDirectionVersion;
  std::uint64_t config_digest = 0;
};

inline DirectionFile decode_direction(std::string_view bytes, const std::string& what = "HYDR") {
  io_detail::ByteReader r(bytes, what);
  if (bytes.empty()) r.fail("empty file");
  r.expect_magic("HYDR");
  r.expect_version(kDirectionVersion);
  const std::uint32_t cols = r.u32();
  if (cols < 2) r.fail_at(8, "direction needs at least 2 coordinates");
  const double kappa = r.finite_f64();
  if (kappa <= 0.0) r.fail_at(12, "invalid curvature");
  const std::uint64_t digest = r.u64();
  Vector anchor = r.finite_vector(cols);
  Vector dir = r.finite_vector(cols);
  Vector neg = r.finite_vector(cols);
  std::string concept_name = r.str();
  const std::uint32_t nprov = r.u32();
  std::vector<std::string> provenance;
  for (std::uint32_t i = 0; i < nprov; ++i) provenance.push_back(r.str());
  r.expect_end();
  try {
    const Curvature c(kappa);
    auto a = LorentzPoint::from_coords(std::move(anchor), c);
    auto m = LorentzPoint::from_coords(std::move(neg), c);
    TangentVector t(std::move(dir), a);
    return {ConceptDirection(std::move(a), std::move(t), std::move(m), std::move(concept_name),
                             std::move(provenance)),
            kDirectionVersion, digest};
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw CorruptionError(what + ": stored direction fails validation: " + e.what());
  }
}

inline void save_direction(const ConceptDirection& d, const std::filesystem::path& path,
                           std::uint64_t config_digest = 0) {
  io_detail::write_file(path, encode_direction(d, config_digest));
}

inline DirectionFile load_direction(const std::filesystem::path& path) {
  return decode_direction(io_detail::read_file(path), "'" + path.string() + "'");
}

// HYAD v1:
//   char[4] "HYAD", u32 version, u32 target dim, u32 source dim, f64 ridge,
//   f64[target*source] weight (row-major), f64[target] bias
inline std::string encode_adapter(const LinearAdapter& a) {
  a.validate();
  io_detail::ByteWriter w;
  w.raw("HYAD");
  w.u32(kAdapterVersion);
  w.u32(static_cast<std::uint32_t>(a.target_dim()));
  w.u32(static_cast<std::uint32_t>(a.source_dim()));
  w.f64(a.ridge);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = a.weight;
  w.f64s(rm);
  w.f64s(a.bias);
  return w.bytes();
}

inline LinearAdapter decode_adapter(std::string_view bytes, const std::string& what = "HYAD") {
  io_detail::ByteReader r(bytes, what);
  if (bytes.empty()) r.fail("empty file");
  r.expect_magic("HYAD");
  r.expect_version(kAdapterVersion);
  const std::uint32_t target = r.u32();
  const std::uint32_t source = r.u32();
  LinearAdapter a;
  a.ridge = r.finite_f64();
  if (static_cast<std::uint64_t>(target) * source > r.remaining() / 8) r.fail("truncated weight");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(target, source);
  for (Eigen::Index i = 0; i < rm.size(); ++i) rm.data()[i] = r.finite_f64();
  a.weight = rm;
  a.bias = r.finite_vector(target);
  r.expect_end();
  a.validate();
  return a;
}

inline void save_adapter(const LinearAdapter& a, const std::filesystem::path& path) {
  io_detail::write_file(path, encode_adapter(a));
}

inline LinearAdapter load_adapter(const std::filesystem::path& path) {
  return decode_adapter(io_detail::read_file(path), "'" + path.string() + "'");
}

}  // namespace hycon
