#include "rmr/index_io.hpp"

#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>

#include "rmr/error.hpp"

namespace rmr::index {
namespace {

using json = nlohmann::json;

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32_z(0L, Z_NULL, 0);
  crc = crc32_z(crc, bytes.data(), bytes.size());
  return static_cast<std::uint32_t>(crc);
}

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    out_.insert(out_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() { return out_; }

 private:
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw Error(ErrorCode::kTruncatedFile, std::string("file ends inside ") + what + " at byte " +
                                                 std::to_string(bytes_.size()));
    }
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(std::size_t n, const char* what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

json items_to_json(const KnowledgeLibrary& library) {
  json items = json::array();
  for (const auto& item : library.items()) {
    const auto& t = item.triplet;
    items.push_back({
        {"question", t.question},
        {"rationale", t.rationale},
        {"answer", t.answer},
        {"choices", t.choices},
        {"metadata", t.metadata},
        {"modalities", {{"text", item.modalities.text}, {"image", item.modalities.image}}},
    });
  }
  return json{{"encoder_tag", library.encoder_tag()}, {"items", std::move(items)}};
}

}  // namespace

std::vector<std::uint8_t> serialize_index(const KnowledgeLibrary& library) {
  Writer w;
  w.raw(kIndexMagic, sizeof(kIndexMagic));
  w.u32(kIndexFormatVersion);
  w.u32(static_cast<std::uint32_t>(library.dim()));
  w.u64(library.count());
  for (float v : library.matrix()) {
    w.f32(v);
  }
  for (const auto& item : library.items()) {
    const auto& id = item.triplet.id;
    w.u32(static_cast<std::uint32_t>(id.size()));
    w.raw(id.data(), id.size());
  }
  const std::string blob = items_to_json(library).dump();
  w.u64(blob.size());
  w.raw(blob.data(), blob.size());
  const std::uint32_t crc = crc32_of(w.bytes());
  w.u32(crc);
  return std::move(w.bytes());
}

KnowledgeLibrary deserialize_index(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min(bytes.size(), sizeof(kIndexMagic));
  if (std::memcmp(bytes.data(), kIndexMagic, magic_len) != 0) {
    throw Error(ErrorCode::kBadMagic, "not an RMR index file");
  }
  Reader r(bytes);
  r.need(sizeof(kIndexMagic), "the magic bytes");
  r.str(sizeof(kIndexMagic), "the magic bytes");

  const std::uint32_t version = r.u32("the header");
  if (version != kIndexFormatVersion) {
    throw Error(ErrorCode::kVersionMismatch, "index format version " + std::to_string(version) +
                                                 ", expected " + std::to_string(kIndexFormatVersion));
  }
  const std::uint32_t dim = r.u32("the header");
  const std::uint64_t count = r.u64("the header");
  if (dim == 0 || count == 0) {
    throw Error(ErrorCode::kParseError, "index header declares an empty library");
  }
  if (count > r.remaining() / dim / sizeof(float)) {
    throw Error(ErrorCode::kTruncatedFile, "file ends inside the embedding matrix");
  }

  std::vector<float> matrix(static_cast<std::size_t>(count) * dim);
  for (auto& v : matrix) {
    v = r.f32("the embedding matrix");
  }
  std::vector<std::string> ids(count);
  for (auto& id : ids) {
    const std::uint32_t len = r.u32("the id table");
    id = r.str(len, "the id table");
  }
  const std::uint64_t blob_len = r.u64("the metadata blob");
  if (blob_len > r.remaining()) {
    throw Error(ErrorCode::kTruncatedFile, "file ends inside the metadata blob");
  }
  const std::string blob = r.str(static_cast<std::size_t>(blob_len), "the metadata blob");
  const std::size_t body_len = r.offset();
  const std::uint32_t stored_crc = r.u32("the checksum");
  if (r.remaining() != 0) {
    throw Error(ErrorCode::kChecksumMismatch, std::to_string(r.remaining()) + " unexpected bytes after the checksum");
  }
  if (crc32_of(bytes.first(body_len)) != stored_crc) {
    throw Error(ErrorCode::kChecksumMismatch, "stored CRC32 does not match file contents");
  }

  json meta;
  try {
    meta = json::parse(blob);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("metadata blob: ") + e.what());
  }
  try {
    const auto& items_json = meta.at("items");
    if (items_json.size() != count) {
      throw Error(ErrorCode::kParseError, "metadata describes " + std::to_string(items_json.size()) +
                                              " items, header declares " + std::to_string(count));
    }
    std::vector<KnowledgeItem> items;
    items.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& j = items_json[i];
      QraTriplet t;
      t.id = std::move(ids[i]);
      t.question = j.at("question").get<std::string>();
      t.rationale = j.at("rationale").get<std::string>();
      t.answer = j.at("answer").get<std::string>();
      t.choices = j.at("choices").get<std::vector<std::string>>();
      t.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
      ModalityFlags flags{j.at("modalities").at("text").get<bool>(), j.at("modalities").at("image").get<bool>()};
      auto row_begin = matrix.begin() + static_cast<std::ptrdiff_t>(i * dim);
      EmbeddingVector embedding(std::vector<float>(row_begin, row_begin + dim));
      items.push_back(KnowledgeItem{std::move(t), std::move(embedding), flags});
    }
    return KnowledgeLibrary::from_items(std::move(items), meta.at("encoder_tag").get<std::string>());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParseError, std::string("metadata blob: ") + e.what());
  }
}

void save_index(const KnowledgeLibrary& library, const std::filesystem::path& path) {
  const auto bytes = serialize_index(library);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error(ErrorCode::kIoFailure, "cannot open " + tmp.string() + " for writing");
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
      throw Error(ErrorCode::kIoFailure, "write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::kIoFailure, "cannot move index into place at " + path.string());
  }
}

KnowledgeLibrary load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoFailure, "cannot open index " + path.string());
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw Error(ErrorCode::kIoFailure, "read of " + path.string() + " failed");
  }
  return deserialize_index(bytes);
}

std::string library_fingerprint(const KnowledgeLibrary& library) {
  const auto bytes = serialize_index(library);
  char buf[9];
  std::snprintf(buf, sizeof(buf), "%08x", crc32_of(bytes));
  return buf;
}

}  // namespace rmr::index
