#include "rmr/interchange.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <nlohmann/json.hpp>

#include "rmr/error.hpp"

namespace rmr::harness {
namespace {

using json = nlohmann::json;

std::optional<EmbeddingVector> read_vector(const json& obj, const char* key, const std::string& locus) {
  if (!obj.contains(key) || obj.at(key).is_null()) {
    return std::nullopt;
  }
  const json& arr = obj.at(key);
  if (!arr.is_array()) {
    throw Error(ErrorCode::kParseError, locus + ": '" + key + "' must be a list of numbers or null");
  }
  std::vector<float> values;
  values.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number()) {
      throw Error(ErrorCode::kParseError, locus + ": '" + key + "' must contain only numbers");
    }
    values.push_back(static_cast<float>(v.get<double>()));
  }
  try {
    EmbeddingVector vec(std::move(values));
    if (!(vec.norm() > 0.0f)) {
      throw Error(ErrorCode::kZeroNormVector, "all-zero embedding");
    }
    return vec;
  } catch (const Error& e) {
    throw Error(e.code(), locus + ": '" + key + "': " + e.message());
  }
}

EmbeddingRecord record_from_json(const json& obj, const std::string& locus, std::string* encoder_tag) {
  if (!obj.is_object()) {
    throw Error(ErrorCode::kParseError, locus + ": expected a JSON object");
  }
  if (!obj.contains("id") || !obj.at("id").is_string()) {
    throw Error(ErrorCode::kMissingField, locus + ": missing string field 'id'");
  }
  EmbeddingRecord r;
  r.id = obj.at("id").get<std::string>();
  r.text_embedding = read_vector(obj, "text_embedding", locus);
  r.image_embedding = read_vector(obj, "image_embedding", locus);
  if (!r.text_embedding && !r.image_embedding) {
    throw Error(ErrorCode::kBothModalitiesAbsent, locus + ": record '" + r.id + "' has no embedding");
  }
  if (r.text_embedding && r.image_embedding && r.text_embedding->dim() != r.image_embedding->dim()) {
    throw Error(ErrorCode::kDimensionMismatch, locus + ": text and image embeddings differ in dim");
  }
  if (encoder_tag != nullptr && obj.contains("encoder_tag") && obj.at("encoder_tag").is_string()) {
    *encoder_tag = obj.at("encoder_tag").get<std::string>();
  }
  return r;
}

std::size_t record_dim(const EmbeddingRecord& r) {
  return r.text_embedding ? r.text_embedding->dim() : r.image_embedding->dim();
}

}  // namespace

EmbeddingFile::EmbeddingFile(std::size_t dim, std::string encoder_tag, std::vector<EmbeddingRecord> records)
    : dim_(dim), encoder_tag_(std::move(encoder_tag)), records_(std::move(records)) {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (record_dim(records_[i]) != dim_) {
      throw Error(ErrorCode::kDimensionMismatch, "embedding record '" + records_[i].id + "' has dim " +
                                                     std::to_string(record_dim(records_[i])) + ", file dim is " +
                                                     std::to_string(dim_));
    }
    if (!by_id_.emplace(records_[i].id, i).second) {
      throw Error(ErrorCode::kDuplicateId, "embedding record id '" + records_[i].id + "' appears twice");
    }
  }
}

const EmbeddingRecord* EmbeddingFile::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  return it == by_id_.end() ? nullptr : &records_[it->second];
}

EmbeddingFile load_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kIoFailure, "cannot open embeddings " + path.string());
  }
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
    return false;
  };
  auto parse_line = [&](const std::string& locus) {
    try {
      return json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseError, locus + ": " + e.what());
    }
  };

  if (!next_line()) {
    throw Error(ErrorCode::kParseError, path.string() + ": empty file, expected a manifest line");
  }
  const std::string manifest_locus = path.string() + " line " + std::to_string(line_no);
  const json manifest = parse_line(manifest_locus);
  if (!manifest.is_object() || !manifest.contains("manifest") || !manifest.contains("dim") ||
      !manifest.at("dim").is_number_unsigned() || manifest.at("dim").get<std::size_t>() == 0) {
    throw Error(ErrorCode::kParseError, manifest_locus + ": first line must be {\"manifest\":1,\"dim\":D,...}");
  }
  const auto dim = manifest.at("dim").get<std::size_t>();
  const std::string tag = manifest.value("encoder_tag", "");

  std::vector<EmbeddingRecord> records;
  while (next_line()) {
    const std::string locus = path.string() + " line " + std::to_string(line_no);
    const json obj = parse_line(locus);
    std::string record_tag;
    EmbeddingRecord r = record_from_json(obj, locus, &record_tag);
    if (record_dim(r) != dim) {
      throw Error(ErrorCode::kDimensionMismatch, locus + ": dim " + std::to_string(record_dim(r)) +
                                                     " but the manifest says " + std::to_string(dim));
    }
    if (!record_tag.empty() && !tag.empty() && record_tag != tag) {
      throw Error(ErrorCode::kParseError, locus + ": encoder_tag '" + record_tag + "' differs from manifest '" + tag + "'");
    }
    records.push_back(std::move(r));
  }
  return EmbeddingFile(dim, tag, std::move(records));
}

EmbeddingRecord parse_embedding_record(std::string_view json_text, std::string* encoder_tag) {
  json obj;
  try {
    obj = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kParseError, std::string("embedding record: ") + e.what());
  }
  return record_from_json(obj, "embedding record", encoder_tag);
}

ModalityInput to_modality_input(const EmbeddingRecord& record) {
  ModalityInput input;
  input.text_embedding = record.text_embedding;
  input.image_embedding = record.image_embedding;
  try {
    return with_unit_embeddings(std::move(input));
  } catch (const Error& e) {
    throw Error(e.code(), "embedding record '" + record.id + "': " + e.message());
  }
}

}  // namespace rmr::harness
