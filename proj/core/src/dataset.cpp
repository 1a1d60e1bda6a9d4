#include "rmr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>

#include "rmr/error.hpp"

namespace rmr::harness {
namespace {

using json = nlohmann::ordered_json;

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Wraps a JSON object with a locus string so every error names the record.
class Fields {
 public:
  Fields(const json& obj, std::string locus) : obj_(obj), locus_(std::move(locus)) {
    if (!obj_.is_object()) {
      throw Error(ErrorCode::kParseError, locus_ + ": expected a JSON object");
    }
  }

  const std::string& locus() const { return locus_; }

  bool present(const char* key) const { return obj_.contains(key) && !obj_.at(key).is_null(); }

  const json& required(const char* key) const {
    if (!present(key)) {
      throw Error(ErrorCode::kMissingField, locus_ + ": missing field '" + key + "'");
    }
    return obj_.at(key);
  }

  std::string string(const char* key) const { return as_string(required(key), key); }

  std::optional<std::string> optional_string(const char* key) const {
    if (!present(key)) return std::nullopt;
    return as_string(obj_.at(key), key);
  }

  std::vector<std::string> strings(const char* key) const { return as_strings(required(key), key); }

  std::vector<std::string> optional_strings(const char* key) const {
    if (!present(key)) return {};
    return as_strings(obj_.at(key), key);
  }

  std::size_t index(const char* key) const {
    const json& v = required(key);
    if (!v.is_number_integer()) {
      throw Error(ErrorCode::kParseError, locus_ + ": field '" + key + "' must be an integer");
    }
    const auto value = v.get<long long>();
    if (value < 0) {
      throw Error(ErrorCode::kBadGoldIndex, locus_ + ": " + key + " " + std::to_string(value) + " is negative");
    }
    return static_cast<std::size_t>(value);
  }

  std::optional<int> grade(const char* key) const {
    if (!present(key)) return std::nullopt;
    const json& v = obj_.at(key);
    int grade = 0;
    if (v.is_number_integer()) {
      grade = v.get<int>();
    } else if (v.is_string()) {
      std::string s = lowercase(v.get<std::string>());
      if (s.rfind("grade", 0) == 0) s = s.substr(5);
      if (s.empty()) return std::nullopt;
      try {
        std::size_t used = 0;
        grade = std::stoi(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw Error(ErrorCode::kParseError, locus_ + ": cannot read grade '" + v.get<std::string>() + "'");
      }
    } else {
      throw Error(ErrorCode::kParseError, locus_ + ": grade must be an integer or \"gradeN\"");
    }
    if (grade < 1 || grade > 12) {
      throw Error(ErrorCode::kParseError, locus_ + ": grade " + std::to_string(grade) + " is outside 1-12");
    }
    return grade;
  }

 private:
  std::string as_string(const json& v, const char* key) const {
    if (!v.is_string()) {
      throw Error(ErrorCode::kParseError, locus_ + ": field '" + key + "' must be a string");
    }
    return v.get<std::string>();
  }

  std::vector<std::string> as_strings(const json& v, const char* key) const {
    if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); })) {
      throw Error(ErrorCode::kParseError, locus_ + ": field '" + key + "' must be a list of strings");
    }
    return v.get<std::vector<std::string>>();
  }

  const json& obj_;
  std::string locus_;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoFailure, "cannot open dataset " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EvalRecord scienceqa_record(const std::string& id, const Fields& f) {
  EvalRecord r;
  r.id = id;
  r.question = f.string("question");
  r.choices = f.strings("choices");
  r.gold_index = f.index("answer");
  r.hint = f.optional_string("hint");
  if (auto image = f.optional_string("image"); image && !image->empty()) {
    r.image_ref = id + "/" + *image;
  }
  r.subject = parse_subject(f.optional_string("subject").value_or(""));
  r.grade = f.grade("grade");
  r.topic = f.optional_string("topic").value_or("");
  r.rationale = f.optional_string("solution").value_or("");
  if (r.rationale.empty()) {
    r.rationale = f.optional_string("lecture").value_or("");
  }
  return r;
}

EvalRecord generic_record(const Fields& f) {
  EvalRecord r;
  r.id = f.string("id");
  r.question = f.string("question");
  r.choices = f.strings("choices");
  r.gold_index = f.index("gold_index");
  r.hint = f.optional_string("hint");
  if (auto image = f.optional_string("image"); image && !image->empty()) {
    r.image_ref = *image;
  }
  r.subject = parse_subject(f.optional_string("subject").value_or(""));
  r.grade = f.grade("grade");
  r.rationale = f.optional_string("rationale").value_or("");
  r.topic = f.optional_string("topic").value_or("");
  r.direct_answers = f.optional_strings("direct_answers");
  return r;
}

}  // namespace

std::string_view to_string(Subject subject) noexcept {
  switch (subject) {
    case Subject::kNatural: return "natural";
    case Subject::kSocial: return "social";
    case Subject::kLanguage: return "language";
    case Subject::kOther: return "other";
  }
  return "other";
}

Subject parse_subject(std::string_view text) {
  const std::string s = lowercase(text);
  if (s == "natural" || s == "natural science") return Subject::kNatural;
  if (s == "social" || s == "social science") return Subject::kSocial;
  if (s == "language" || s == "language science") return Subject::kLanguage;
  return Subject::kOther;
}

void validate_record(const EvalRecord& record) {
  if (record.id.empty()) {
    throw Error(ErrorCode::kMissingField, "record has an empty id");
  }
  if (record.question.empty()) {
    throw Error(ErrorCode::kMissingField, "record '" + record.id + "': question is empty");
  }
  if (record.choices.size() < 2) {
    throw Error(ErrorCode::kParseError, "record '" + record.id + "': needs at least two choices, has " +
                                            std::to_string(record.choices.size()));
  }
  if (record.choices.size() > 26) {
    throw Error(ErrorCode::kParseError, "record '" + record.id + "': more than 26 choices");
  }
  if (record.gold_index >= record.choices.size()) {
    throw Error(ErrorCode::kBadGoldIndex, "record '" + record.id + "': gold index " +
                                              std::to_string(record.gold_index) + " but only " +
                                              std::to_string(record.choices.size()) + " choices");
  }
  if (record.grade && (*record.grade < 1 || *record.grade > 12)) {
    throw Error(ErrorCode::kParseError, "record '" + record.id + "': grade outside 1-12");
  }
}

QraTriplet to_triplet(const EvalRecord& record) {
  QraTriplet t;
  t.id = record.id;
  t.question = record.question;
  t.rationale = record.rationale;
  t.answer = render_answer(record.choices, record.gold_index);
  t.choices = record.choices;
  t.metadata["subject"] = std::string(to_string(record.subject));
  if (!record.topic.empty()) t.metadata["topic"] = record.topic;
  if (record.grade) t.metadata["grade"] = std::to_string(*record.grade);
  return t;
}

DatasetFormat parse_dataset_format(std::string_view tag) {
  if (tag == "scienceqa_json") return DatasetFormat::kScienceQaJson;
  if (tag == "generic_jsonl") return DatasetFormat::kGenericJsonl;
  throw Error(ErrorCode::kConfiguration,
              "unknown dataset format '" + std::string(tag) + "' (expected scienceqa_json or generic_jsonl)");
}

std::vector<EvalRecord> load_dataset(const std::filesystem::path& path, DatasetFormat format,
                                     const DatasetOptions& options) {
  const std::string text = read_file(path);
  std::vector<EvalRecord> records;

  if (format == DatasetFormat::kScienceQaJson) {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::kParseError, path.string() + ": " + e.what());
    }
    if (!doc.is_object()) {
      throw Error(ErrorCode::kParseError, path.string() + ": expected an object keyed by problem id");
    }
    for (const auto& [id, problem] : doc.items()) {
      const Fields f(problem, path.string() + " record '" + id + "'");
      if (options.split && f.optional_string("split").value_or("") != *options.split) {
        continue;
      }
      records.push_back(scienceqa_record(id, f));
    }
  } else {
    std::istringstream lines(text);
    std::string line;
    for (std::size_t line_no = 1; std::getline(lines, line); ++line_no) {
      if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
        continue;
      }
      const std::string locus = path.string() + " line " + std::to_string(line_no);
      json obj;
      try {
        obj = json::parse(line);
      } catch (const json::parse_error& e) {
        throw Error(ErrorCode::kParseError, locus + ": " + e.what());
      }
      records.push_back(generic_record(Fields(obj, locus)));
    }
  }

  std::unordered_set<std::string> seen;
  for (const auto& r : records) {
    validate_record(r);
    if (!seen.insert(r.id).second) {
      throw Error(ErrorCode::kDuplicateId, path.string() + ": record id '" + r.id + "' appears twice");
    }
  }
  return records;
}

}  // namespace rmr::harness
