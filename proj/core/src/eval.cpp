#include "rmr/eval.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "rmr/error.hpp"
#include "rmr/index_io.hpp"
#include "rmr/retrieval.hpp"

namespace rmr::harness {
namespace {

using json = nlohmann::ordered_json;

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::string lowercase(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

// Per-record work that happens before the model is called.
struct Prepared {
  RecordTrace trace;
  std::optional<gateway::ImageAsset> image;
};

class DuplicateQuestionIndex {
 public:
  explicit DuplicateQuestionIndex(const KnowledgeLibrary& library) {
    for (const auto& item : library.items()) {
      by_question_[item.triplet.question].push_back(item.triplet.id);
    }
  }
  std::span<const std::string> ids_for(const std::string& question) const {
    auto it = by_question_.find(question);
    if (it == by_question_.end()) return {};
    return it->second;
  }

 private:
  std::unordered_map<std::string, std::vector<std::string>> by_question_;
};

RunManifest make_manifest(const EvalInputs& inputs, const gateway::Gateway& gw, const EvalOptions& options) {
  RunManifest m;
  m.endpoint = gw.endpoint().base_url;
  m.model = gw.endpoint().model_name;
  if (inputs.library != nullptr) {
    m.library_hash = inputs.library_hash.empty() ? index::library_fingerprint(*inputs.library) : inputs.library_hash;
    m.encoder_tag = inputs.library->encoder_tag();
  }
  m.seed = options.seed;
  m.scoring = std::string(to_string(options.scoring));
  m.exclusion = std::string(to_string(options.exclusion));
  m.modality = std::string(to_string(options.filter));
  if (options.scoring == ScoringMode::kDirectAnswer) {
    m.notes.push_back("direct answers scored by exact match after lowercasing and stripping");
  } else {
    m.notes.push_back("multiple choice; unextractable answers score as incorrect");
  }
  if (options.k == 0) {
    m.notes.push_back("no-retrieval baseline");
  }
  return m;
}

}  // namespace

std::string_view to_string(Category category) noexcept {
  switch (category) {
    case Category::kNat: return "NAT";
    case Category::kSoc: return "SOC";
    case Category::kLan: return "LAN";
    case Category::kTxt: return "TXT";
    case Category::kImg: return "IMG";
    case Category::kNo: return "NO";
    case Category::kGrade1To6: return "G1-6";
    case Category::kGrade7To12: return "G7-12";
    case Category::kAvg: return "AVG";
  }
  return "?";
}

std::vector<Category> categories_of(const EvalRecord& record) {
  std::vector<Category> out;
  switch (record.subject) {
    case Subject::kNatural: out.push_back(Category::kNat); break;
    case Subject::kSocial: out.push_back(Category::kSoc); break;
    case Subject::kLanguage: out.push_back(Category::kLan); break;
    case Subject::kOther: break;
  }
  const bool text = has_text_context(record);
  const bool image = has_image(record);
  if (text) out.push_back(Category::kTxt);
  if (image) out.push_back(Category::kImg);
  if (!text && !image) out.push_back(Category::kNo);
  if (record.grade) {
    out.push_back(*record.grade <= 6 ? Category::kGrade1To6 : Category::kGrade7To12);
  }
  out.push_back(Category::kAvg);
  return out;
}

std::optional<double> CategoryCell::accuracy() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(correct) / static_cast<double>(total) * 100.0;
}

std::string_view to_string(ModalityFilter filter) noexcept {
  switch (filter) {
    case ModalityFilter::kAll: return "All";
    case ModalityFilter::kTextAndImage: return "T&I";
    case ModalityFilter::kTextOnly: return "T";
  }
  return "All";
}

std::string_view to_string(ExclusionPolicy policy) noexcept {
  return policy == ExclusionPolicy::kNone ? "none" : "exclude_exact_duplicate";
}

std::string_view to_string(ScoringMode mode) noexcept {
  return mode == ScoringMode::kMultipleChoice ? "multiple_choice" : "direct_answer";
}

ModalityFilter parse_modality_filter(std::string_view text) {
  const std::string s = lowercase(text);
  if (s == "all") return ModalityFilter::kAll;
  if (s == "t&i" || s == "ti" || s == "text_and_image") return ModalityFilter::kTextAndImage;
  if (s == "t" || s == "text" || s == "text_only") return ModalityFilter::kTextOnly;
  throw Error(ErrorCode::kConfiguration, "unknown modality filter '" + std::string(text) + "' (all, ti, t)");
}

ExclusionPolicy parse_exclusion_policy(std::string_view text) {
  if (text == "none") return ExclusionPolicy::kNone;
  if (text == "exclude_exact_duplicate") return ExclusionPolicy::kExcludeExactDuplicate;
  throw Error(ErrorCode::kConfiguration,
              "unknown exclusion policy '" + std::string(text) + "' (none, exclude_exact_duplicate)");
}

ScoringMode parse_scoring_mode(std::string_view text) {
  if (text == "multiple_choice" || text == "mc") return ScoringMode::kMultipleChoice;
  if (text == "direct_answer" || text == "direct") return ScoringMode::kDirectAnswer;
  throw Error(ErrorCode::kConfiguration, "unknown scoring mode '" + std::string(text) + "'");
}

bool passes_filter(const EvalRecord& record, ModalityFilter filter) {
  switch (filter) {
    case ModalityFilter::kAll: return true;
    case ModalityFilter::kTextAndImage: return has_image(record);
    case ModalityFilter::kTextOnly: return !has_image(record);
  }
  return true;
}

std::string normalize_answer_text(std::string_view text) {
  std::string s = lowercase(trim(text));
  while (!s.empty() && std::string_view(".!?,;:\"'").find(s.back()) != std::string_view::npos) {
    s.pop_back();
  }
  std::string out;
  bool space = false;
  for (char c : trim(s)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      space = true;
      continue;
    }
    if (space && !out.empty()) out += ' ';
    space = false;
    out += c;
  }
  return out;
}

bool direct_answer_match(std::string_view raw_text, std::span<const std::string> references) {
  std::string_view candidate = raw_text;
  const std::string lowered = lowercase(raw_text);
  if (auto at = lowered.find("answer:"); at != std::string::npos) {
    candidate = raw_text.substr(at + 7);
  }
  candidate = candidate.substr(0, candidate.find('\n'));
  const std::string predicted = normalize_answer_text(candidate);
  if (predicted.empty()) return false;
  return std::any_of(references.begin(), references.end(),
                     [&](const std::string& ref) { return normalize_answer_text(ref) == predicted; });
}

EvalResult run_eval(const EvalInputs& inputs, const gateway::Gateway& gw, const EvalOptions& options) {
  if (options.k > 0 && (inputs.library == nullptr || inputs.query_embeddings == nullptr)) {
    throw Error(ErrorCode::kConfiguration, "k > 0 needs both a library and query embeddings");
  }
  if (options.k > 0 && inputs.query_embeddings->dim() != inputs.library->dim()) {
    throw Error(ErrorCode::kConfiguration, "query embeddings have dim " +
                                               std::to_string(inputs.query_embeddings->dim()) +
                                               " but the library has dim " + std::to_string(inputs.library->dim()));
  }

  std::vector<const EvalRecord*> selected;
  for (const auto& r : inputs.records) {
    if (passes_filter(r, options.filter)) selected.push_back(&r);
  }
  if (selected.empty()) {
    throw Error(ErrorCode::kEmptyPartition,
                "modality filter " + std::string(to_string(options.filter)) + " leaves no records");
  }

  EvalResult result;
  result.report.label = options.label.empty() ? "k=" + std::to_string(options.k) : options.label;
  result.report.k_used = options.k;
  result.report.manifest = make_manifest(inputs, gw, options);

  if (options.k > 0 && !inputs.query_embeddings->encoder_tag().empty() &&
      inputs.query_embeddings->encoder_tag() != inputs.library->encoder_tag()) {
    result.warnings.push_back("query encoder_tag '" + inputs.query_embeddings->encoder_tag() +
                              "' differs from library encoder_tag '" + inputs.library->encoder_tag() + "'");
  }

  std::optional<DuplicateQuestionIndex> duplicates;
  if (options.k > 0 && options.exclusion == ExclusionPolicy::kExcludeExactDuplicate) {
    duplicates.emplace(*inputs.library);
  }
  const bool attach_images = !gw.is_mock() && gw.endpoint().send_images;

  std::vector<Prepared> prepared(selected.size());
  std::vector<gateway::CompletionRequest> requests;
  for (std::size_t i = 0; i < selected.size(); ++i) {
    const EvalRecord& record = *selected[i];
    RecordTrace& trace = prepared[i].trace;
    trace.run_label = result.report.label;
    trace.k = options.k;
    trace.record_id = record.id;
    trace.gold_index = record.gold_index;

    context::ContextBlock block;
    if (options.k > 0) {
      try {
        const EmbeddingRecord* emb = inputs.query_embeddings->find(record.id);
        if (emb == nullptr) {
          throw Error(ErrorCode::kMissingField, "no query embedding for record '" + record.id + "'");
        }
        ModalityInput input = to_modality_input(*emb);
        if (has_image(record) && !input.image_embedding) {
          trace.warnings.push_back("image embedding unavailable; retrieving with text only");
        }
        const EmbeddingVector query = fuse_embeddings(input);
        std::span<const std::string> exclude;
        if (duplicates) exclude = duplicates->ids_for(record.question);
        ++trace.retriever_calls;
        index::RetrievedSet retrieved = index::top_k_retrieve(*inputs.library, query, options.k, exclude);
        retrieved.query_id = record.id;
        for (const auto& e : retrieved.entries) {
          trace.retrieved.push_back({e.item_id, e.similarity, e.rank});
        }
        block = context::assemble_context(retrieved, *inputs.library, options.context);
      } catch (const Error& e) {
        trace.error = e.what();
        continue;
      }
    }
    trace.context_chars = block.rendered.size();

    context::PromptEnvelope envelope;
    envelope.system_preamble = options.preamble;
    envelope.context = std::move(block);
    envelope.query_hint = record.hint;
    envelope.query_question = record.question;
    envelope.query_choices = record.choices;
    envelope.query_image_ref = record.image_ref;
    envelope.instruction_suffix = options.instruction;
    trace.prompt = context::render_prompt(envelope);

    if (attach_images && has_image(record)) {
      try {
        prepared[i].image = gateway::load_image_asset(inputs.image_root / *record.image_ref);
      } catch (const Error& e) {
        trace.warnings.push_back("image asset unavailable, sending text only: " + e.message());
      }
    }
    requests.push_back({record.id, trace.prompt, prepared[i].image});
  }

  const auto outcomes = gw.complete_all(requests);

  for (std::size_t i = 0; i < selected.size(); ++i) {
    const EvalRecord& record = *selected[i];
    RecordTrace& trace = prepared[i].trace;
    if (!trace.error) {
      const auto& outcome = outcomes.at(record.id);
      trace.attempts = outcome.attempts;
      if (outcome.completion) {
        trace.raw_completion = outcome.completion->raw_text;
        trace.extraction = gateway::extract_answer(trace.raw_completion, record.choices);
        if (options.scoring == ScoringMode::kMultipleChoice) {
          trace.correct = trace.extraction.choice_index == record.gold_index;
        } else if (record.direct_answers.empty()) {
          trace.error = "record has no reference answers for direct-answer scoring";
        } else {
          trace.correct = direct_answer_match(trace.raw_completion, record.direct_answers);
        }
      } else {
        trace.error = outcome.error_message;
      }
    }
    for (Category c : categories_of(record)) {
      auto& cell = result.report.cell(c);
      ++cell.total;
      if (trace.correct) ++cell.correct;
    }
    result.traces.push_back(std::move(trace));
  }

  std::sort(result.traces.begin(), result.traces.end(),
            [](const RecordTrace& a, const RecordTrace& b) { return a.record_id < b.record_id; });
  return result;
}

std::vector<EvalResult> run_k_sweep(const EvalInputs& inputs, const gateway::Gateway& gw,
                                    std::span<const std::size_t> k_values, const EvalOptions& options) {
  if (k_values.empty()) {
    throw Error(ErrorCode::kConfiguration, "k sweep needs at least one k");
  }
  EvalInputs shared = inputs;
  if (shared.library != nullptr && shared.library_hash.empty()) {
    shared.library_hash = index::library_fingerprint(*shared.library);
  }
  std::vector<EvalResult> out;
  out.reserve(k_values.size());
  for (std::size_t k : k_values) {
    EvalOptions run = options;
    run.k = k;
    run.label = "k=" + std::to_string(k);
    out.push_back(run_eval(shared, gw, run));
  }
  return out;
}

std::array<EvalResult, 3> run_modality_ablation(const EvalInputs& inputs, const gateway::Gateway& gw,
                                                const EvalOptions& options) {
  EvalInputs shared = inputs;
  if (shared.library != nullptr && shared.library_hash.empty()) {
    shared.library_hash = index::library_fingerprint(*shared.library);
  }
  auto run_with = [&](ModalityFilter filter) {
    EvalOptions run = options;
    run.filter = filter;
    run.label = std::string(to_string(filter));
    return run_eval(shared, gw, run);
  };
  return {run_with(ModalityFilter::kAll), run_with(ModalityFilter::kTextAndImage),
          run_with(ModalityFilter::kTextOnly)};
}

std::string trace_to_json_line(const RecordTrace& t) {
  json retrieved = json::array();
  for (const auto& r : t.retrieved) {
    retrieved.push_back({{"id", r.id}, {"similarity", r.similarity}, {"rank", r.rank}});
  }
  json extraction = {{"method", std::string(gateway::to_string(t.extraction.method))},
                     {"choice_index", t.extraction.choice_index ? json(*t.extraction.choice_index) : json(nullptr)},
                     {"note", t.extraction.note}};
  json line = {
      {"run", t.run_label},
      {"k", t.k},
      {"id", t.record_id},
      {"retriever_calls", t.retriever_calls},
      {"retrieved", std::move(retrieved)},
      {"context_chars", t.context_chars},
      {"prompt", t.prompt},
      {"raw_completion", t.raw_completion},
      {"attempts", t.attempts},
      {"extraction", std::move(extraction)},
      {"gold_index", t.gold_index},
      {"correct", t.correct},
      {"error", t.error ? json(*t.error) : json(nullptr)},
      {"warnings", t.warnings},
  };
  return line.dump();
}

void write_traces(const std::filesystem::path& path, std::span<const EvalResult> results) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "cannot open trace file " + path.string());
  }
  for (const auto& result : results) {
    for (const auto& trace : result.traces) {
      out << trace_to_json_line(trace) << '\n';
    }
  }
  if (!out) {
    throw Error(ErrorCode::kIoFailure, "write to " + path.string() + " failed");
  }
}

}  // namespace rmr::harness
