// rmr: build retrieval indexes, query them, and run offline or live
// evaluations against a chat-completion endpoint.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "json_config.hpp"
#include "rmr/context.hpp"
#include "rmr/dataset.hpp"
#include "rmr/error.hpp"
#include "rmr/eval.hpp"
#include "rmr/extract.hpp"
#include "rmr/gateway.hpp"
#include "rmr/index_io.hpp"
#include "rmr/ingest.hpp"
#include "rmr/interchange.hpp"
#include "rmr/report.hpp"
#include "rmr/retrieval.hpp"

namespace fs = std::filesystem;

namespace rmr::tools {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfiguration = 2;
constexpr int kExitData = 3;
constexpr int kExitEndpoint = 4;

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kConfiguration:
      return kExitConfiguration;
    case ErrorCategory::kData:
      return kExitData;
    case ErrorCategory::kEndpoint:
      return kExitEndpoint;
  }
  return kExitData;
}

[[noreturn]] void config_error(const std::string& message) { throw Error(ErrorCode::kConfiguration, message); }

void warn(const std::string& message) { std::cerr << "warning: " << message << "\n"; }

void warn_all(const std::vector<std::string>& messages) {
  for (const auto& m : messages) warn(m);
}

struct EndpointFlags {
  std::string url;
  std::string model = "default";
  std::string api_key_env = "OPENAI_API_KEY";
  long timeout_ms = 60'000;
  int max_retries = 2;
  float temperature = 0.0f;
  std::size_t max_in_flight = 4;
  bool no_images = false;
};

void add_endpoint_flags(CLI::App* cmd, EndpointFlags& f) {
  cmd->add_option("--endpoint", f.url, "Chat-completions base URL, or mock:fixed:<letter> / mock:echo-top1");
  cmd->add_option("--model", f.model, "Model name sent with each request")->capture_default_str();
  cmd->add_option("--api-key-env", f.api_key_env, "Environment variable holding the API key")->capture_default_str();
  cmd->add_option("--timeout-ms", f.timeout_ms, "Per-request timeout")->capture_default_str();
  cmd->add_option("--max-retries", f.max_retries, "Retries after the first attempt")->capture_default_str();
  cmd->add_option("--temperature", f.temperature, "Sampling temperature")->capture_default_str();
  cmd->add_option("--max-in-flight", f.max_in_flight, "Concurrent requests")->capture_default_str();
  cmd->add_flag("--no-images", f.no_images, "Never attach query images to requests");
}

gateway::Gateway make_gateway(const EndpointFlags& f) {
  if (f.url.empty()) config_error("--endpoint is required");
  gateway::ModelEndpoint ep;
  ep.base_url = f.url;
  ep.model_name = f.model;
  ep.api_key_env = f.api_key_env;
  ep.timeout = std::chrono::milliseconds(f.timeout_ms);
  ep.max_retries = f.max_retries;
  ep.temperature = f.temperature;
  ep.max_in_flight = f.max_in_flight;
  ep.send_images = !f.no_images;
  gateway::validate_endpoint(ep);
  return gateway::Gateway(std::move(ep));
}

context::ContextOptions context_options(std::size_t token_budget, bool most_similar_last) {
  context::ContextOptions opts;
  if (token_budget > 0) opts.token_budget = token_budget;
  opts.most_similar_last = most_similar_last;
  return opts;
}

// ---------------------------------------------------------------------------
// Query embeddings for retrieve / answer.

struct QueryFlags {
  std::string embedding_file;
  std::string embedder;
};

void add_query_flags(CLI::App* cmd, QueryFlags& f) {
  cmd->add_option("--query-embedding", f.embedding_file, "File holding one embedding record for the query");
  cmd->add_option("--embedder", f.embedder,
                  "Command that prints an embedding record; called with --text and --image");
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string run_embedder(const std::string& command, const std::string& text, const std::string& image) {
  std::string cmd = command;
  if (!text.empty()) cmd += " --text " + shell_quote(text);
  if (!image.empty()) cmd += " --image " + shell_quote(image);
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) throw Error(ErrorCode::kIoFailure, "cannot start embedder: " + command);
  std::string output;
  std::array<char, 4096> buf{};
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe.get())) > 0) output.append(buf.data(), n);
  const int status = pclose(pipe.release());
  if (status != 0) {
    throw Error(ErrorCode::kIoFailure, "embedder exited with status " + std::to_string(status) + ": " + command);
  }
  return output;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoFailure, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

EmbeddingVector query_vector(const QueryFlags& f, const KnowledgeLibrary& library, const std::string& text,
                             const std::string& image) {
  std::string payload;
  if (!f.embedding_file.empty()) {
    payload = read_file(f.embedding_file);
  } else if (!f.embedder.empty()) {
    payload = run_embedder(f.embedder, text, image);
  } else {
    config_error("retrieval needs --query-embedding or --embedder");
  }
  std::string tag;
  const harness::EmbeddingRecord record = harness::parse_embedding_record(payload, &tag);
  if (!tag.empty() && tag != library.encoder_tag()) {
    warn("query encoder_tag '" + tag + "' differs from the index's '" + library.encoder_tag() + "'");
  }
  if (!image.empty() && !record.image_embedding) {
    warn("query image has no embedding; retrieving with text only");
  }
  return fuse_embeddings(harness::to_modality_input(record));
}

// ---------------------------------------------------------------------------
// build

struct BuildFlags {
  std::string dataset;
  std::string embeddings;
  std::string out;
  std::string format = "scienceqa_json";
  std::string split;
};

int cmd_build(const BuildFlags& f) {
  if (f.dataset.empty() || f.embeddings.empty() || f.out.empty()) {
    config_error("build needs --dataset, --embeddings and --out");
  }
  const auto format = harness::parse_dataset_format(f.format);
  harness::DatasetOptions opts;
  if (!f.split.empty()) opts.split = f.split;

  const auto records = harness::load_dataset(f.dataset, format, opts);
  const auto embeddings = harness::load_embeddings(f.embeddings);
  auto ingest = harness::ingest_library(records, embeddings);
  warn_all(ingest.warnings);
  index::save_index(ingest.library, f.out);

  std::cout << "items: " << ingest.library.count() << "\n"
            << "dim: " << ingest.library.dim() << "\n"
            << "encoder_tag: " << ingest.library.encoder_tag() << "\n"
            << "skipped: " << ingest.skipped_records << "\n"
            << "fingerprint: " << index::library_fingerprint(ingest.library) << "\n"
            << "index: " << f.out << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// retrieve

struct RetrieveFlags {
  std::string index;
  std::string query_text;
  std::string query_image;
  std::size_t k = 3;
  std::vector<std::string> exclude;
  std::size_t token_budget = 0;
  bool most_similar_last = false;
  QueryFlags query;
};

int cmd_retrieve(const RetrieveFlags& f) {
  if (f.index.empty()) config_error("retrieve needs --index");
  if (f.query_text.empty() && f.query_image.empty()) config_error("retrieve needs --query-text or --query-image");
  if (f.k == 0) config_error("-k must be at least 1 for retrieve");

  const auto library = index::load_index(f.index);
  const auto query = query_vector(f.query, library, f.query_text, f.query_image);
  const auto retrieved = index::top_k_retrieve(library, query, f.k, f.exclude);
  const auto block = context::assemble_context(retrieved, library, context_options(f.token_budget, f.most_similar_last));

  std::cout << "rank\tid\tsimilarity\n";
  for (const auto& e : retrieved.entries) {
    char sim[32];
    std::snprintf(sim, sizeof(sim), "%.6f", static_cast<double>(e.similarity));
    std::cout << e.rank << "\t" << e.item_id << "\t" << sim << "\n";
  }
  if (!block.rendered.empty()) std::cout << "\n" << block.rendered;
  return kExitOk;
}

// ---------------------------------------------------------------------------
// answer

struct AnswerFlags {
  std::string index;
  std::string question;
  std::string image;
  std::string hint;
  std::vector<std::string> choices;
  std::size_t k = 3;
  std::size_t token_budget = 0;
  bool most_similar_last = false;
  QueryFlags query;
  EndpointFlags endpoint;
};

int cmd_answer(const AnswerFlags& f) {
  if (f.question.empty()) config_error("answer needs --question");
  if (f.k > 0 && f.index.empty()) config_error("answer needs --index unless -k 0");
  auto gw = make_gateway(f.endpoint);

  context::PromptEnvelope envelope;
  envelope.query_question = f.question;
  envelope.query_choices = f.choices;
  if (!f.hint.empty()) envelope.query_hint = f.hint;
  if (!f.image.empty()) envelope.query_image_ref = f.image;

  if (f.k > 0) {
    const auto library = index::load_index(f.index);
    const auto query = query_vector(f.query, library, f.question, f.image);
    const auto retrieved = index::top_k_retrieve(library, query, f.k);
    envelope.context =
        context::assemble_context(retrieved, library, context_options(f.token_budget, f.most_similar_last));
  }
  const std::string prompt = context::render_prompt(envelope);

  std::optional<gateway::ImageAsset> image;
  if (!f.image.empty() && !gw.is_mock() && gw.endpoint().send_images) {
    image = gateway::load_image_asset(f.image);
  }
  const auto completion = gw.complete(prompt, image);
  std::cout << completion.raw_text << "\n";

  if (!f.choices.empty()) {
    const auto extracted = gateway::extract_answer(completion.raw_text, f.choices);
    std::cout << "\nextracted: ";
    if (extracted.choice_index) {
      std::cout << render_answer(f.choices, *extracted.choice_index);
    } else {
      std::cout << "(none)";
    }
    std::cout << " [" << gateway::to_string(extracted.method) << "]\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / ablate

struct EvalFlags {
  std::string index;
  std::string dataset;
  std::string format = "scienceqa_json";
  std::string split;
  std::string query_embeddings;
  std::string image_root;
  std::size_t k = 3;
  std::string report;
  std::string report_format;
  std::string trace;
  std::string modality = "all";
  std::string exclusion = "none";
  std::string scoring = "multiple_choice";
  std::size_t token_budget = 0;
  bool most_similar_last = false;
  std::uint64_t seed = 0;
  EndpointFlags endpoint;
  // ablate only
  std::string mode;
  std::vector<std::size_t> k_values{1, 2, 3, 4, 5};
};

void add_eval_flags(CLI::App* cmd, EvalFlags& f) {
  cmd->add_option("--index", f.index, "Index built by `rmr build` (not needed when every k is 0)");
  cmd->add_option("--dataset", f.dataset, "Evaluation dataset");
  cmd->add_option("--format", f.format, "Dataset format: scienceqa_json or generic_jsonl")->capture_default_str();
  cmd->add_option("--split", f.split, "ScienceQA split to keep");
  cmd->add_option("--query-embeddings", f.query_embeddings, "Embedding interchange file for the evaluation queries");
  cmd->add_option("--image-root", f.image_root, "Directory image refs are resolved against (default: dataset dir)");
  cmd->add_option("-k", f.k, "Examples retrieved per query; 0 disables retrieval")->capture_default_str();
  cmd->add_option("--report", f.report, "Report output path");
  cmd->add_option("--report-format", f.report_format, "csv, json or markdown (default: from the report extension)");
  cmd->add_option("--trace", f.trace, "Per-record JSONL trace (default: next to the report)");
  cmd->add_option("--modality", f.modality, "Record filter: all, ti or t")->capture_default_str();
  cmd->add_option("--exclusion", f.exclusion, "none or exclude_exact_duplicate")->capture_default_str();
  cmd->add_option("--scoring", f.scoring, "multiple_choice or direct_answer")->capture_default_str();
  cmd->add_option("--token-budget", f.token_budget, "Context token budget; 0 means unlimited")->capture_default_str();
  cmd->add_flag("--most-similar-last", f.most_similar_last, "Put the most similar example last");
  cmd->add_option("--seed", f.seed, "Recorded in the run manifest")->capture_default_str();
  add_endpoint_flags(cmd, f.endpoint);
}

struct EvalSetup {
  std::vector<harness::EvalRecord> records;
  std::optional<KnowledgeLibrary> library;
  std::optional<harness::EmbeddingFile> query_embeddings;
  harness::EvalOptions options;
  harness::ReportFormat report_format = harness::ReportFormat::kCsv;
  fs::path trace_path;
  fs::path image_root;

  harness::EvalInputs inputs() const {
    harness::EvalInputs in;
    in.records = records;
    in.library = library ? &*library : nullptr;
    in.query_embeddings = query_embeddings ? &*query_embeddings : nullptr;
    in.image_root = image_root;
    return in;
  }
};

EvalSetup prepare_eval(const EvalFlags& f, bool needs_retrieval) {
  if (f.dataset.empty()) config_error("--dataset is required");
  if (f.report.empty()) config_error("--report is required");

  EvalSetup s;
  const auto format = harness::parse_dataset_format(f.format);
  s.report_format =
      f.report_format.empty() ? harness::report_format_for(f.report) : harness::parse_report_format(f.report_format);
  s.options.k = f.k;
  s.options.filter = harness::parse_modality_filter(f.modality);
  s.options.exclusion = harness::parse_exclusion_policy(f.exclusion);
  s.options.scoring = harness::parse_scoring_mode(f.scoring);
  s.options.context = context_options(f.token_budget, f.most_similar_last);
  s.options.seed = f.seed;
  if (needs_retrieval && (f.index.empty() || f.query_embeddings.empty())) {
    config_error("retrieval (k > 0) needs --index and --query-embeddings");
  }
  s.trace_path = f.trace.empty() ? fs::path(f.report).replace_extension(".trace.jsonl") : fs::path(f.trace);
  s.image_root = f.image_root.empty() ? fs::path(f.dataset).parent_path() : fs::path(f.image_root);

  harness::DatasetOptions dopts;
  if (!f.split.empty()) dopts.split = f.split;
  s.records = harness::load_dataset(f.dataset, format, dopts);
  if (needs_retrieval) {
    s.library = index::load_index(f.index);
    s.query_embeddings = harness::load_embeddings(f.query_embeddings);
  }
  return s;
}

void finish(const EvalFlags& f, const EvalSetup& s, std::vector<harness::EvalResult>& results) {
  std::vector<harness::CategoryReport> reports;
  for (const auto& r : results) {
    warn_all(r.warnings);
    reports.push_back(r.report);
  }
  harness::emit_report(reports, s.report_format, f.report);
  harness::write_traces(s.trace_path, results);
  std::cout << harness::render_report(reports, harness::ReportFormat::kMarkdown);
}

int cmd_eval(const EvalFlags& f) {
  auto gw = make_gateway(f.endpoint);
  auto setup = prepare_eval(f, f.k > 0);
  std::vector<harness::EvalResult> results;
  results.push_back(harness::run_eval(setup.inputs(), gw, setup.options));
  finish(f, setup, results);
  return kExitOk;
}

int cmd_ablate(const EvalFlags& f) {
  auto gw = make_gateway(f.endpoint);
  std::vector<harness::EvalResult> results;
  if (f.mode == "k") {
    if (f.k_values.empty()) config_error("--k-values needs at least one value");
    bool any_retrieval = false;
    for (std::size_t k : f.k_values) any_retrieval = any_retrieval || k > 0;
    auto setup = prepare_eval(f, any_retrieval);
    results = harness::run_k_sweep(setup.inputs(), gw, f.k_values, setup.options);
    finish(f, setup, results);
  } else if (f.mode == "modality") {
    auto setup = prepare_eval(f, f.k > 0);
    auto runs = harness::run_modality_ablation(setup.inputs(), gw, setup.options);
    results.assign(std::make_move_iterator(runs.begin()), std::make_move_iterator(runs.end()));
    finish(f, setup, results);
  } else {
    config_error("--mode must be k or modality");
  }
  return kExitOk;
}

int run(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented multimodal reasoning: index, retrieve, answer, evaluate"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON config; nested objects hold per-subcommand values, flags win");

  BuildFlags build;
  auto* build_cmd = app.add_subcommand("build", "Build an index from a dataset and its embeddings");
  build_cmd->add_option("--dataset", build.dataset, "Dataset holding the library triplets");
  build_cmd->add_option("--embeddings", build.embeddings, "Embedding interchange file for the dataset");
  build_cmd->add_option("--out", build.out, "Index output path");
  build_cmd->add_option("--format", build.format, "scienceqa_json or generic_jsonl")->capture_default_str();
  build_cmd->add_option("--split", build.split, "ScienceQA split to keep (e.g. train)");

  RetrieveFlags retrieve;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Print the top-k library examples for a query");
  retrieve_cmd->add_option("--index", retrieve.index, "Index file");
  retrieve_cmd->add_option("--query-text", retrieve.query_text, "Query text");
  retrieve_cmd->add_option("--query-image", retrieve.query_image, "Query image");
  retrieve_cmd->add_option("-k", retrieve.k, "Examples to retrieve")->capture_default_str();
  retrieve_cmd->add_option("--exclude", retrieve.exclude, "Item ids to leave out");
  retrieve_cmd->add_option("--token-budget", retrieve.token_budget, "Context token budget; 0 means unlimited");
  retrieve_cmd->add_flag("--most-similar-last", retrieve.most_similar_last, "Put the most similar example last");
  add_query_flags(retrieve_cmd, retrieve.query);

  AnswerFlags answer;
  auto* answer_cmd = app.add_subcommand("answer", "Answer one question with retrieved examples as context");
  answer_cmd->add_option("--index", answer.index, "Index file");
  answer_cmd->add_option("--question", answer.question, "Question text");
  answer_cmd->add_option("--image", answer.image, "Question image");
  answer_cmd->add_option("--hint", answer.hint, "Text context for the question");
  answer_cmd->add_option("--choice", answer.choices, "Answer option; repeat in order");
  answer_cmd->add_option("-k", answer.k, "Examples to retrieve; 0 disables retrieval")->capture_default_str();
  answer_cmd->add_option("--token-budget", answer.token_budget, "Context token budget; 0 means unlimited");
  answer_cmd->add_flag("--most-similar-last", answer.most_similar_last, "Put the most similar example last");
  add_query_flags(answer_cmd, answer.query);
  add_endpoint_flags(answer_cmd, answer.endpoint);

  EvalFlags eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a dataset and write a per-category report");
  add_eval_flags(eval_cmd, eval);

  EvalFlags ablate;
  auto* ablate_cmd = app.add_subcommand("ablate", "Sweep k or compare modality subsets");
  add_eval_flags(ablate_cmd, ablate);
  ablate_cmd->add_option("--mode", ablate.mode, "k or modality");
  ablate_cmd->add_option("--k-values", ablate.k_values, "k values for --mode k")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfiguration;
  }

  if (*build_cmd) return cmd_build(build);
  if (*retrieve_cmd) return cmd_retrieve(retrieve);
  if (*answer_cmd) return cmd_answer(answer);
  if (*eval_cmd) return cmd_eval(eval);
  if (*ablate_cmd) return cmd_ablate(ablate);
  return kExitConfiguration;
}

}  // namespace
}  // namespace rmr::tools

int main(int argc, char** argv) {
  try {
    return rmr::tools::run(argc, argv);
  } catch (const rmr::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rmr::tools::exit_code_for(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return rmr::tools::kExitData;
  }
}
