#include "rmr/gateway.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <string_view>
#include <thread>
#include <variant>

namespace rmr::gateway {

using json = nlohmann::json;
using std::chrono::milliseconds;

class Model {
 public:
  virtual ~Model() = default;
  virtual bool is_mock() const = 0;
  virtual Completion complete(const std::string& prompt, const std::optional<ImageAsset>& image) const = 0;
};

namespace {

constexpr std::string_view kMockScheme = "mock:";

std::string answer_sentence(char letter) { return std::string("The answer is (") + letter + ")."; }

class FixedMock final : public Model {
 public:
  explicit FixedMock(char letter) : letter_(letter) {}
  bool is_mock() const override { return true; }
  Completion complete(const std::string&, const std::optional<ImageAsset>&) const override {
    return Completion{answer_sentence(letter_), milliseconds(0), 1, std::nullopt};
  }

 private:
  char letter_;
};

// Looks for the first "Answer: (X)" line, i.e. the answer of the first worked
// example in the prompt. The query block itself never carries such a line.
class EchoTop1Mock final : public Model {
 public:
  bool is_mock() const override { return true; }
  Completion complete(const std::string& prompt, const std::optional<ImageAsset>&) const override {
    static constexpr std::string_view kPrefix = "Answer: (";
    std::size_t line_start = 0;
    while (line_start < prompt.size()) {
      std::size_t line_end = prompt.find('\n', line_start);
      if (line_end == std::string::npos) line_end = prompt.size();
      std::string_view line(prompt.data() + line_start, line_end - line_start);
      if (line.size() >= kPrefix.size() + 2 && line.substr(0, kPrefix.size()) == kPrefix) {
        const char letter = line[kPrefix.size()];
        if (letter >= 'A' && letter <= 'Z' && line[kPrefix.size() + 1] == ')') {
          return Completion{answer_sentence(letter), milliseconds(0), 1, std::nullopt};
        }
      }
      line_start = line_end + 1;
    }
    return Completion{"I cannot determine the answer from the information given.", milliseconds(0), 1,
                      std::nullopt};
  }
};

struct AttemptFailure {
  ErrorCode code;
  std::string message;
  bool retryable;
  std::optional<milliseconds> retry_after;
};

struct SplitUrl {
  std::string scheme_host_port;
  std::string base_path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    return {url, ""};
  }
  std::string path = url.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {url.substr(0, path_start), path};
}

std::string extract_content(const json& message_content) {
  if (message_content.is_string()) {
    return message_content.get<std::string>();
  }
  if (message_content.is_array()) {
    std::string out;
    for (const auto& part : message_content) {
      if (part.value("type", "") == "text") out += part.at("text").get<std::string>();
    }
    return out;
  }
  throw std::runtime_error("message content is neither a string nor a list of parts");
}

std::optional<milliseconds> parse_retry_after(const httplib::Result& res) {
  if (!res->has_header("Retry-After")) return std::nullopt;
  const std::string value = res->get_header_value("Retry-After");
  char* end = nullptr;
  const double seconds = std::strtod(value.c_str(), &end);
  if (end == value.c_str() || seconds < 0) return std::nullopt;
  return milliseconds(static_cast<long>(seconds * 1000.0));
}

class HttpChatModel final : public Model {
 public:
  explicit HttpChatModel(ModelEndpoint endpoint) : endpoint_(std::move(endpoint)), url_(split_url(endpoint_.base_url)) {}

  bool is_mock() const override { return false; }

  Completion complete(const std::string& prompt, const std::optional<ImageAsset>& image) const override {
    const std::string body = request_body(prompt, image).dump();
    const auto start = std::chrono::steady_clock::now();
    const int max_attempts = endpoint_.max_retries + 1;
    for (int attempt = 1;; ++attempt) {
      std::variant<Completion, AttemptFailure> result = attempt_once(body);
      if (auto* done = std::get_if<Completion>(&result)) {
        done->attempts = attempt;
        done->latency = std::chrono::duration_cast<milliseconds>(std::chrono::steady_clock::now() - start);
        return std::move(*done);
      }
      auto& failure = std::get<AttemptFailure>(result);
      if (!failure.retryable || attempt >= max_attempts) {
        throw EndpointError(failure.code,
                            failure.message + " (after " + std::to_string(attempt) + " attempt" +
                                (attempt == 1 ? "" : "s") + ")",
                            attempt);
      }
      std::this_thread::sleep_for(backoff(attempt, failure.retry_after));
    }
  }

 private:
  milliseconds backoff(int attempt, std::optional<milliseconds> retry_after) const {
    if (retry_after) return std::min(*retry_after, endpoint_.max_backoff);
    milliseconds delay = endpoint_.initial_backoff;
    for (int i = 1; i < attempt && delay < endpoint_.max_backoff; ++i) delay *= 2;
    return std::min(delay, endpoint_.max_backoff);
  }

  json request_body(const std::string& prompt, const std::optional<ImageAsset>& image) const {
    json content;
    if (image && endpoint_.send_images) {
      const std::string data_url =
          "data:" + image->mime_type + ";base64," + httplib::detail::base64_encode(image->bytes);
      content = json::array({
          {{"type", "text"}, {"text", prompt}},
          {{"type", "image_url"}, {"image_url", {{"url", data_url}}}},
      });
    } else {
      content = prompt;
    }
    return json{
        {"model", endpoint_.model_name},
        {"temperature", endpoint_.temperature},
        {"messages", json::array({{{"role", "user"}, {"content", std::move(content)}}})},
    };
  }

  std::variant<Completion, AttemptFailure> attempt_once(const std::string& body) const {
    httplib::Client client(url_.scheme_host_port);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    httplib::Headers headers;
    if (!endpoint_.api_key_env.empty()) {
      if (const char* key = std::getenv(endpoint_.api_key_env.c_str()); key != nullptr && *key != '\0') {
        headers.emplace("Authorization", std::string("Bearer ") + key);
      }
    }

    auto res = client.Post(url_.base_path + "/chat/completions", headers, body, "application/json");
    if (!res) {
      return AttemptFailure{ErrorCode::kTimeout,
                            "endpoint " + endpoint_.base_url + " unreachable or timed out: " +
                                httplib::to_string(res.error()),
                            true, std::nullopt};
    }
    const int status = res->status;
    if (status == 401 || status == 403) {
      return AttemptFailure{ErrorCode::kAuthFailure, "endpoint rejected credentials (HTTP " + std::to_string(status) + ")",
                            false, std::nullopt};
    }
    if (status == 429) {
      return AttemptFailure{ErrorCode::kRateLimited, "endpoint rate limited the request", true, parse_retry_after(res)};
    }
    if (status == 408) {
      return AttemptFailure{ErrorCode::kTimeout, "endpoint reported a request timeout", true, std::nullopt};
    }
    if (status >= 500) {
      return AttemptFailure{ErrorCode::kEndpointFailure, "endpoint returned HTTP " + std::to_string(status), true,
                            parse_retry_after(res)};
    }
    if (status != 200) {
      return AttemptFailure{ErrorCode::kEndpointFailure, "endpoint returned HTTP " + std::to_string(status) + ": " + res->body,
                            false, std::nullopt};
    }

    try {
      const json reply = json::parse(res->body);
      Completion out;
      out.raw_text = extract_content(reply.at("choices").at(0).at("message").at("content"));
      if (reply.contains("usage") && reply["usage"].is_object()) {
        const auto& u = reply["usage"];
        out.usage = Usage{u.value("prompt_tokens", 0L), u.value("completion_tokens", 0L)};
      }
      return out;
    } catch (const std::exception& e) {
      return AttemptFailure{ErrorCode::kMalformedResponse, std::string("cannot read completion: ") + e.what(), false,
                            std::nullopt};
    }
  }

  ModelEndpoint endpoint_;
  SplitUrl url_;
};

std::unique_ptr<Model> make_model(const ModelEndpoint& endpoint) {
  const std::string& url = endpoint.base_url;
  if (url.rfind(kMockScheme, 0) == 0) {
    const std::string spec = url.substr(kMockScheme.size());
    if (spec == "echo-top1") {
      return std::make_unique<EchoTop1Mock>();
    }
    if (spec.size() == 7 && spec.rfind("fixed:", 0) == 0 && spec[6] >= 'A' && spec[6] <= 'Z') {
      return std::make_unique<FixedMock>(spec[6]);
    }
    throw Error(ErrorCode::kConfiguration, "unknown mock endpoint '" + url + "'");
  }
  return std::make_unique<HttpChatModel>(endpoint);
}

}  // namespace

void validate_endpoint(const ModelEndpoint& endpoint) {
  const std::string& url = endpoint.base_url;
  if (url.empty()) {
    throw Error(ErrorCode::kConfiguration, "endpoint URL is empty");
  }
  if (url.rfind(kMockScheme, 0) != 0 && url.rfind("http://", 0) != 0 && url.rfind("https://", 0) != 0) {
    throw Error(ErrorCode::kConfiguration, "endpoint URL must start with http://, https:// or mock:");
  }
  if (endpoint.max_retries < 0) {
    throw Error(ErrorCode::kConfiguration, "max_retries must be non-negative");
  }
  if (endpoint.timeout.count() <= 0) {
    throw Error(ErrorCode::kConfiguration, "timeout must be positive");
  }
  if (endpoint.max_in_flight == 0) {
    throw Error(ErrorCode::kConfiguration, "max_in_flight must be at least 1");
  }
  if (endpoint.initial_backoff.count() < 0 || endpoint.max_backoff.count() < 0) {
    throw Error(ErrorCode::kConfiguration, "backoff durations must be non-negative");
  }
  if (url.rfind(kMockScheme, 0) == 0) {
    make_model(endpoint);
  }
}

ImageAsset load_image_asset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kIoFailure, "cannot open image " + path.string());
  }
  ImageAsset asset;
  asset.bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".jpg" || ext == ".jpeg") {
    asset.mime_type = "image/jpeg";
  } else if (ext == ".gif") {
    asset.mime_type = "image/gif";
  } else if (ext == ".webp") {
    asset.mime_type = "image/webp";
  } else {
    asset.mime_type = "image/png";
  }
  return asset;
}

EndpointError::EndpointError(ErrorCode code, const std::string& message, int attempts)
    : Error(code, message), attempts_(attempts) {}

Gateway::Gateway(ModelEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  validate_endpoint(endpoint_);
  model_ = make_model(endpoint_);
}

Gateway::~Gateway() = default;
Gateway::Gateway(Gateway&&) noexcept = default;
Gateway& Gateway::operator=(Gateway&&) noexcept = default;

bool Gateway::is_mock() const noexcept { return model_->is_mock(); }

Completion Gateway::complete(const std::string& prompt, const std::optional<ImageAsset>& image) const {
  return model_->complete(prompt, image);
}

std::map<std::string, CompletionOutcome> Gateway::complete_all(const std::vector<CompletionRequest>& requests) const {
  std::map<std::string, CompletionOutcome> results;
  for (const auto& request : requests) {
    if (!results.emplace(request.id, CompletionOutcome{}).second) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate request id '" + request.id + "'");
    }
  }

  std::vector<CompletionOutcome> outcomes(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      auto& outcome = outcomes[i];
      try {
        outcome.completion = complete(requests[i].prompt, requests[i].image);
        outcome.attempts = outcome.completion->attempts;
      } catch (const EndpointError& e) {
        outcome.error = e.code();
        outcome.error_message = e.what();
        outcome.attempts = e.attempts();
      } catch (const Error& e) {
        outcome.error = e.code();
        outcome.error_message = e.what();
      }
    }
  };

  const std::size_t workers = std::min(endpoint_.max_in_flight, requests.size());
  if (workers <= 1 || is_mock()) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < requests.size(); ++i) {
    results[requests[i].id] = std::move(outcomes[i]);
  }
  return results;
}

}  // namespace rmr::gateway
