#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "rmr/error.hpp"

namespace rmr::gateway {

/// Where completions come from. `base_url` is either an OpenAI-style chat
/// completions root such as "http://localhost:8000/v1", or one of the in-tree
/// mocks:
///
///   mock:fixed:<letter>   always answers "The answer is (<letter>)."
///   mock:echo-top1        answers with the letter of the first worked
///                         example's answer found in the prompt
struct ModelEndpoint {
  std::string base_url;
  std::string model_name;
  std::string api_key_env = "OPENAI_API_KEY";
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 2;
  float temperature = 0.0f;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::milliseconds max_backoff{8'000};
  std::size_t max_in_flight = 4;
  bool send_images = true;
};

/// Throws kConfiguration when the endpoint cannot be used as given.
void validate_endpoint(const ModelEndpoint& endpoint);

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct Completion {
  std::string raw_text;
  std::chrono::milliseconds latency{0};
  int attempts = 1;
  std::optional<Usage> usage;
};

struct ImageAsset {
  std::string mime_type;
  std::string bytes;
};

/// Reads an image file and guesses its MIME type from the extension.
/// Errors: kIoFailure.
ImageAsset load_image_asset(const std::filesystem::path& path);

/// Failure after the retry budget is spent (or a non-retryable failure).
class EndpointError : public Error {
 public:
  EndpointError(ErrorCode code, const std::string& message, int attempts);
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

struct CompletionRequest {
  std::string id;
  std::string prompt;
  std::optional<ImageAsset> image;
};

struct CompletionOutcome {
  std::optional<Completion> completion;
  std::optional<ErrorCode> error;
  std::string error_message;
  int attempts = 0;
};

class Model;

/// Shareable across threads. Transient failures (transport errors, 408, 429,
/// 5xx) are retried with exponential backoff; attempts never exceed
/// max_retries + 1.
class Gateway {
 public:
  explicit Gateway(ModelEndpoint endpoint);
  ~Gateway();
  Gateway(Gateway&&) noexcept;
  Gateway& operator=(Gateway&&) noexcept;

  const ModelEndpoint& endpoint() const noexcept { return endpoint_; }
  bool is_mock() const noexcept;

  /// Throws EndpointError (kTimeout, kAuthFailure, kRateLimited,
  /// kMalformedResponse, kEndpointFailure).
  Completion complete(const std::string& prompt, const std::optional<ImageAsset>& image = std::nullopt) const;

  /// Runs up to max_in_flight requests concurrently. Results are keyed by
  /// request id; failures are reported per request rather than thrown.
  std::map<std::string, CompletionOutcome> complete_all(const std::vector<CompletionRequest>& requests) const;

 private:
  ModelEndpoint endpoint_;
  std::unique_ptr<Model> model_;
};

}  // namespace rmr::gateway
