#pragma once

#include "litharvest/query.hpp"
#include "litharvest/record.hpp"

#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace litharvest {

struct GenerationParams {
  int max_new_tokens = 32;
  double temperature = 0.6;
  double top_p = 0.9;
  bool sample = true;
  bool stop_at_end_token = true;

  // Throws std::invalid_argument when a bound is violated.
  void validate() const;
};

enum class Label { Relevant, Irrelevant, Unknown };

std::string_view label_name(Label label);
std::optional<Label> parse_label(std::string_view name);

inline constexpr std::string_view kPromptTemplateId = "zero-shot-keyword-frequency-v1";

struct GenerationRequest {
  std::string prompt;
  GenerationParams params;
  // The abstract/title being classified. In-process backends may use it;
  // it is never sent over the wire.
  std::string subject;
};

struct Generation {
  std::string text;
  std::string model_id;
};

// Network or server failure for a single request; retried, then recorded
// on the result as Unknown.
class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The backend cannot be reached at all; aborts the classification stage.
class BackendUnavailable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text-generation contract: request {prompt, params} -> {generated_text, model_id}.
// Implementations must accept concurrent calls.
class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  virtual Generation generate(const GenerationRequest& request) = 0;
  virtual std::string model_id() const = 0;
};

// Deterministic keyword rule: "Relevant" iff the subject satisfies the query
// and query terms occur at least twice in total, otherwise "Irrelevant".
class StubBackend : public GenerationBackend {
 public:
  explicit StubBackend(QueryExpr query);
  Generation generate(const GenerationRequest& request) override;
  std::string model_id() const override { return "stub-keyword-rule-v1"; }

 private:
  QueryExpr query_;
};

// POSTs {"prompt","max_new_tokens","temperature","top_p","sample"} as JSON to
// the endpoint and reads {"generated_text","model_id"}.
class HttpGenerationBackend : public GenerationBackend {
 public:
  explicit HttpGenerationBackend(std::string endpoint_url);
  Generation generate(const GenerationRequest& request) override;
  std::string model_id() const override;

 private:
  std::string origin_;
  std::string path_;
  mutable std::mutex mutex_;
  std::string last_model_id_;
};

nlohmann::json generation_request_body(const GenerationRequest& request);

struct ClassificationResult {
  std::size_t record_index = 0;
  Label label = Label::Unknown;
  std::string raw_output;
  std::string model_id;
  std::string prompt_digest;
  int attempts = 0;
  std::string error;

  friend bool operator==(const ClassificationResult&, const ClassificationResult&) = default;
};

nlohmann::json to_json(const ClassificationResult& r);
ClassificationResult classification_from_json(const nlohmann::json& j);

// Abstract when present and non-blank, otherwise the title.
std::string_view classification_text(const ArticleRecord& record);

// Four sections: the task with the query in generic syntax, each query term
// with its occurrence count in the text, the text itself, and the one-word
// answer constraint. Byte-stable for identical inputs.
std::string build_prompt(const QueryExpr& query, const ArticleRecord& record);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Negative forms win: "irrelevant" / "not relevant" / "unrelated" ->
// Irrelevant, then "relevant" / "related" -> Relevant, otherwise Unknown.
Label extract_label(std::string_view generated);

// Upper bound on stored raw output: 8 bytes per allowed new token.
std::size_t raw_output_limit(const GenerationParams& params);

struct ClassifyOptions {
  std::size_t parallelism = 4;
  // Extra generations after an Unknown label or a failed request.
  int retry_budget = 1;
};

// One result per record, in input order. At most `parallelism` requests
// are in flight. BackendUnavailable propagates; other per-record failures
// end as Unknown with the error recorded.
std::vector<ClassificationResult> classify_batch(std::span<const ArticleRecord> records, const QueryExpr& query,
                                                 GenerationBackend& backend, const GenerationParams& params,
                                                 const ClassifyOptions& options = {});

}  // namespace litharvest
