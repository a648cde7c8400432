#include "litharvest/classifier.hpp"

#include "litharvest/text.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <thread>

namespace litharvest {

void GenerationParams::validate() const {
  if (max_new_tokens < 1) throw std::invalid_argument("max_new_tokens must be >= 1");
  if (!(temperature >= 0.0)) throw std::invalid_argument("temperature must be >= 0");
  if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p must be in (0, 1]");
}

std::string_view label_name(Label label) {
  switch (label) {
    case Label::Relevant: return "Relevant";
    case Label::Irrelevant: return "Irrelevant";
    case Label::Unknown: return "Unknown";
  }
  return "Unknown";
}

std::optional<Label> parse_label(std::string_view name) {
  for (auto l : {Label::Relevant, Label::Irrelevant, Label::Unknown}) {
    if (text::iequals(name, label_name(l))) return l;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------

StubBackend::StubBackend(QueryExpr query) : query_(std::move(query)) {}

Generation StubBackend::generate(const GenerationRequest& request) {
  const auto counts = term_frequencies(query_, request.subject);
  std::size_t total = 0;
  for (const auto& [term, n] : counts) total += n;
  const bool relevant = satisfied_by(query_, counts) && total >= 2;
  return {relevant ? "Relevant" : "Irrelevant", model_id()};
}

HttpGenerationBackend::HttpGenerationBackend(std::string endpoint_url) {
  // Split "scheme://host[:port]/path" into origin and path.
  const auto scheme_end = endpoint_url.find("://");
  const auto path_start = endpoint_url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  if (scheme_end == std::string::npos) throw std::invalid_argument("generation endpoint must be an absolute URL");
  origin_ = endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : endpoint_url.substr(path_start);
}

nlohmann::json generation_request_body(const GenerationRequest& request) {
  return {{"prompt", request.prompt},
          {"max_new_tokens", request.params.max_new_tokens},
          {"temperature", request.params.temperature},
          {"top_p", request.params.top_p},
          {"sample", request.params.sample}};
}

Generation HttpGenerationBackend::generate(const GenerationRequest& request) {
  httplib::Client client(origin_);
  client.set_connection_timeout(5);
  client.set_read_timeout(120);
  auto res = client.Post(path_, generation_request_body(request).dump(), "application/json");
  if (!res) {
    if (res.error() == httplib::Error::Connection) {
      throw BackendUnavailable("generation endpoint unreachable: " + origin_ + path_);
    }
    throw GenerationError("generation request failed: " + httplib::to_string(res.error()));
  }
  if (res->status != 200) throw GenerationError("generation endpoint returned HTTP " + std::to_string(res->status));
  try {
    const auto body = nlohmann::json::parse(res->body);
    Generation g{body.at("generated_text").get<std::string>(), body.value("model_id", std::string("unknown"))};
    std::lock_guard lock(mutex_);
    last_model_id_ = g.model_id;
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw GenerationError(std::string("malformed generation response: ") + e.what());
  }
}

std::string HttpGenerationBackend::model_id() const {
  std::lock_guard lock(mutex_);
  return last_model_id_.empty() ? origin_ + path_ : last_model_id_;
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const ClassificationResult& r) {
  return {{"record_index", r.record_index}, {"label", label_name(r.label)}, {"raw_output", r.raw_output},
          {"model_id", r.model_id},         {"prompt_digest", r.prompt_digest}, {"attempts", r.attempts},
          {"error", r.error}};
}

ClassificationResult classification_from_json(const nlohmann::json& j) {
  ClassificationResult r;
  r.record_index = j.at("record_index").get<std::size_t>();
  const auto label = parse_label(j.at("label").get<std::string>());
  if (!label) throw std::invalid_argument("unknown label " + j.at("label").dump());
  r.label = *label;
  r.raw_output = j.value("raw_output", "");
  r.model_id = j.value("model_id", "");
  r.prompt_digest = j.value("prompt_digest", "");
  r.attempts = j.value("attempts", 0);
  r.error = j.value("error", "");
  return r;
}

std::string_view classification_text(const ArticleRecord& record) {
  if (record.abstract && !text::trim(*record.abstract).empty()) return *record.abstract;
  return record.title();
}

std::string build_prompt(const QueryExpr& query, const ArticleRecord& record) {
  const std::string_view subject = classification_text(record);
  if (text::trim(subject).empty()) throw std::invalid_argument("record has neither abstract nor title");
  const bool title_only = !(record.abstract && !text::trim(*record.abstract).empty());
  const auto counts = term_frequencies(query, subject);

  std::string prompt;
  prompt += "You are screening scientific articles for a domain-specific literature database.\n";
  prompt += "Decide whether the article below is relevant to this research query:\n";
  prompt += render_query(query, QueryDialect::Generic);
  prompt += "\n\nKeyword occurrences in the article ";
  prompt += title_only ? "title" : "abstract";
  prompt += ":\n";
  for (const auto& term : query_terms(query)) {
    prompt += "- " + term + ": " + std::to_string(counts.at(term)) + "\n";
  }
  prompt += title_only ? "\nTitle:\n" : "\nAbstract:\n";
  prompt += subject;
  prompt += "\n\nAnswer with exactly one word: Relevant or Irrelevant.\n";
  return prompt;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

Label extract_label(std::string_view generated) {
  const std::string lower = text::ascii_lower(generated);
  for (std::string_view negative : {"irrelevant", "not relevant", "unrelated"}) {
    if (lower.find(negative) != std::string::npos) return Label::Irrelevant;
  }
  for (std::string_view positive : {"relevant", "related"}) {
    if (lower.find(positive) != std::string::npos) return Label::Relevant;
  }
  return Label::Unknown;
}

std::size_t raw_output_limit(const GenerationParams& params) {
  return static_cast<std::size_t>(params.max_new_tokens) * 8;
}

namespace {

std::string truncate_utf8(std::string s, std::size_t limit) {
  if (s.size() <= limit) return s;
  std::size_t cut = limit;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  s.resize(cut);
  return s;
}

ClassificationResult classify_one(std::size_t index, const ArticleRecord& record, const QueryExpr& query,
                                  GenerationBackend& backend, const GenerationParams& params, int retry_budget) {
  ClassificationResult result;
  result.record_index = index;
  GenerationRequest request{build_prompt(query, record), params, std::string(classification_text(record))};
  result.prompt_digest = sha256_hex(request.prompt);
  result.model_id = backend.model_id();

  const int max_attempts = 1 + std::max(0, retry_budget);
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    result.attempts = attempt;
    try {
      Generation g = backend.generate(request);
      result.model_id = g.model_id;
      result.raw_output = truncate_utf8(std::move(g.text), raw_output_limit(params));
      result.label = extract_label(result.raw_output);
      result.error.clear();
      if (result.label != Label::Unknown) break;
    } catch (const GenerationError& e) {
      result.label = Label::Unknown;
      result.error = e.what();
    }
  }
  return result;
}

}  // namespace

std::vector<ClassificationResult> classify_batch(std::span<const ArticleRecord> records, const QueryExpr& query,
                                                 GenerationBackend& backend, const GenerationParams& params,
                                                 const ClassifyOptions& options) {
  params.validate();
  if (options.parallelism == 0) throw std::invalid_argument("parallelism must be positive");
  std::vector<ClassificationResult> results(records.size());
  if (records.empty()) return results;

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> workers;
    const std::size_t n = std::min(options.parallelism, records.size());
    for (std::size_t w = 0; w < n; ++w) {
      workers.emplace_back([&] {
        while (!abort) {
          const std::size_t i = next++;
          if (i >= records.size()) return;
          try {
            results[i] = classify_one(i, records[i], query, backend, params, options.retry_budget);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            abort = true;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace litharvest
