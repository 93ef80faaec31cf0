#include "scaffold/provider.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "httplib.h"
#include "json.hpp"

namespace scaffold {

using nlohmann::json;

ReplayProvider::ReplayProvider(std::map<std::string, std::vector<std::string>> responses,
                               std::map<std::string, std::string> by_prompt)
    : responses_(std::move(responses)), by_prompt_(std::move(by_prompt)) {}

std::unique_ptr<ReplayProvider> ReplayProvider::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read replay fixture " + path.string());
  const json j = json::parse(in);
  std::map<std::string, std::vector<std::string>> responses;
  std::map<std::string, std::string> by_prompt;
  if (j.contains("responses")) responses = j.at("responses").get<decltype(responses)>();
  if (j.contains("by_prompt")) by_prompt = j.at("by_prompt").get<decltype(by_prompt)>();
  return std::make_unique<ReplayProvider>(std::move(responses), std::move(by_prompt));
}

std::optional<std::string> ReplayProvider::complete(const ProviderRequest& request) {
  std::lock_guard lock(mu_);
  ++calls_;
  const auto key = ExplanationCache::key_for(request.template_id, request.rendered_prompt);
  if (auto hit = by_prompt_.find(key); hit != by_prompt_.end()) return hit->second;
  const auto it = responses_.find(request.template_id);
  if (it == responses_.end() || it->second.empty()) return std::nullopt;
  auto& k = cursor_[request.template_id];
  const auto& list = it->second;
  const auto& text = list[std::min(k, list.size() - 1)];
  ++k;
  return text;
}

std::size_t ReplayProvider::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

HttpProvider::HttpProvider(std::string url, std::string api_key, std::string model, int timeout_s)
    : api_key_(std::move(api_key)), model_(std::move(model)), timeout_s_(timeout_s) {
  // Split "scheme://host[:port]/path" into the client base and request path.
  const auto scheme_end = url.find("://");
  const auto path_start = url.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  base_ = path_start == std::string::npos ? url : url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions" : url.substr(path_start);
}

std::optional<std::string> HttpProvider::complete(const ProviderRequest& request) {
  try {
    httplib::Client client(base_);
    client.set_connection_timeout(timeout_s_);
    client.set_read_timeout(timeout_s_);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    const json body = {
        {"model", model_},
        {"temperature", request.temperature},
        {"max_tokens", request.max_tokens},
        {"messages", json::array({{{"role", "user"}, {"content", request.rendered_prompt}}})},
    };
    auto res = client.Post(path_, headers, body.dump(), "application/json");
    if (!res || res->status != 200) return std::nullopt;
    const auto reply = json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

namespace {

std::string env_or(const char* name, std::string fallback = {}) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

}  // namespace

std::unique_ptr<TextProvider> make_provider_from_env() {
  auto kind = env_or("PROVIDER");
  const auto url = env_or("PROVIDER_URL");
  if (kind.empty()) kind = url.empty() ? "null" : "http";
  if (kind == "null") return std::make_unique<NullProvider>();
  if (kind == "replay") return ReplayProvider::from_file(env_or("REPLAY_FIXTURE"));
  if (kind == "http") {
    if (url.empty()) throw std::runtime_error("PROVIDER=http needs PROVIDER_URL");
    return std::make_unique<HttpProvider>(url, env_or("PROVIDER_KEY"), env_or("MODEL_NAME"));
  }
  throw std::runtime_error("unknown PROVIDER '" + kind + "'");
}

ExplanationCache::ExplanationCache(std::optional<std::filesystem::path> dir) : dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::string ExplanationCache::key_for(std::string_view template_id, std::string_view prompt) {
  std::string material;
  material.reserve(template_id.size() + prompt.size() + 1);
  material.append(template_id);
  material.push_back('\x1f');
  material.append(prompt);

  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(material.data(), material.size(), digest, &len, EVP_sha256(), nullptr);
  std::string hex;
  hex.reserve(len * 2);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::optional<std::string> ExplanationCache::lookup(const std::string& key) const {
  std::lock_guard lock(mu_);
  if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  if (!dir_) return std::nullopt;
  std::ifstream in(*dir_ / (key + ".json"));
  if (!in) return std::nullopt;
  try {
    const json j = json::parse(in);
    if (j.at("key").get<std::string>() != key) return std::nullopt;
    return j.at("text").get<std::string>();
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void ExplanationCache::store(const std::string& key, const std::string& text) {
  std::lock_guard lock(mu_);
  memory_[key] = text;
  if (!dir_) return;
  const auto final_path = *dir_ / (key + ".json");
  const auto tmp = *dir_ / (key + ".json.tmp");
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << json{{"key", key}, {"text", text}}.dump() << '\n';
  }
  std::error_code ec;
  std::filesystem::rename(tmp, final_path, ec);
}

}  // namespace scaffold
