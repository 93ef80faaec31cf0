#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace scaffold {

struct ProviderRequest {
  std::string template_id;
  std::string rendered_prompt;
  int max_tokens = 512;
  /// Always 0 so cached answers are reproducible.
  double temperature = 0.0;
};

struct ProviderResponse {
  std::string text;
  std::string provider_name;
  bool cached = false;
};

/// A text-generation backend. Returns nullopt on any failure (network,
/// refusal, missing fixture); callers fall back deterministically.
/// Implementations must be safe to call from several threads.
class TextProvider {
 public:
  virtual ~TextProvider() = default;
  virtual std::optional<std::string> complete(const ProviderRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Always fails. Forces every explanation onto the fallback path.
class NullProvider final : public TextProvider {
 public:
  std::optional<std::string> complete(const ProviderRequest&) override { return std::nullopt; }
  std::string name() const override { return "null"; }
};

/// Fixture-backed provider. The fixture is a JSON object
///   {"by_prompt": {"<cache key>": "text", ...},
///    "responses": {"<template id>": ["text", ...], ...}}
/// A by_prompt entry wins. Otherwise the k-th call for a template returns
/// element min(k, n - 1) of its list.
class ReplayProvider final : public TextProvider {
 public:
  explicit ReplayProvider(std::map<std::string, std::vector<std::string>> responses,
                          std::map<std::string, std::string> by_prompt = {});
  static std::unique_ptr<ReplayProvider> from_file(const std::filesystem::path& path);

  std::optional<std::string> complete(const ProviderRequest& request) override;
  std::string name() const override { return "replay"; }
  std::size_t calls() const;

 private:
  std::map<std::string, std::vector<std::string>> responses_;
  std::map<std::string, std::string> by_prompt_;
  std::map<std::string, std::size_t> cursor_;
  std::size_t calls_ = 0;
  mutable std::mutex mu_;
};

/// Chat-completion style JSON endpoint ({model, messages, temperature,
/// max_tokens} -> choices[0].message.content).
class HttpProvider final : public TextProvider {
 public:
  HttpProvider(std::string url, std::string api_key, std::string model, int timeout_s = 30);

  std::optional<std::string> complete(const ProviderRequest& request) override;
  std::string name() const override { return "http"; }

 private:
  std::string base_;
  std::string path_;
  std::string api_key_;
  std::string model_;
  int timeout_s_;
};

/// PROVIDER = null | replay | http. Unset means http when PROVIDER_URL is
/// set, null otherwise. replay reads REPLAY_FIXTURE.
std::unique_ptr<TextProvider> make_provider_from_env();

/// Persistent text cache keyed by content hash. With no directory it is
/// in-memory only. Unreadable or mismatched entries count as misses.
class ExplanationCache {
 public:
  explicit ExplanationCache(std::optional<std::filesystem::path> dir = std::nullopt);

  /// Hex SHA-256 of the template id and the rendered prompt.
  static std::string key_for(std::string_view template_id, std::string_view prompt);

  std::optional<std::string> lookup(const std::string& key) const;
  void store(const std::string& key, const std::string& text);

 private:
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, std::string> memory_;
  mutable std::mutex mu_;
};

}  // namespace scaffold
