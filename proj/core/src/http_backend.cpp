// SPDX-FileCopyrightText: (c) 2026 egrm contributors
// SPDX-License-Identifier: Apache-2.0

#include <chrono>
#include <cstdlib>

#include <httplib.h>

#include "egrm/backends.hpp"

namespace egrm::backends {

HttpBackend::HttpBackend(BackendDescriptor descriptor, std::optional<std::string> api_key)
    : descriptor_(std::move(descriptor)), api_key_(std::move(api_key)) {
  descriptor_.validate();
  const std::string& url = *descriptor_.endpoint;
  constexpr std::string_view kScheme = "http://";
  if (!url.starts_with(kScheme))
    throw ConfigError("http backend: only http:// endpoints are supported, got '" + url + "'");
  const auto path_start = url.find('/', kScheme.size());
  host_ = url.substr(0, path_start);
  base_path_ = path_start == std::string::npos ? std::string{} : url.substr(path_start);
  while (!base_path_.empty() && base_path_.back() == '/') base_path_.pop_back();
}

std::unique_ptr<HttpBackend> HttpBackend::from_environment(BackendDescriptor descriptor) {
  std::optional<std::string> key;
  if (const char* v = std::getenv("EGRM_API_KEY"); v != nullptr && *v != '\0') key = v;
  return std::make_unique<HttpBackend>(std::move(descriptor), std::move(key));
}

nlohmann::json HttpBackend::request_body(const std::optional<std::string>& model,
                                         const Prompt& prompt, const DecodeParams& params) {
  return {
      {"model", model.value_or("default")},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt.text()}}})},
      {"temperature", params.temperature()},
      {"top_p", params.top_p()},
      {"max_tokens", params.max_tokens()},
      {"seed", params.seed()},
  };
}

GenerationResult HttpBackend::generate(const Prompt& prompt, const DecodeParams& params,
                                       std::size_t slot) {
  httplib::Client client(host_);
  const auto timeout = std::chrono::milliseconds(descriptor_.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (api_key_) headers.emplace("Authorization", "Bearer " + *api_key_);

  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(base_path_ + "/chat/completions", headers,
                         request_body(descriptor_.model_name, prompt, params).dump(),
                         "application/json");
  const double latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();

  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()), -1, slot);
  if (res->status < 200 || res->status >= 300)
    throw TransportError("non-2xx response", res->status, slot);

  try {
    const auto body = nlohmann::json::parse(res->body);
    std::string text = body.at("choices").at(0).at("message").at("content").get<std::string>();
    std::uint64_t tokens = 0;
    if (body.contains("usage") && body["usage"].contains("completion_tokens")) {
      tokens = body["usage"]["completion_tokens"].get<std::uint64_t>();
    } else {
      tokens = text.empty() ? 0 : whitespace_token_count(text);
    }
    return GenerationResult(prompt.id(), params, std::move(text), tokens, latency_ms);
  } catch (const nlohmann::json::exception& ex) {
    throw TransportError(std::string("malformed body: ") + ex.what(), res->status, slot);
  } catch (const InvalidValue& ex) {
    throw TransportError(std::string("malformed body: ") + ex.what(), res->status, slot);
  }
}

}  // namespace egrm::backends
