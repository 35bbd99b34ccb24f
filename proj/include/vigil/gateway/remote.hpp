#pragma once

// Declaratively configured HTTP chat backend. No provider names are wired
// into the logic: a ProviderTemplate carries the base URL, path, auth header
// sourced from an environment variable, the model name, and a JSON pointer to
// the completion text in the response.
//
// Wire format (bit-exact): the request body is
//   {"model": <model>, "messages": [{"role": r, "content": c}, ...],
//    "max_tokens": n, "temperature": t[, "seed": s]}
// where a message carrying an image becomes
//   {"role": r, "content": [{"type": "text", "text": c},
//     {"type": "image_url", "image_url": {"url": "data:image/png;base64,<b64>"}}]}
// Connection failures, HTTP 429 and HTTP 5xx raise TransportError (retried by
// the gateway); auth rejections raise ConfigError and other 4xx raise
// InputError (not retried).

#include <cstdlib>
#include <map>
#include <string>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vigil/errors.hpp"
#include "vigil/gateway/chat.hpp"
#include "vigil/gateway/gateway.hpp"
#include "vigil/util/base64.hpp"

namespace vigil {

struct ProviderTemplate {
  std::string id;          // backend id
  std::string base_url;    // scheme://host[:port]
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string auth_env;    // environment variable holding the credential
  std::string auth_header = "Authorization";
  std::string auth_prefix = "Bearer ";
  std::map<std::string, std::string> extra_headers;
  std::string text_pointer = "/choices/0/message/content";
  double timeout_s = 120.0;

  void validate() const {
    if (id.empty()) throw ConfigError("[llm-gateway] provider template missing id");
    if (base_url.rfind("http://", 0) != 0 && base_url.rfind("https://", 0) != 0)
      throw ConfigError("[llm-gateway] provider base_url must start with http(s)://");
    if (model.empty()) throw ConfigError("[llm-gateway] provider template missing model");
    if (path.empty() || path[0] != '/')
      throw ConfigError("[llm-gateway] provider path must start with '/'");
  }
};

inline ProviderTemplate provider_template_from_json(const nlohmann::json& j) {
  ProviderTemplate t;
  t.id = j.at("id").get<std::string>();
  t.base_url = j.at("base_url").get<std::string>();
  t.path = j.value("path", t.path);
  t.model = j.at("model").get<std::string>();
  t.auth_env = j.value("auth_env", "");
  t.auth_header = j.value("auth_header", t.auth_header);
  t.auth_prefix = j.value("auth_prefix", t.auth_prefix);
  t.text_pointer = j.value("text_pointer", t.text_pointer);
  t.timeout_s = j.value("timeout_s", t.timeout_s);
  if (j.contains("extra_headers"))
    for (const auto& [k, v] : j.at("extra_headers").items())
      t.extra_headers[k] = v.get<std::string>();
  t.validate();
  return t;
}

class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(ProviderTemplate tpl) : tpl_(std::move(tpl)) { tpl_.validate(); }

  std::string id() const override { return tpl_.id; }
  bool is_remote() const override { return true; }

  static nlohmann::json build_body(const ProviderTemplate& tpl, const ChatRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : req.messages) {
      if (m.image_png.empty()) {
        messages.push_back({{"role", m.role}, {"content", m.content}});
      } else {
        messages.push_back(
            {{"role", m.role},
             {"content",
              nlohmann::json::array(
                  {{{"type", "text"}, {"text", m.content}},
                   {{"type", "image_url"},
                    {"image_url",
                     {{"url", "data:image/png;base64," + base64_encode(m.image_png)}}}}})}});
      }
    }
    nlohmann::json body = {{"model", tpl.model},
                           {"messages", messages},
                           {"max_tokens", req.max_tokens},
                           {"temperature", req.temperature}};
    if (req.request_seed) body["seed"] = *req.request_seed;
    return body;
  }

  std::string complete(const ChatRequest& request, nlohmann::json& meta) override {
    httplib::Client client(tpl_.base_url);
    client.set_connection_timeout(std::chrono::duration<double>(tpl_.timeout_s));
    client.set_read_timeout(std::chrono::duration<double>(tpl_.timeout_s));

    httplib::Headers headers;
    if (!tpl_.auth_env.empty()) {
      const char* key = std::getenv(tpl_.auth_env.c_str());
      if (!key || !*key)
        throw ConfigError("[llm-gateway] credential variable " + tpl_.auth_env +
                          " is not set");
      headers.emplace(tpl_.auth_header, tpl_.auth_prefix + key);
    }
    for (const auto& [k, v] : tpl_.extra_headers) headers.emplace(k, v);

    const std::string body = build_body(tpl_, request).dump();
    const auto res = client.Post(tpl_.path, headers, body, "application/json");
    if (!res)
      throw TransportError("[llm-gateway] connection to " + tpl_.base_url +
                           " failed: " + httplib::to_string(res.error()));
    if (res->status == 401 || res->status == 403)
      throw ConfigError("[llm-gateway] provider rejected credentials (HTTP " +
                        std::to_string(res->status) + "): " + res->body);
    if (res->status == 429 || res->status >= 500)
      throw TransportError("[llm-gateway] provider returned HTTP " +
                           std::to_string(res->status) + ": " + res->body);
    if (res->status != 200)
      throw InputError("[llm-gateway] provider returned HTTP " +
                       std::to_string(res->status) + ": " + res->body);

    nlohmann::json j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded())
      throw TransportError("[llm-gateway] provider returned malformed JSON");
    const nlohmann::json::json_pointer ptr(tpl_.text_pointer);
    if (!j.contains(ptr) || !j.at(ptr).is_string())
      throw TransportError("[llm-gateway] response lacks text at pointer '" +
                           tpl_.text_pointer + "'");
    meta["status"] = res->status;
    if (j.is_object() && j.contains("usage")) meta["usage"] = j["usage"];
    if (j.is_object() && j.contains("model")) meta["model"] = j["model"];
    return j.at(ptr).get<std::string>();
  }

 private:
  ProviderTemplate tpl_;
};

}  // namespace vigil
