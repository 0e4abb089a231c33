#include <cstdlib>

#include "httplib.h"
#include "relevancy/errors.hpp"
#include "relevancy/jsonl.hpp"
#include "relevancy/labeling.hpp"

namespace relevancy {

namespace {

struct ParsedUrl {
  std::string origin;
  std::string path;
};

ParsedUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos ||
      (url.compare(0, scheme, "http") != 0 && url.compare(0, scheme, "https") != 0)) {
    throw ConfigError("provider endpoint must be an http(s) URL: " + url);
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

HttpLabelProvider::HttpLabelProvider(HttpProviderConfig config)
    : config_(std::move(config)) {
  split_url(config_.endpoint);
}

std::string HttpLabelProvider::post_prompt(const HttpProviderConfig& config,
                                           const std::string& prompt) {
  const auto url = split_url(config.endpoint);
  httplib::Client client(url.origin);
  client.set_connection_timeout(config.timeout);
  client.set_read_timeout(config.timeout);
  httplib::Headers headers;
  if (const char* key = std::getenv(config.api_key_env.c_str())) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }
  const Json body{{"model", config.model}, {"prompt", prompt}};
  auto res = client.Post(url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw ProviderError("POST " + config.endpoint + " failed: " +
                        httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw ProviderError("POST " + config.endpoint + " returned " +
                        std::to_string(res->status));
  }
  if (res->status != 200) {
    throw ProtocolError("POST " + config.endpoint + " returned " +
                        std::to_string(res->status));
  }
  const auto parsed = Json::parse(res->body, nullptr, false);
  if (parsed.is_object()) {
    for (const char* field : {"completion", "text"}) {
      if (parsed.contains(field) && parsed.at(field).is_string()) {
        return parsed.at(field).get<std::string>();
      }
    }
    throw ProtocolError("provider response has no completion field");
  }
  return res->body;
}

std::string HttpLabelProvider::complete(const ProviderCall& call) {
  return post_prompt(config_, call.prompt);
}

}  // namespace relevancy
