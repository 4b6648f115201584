#pragma once

#include <optional>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "groupcal/labeling.hpp"

namespace groupcal {

/// Live NLI judge over HTTP. Each call POSTs {"premise": ..., "hypothesis": ...} as JSON
/// to `path` and expects {"verdict": "entailment"|"neutral"|"contradiction"} back.
/// Any transport error, timeout, non-200 status or malformed body yields nullopt.
/// A fresh connection per request keeps the client safe to share across threads.
class HttpNliClient final : public NliClient {
 public:
  HttpNliClient(std::string base_url, std::string path = "/nli", double timeout_seconds = 10.0)
      : base_url_(std::move(base_url)), path_(std::move(path)), timeout_seconds_(timeout_seconds) {}

  [[nodiscard]] std::optional<Verdict> judge(const std::string& premise,
                                             const std::string& hypothesis) const override {
    httplib::Client client(base_url_);
    const auto secs = static_cast<time_t>(timeout_seconds_);
    const auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);

    const nlohmann::json body = {{"premise", premise}, {"hypothesis", hypothesis}};
    const auto res = client.Post(path_, body.dump(), "application/json");
    if (!res || res->status != 200) return std::nullopt;
    try {
      return parse_verdict(nlohmann::json::parse(res->body).at("verdict").get<std::string>());
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }

 private:
  std::string base_url_;
  std::string path_;
  double timeout_seconds_;
};

}  // namespace groupcal
