#include "tokspace/remote_model.hpp"

#include <httplib.h>

#include <nlohmann/json.hpp>

#include "tokspace/error.hpp"

namespace tokspace {

using nlohmann::json;

namespace {

struct Endpoint {
  std::string origin;  // scheme://host:port
  std::string prefix;  // path prefix without trailing slash
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  const auto start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = url.find('/', start);
  Endpoint ep;
  ep.origin = url.substr(0, slash);
  if (scheme == std::string::npos) ep.origin = "http://" + ep.origin;
  if (slash != std::string::npos) ep.prefix = url.substr(slash);
  while (!ep.prefix.empty() && ep.prefix.back() == '/') ep.prefix.pop_back();
  return ep;
}

json request(const std::string& base_url, std::chrono::seconds timeout,
             const std::string& method, const std::string& path,
             const json* body) {
  const Endpoint ep = split_url(base_url);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const std::string target = ep.prefix + path;
  httplib::Result res =
      method == "GET" ? client.Get(target)
                      : client.Post(target, body->dump(), "application/json");
  if (!res) {
    throw Error(Error::Kind::Transport,
                method + " " + base_url + path + " failed: " +
                    httplib::to_string(res.error()));
  }
  if (res->status != 200) {
    throw Error(Error::Kind::Transport,
                method + " " + base_url + path + " returned HTTP " +
                    std::to_string(res->status) + ": " + res->body);
  }
  try {
    return json::parse(res->body);
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Format,
                "malformed response from " + path + ": " + e.what());
  }
}

json query_body(std::span<const TokenId> prefix,
                const std::optional<std::span<const TokenId>>& candidates) {
  json body;
  body["prefix_ids"] = TokenIds(prefix.begin(), prefix.end());
  if (candidates) {
    body["candidate_ids"] = TokenIds(candidates->begin(), candidates->end());
  } else {
    body["candidate_ids"] = nullptr;
  }
  return body;
}

const json& field(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw Error(Error::Kind::Format,
                std::string("response has no \"") + key + "\" field");
  }
  return doc[key];
}

std::vector<LogProb> read_logprobs(const json& values, std::size_t expected) {
  if (!values.is_array()) {
    throw Error(Error::Kind::Format, "logprobs is not an array");
  }
  std::vector<LogProb> out;
  out.reserve(values.size());
  for (const auto& v : values) {
    // Servers may send -Infinity as null.
    if (!v.is_null() && !v.is_number()) {
      throw Error(Error::Kind::Format, "non-numeric logprob " + v.dump());
    }
    out.push_back(v.is_null() ? kLogZero : v.get<double>());
  }
  if (out.size() != expected) {
    throw Error(Error::Kind::Format,
                "expected " + std::to_string(expected) + " logprobs, got " +
                    std::to_string(out.size()));
  }
  return out;
}

}  // namespace

RemoteModel::RemoteModel(std::string base_url, std::size_t vocab_size,
                         std::chrono::seconds timeout)
    : base_url_(std::move(base_url)), timeout_(timeout),
      vocab_size_(vocab_size) {
  if (vocab_size_ == 0) vocab_size_ = fetch_tables().vocab.size();
}

std::vector<LogProb> RemoteModel::next_logprobs(
    std::span<const TokenId> prefix,
    std::span<const TokenId> candidates) const {
  const json body = query_body(prefix, candidates);
  const json res = request(base_url_, timeout_, "POST", "/v1/logprobs", &body);
  return read_logprobs(field(res, "logprobs"), candidates.size());
}

std::vector<LogProb> RemoteModel::full_logprobs(
    std::span<const TokenId> prefix) const {
  const json body = query_body(prefix, std::nullopt);
  const json res = request(base_url_, timeout_, "POST", "/v1/logprobs", &body);
  return read_logprobs(field(res, "logprobs"), vocab_size_);
}

std::vector<std::vector<LogProb>> RemoteModel::next_logprobs_batch(
    std::span<const LogprobQuery> queries) const {
  json body;
  body["batch"] = json::array();
  for (const auto& q : queries) {
    std::optional<std::span<const TokenId>> cands;
    if (q.candidates) cands = std::span<const TokenId>(*q.candidates);
    body["batch"].push_back(query_body(q.prefix, cands));
  }
  const json res = request(base_url_, timeout_, "POST", "/v1/logprobs", &body);
  const json& batch = field(res, "batch");
  if (!batch.is_array() || batch.size() != queries.size()) {
    throw Error(Error::Kind::Format, "batch response size mismatch");
  }
  std::vector<std::vector<LogProb>> out;
  out.reserve(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const std::size_t expected = queries[i].candidates
                                     ? queries[i].candidates->size()
                                     : vocab_size_;
    out.push_back(read_logprobs(batch[i], expected));
  }
  return out;
}

std::string RemoteModel::describe() const {
  return "remote(" + base_url_ + ", |V|=" + std::to_string(vocab_size_) + ")";
}

BpeTables RemoteModel::fetch_tables() const {
  json doc = request(base_url_, timeout_, "GET", "/v1/vocab", nullptr);
  if (!doc.contains("vocab") && !doc.contains("model")) {
    doc = json{{"vocab", doc}, {"merges", json::array()}};
  }
  if (!doc.contains("merges") && doc.contains("vocab")) {
    doc["merges"] = json::array();
  }
  return parse_tables_json(doc);
}

TokenIds RemoteModel::canonical(const std::string& text) const {
  const json body{{"text", text}};
  const json res = request(base_url_, timeout_, "POST", "/v1/canonical", &body);
  const json& ids = field(res, "ids");
  try {
    return ids.get<TokenIds>();
  } catch (const json::exception& e) {
    throw Error(Error::Kind::Format, std::string("bad ids: ") + e.what());
  }
}

bool RemoteModel::healthy() const {
  try {
    const json res = request(base_url_, timeout_, "GET", "/v1/health", nullptr);
    return res.value("status", "") == "ok";
  } catch (const Error&) {
    return false;
  }
}

}  // namespace tokspace
