#pragma once

// Response collection against a chat-completion-style HTTP endpoint.
// Bounded concurrency, exponential-backoff retries, resumable output:
// already-answered (question, phi) pairs are skipped on rerun, and every
// completed record is flushed immediately so an interrupted run loses
// nothing. Requests always pin temperature to zero.

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "roteval/common.hpp"
#include "roteval/dataset.hpp"
#include "roteval/rotation.hpp"

namespace roteval {

struct EndpointDescriptor {
  std::string base_url;                        // e.g. http://localhost:8080
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string auth_env;                        // environment variable holding the token
  int max_concurrent = 4;
  int retry_budget = 3;
  double timeout_sec = 30.0;
  double backoff_initial_sec = 0.25;           // doubles per retry
};

struct CollectFailure {
  std::string question_id;
  Orientation phi = Orientation::deg0;
  std::string reason;
};

struct CollectReport {
  std::size_t requested = 0;  // requests actually issued
  std::size_t skipped = 0;    // already present in the output file
  std::size_t succeeded = 0;
  std::vector<CollectFailure> failures;
};

namespace detail {

inline const char* mime_for(const std::string& path) {
  auto ends_with = [&](const char* suffix) {
    std::string s = to_lower(path);
    std::string suf(suffix);
    return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends_with(".png")) return "image/png";
  if (ends_with(".jpg") || ends_with(".jpeg")) return "image/jpeg";
  if (ends_with(".ppm")) return "image/x-portable-pixmap";
  return "application/octet-stream";
}

inline std::string base64_encode(const std::string& bytes) {
  static const char* alphabet =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < bytes.size()) {
    unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                 (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                 static_cast<unsigned char>(bytes[i + 2]);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += alphabet[v & 63];
    i += 3;
  }
  if (i + 1 == bytes.size()) {
    unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += "==";
  } else if (i + 2 == bytes.size()) {
    unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                 (static_cast<unsigned char>(bytes[i + 1]) << 8);
    out += alphabet[(v >> 18) & 63];
    out += alphabet[(v >> 12) & 63];
    out += alphabet[(v >> 6) & 63];
    out += '=';
  }
  return out;
}

inline std::string image_url_for(const std::string& image_ref) {
  if (image_ref.rfind("http://", 0) == 0 || image_ref.rfind("https://", 0) == 0) return image_ref;
  std::ifstream in(image_ref, std::ios::binary);
  if (!in) return {};
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return std::string("data:") + mime_for(image_ref) + ";base64," + base64_encode(bytes);
}

}  // namespace detail

// Deterministic prompt for a realized question: the rendered text plus
// lettered options for MCQs, or a box-format instruction for grounding.
inline std::string build_prompt(const ConcreteQuestion& q) {
  std::string prompt = q.rendered_text;
  if (q.task_kind == TaskKind::mcq) {
    prompt += "\n";
    for (std::size_t i = 0; i < q.rendered_choices.size(); ++i) {
      prompt += "\n";
      prompt += static_cast<char>('A' + i);
      prompt += ". " + q.rendered_choices[i];
    }
    prompt += "\n\nAnswer with the option letter.";
  } else {
    prompt += "\n\nAnswer with the bounding box as [x_min, y_min, x_max, y_max] in pixels.";
  }
  return prompt;
}

inline nlohmann::json build_request(const ConcreteQuestion& q, const EndpointDescriptor& ep) {
  nlohmann::json content = nlohmann::json::array();
  content.push_back({{"type", "text"}, {"text", build_prompt(q)}});
  std::string url = detail::image_url_for(q.image_ref);
  if (!url.empty())
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
  nlohmann::json body;
  body["model"] = ep.model;
  body["temperature"] = 0;  // zero-temperature sampling, always
  body["messages"] = {{{"role", "user"}, {"content", content}}};
  return body;
}

inline std::string parse_completion(const std::string& body) {
  nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) fail(errc::endpoint_error, "response is not JSON");
  try {
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    fail(errc::endpoint_error, "response missing choices[0].message.content");
  }
}

// Collects one response per pending (question, phi). `out_path` doubles as
// the resume state; `log_path` (optional) receives one JSON line per attempt.
inline CollectReport collect_responses(const std::vector<ConcreteQuestion>& realized,
                                       const EndpointDescriptor& ep, const std::string& out_path,
                                       const std::string& log_path = {},
                                       bool sleep_between_retries = true) {
  CollectReport report;

  std::set<std::pair<std::string, int>> done;
  {
    std::ifstream existing(out_path);
    if (existing) {
      ResponseSet prior = load_responses_stream(existing);
      for (const auto& r : prior.records) done.insert({r.question_id, to_degrees(r.phi)});
    }
  }

  std::vector<const ConcreteQuestion*> pending;
  for (const auto& q : realized) {
    if (done.count({q.source_id, to_degrees(q.phi)})) {
      ++report.skipped;
      continue;
    }
    pending.push_back(&q);
  }

  std::ofstream out(out_path, std::ios::app);
  if (!out) fail(errc::io_error, "cannot open " + out_path + " for writing");
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path, std::ios::app);
    if (!log) fail(errc::io_error, "cannot open " + log_path + " for writing");
  }

  const char* token = ep.auth_env.empty() ? nullptr : std::getenv(ep.auth_env.c_str());

  std::mutex io_mutex;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> issued{0}, succeeded{0};

  auto worker = [&]() {
    httplib::Client client(ep.base_url);
    client.set_connection_timeout(std::chrono::milliseconds(long(ep.timeout_sec * 1000)));
    client.set_read_timeout(std::chrono::milliseconds(long(ep.timeout_sec * 1000)));
    if (token) client.set_bearer_token_auth(token);
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= pending.size()) return;
      const ConcreteQuestion& q = *pending[i];
      nlohmann::json body = build_request(q, ep);
      std::string last_error;
      bool ok = false;
      for (int attempt = 0; attempt <= ep.retry_budget && !ok; ++attempt) {
        if (attempt > 0 && sleep_between_retries)
          std::this_thread::sleep_for(std::chrono::duration<double>(
              ep.backoff_initial_sec * std::pow(2.0, attempt - 1)));
        ++issued;
        auto res = client.Post(ep.path, body.dump(), "application/json");
        int status = res ? res->status : 0;
        std::string raw;
        if (res && status == 200) {
          try {
            raw = parse_completion(res->body);
            ok = true;
          } catch (const error& e) {
            last_error = e.what();
          }
        } else {
          last_error = res ? "http status " + std::to_string(status)
                           : "transport: " + httplib::to_string(res.error());
        }
        std::lock_guard<std::mutex> lock(io_mutex);
        if (log) {
          nlohmann::json entry;
          entry["question_id"] = q.source_id;
          entry["phi"] = to_degrees(q.phi);
          entry["attempt"] = attempt;
          entry["status"] = status;
          entry["ok"] = ok;
          log << entry.dump() << "\n";
          log.flush();
        }
        if (ok) {
          nlohmann::json rec;
          rec["question_id"] = q.source_id;
          rec["phi"] = to_degrees(q.phi);
          rec["raw_text"] = raw;
          out << rec.dump() << "\n";
          out.flush();
          ++succeeded;
        }
      }
      if (!ok) {
        std::lock_guard<std::mutex> lock(io_mutex);
        report.failures.push_back({q.source_id, q.phi, last_error});
      }
    }
  };

  int n_workers = std::max(1, std::min<int>(ep.max_concurrent, int(pending.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n_workers; ++i) pool.emplace_back(worker);
  if (!pending.empty()) worker();
  for (auto& t : pool) t.join();

  report.requested = issued;
  report.succeeded = succeeded;
  return report;
}

}  // namespace roteval
