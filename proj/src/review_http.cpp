#include "signmix/review_http.hpp"

#include <httplib.h>
#include <json.hpp>

namespace signmix {

namespace {

int status_for(ReviewError::Code code) {
  switch (code) {
    case ReviewError::Code::unknown_expert:
      return 403;
    case ReviewError::Code::unknown_pair:
      return 404;
    case ReviewError::Code::closed_task:
    case ReviewError::Code::conflicting_vote:
      return 409;
    case ReviewError::Code::bad_request:
      return 400;
  }
  return 400;
}

bool wants_json(const httplib::Request& req) {
  return req.has_param("format") && req.get_param_value("format") == "json";
}

void reply(const httplib::Request& req, httplib::Response& res, int status, const Record& rec) {
  res.status = status;
  if (wants_json(req)) {
    res.set_content(rec.to_json() + "\n", "application/json");
  } else {
    res.set_content(rec.to_line() + "\n", "text/plain");
  }
}

void reply_error(const httplib::Request& req, httplib::Response& res, ReviewError::Code code,
                 const std::string& message) {
  reply(req, res, status_for(code), Record("error").add("code", to_string(code)).add("message", message));
}

struct VoteRequest {
  std::string expert;
  PairKey pair;
  bool verdict = false;
};

bool parse_bool_text(const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  throw std::invalid_argument("verdict must be true or false");
}

VoteRequest parse_vote_body(const std::string& body) {
  auto first = body.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) throw std::invalid_argument("empty vote body");
  VoteRequest v;
  if (body[first] == '{') {
    auto j = nlohmann::json::parse(body);
    v.expert = j.at("expert").get<std::string>();
    auto a = j.at("pair_a").get<std::string>();
    auto b = j.at("pair_b").get<std::string>();
    v.pair = make_pair_key(a, b);
    const auto& verdict = j.at("verdict");
    v.verdict = verdict.is_boolean() ? verdict.get<bool>() : parse_bool_text(verdict.get<std::string>());
    return v;
  }
  auto rec = Record::parse(body.substr(first));
  if (rec.kind() != "vote") throw std::invalid_argument("expected a 'vote' record");
  rec.expect_fields({"expert", "pair_a", "pair_b", "verdict"});
  v.expert = rec.get("expert");
  v.pair = make_pair_key(rec.get("pair_a"), rec.get("pair_b"));
  v.verdict = rec.get_bool("verdict");
  return v;
}

}  // namespace

struct ReviewHttpServer::Impl {
  ReviewService& service;
  httplib::Server server;

  explicit Impl(ReviewService& s) : service(s) {
    server.Get("/tasks/next", [this](const httplib::Request& req, httplib::Response& res) {
      if (!req.has_param("expert")) {
        reply_error(req, res, ReviewError::Code::bad_request, "missing expert parameter");
        return;
      }
      try {
        auto task = service.next_task(req.get_param_value("expert"));
        reply(req, res, 200, task ? task_record(*task) : Record("none"));
      } catch (const ReviewError& e) {
        reply_error(req, res, e.code(), e.what());
      }
    });

    server.Post("/votes", [this](const httplib::Request& req, httplib::Response& res) {
      VoteRequest v;
      try {
        v = parse_vote_body(req.body);
      } catch (const std::exception& e) {
        reply_error(req, res, ReviewError::Code::bad_request, e.what());
        return;
      }
      try {
        reply(req, res, 200, ack_record(service.submit_vote(v.expert, v.pair, v.verdict)));
      } catch (const ReviewError& e) {
        reply_error(req, res, e.code(), e.what());
      }
    });

    server.Get("/progress", [this](const httplib::Request& req, httplib::Response& res) {
      reply(req, res, 200, progress_record(service.progress()));
    });
  }
};

ReviewHttpServer::ReviewHttpServer(ReviewService& service) : impl_(std::make_unique<Impl>(service)) {}

ReviewHttpServer::~ReviewHttpServer() { stop(); }

int ReviewHttpServer::bind(const std::string& host, int port) {
  if (port == 0) return impl_->server.bind_to_any_port(host);
  return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool ReviewHttpServer::serve() { return impl_->server.listen_after_bind(); }

void ReviewHttpServer::stop() { impl_->server.stop(); }

}  // namespace signmix
