#pragma once

// HTTP+JSON front end over SessionService.
//
//   POST /sessions                        -> {"session_id"}
//   GET  /sessions/{id}                   -> session payload
//   POST /sessions/{id}/log               raw XES, gzip or multipart upload
//   GET  /sessions/{id}/variants
//   POST /sessions/{id}/discover          {"variant_ids": [...]}
//   POST /sessions/{id}/extend            {"variant_ids": [...]}
//   POST /sessions/{id}/tree/edit         {"op": "insert|remove|shift|set_label", "path": [...], ...}
//   POST /sessions/{id}/conformance
//   POST /sessions/{id}/undo, /redo
//   POST /sessions/{id}/tree/import       PTML (raw or multipart) or {"tree": {...}}
//   GET  /sessions/{id}/export?format=ptml|pnml
//   GET  /sessions/{id}/activities
//   GET  /health
//
// Errors come back as {"error": {"code", "message"}}.

#ifndef CPPHTTPLIB_ZLIB_SUPPORT
#define CPPHTTPLIB_ZLIB_SUPPORT
#endif
#include <httplib.h>

#include <filesystem>
#include <optional>
#include <string>

#include "itree/session.hpp"
#include "itree/wire.hpp"

namespace itree {

inline int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownSession:
      return 404;
    case ErrorCode::MalformedXml:
    case ErrorCode::MissingActivity:
    case ErrorCode::MalformedPtml:
    case ErrorCode::UnknownNodeKind:
    case ErrorCode::DanglingEdge:
      return 422;
    case ErrorCode::NoLog:
    case ErrorCode::NoModel:
    case ErrorCode::InvalidTree:
    case ErrorCode::InconsistentModel:
    case ErrorCode::InconsistentInput:
    case ErrorCode::NothingToUndo:
    case ErrorCode::NothingToRedo:
    case ErrorCode::TraceFits:
    case ErrorCode::NotEnabled:
      return 409;
    case ErrorCode::BudgetExceeded:
    case ErrorCode::SearchBudgetExceeded:
      return 503;
    default:
      return 400;
  }
}

namespace detail {

inline wire::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return wire::json::object();
  try {
    return wire::json::parse(req.body);
  } catch (const wire::json::parse_error& e) {
    fail(ErrorCode::InvalidRequest, std::string("request body is not JSON: ") + e.what());
  }
}

// Uploaded bytes: the first multipart file if any, else the raw body.
inline std::string upload_bytes(const httplib::Request& req) {
  if (req.is_multipart_form_data()) {
    if (req.files.empty()) fail(ErrorCode::InvalidRequest, "multipart upload without a file part");
    return req.files.begin()->second.content;
  }
  return req.body;
}

inline std::string field(const wire::json& body, const char* key) {
  if (!body.contains(key) || !body[key].is_string()) {
    fail(ErrorCode::InvalidRequest, std::string("missing string field \"") + key + "\"");
  }
  return body[key].get<std::string>();
}

inline TreeEdit edit_from_json(const wire::json& body) {
  if (!body.is_object()) fail(ErrorCode::InvalidRequest, "edit must be an object");
  TreeEdit e;
  const std::string op = field(body, "op");
  if (!body.contains("path")) fail(ErrorCode::InvalidRequest, "edit needs a \"path\"");
  e.path = wire::path_from_json(body["path"]);
  if (op == "insert") {
    e.op = TreeEdit::Op::Insert;
    const std::string pos = body.contains("position") ? field(body, "position") : "below";
    if (pos == "left") {
      e.position = InsertPosition::Left;
    } else if (pos == "right") {
      e.position = InsertPosition::Right;
    } else if (pos == "below") {
      e.position = InsertPosition::Below;
    } else {
      fail(ErrorCode::InvalidRequest, "position must be left|right|below");
    }
    if (!body.contains("node")) fail(ErrorCode::InvalidRequest, "insert needs a \"node\"");
    e.node = wire::node_from_json(body["node"]);
  } else if (op == "remove") {
    e.op = TreeEdit::Op::Remove;
  } else if (op == "shift") {
    e.op = TreeEdit::Op::Shift;
    const std::string dir = field(body, "direction");
    if (dir == "left") {
      e.direction = ShiftDirection::Left;
    } else if (dir == "right") {
      e.direction = ShiftDirection::Right;
    } else {
      fail(ErrorCode::InvalidRequest, "direction must be left|right");
    }
  } else if (op == "set_label") {
    e.op = TreeEdit::Op::SetLabel;
    e.label = field(body, "label");
  } else {
    fail(ErrorCode::InvalidRequest, "unknown edit op '" + op + "'");
  }
  return e;
}

inline void send_json(httplib::Response& res, const wire::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

}  // namespace detail

class HttpApi {
 public:
  explicit HttpApi(SessionService& service, std::optional<std::filesystem::path> static_dir = std::nullopt)
      : service_(service) {
    // SO_REUSEADDR only; httplib's default SO_REUSEPORT lets two servers share a port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
    if (static_dir && !server_.set_mount_point("/", static_dir->string())) {
      fail(ErrorCode::InvalidRequest, "static directory " + static_dir->string() + " does not exist");
    }
  }

  httplib::Server& server() { return server_; }

  /// Binds to a free port and returns it, or -1.
  int bind_any_port(const std::string& host = "127.0.0.1") { return server_.bind_to_any_port(host); }
  bool bind(const std::string& host, int port) { return server_.bind_to_port(host, port); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() const { server_.wait_until_ready(); }

 private:
  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Wraps a handler so every failure becomes an error envelope.
  static httplib::Server::Handler guarded(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        detail::send_json(res, wire::error_envelope(e.code(), e.what()), http_status(e.code()));
      } catch (const wire::json::exception& e) {
        detail::send_json(res, wire::error_envelope(ErrorCode::InvalidRequest, e.what()), 400);
      } catch (const std::exception& e) {
        detail::send_json(res, {{"error", {{"code", "Internal"}, {"message", e.what()}}}}, 500);
      }
    };
  }

  void session_route(const std::string& method, const std::string& suffix,
                     std::function<wire::json(const std::string&, const httplib::Request&)> fn) {
    const std::string pattern = "/sessions/([^/]+)" + suffix;
    auto h = guarded([fn = std::move(fn)](const httplib::Request& req, httplib::Response& res) {
      detail::send_json(res, fn(req.matches[1].str(), req));
    });
    if (method == "GET") {
      server_.Get(pattern, h);
    } else {
      server_.Post(pattern, h);
    }
  }

  void routes() {
    server_.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      detail::send_json(res, {{"status", "ok"}});
    });
    server_.Post("/sessions", guarded([this](const httplib::Request&, httplib::Response& res) {
      detail::send_json(res, {{"session_id", service_.create_session()}}, 201);
    }));

    auto& svc = service_;
    session_route("GET", "", [&svc](const std::string& id, const httplib::Request&) {
      return wire::session_payload(svc.state(id));
    });
    session_route("POST", "/log", [&svc](const std::string& id, const httplib::Request& req) {
      std::string name = req.is_multipart_form_data() && !req.files.empty() ? req.files.begin()->second.filename : "";
      const auto s = svc.upload_log(id, detail::upload_bytes(req), std::move(name));
      auto out = wire::variants_to_json(s);
      out["session_id"] = id;
      return out;
    });
    session_route("GET", "/variants", [&svc](const std::string& id, const httplib::Request&) {
      const auto s = svc.state(id);
      if (!s.log) fail(ErrorCode::NoLog, "no event log loaded");
      return wire::variants_to_json(s);
    });
    session_route("POST", "/discover", [&svc](const std::string& id, const httplib::Request& req) {
      return wire::session_payload(svc.discover_initial(id, wire::ids_from_json(detail::parse_body(req))));
    });
    session_route("POST", "/extend", [&svc](const std::string& id, const httplib::Request& req) {
      return wire::session_payload(svc.extend_model(id, wire::ids_from_json(detail::parse_body(req))));
    });
    session_route("POST", "/tree/edit", [&svc](const std::string& id, const httplib::Request& req) {
      return wire::session_payload(svc.edit_tree(id, detail::edit_from_json(detail::parse_body(req))));
    });
    session_route("POST", "/conformance", [&svc](const std::string& id, const httplib::Request&) {
      const auto s = svc.conformance_check(id);
      return wire::json{{"verdicts", wire::verdicts_to_json(s)}};
    });
    session_route("POST", "/undo", [&svc](const std::string& id, const httplib::Request&) {
      return wire::session_payload(svc.undo(id));
    });
    session_route("POST", "/redo", [&svc](const std::string& id, const httplib::Request&) {
      return wire::session_payload(svc.redo(id));
    });
    session_route("POST", "/tree/import", [&svc](const std::string& id, const httplib::Request& req) {
      if (req.get_header_value("Content-Type").starts_with("application/json")) {
        const auto body = detail::parse_body(req);
        if (!body.contains("tree")) fail(ErrorCode::InvalidRequest, "expected {\"tree\": {...}}");
        return wire::session_payload(svc.import_tree(id, wire::tree_from_json(body["tree"])));
      }
      return wire::session_payload(svc.import_tree(id, std::string_view(detail::upload_bytes(req))));
    });
    session_route("GET", "/activities", [&svc](const std::string& id, const httplib::Request&) {
      wire::json rows = wire::json::array();
      for (const auto& a : svc.activities(id)) {
        rows.push_back({{"activity", a.activity}, {"count", a.count}, {"in_model", a.in_model}});
      }
      return wire::json{{"activities", std::move(rows)}};
    });
    server_.Get("/sessions/([^/]+)/export", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const std::string format = req.has_param("format") ? req.get_param_value("format") : "ptml";
      const std::string body = service_.export_model(req.matches[1].str(), format);
      res.set_header("Content-Disposition", "attachment; filename=\"model." + format + "\"");
      res.set_content(body, "application/xml");
    }));
  }

  SessionService& service_;
  httplib::Server server_;
};

}  // namespace itree
