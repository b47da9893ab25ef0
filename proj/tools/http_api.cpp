#include "http_api.hpp"

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "abc/errors.hpp"
#include "abc/json_io.hpp"

namespace abc::http {

namespace {

using nlohmann::json;

constexpr const char* kJson = "application/json";

class BadRequest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void send(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send(res, status, json{{"error", message}});
}

json parse_body(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw BadRequest("request body is not valid JSON");
  if (!body.is_object()) throw BadRequest("request body must be a JSON object");
  return body;
}

int required_int(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end()) throw BadRequest(std::string("missing field '") + key + "'");
  if (!it->is_number_integer()) throw BadRequest(std::string("field '") + key + "' must be an integer");
  return it->get<int>();
}

std::optional<std::uint64_t> optional_seed(const json& body) {
  const auto it = body.find("seed");
  if (it == body.end() || it->is_null()) return std::nullopt;
  if (it->is_number_unsigned()) return it->get<std::uint64_t>();
  if (it->is_string()) {
    const auto& s = it->get_ref<const std::string&>();
    std::size_t used = 0;
    try {
      const auto v = std::stoull(s, &used);
      if (used == s.size() && !s.empty() && s.front() != '-') return v;
    } catch (const std::exception&) {
    }
  }
  throw BadRequest("field 'seed' must be a non-negative integer or a decimal string");
}

// Runs `fn` and maps domain exceptions to HTTP statuses.
template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    fn();
  } catch (const BadRequest& e) {
    send_error(res, 400, e.what());
  } catch (const json::exception& e) {
    send_error(res, 400, e.what());
  } catch (const TrialNotFound& e) {
    send_error(res, 404, e.what());
  } catch (const TrialConflict& e) {
    send_error(res, 409, e.what());
  } catch (const ConfigError& e) {
    send_error(res, 422, e.what());
  } catch (const CountError& e) {
    send_error(res, 422, e.what());
  } catch (const std::exception& e) {
    send_error(res, 500, e.what());
  }
}

}  // namespace

void install_routes(httplib::Server& server, TrialStore& store,
                    const std::optional<std::filesystem::path>& static_dir) {
  server.Post("/api/trials", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      const auto cfg = body.find("config");
      if (cfg == body.end() || !cfg->is_object()) throw BadRequest("missing object field 'config'");
      for (const auto& [key, _] : body.items()) {
        if (key != "config" && key != "seed") throw BadRequest("unknown field '" + key + "'");
      }
      const TrialConfig config = config_from_json(*cfg);
      const TrialRecord record = store.create(config, optional_seed(body));
      res.set_header("Location", "/api/trials/" + record.id);
      send(res, 201, trial_view(record));
    });
  });

  server.Get("/api/trials", [&store](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] {
      json out = json::array();
      for (const auto& r : store.list()) out.push_back(trial_summary(r));
      send(res, 200, out);
    });
  });

  server.Get(R"(/api/trials/([0-9a-fA-F]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { send(res, 200, trial_view(store.get(req.matches[1]))); });
  });

  server.Delete(R"(/api/trials/([0-9a-fA-F]+))", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      store.remove(req.matches[1]);
      res.status = 204;
    });
  });

  server.Post(R"(/api/trials/([0-9a-fA-F]+)/cohorts)",
              [&store](const httplib::Request& req, httplib::Response& res) {
                guarded(res, [&] {
                  const json body = parse_body(req);
                  CohortRequest cohort;
                  cohort.dose = required_int(body, "dose");
                  cohort.patients = required_int(body, "patients");
                  cohort.dlts = required_int(body, "dlts");
                  if (const auto it = body.find("override"); it != body.end()) {
                    if (!it->is_boolean()) throw BadRequest("field 'override' must be a boolean");
                    cohort.override_dose = it->get<bool>();
                  }
                  const TrialRecord record = store.post_cohort(req.matches[1], cohort);
                  json view = trial_view(record);
                  view["decision"] = view["history"].back();
                  send(res, 200, view);
                });
              });

  // Unmatched /api paths get a JSON 404 instead of the static fallback.
  server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (req.path.rfind("/api/", 0) == 0 && res.body.empty()) {
      send_error(res, res.status, "no route for " + req.method + " " + req.path);
    }
  });

  if (static_dir) server.set_mount_point("/", static_dir->string());
}

}  // namespace abc::http
