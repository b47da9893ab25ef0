#pragma once

// REST surface of the trial-conduct service.
//
//   POST   /api/trials               {config, seed?}                -> 201 trial view
//   GET    /api/trials                                              -> 200 [trial summary]
//   GET    /api/trials/{id}                                         -> 200 trial view
//   POST   /api/trials/{id}/cohorts  {dose, patients, dlts, override?} -> 200 trial view + decision
//   DELETE /api/trials/{id}                                         -> 204
//
// Errors are {"error": message} with 400 (malformed body), 404 (unknown
// trial), 409 (trial not active) or 422 (invalid config or counts).

#include <filesystem>
#include <optional>

#include <httplib.h>

#include "abc/conduct.hpp"

namespace abc::http {

// Registers the API routes on `server`. When `static_dir` is set, its files
// are served at /.
void install_routes(httplib::Server& server, TrialStore& store,
                    const std::optional<std::filesystem::path>& static_dir = std::nullopt);

}  // namespace abc::http
