#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hyperlap::cli {

/** @brief Names accepted as the command argument. */
const std::vector<std::string>& command_names();

/**
 * @brief A parsed run request.
 *
 * config is the JSON document from --config (an empty object means all defaults). It must carry
 * "version": 1 when non-empty; keys a command does not read are rejected. seed overrides a "seed" key.
 */
struct RunRequest {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    bool svg = false;
};

struct RunResult {
    nlohmann::json summary;           // also written as <command>_summary.json
    std::vector<std::string> files;   // written paths, in write order
};

/**
 * @brief Runs one command and writes its files into out_dir (created if missing).
 *
 * Every run writes run.json (resolved configuration and seed), a CSV with a header row and <command>_summary.json;
 * --svg adds a log-log plot where the command has a fit. Throws DomainError for bad configurations,
 * ResourceError and AccuracyError from the modules.
 */
RunResult run(const RunRequest& request);

/** @brief Loads a JSON config file; throws DomainError when it is missing or malformed. */
nlohmann::json load_config(const std::string& path);

/** @brief Exit code for the exception currently being handled: 2 usage, 3 resource, 4 accuracy, 1 otherwise. */
int exit_code_for_current_exception();

}  // namespace hyperlap::cli
