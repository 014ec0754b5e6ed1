#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace flowcast::runstore {

namespace fs = std::filesystem;

struct RunManifest {
    std::string run_id;
    std::string created_at;  ///< ISO 8601, UTC
    std::map<std::string, std::string> params;
    std::map<std::string, double> metrics;
    std::vector<std::string> artifact_paths;  ///< relative to the run directory
    std::string code_fingerprint;
    bool complete = false;
    std::string status = "running";  ///< running, ok or failed
    std::string failed_stage;
    std::string error;

    std::string to_json() const;  ///< sorted keys, two-space indent
    static RunManifest from_json(const std::string& text);
};

/**
 * @brief Handle on one run directory.
 *
 * open() writes a draft manifest (complete = false). finalize() or fail()
 * replaces it atomically and closes the handle; any later call raises
 * ErrorCode::closed_run.
 */
class Run {
public:
    static Run open(const fs::path& root, std::map<std::string, std::string> params);

    const std::string& id() const noexcept { return manifest_.run_id; }
    const fs::path& dir() const noexcept { return dir_; }
    bool closed() const noexcept { return closed_; }

    void set_param(const std::string& key, const std::string& value);
    void log_metric(const std::string& key, double value);
    /// Stores bytes as artifacts/<name> and returns the path relative to the run.
    std::string log_artifact(const std::string& name, std::span<const std::uint8_t> bytes);
    std::string log_artifact(const std::string& name, const std::string& text);

    RunManifest finalize();
    RunManifest fail(const std::string& stage, const std::string& message);

    const RunManifest& manifest() const noexcept { return manifest_; }

private:
    Run(fs::path dir, RunManifest manifest) : dir_(std::move(dir)), manifest_(std::move(manifest)) {}
    void require_open() const;
    void write_manifest() const;

    fs::path dir_;
    RunManifest manifest_;
    bool closed_ = false;
};

/// Complete runs under `root`, oldest first. Drafts and unreadable manifests are skipped.
std::vector<RunManifest> list_runs(const fs::path& root);

/// Throws io when the run is missing or incomplete.
RunManifest show_run(const fs::path& root, const std::string& run_id);

/// Writes `content` to `path` via a temporary file and rename.
void write_atomic(const fs::path& path, const std::string& content);

}  // namespace flowcast::runstore
