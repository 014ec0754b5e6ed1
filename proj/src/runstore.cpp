#include "flowcast/runstore.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <random>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "flowcast/error.hpp"
#include "flowcast/version.hpp"

namespace flowcast::runstore {
namespace {

using json = nlohmann::json;

std::string utc_now(const char* format) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, format, &tm);
    return buf;
}

std::string random_suffix() {
    static thread_local std::mt19937_64 gen{std::random_device{}() ^
                                            static_cast<std::uint64_t>(std::chrono::steady_clock::now().time_since_epoch().count())};
    std::ostringstream out;
    out << std::hex << (gen() & 0xffffffffffULL);
    auto s = out.str();
    return std::string(10 - s.size(), '0') + s;
}

bool safe_name(const std::string& name) {
    return !name.empty() && name != "." && name != ".." && name.find('/') == std::string::npos &&
           name.find('\\') == std::string::npos;
}

}  // namespace

std::string RunManifest::to_json() const {
    json j;
    j["run_id"] = run_id;
    j["created_at"] = created_at;
    j["params"] = params;
    json m = json::object();
    for (const auto& [k, v] : metrics) m[k] = v;
    j["metrics"] = m;
    j["artifact_paths"] = artifact_paths;
    j["code_fingerprint"] = code_fingerprint;
    j["complete"] = complete;
    j["status"] = status;
    j["failed_stage"] = failed_stage;
    j["error"] = error;
    return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(const std::string& text) {
    try {
        const auto j = json::parse(text);
        RunManifest m;
        m.run_id = j.at("run_id").get<std::string>();
        m.created_at = j.at("created_at").get<std::string>();
        m.params = j.at("params").get<std::map<std::string, std::string>>();
        m.metrics = j.at("metrics").get<std::map<std::string, double>>();
        m.artifact_paths = j.at("artifact_paths").get<std::vector<std::string>>();
        m.code_fingerprint = j.at("code_fingerprint").get<std::string>();
        m.complete = j.at("complete").get<bool>();
        m.status = j.value("status", m.complete ? "ok" : "running");
        m.failed_stage = j.value("failed_stage", "");
        m.error = j.value("error", "");
        return m;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::bad_format, std::string("manifest: ") + e.what());
    }
}

void write_atomic(const fs::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << content;
        out.flush();
        if (!out) throw Error(ErrorCode::io, "cannot write " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::io, "cannot rename onto " + path.string() + ": " + ec.message());
}

Run Run::open(const fs::path& root, std::map<std::string, std::string> params) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw Error(ErrorCode::io, "cannot create run root " + root.string() + ": " + ec.message());
    for (int attempt = 0; attempt < 16; ++attempt) {
        const auto id = utc_now("%Y%m%dT%H%M%SZ") + "-" + random_suffix();
        const auto dir = root / id;
        if (!fs::create_directory(dir, ec)) {
            if (ec) throw Error(ErrorCode::io, "cannot create " + dir.string() + ": " + ec.message());
            continue;  // already taken
        }
        RunManifest m;
        m.run_id = id;
        m.created_at = utc_now("%Y-%m-%dT%H:%M:%SZ");
        m.params = std::move(params);
        m.code_fingerprint = std::string(code_fingerprint());
        Run run(dir, std::move(m));
        run.write_manifest();
        return run;
    }
    throw Error(ErrorCode::io, "could not allocate a unique run id");
}

void Run::require_open() const {
    if (closed_) throw Error(ErrorCode::closed_run, "run " + id() + " is already finalized");
}

void Run::write_manifest() const { write_atomic(dir_ / "manifest.json", manifest_.to_json()); }

void Run::set_param(const std::string& key, const std::string& value) {
    require_open();
    manifest_.params[key] = value;
}

void Run::log_metric(const std::string& key, double value) {
    require_open();
    manifest_.metrics[key] = value;
}

std::string Run::log_artifact(const std::string& name, std::span<const std::uint8_t> bytes) {
    require_open();
    if (!safe_name(name)) throw Error(ErrorCode::bad_parameter, "bad artifact name '" + name + "'");
    std::error_code ec;
    fs::create_directories(dir_ / "artifacts", ec);
    if (ec) throw Error(ErrorCode::io, "cannot create artifacts directory: " + ec.message());
    const auto rel = "artifacts/" + name;
    write_atomic(dir_ / rel, std::string(bytes.begin(), bytes.end()));
    if (std::find(manifest_.artifact_paths.begin(), manifest_.artifact_paths.end(), rel) ==
        manifest_.artifact_paths.end()) {
        manifest_.artifact_paths.push_back(rel);
        std::sort(manifest_.artifact_paths.begin(), manifest_.artifact_paths.end());
    }
    return rel;
}

std::string Run::log_artifact(const std::string& name, const std::string& text) {
    return log_artifact(name, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

RunManifest Run::finalize() {
    require_open();
    manifest_.complete = true;
    manifest_.status = "ok";
    write_manifest();
    closed_ = true;
    return manifest_;
}

RunManifest Run::fail(const std::string& stage, const std::string& message) {
    require_open();
    manifest_.complete = true;
    manifest_.status = "failed";
    manifest_.failed_stage = stage;
    manifest_.error = message;
    write_manifest();
    closed_ = true;
    return manifest_;
}

std::vector<RunManifest> list_runs(const fs::path& root) {
    std::vector<RunManifest> runs;
    std::error_code ec;
    if (!fs::is_directory(root, ec)) return runs;
    for (const auto& entry : fs::directory_iterator(root, ec)) {
        const auto path = entry.path() / "manifest.json";
        std::ifstream in(path, std::ios::binary);
        if (!in) continue;
        std::stringstream buf;
        buf << in.rdbuf();
        try {
            auto m = RunManifest::from_json(buf.str());
            if (m.complete) runs.push_back(std::move(m));
        } catch (const Error&) {
        }
    }
    std::sort(runs.begin(), runs.end(), [](const auto& a, const auto& b) {
        return std::tie(a.created_at, a.run_id) < std::tie(b.created_at, b.run_id);
    });
    return runs;
}

RunManifest show_run(const fs::path& root, const std::string& run_id) {
    if (!safe_name(run_id)) throw Error(ErrorCode::io, "no run " + run_id);
    std::ifstream in(root / run_id / "manifest.json", std::ios::binary);
    if (!in) throw Error(ErrorCode::io, "no run " + run_id);
    std::stringstream buf;
    buf << in.rdbuf();
    auto m = RunManifest::from_json(buf.str());
    if (!m.complete) throw Error(ErrorCode::io, "run " + run_id + " is incomplete");
    return m;
}

}  // namespace flowcast::runstore
