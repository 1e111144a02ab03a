#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace tabaudit::cli {

inline constexpr const char* kToolVersion = "tabaudit 0.3.0";

std::string sha256_file(const std::filesystem::path& path);
std::string sha256_bytes(std::string_view bytes);

/// Bookkeeping for one command invocation: resolved config, hashed inputs,
/// written outputs and per-phase wall times. finish() writes run.json.
class RunRecord {
public:
    RunRecord(std::string command, std::filesystem::path out_dir);

    nlohmann::ordered_json& config() { return config_; }
    [[nodiscard]] const std::filesystem::path& dir() const noexcept { return dir_; }

    /// Hashes a file or, for a directory, every regular file under it.
    void add_input(const std::string& role, const std::filesystem::path& path);

    /// Writes `content` to <out>/<name> and records its hash.
    void write_output(const std::string& name, const std::string& content);
    /// Records a file that something else already wrote under the out dir.
    void record_output(const std::filesystem::path& relative);

    void begin_phase(std::string name);
    void end_phase();

    void note(std::string message) { notes_.push_back(std::move(message)); }

    /// Writes timings.csv and run.json. status is "ok" or "error".
    void finish(const std::string& status, const std::string& error = {});

private:
    struct Phase {
        std::string name;
        double seconds = 0.0;
    };

    std::string command_;
    std::filesystem::path dir_;
    nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
    nlohmann::ordered_json inputs_ = nlohmann::ordered_json::array();
    nlohmann::ordered_json outputs_ = nlohmann::ordered_json::array();
    std::vector<std::string> notes_;
    std::vector<Phase> phases_;
    std::string open_phase_;
    std::chrono::steady_clock::time_point phase_start_;
};

} // namespace tabaudit::cli
