#include "run_record.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include <openssl/evp.h>

#include "tabaudit/error.hpp"

namespace tabaudit::cli {

namespace fs = std::filesystem;

namespace {

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
        if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
            throw Error("sha256: digest init failed");
        }
    }

    void update(const void* data, std::size_t n) {
        if (EVP_DigestUpdate(ctx_.get(), data, n) != 1) {
            throw Error("sha256: digest update failed");
        }
    }

    std::string hex() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        if (EVP_DigestFinal_ex(ctx_.get(), md, &len) != 1) {
            throw Error("sha256: digest final failed");
        }
        std::ostringstream out;
        for (unsigned int i = 0; i < len; ++i) {
            out << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
        }
        return out.str();
    }

private:
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    out << content;
    if (!out) {
        throw InputError("write failed for '" + path.string() + "'");
    }
}

} // namespace

std::string sha256_bytes(std::string_view bytes) {
    Sha256 h;
    h.update(bytes.data(), bytes.size());
    return h.hex();
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot read '" + path.string() + "'");
    }
    Sha256 h;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h.update(buf, static_cast<std::size_t>(in.gcount()));
    }
    return h.hex();
}

RunRecord::RunRecord(std::string command, fs::path out_dir) : command_(std::move(command)), dir_(std::move(out_dir)) {
    fs::create_directories(dir_);
}

void RunRecord::add_input(const std::string& role, const fs::path& path) {
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& e : fs::recursive_directory_iterator(path)) {
            if (e.is_regular_file()) {
                files.push_back(e.path());
            }
        }
        std::sort(files.begin(), files.end());
        Sha256 h;
        for (const auto& f : files) {
            const auto rel = fs::relative(f, path).generic_string();
            const auto digest = sha256_file(f);
            h.update(rel.data(), rel.size());
            h.update(digest.data(), digest.size());
        }
        inputs_.push_back({{"role", role}, {"path", path.string()}, {"files", files.size()}, {"sha256", h.hex()}});
        return;
    }
    inputs_.push_back({{"role", role}, {"path", path.string()}, {"sha256", sha256_file(path)}});
}

void RunRecord::write_output(const std::string& name, const std::string& content) {
    write_file(dir_ / name, content);
    outputs_.push_back({{"path", name}, {"bytes", content.size()}, {"sha256", sha256_bytes(content)}});
}

void RunRecord::record_output(const fs::path& relative) {
    const auto full = dir_ / relative;
    outputs_.push_back({{"path", relative.generic_string()},
                        {"bytes", fs::file_size(full)},
                        {"sha256", sha256_file(full)}});
}

void RunRecord::begin_phase(std::string name) {
    end_phase();
    open_phase_ = std::move(name);
    phase_start_ = std::chrono::steady_clock::now();
}

void RunRecord::end_phase() {
    if (open_phase_.empty()) {
        return;
    }
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - phase_start_;
    phases_.push_back({std::move(open_phase_), d.count()});
    open_phase_.clear();
}

void RunRecord::finish(const std::string& status, const std::string& error) {
    end_phase();
    std::ostringstream timings;
    timings << "phase,wall_seconds\n";
    for (const auto& p : phases_) {
        timings << p.name << ',' << p.seconds << '\n';
    }
    write_file(dir_ / "timings.csv", timings.str());

    nlohmann::ordered_json run;
    run["tool"] = kToolVersion;
    run["command"] = command_;
    run["config"] = config_;
    run["inputs"] = inputs_;
    run["outputs"] = outputs_;
    run["notes"] = notes_;
    run["status"] = status;
    if (!error.empty()) {
        run["error"] = error;
    }
    write_file(dir_ / "run.json", run.dump(2) + "\n");
}

} // namespace tabaudit::cli
