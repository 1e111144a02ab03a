#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "tabaudit/table.hpp"

namespace tabaudit {

struct ManifestEntry {
    std::string source_id;
    std::string path; ///< empty for in-memory tables
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

/// A file that could not be ingested, with the reason.
struct SkippedEntry {
    std::string source_id;
    std::string reason;
};

/// An ordered collection of tables. Tables are loaded on first access when the
/// handle was built from a manifest; loaded tables are shared, never copied.
class CorpusHandle {
public:
    CorpusHandle() = default;

    /// In-memory corpus; manifest derived from the tables in the given order.
    static CorpusHandle from_tables(std::vector<std::shared_ptr<const Table>> tables);

    /// Lazy corpus over an existing manifest. Relative paths resolve against `root`.
    /// `preloaded`, when non-empty, supplies already-parsed tables per entry.
    static CorpusHandle from_manifest(std::vector<ManifestEntry> manifest,
                                      std::filesystem::path root, LoadOptions options,
                                      std::vector<std::shared_ptr<const Table>> preloaded = {});

    [[nodiscard]] std::size_t size() const noexcept { return manifest_.size(); }
    [[nodiscard]] const std::vector<ManifestEntry>& manifest() const noexcept { return manifest_; }
    [[nodiscard]] const std::vector<SkippedEntry>& skipped() const noexcept { return skipped_; }
    [[nodiscard]] std::uint64_t sample_seed() const noexcept { return sample_seed_; }

    /// Table i in manifest order. Thread-safe.
    [[nodiscard]] std::shared_ptr<const Table> table(std::size_t i) const;

    /// Sub-corpus with the given member indices (kept in the given order).
    [[nodiscard]] CorpusHandle subset(const std::vector<std::size_t>& indices, std::uint64_t seed) const;

    void add_skipped(SkippedEntry entry) { skipped_.push_back(std::move(entry)); }

private:
    struct Storage {
        std::filesystem::path root;
        LoadOptions options;
        std::vector<std::shared_ptr<const Table>> tables;
        std::mutex mutex;
    };

    std::vector<ManifestEntry> manifest_;
    std::vector<std::size_t> slots_; ///< index into storage_->tables per manifest entry
    std::vector<SkippedEntry> skipped_;
    std::uint64_t sample_seed_ = 0;
    std::shared_ptr<Storage> storage_;
};

/// Loads every delimited file (.csv, .tsv, .txt) under `dir`, in sorted path
/// order, using up to `workers` threads. Files that fail to parse are listed in
/// skipped() rather than aborting the scan. source_id is the path relative to `dir`.
CorpusHandle open_corpus(const std::filesystem::path& dir, const LoadOptions& options = {},
                         unsigned workers = 1);

/// Uniform sample of n members without replacement, deterministic in seed.
/// Members keep their original relative order. Throws DomainError if n > size.
CorpusHandle sample_corpus(const CorpusHandle& corpus, std::size_t n, std::uint64_t seed);

/// Two disjoint uniform samples of n members each. Throws if 2n > size.
std::pair<CorpusHandle, CorpusHandle> sample_disjoint(const CorpusHandle& corpus, std::size_t n,
                                                      std::uint64_t seed);

/// Manifest as a JSON array of {source_id, path, n_rows, n_cols}.
std::string manifest_to_json(const std::vector<ManifestEntry>& manifest);
std::vector<ManifestEntry> manifest_from_json(const std::string& text);

void write_manifest(const std::vector<ManifestEntry>& manifest, const std::filesystem::path& path);
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);

/// Writes each table as <dir>/<stem>.csv plus <dir>/manifest.json; returns the
/// manifest with paths relative to dir.
std::vector<ManifestEntry> write_corpus(const CorpusHandle& corpus, const std::filesystem::path& dir);

} // namespace tabaudit
