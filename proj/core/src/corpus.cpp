#include "tabaudit/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

namespace tabaudit {

namespace fs = std::filesystem;

CorpusHandle CorpusHandle::from_tables(std::vector<std::shared_ptr<const Table>> tables) {
    CorpusHandle c;
    c.storage_ = std::make_shared<Storage>();
    std::set<std::string> ids;
    for (std::size_t i = 0; i < tables.size(); ++i) {
        const auto& t = tables[i];
        if (!t) {
            throw DomainError("CorpusHandle: null table");
        }
        if (!ids.insert(t->source_id()).second) {
            throw DomainError("CorpusHandle: duplicate source_id '" + t->source_id() + "'");
        }
        c.manifest_.push_back({t->source_id(), "", t->n_rows(), t->n_cols()});
        c.slots_.push_back(i);
    }
    c.storage_->tables = std::move(tables);
    return c;
}

CorpusHandle CorpusHandle::from_manifest(std::vector<ManifestEntry> manifest, fs::path root,
                                         LoadOptions options,
                                         std::vector<std::shared_ptr<const Table>> preloaded) {
    CorpusHandle c;
    c.storage_ = std::make_shared<Storage>();
    c.storage_->root = std::move(root);
    c.storage_->options = options;
    if (!preloaded.empty() && preloaded.size() != manifest.size()) {
        throw DomainError("from_manifest: preloaded table count does not match manifest");
    }
    c.storage_->tables = std::move(preloaded);
    c.storage_->tables.resize(manifest.size());
    std::set<std::string> ids;
    for (std::size_t i = 0; i < manifest.size(); ++i) {
        if (!ids.insert(manifest[i].source_id).second) {
            throw DomainError("manifest: duplicate source_id '" + manifest[i].source_id + "'");
        }
        c.slots_.push_back(i);
    }
    c.manifest_ = std::move(manifest);
    return c;
}

std::shared_ptr<const Table> CorpusHandle::table(std::size_t i) const {
    if (i >= manifest_.size()) {
        throw DomainError("CorpusHandle::table: index out of range");
    }
    const std::size_t slot = slots_[i];
    {
        std::lock_guard lock(storage_->mutex);
        if (auto t = storage_->tables[slot]) {
            return t;
        }
    }
    const auto& entry = manifest_[i];
    if (entry.path.empty()) {
        throw InputError("table '" + entry.source_id + "' has no backing file");
    }
    fs::path p(entry.path);
    if (p.is_relative()) {
        p = storage_->root / p;
    }
    auto loaded = std::make_shared<const Table>(load_table(p, entry.source_id, storage_->options));
    std::lock_guard lock(storage_->mutex);
    if (!storage_->tables[slot]) {
        storage_->tables[slot] = loaded;
    }
    return storage_->tables[slot];
}

CorpusHandle CorpusHandle::subset(const std::vector<std::size_t>& indices, std::uint64_t seed) const {
    CorpusHandle c;
    c.storage_ = storage_;
    c.sample_seed_ = seed;
    for (auto i : indices) {
        if (i >= manifest_.size()) {
            throw DomainError("CorpusHandle::subset: index out of range");
        }
        c.manifest_.push_back(manifest_[i]);
        c.slots_.push_back(slots_[i]);
    }
    return c;
}

namespace {

bool is_delimited_file(const fs::path& p) {
    auto ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    return ext == ".csv" || ext == ".tsv" || ext == ".txt";
}

std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    return order;
}

} // namespace

CorpusHandle open_corpus(const fs::path& dir, const LoadOptions& options, unsigned workers) {
    if (!fs::is_directory(dir)) {
        throw InputError("corpus directory '" + dir.string() + "' does not exist");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && is_delimited_file(entry.path())) {
            files.push_back(entry.path());
        }
    }
    std::sort(files.begin(), files.end());

    std::vector<std::shared_ptr<const Table>> tables(files.size());
    std::vector<std::string> errors(files.size());
    parallel_for(files.size(), workers, [&](std::size_t i) {
        const auto id = fs::relative(files[i], dir).generic_string();
        try {
            tables[i] = std::make_shared<const Table>(load_table(files[i], id, options));
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });

    std::vector<ManifestEntry> manifest;
    std::vector<std::shared_ptr<const Table>> loaded;
    std::vector<SkippedEntry> skipped;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto id = fs::relative(files[i], dir).generic_string();
        if (!tables[i]) {
            skipped.push_back({id, errors[i]});
            continue;
        }
        manifest.push_back({id, id, tables[i]->n_rows(), tables[i]->n_cols()});
        loaded.push_back(tables[i]);
    }

    CorpusHandle c = CorpusHandle::from_manifest(std::move(manifest), dir, options, std::move(loaded));
    for (auto& s : skipped) {
        c.add_skipped(std::move(s));
    }
    return c;
}

CorpusHandle sample_corpus(const CorpusHandle& corpus, std::size_t n, std::uint64_t seed) {
    if (n > corpus.size()) {
        throw DomainError("sample_corpus: requested " + std::to_string(n) + " of " +
                          std::to_string(corpus.size()) + " tables");
    }
    auto order = permutation(corpus.size(), seed);
    order.resize(n);
    std::sort(order.begin(), order.end());
    return corpus.subset(order, seed);
}

std::pair<CorpusHandle, CorpusHandle> sample_disjoint(const CorpusHandle& corpus, std::size_t n,
                                                      std::uint64_t seed) {
    if (2 * n > corpus.size()) {
        throw DomainError("sample_disjoint: two samples of " + std::to_string(n) +
                          " exceed corpus size " + std::to_string(corpus.size()));
    }
    auto order = permutation(corpus.size(), seed);
    std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<std::size_t> second(order.begin() + static_cast<std::ptrdiff_t>(n),
                                    order.begin() + static_cast<std::ptrdiff_t>(2 * n));
    std::sort(first.begin(), first.end());
    std::sort(second.begin(), second.end());
    return {corpus.subset(first, seed), corpus.subset(second, seed)};
}

std::string manifest_to_json(const std::vector<ManifestEntry>& manifest) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& e : manifest) {
        arr.push_back({{"source_id", e.source_id}, {"path", e.path}, {"n_rows", e.n_rows}, {"n_cols", e.n_cols}});
    }
    return arr.dump(2) + "\n";
}

std::vector<ManifestEntry> manifest_from_json(const std::string& text) {
    std::vector<ManifestEntry> out;
    try {
        auto arr = nlohmann::json::parse(text);
        if (!arr.is_array()) {
            throw InputError("manifest: expected a JSON array");
        }
        for (const auto& item : arr) {
            out.push_back({item.at("source_id").get<std::string>(), item.at("path").get<std::string>(),
                           item.at("n_rows").get<std::size_t>(), item.at("n_cols").get<std::size_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("manifest: ") + e.what());
    }
    return out;
}

void write_manifest(const std::vector<ManifestEntry>& manifest, const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    out << manifest_to_json(manifest);
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return manifest_from_json(buf.str());
}

std::vector<ManifestEntry> write_corpus(const CorpusHandle& corpus, const fs::path& dir) {
    fs::create_directories(dir);
    std::vector<ManifestEntry> manifest;
    std::set<std::string> used;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        auto table = corpus.table(i);
        std::string stem = fs::path(table->source_id()).stem().string();
        std::replace_if(stem.begin(), stem.end(), [](char ch) { return ch == '/' || ch == '\\'; }, '_');
        if (stem.empty() || used.count(stem)) {
            stem += "_" + std::to_string(i);
        }
        used.insert(stem);
        const std::string file = stem + ".csv";
        write_table(*table, dir / file);
        manifest.push_back({table->source_id(), file, table->n_rows(), table->n_cols()});
    }
    write_manifest(manifest, dir / "manifest.json");
    return manifest;
}

} // namespace tabaudit
