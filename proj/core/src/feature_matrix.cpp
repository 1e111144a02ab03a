#include "tabaudit/feature_matrix.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "tabaudit/csv.hpp"
#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

namespace tabaudit {

static_assert(std::endian::native == std::endian::little, "feature files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'A', 'B', 'F', 'E', 'A', 'T', '1'};

template <typename T>
void put(std::string& out, T value) {
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

void put_string(std::string& out, const std::string& s) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    out += s;
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    template <typename T>
    T get() {
        need(sizeof(T));
        T value;
        std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string() {
        const auto len = get<std::uint32_t>();
        need(len);
        std::string s = bytes_.substr(pos_, len);
        pos_ += len;
        return s;
    }

    void get_bytes(void* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, bytes_.data() + pos_, n);
        pos_ += n;
    }

    [[nodiscard]] bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n) const {
        if (pos_ + n > bytes_.size()) {
            throw InputError("feature file truncated");
        }
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

} // namespace

FeatureMatrix FeatureMatrix::select(const std::vector<std::size_t>& indices) const {
    FeatureMatrix out;
    out.schema = schema;
    out.version = version;
    out.values = values.select_rows(indices);
    out.origins.reserve(indices.size());
    for (auto i : indices) {
        out.origins.push_back(origins.at(i));
    }
    return out;
}

void require_compatible(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.schema != b.schema) {
        throw DomainError("feature schema mismatch: '" + std::string(schema_info(a.schema).name) + "' vs '" +
                          std::string(schema_info(b.schema).name) + "'");
    }
    if (a.version != b.version) {
        throw DomainError("feature version mismatch: '" + a.version + "' vs '" + b.version + "'");
    }
    if (a.dim() != b.dim()) {
        throw DomainError("feature dimension mismatch");
    }
}

FeatureMatrix featurize_corpus(const CorpusHandle& corpus, SchemaId schema, const FeatureOptions& options,
                               unsigned workers, FeaturizeReport* report) {
    const auto& info = schema_info(schema);
    std::vector<std::vector<FeatureVector>> per_table(corpus.size());
    std::vector<std::string> errors(corpus.size());
    parallel_for(corpus.size(), workers, [&](std::size_t i) {
        try {
            per_table[i] = table_features(schema, *corpus.table(i), options);
            for (const auto& fv : per_table[i]) {
                for (double v : fv.values) {
                    if (!std::isfinite(v)) {
                        throw DomainError("non-finite feature value");
                    }
                }
            }
        } catch (const Error& e) {
            per_table[i].clear();
            errors[i] = e.what();
        }
    });

    FeaturizeReport local;
    local.tables_attempted = corpus.size() + corpus.skipped().size();
    local.skipped = corpus.skipped();
    FeatureMatrix m;
    m.schema = schema;
    m.version = options.version();
    m.values = DenseMatrix(0, info.dim);
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        if (!errors[i].empty()) {
            local.skipped.push_back({corpus.manifest()[i].source_id, errors[i]});
            continue;
        }
        for (auto& fv : per_table[i]) {
            m.values.append_row(fv.values);
            m.origins.push_back(std::move(fv.origin));
        }
    }
    const double skip_share = local.tables_attempted == 0
                                  ? 0.0
                                  : static_cast<double>(local.skipped.size()) /
                                        static_cast<double>(local.tables_attempted);
    if (report) {
        *report = local;
    }
    if (skip_share > kMaxSkipFraction) {
        throw InputError("featurize_corpus: " + std::to_string(local.skipped.size()) + " of " +
                         std::to_string(local.tables_attempted) + " tables skipped (limit 10%)");
    }
    return m;
}

std::string serialize_feature_matrix(const FeatureMatrix& m) {
    std::string out;
    out.append(kMagic, sizeof(kMagic));
    put_string(out, std::string(schema_info(m.schema).name));
    put_string(out, m.version);
    put<std::uint64_t>(out, m.dim());
    put<std::uint64_t>(out, m.rows());
    const auto& data = m.values.data();
    out.append(reinterpret_cast<const char*>(data.data()), data.size() * sizeof(double));
    for (const auto& o : m.origins) {
        put_string(out, o.source_id);
        put<std::int64_t>(out, o.column);
    }
    return out;
}

FeatureMatrix deserialize_feature_matrix(const std::string& bytes) {
    Reader in(bytes);
    char magic[sizeof(kMagic)];
    in.get_bytes(magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw InputError("not a tabaudit feature file (bad magic)");
    }
    FeatureMatrix m;
    const auto name = in.get_string();
    const auto schema = parse_schema(name);
    if (!schema) {
        throw InputError("feature file names unknown schema '" + name + "'");
    }
    m.schema = *schema;
    m.version = in.get_string();
    const auto dim = in.get<std::uint64_t>();
    const auto rows = in.get<std::uint64_t>();
    if (dim != schema_info(m.schema).dim) {
        throw InputError("feature file dimension does not match schema '" + name + "'");
    }
    std::vector<double> data(rows * dim);
    in.get_bytes(data.data(), data.size() * sizeof(double));
    m.values = DenseMatrix(rows, dim, std::move(data));
    m.origins.reserve(rows);
    for (std::uint64_t r = 0; r < rows; ++r) {
        FeatureOrigin o;
        o.source_id = in.get_string();
        o.column = static_cast<long>(in.get<std::int64_t>());
        m.origins.push_back(std::move(o));
    }
    if (!in.done()) {
        throw InputError("feature file has trailing bytes");
    }
    return m;
}

void write_feature_matrix(const FeatureMatrix& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot write '" + path.string() + "'");
    }
    const auto bytes = serialize_feature_matrix(m);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw InputError("write failure on '" + path.string() + "'");
    }
}

FeatureMatrix read_feature_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path.string() + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_feature_matrix(buf.str());
}

std::string feature_matrix_to_csv(const FeatureMatrix& m) {
    FeatureOptions options;
    if (auto pos = m.version.find("+drop="); pos != std::string::npos) {
        if (auto f = parse_scalar_field(m.version.substr(pos + 6))) {
            options.dropped_scalar = *f;
        }
    }
    csv::Record header{"source_id", "column"};
    for (auto& n : feature_names(m.schema, options)) {
        header.push_back(std::move(n));
    }
    std::string out = csv::join(header, ',') + "\n";
    csv::Record fields(header.size());
    for (std::size_t r = 0; r < m.rows(); ++r) {
        fields[0] = m.origins[r].source_id;
        fields[1] = std::to_string(m.origins[r].column);
        auto row = m.values.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) {
            fields[2 + j] = format_double(row[j]);
        }
        out += csv::join(fields, ',') + "\n";
    }
    return out;
}

} // namespace tabaudit
