#include "tabaudit/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "tabaudit/error.hpp"
#include "tabaudit/parallel.hpp"

namespace tabaudit {

namespace {

/// Row indices sorted by (value, index).
std::vector<std::size_t> rank_order(const std::vector<double>& values) {
    std::vector<std::size_t> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    return idx;
}

std::string slot_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "syn_%05zu", i);
    return buf;
}

Table resample_rows(const Table& source, std::string source_id, Rng& rng) {
    const std::size_t n = source.n_rows();
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<std::size_t> rows(n);
    for (auto& r : rows) {
        r = pick(rng);
    }
    std::vector<Column> cols;
    cols.reserve(source.n_cols());
    for (const auto& c : source.columns()) {
        if (c.has_magnitudes()) {
            std::vector<double> v(n);
            for (std::size_t i = 0; i < n; ++i) {
                v[i] = c.numbers()[rows[i]];
            }
            cols.push_back(Column::from_numbers(c.name(), std::move(v)));
        } else {
            std::vector<std::int32_t> codes(n);
            for (std::size_t i = 0; i < n; ++i) {
                codes[i] = c.codes()[rows[i]];
            }
            cols.push_back(Column::from_tokens(c.name(), std::move(codes), c.dictionary()));
        }
    }
    return Table(std::move(source_id), std::move(cols));
}

} // namespace

void GenerationRequest::validate() const {
    theta.validate();
    if (n_cols < 2) {
        throw DomainError("generation request: n_cols must be >= 2 (features plus target)");
    }
    if (n_cols < theta.min_cols || n_cols > theta.max_cols) {
        throw DomainError("generation request: n_cols = " + std::to_string(n_cols) + " outside [" +
                          std::to_string(theta.min_cols) + ", " + std::to_string(theta.max_cols) + "]");
    }
    if (n_rows < 2) {
        throw DomainError("generation request: n_rows must be >= 2");
    }
    if (theta.balanced && n_rows < static_cast<std::size_t>(theta.max_classes)) {
        throw DomainError("generation request: balanced targets need n_rows >= max_classes");
    }
}

ScmGraph build_scm(const GenerationRequest& req, Rng& rng) {
    const std::size_t n_feat = req.n_cols - 1;
    const std::size_t n_nodes = n_feat + 1 + (n_feat + 1) / 2;
    ScmGraph g = sample_dag(n_nodes, rng);
    std::uniform_real_distribution<double> log_noise(std::log(0.01), std::log(1.0));
    for (auto node : g.order) {
        if (!g.parents[node].empty()) {
            g.mechanisms[node] = sample_mechanism(req.theta, g.parents[node].size(), rng);
        }
        g.noise_scale[node] = std::exp(log_noise(rng));
    }
    std::vector<std::size_t> perm(n_nodes);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const auto target_it = std::find_if(perm.begin(), perm.end(), [&](std::size_t v) { return !g.is_root(v); });
    g.target = *target_it;
    for (auto v : perm) {
        if (v != g.target && g.observed.size() < n_feat) {
            g.observed.push_back(v);
        }
    }
    return g;
}

std::vector<double> quantile_codes(const std::vector<double>& values, std::size_t levels) {
    if (levels < 1) {
        throw DomainError("quantile_codes: need at least one level");
    }
    const std::size_t n = values.size();
    std::vector<double> codes(n);
    const auto order = rank_order(values);
    for (std::size_t pos = 0; pos < n; ++pos) {
        codes[order[pos]] = static_cast<double>(pos * levels / n);
    }
    return codes;
}

std::vector<int> discretize_target(const std::vector<double>& values, const std::vector<std::vector<double>>& context,
                                   int n_classes, bool ordered, bool balanced, Rng& rng) {
    const std::size_t n = values.size();
    if (n_classes < 2 || static_cast<std::size_t>(n_classes) > n) {
        throw DomainError("discretize_target: need 2 <= classes <= rows");
    }
    const auto c = static_cast<std::size_t>(n_classes);
    std::vector<int> cls(n);
    if (ordered) {
        const auto order = rank_order(values);
        for (std::size_t pos = 0; pos < n; ++pos) {
            cls[order[pos]] = static_cast<int>(pos * c / n);
        }
    } else {
        // Nearest of c centres drawn from the rows, in (value, parents) space.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<std::size_t> centres(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(c));
        std::vector<int> label(c);
        std::iota(label.begin(), label.end(), 0);
        std::shuffle(label.begin(), label.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double best_d = INFINITY;
            for (std::size_t k = 0; k < c; ++k) {
                const std::size_t ctr = centres[k];
                double d = (values[i] - values[ctr]) * (values[i] - values[ctr]);
                for (const auto& col : context) {
                    d += (col[i] - col[ctr]) * (col[i] - col[ctr]);
                }
                if (d < best_d) {
                    best_d = d;
                    best = k;
                }
            }
            cls[i] = label[best];
        }
        // Compact to 0..k-1 in case two centres coincided.
        std::vector<int> used(c, -1);
        for (int v : cls) {
            used[static_cast<std::size_t>(v)] = 1;
        }
        int next = 0;
        for (auto& u : used) {
            if (u == 1) {
                u = next++;
            }
        }
        for (int& v : cls) {
            v = used[static_cast<std::size_t>(v)];
        }
    }
    if (balanced) {
        const std::size_t k = static_cast<std::size_t>(*std::max_element(cls.begin(), cls.end())) + 1;
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (cls[a] != cls[b]) {
                return cls[a] < cls[b];
            }
            return values[a] < values[b];
        });
        for (std::size_t pos = 0; pos < n; ++pos) {
            cls[idx[pos]] = static_cast<int>(pos * k / n);
        }
    }
    return cls;
}

Table generate_table(const GenerationRequest& req, std::string source_id) {
    req.validate();
    Rng rng(req.seed);
    const ScmGraph graph = build_scm(req, rng);
    const auto values = evaluate_scm(graph, req.n_rows, rng);

    const int n_classes = std::uniform_int_distribution<int>(2, req.theta.max_classes)(rng);
    const bool ordered = std::bernoulli_distribution(req.theta.p_ordered)(rng);
    std::vector<std::vector<double>> context;
    for (auto p : graph.parents[graph.target]) {
        context.push_back(values[p]);
    }
    const auto cls = discretize_target(values[graph.target], context,
                                       std::min<int>(n_classes, static_cast<int>(req.n_rows)), ordered,
                                       req.theta.balanced, rng);

    std::bernoulli_distribution categorical(req.theta.p_categorical);
    std::uniform_int_distribution<std::size_t> level_count(2, kMaxCategoricalLevels);
    std::vector<Column> cols;
    cols.reserve(req.n_cols);
    for (std::size_t k = 0; k < graph.observed.size(); ++k) {
        const auto& v = values[graph.observed[k]];
        const bool make_categorical = categorical(rng);
        std::size_t levels = level_count(rng);
        std::string name = "f" + std::to_string(k);
        if (make_categorical) {
            while (levels > 2 && static_cast<double>(levels) >= kCategoricalKappa * static_cast<double>(req.n_rows)) {
                --levels;
            }
            cols.push_back(Column::from_numbers(std::move(name), quantile_codes(v, levels)));
        } else {
            cols.push_back(Column::from_numbers(std::move(name), v));
        }
    }
    cols.push_back(Column::from_numbers("target", std::vector<double>(cls.begin(), cls.end())));
    return Table(std::move(source_id), std::move(cols));
}

ColumnCountSampler::ColumnCountSampler(std::vector<std::size_t> counts) : counts_(std::move(counts)) {
    if (counts_.empty()) {
        throw DomainError("column count sampler: no observed counts");
    }
    min_ = *std::min_element(counts_.begin(), counts_.end());
    max_ = *std::max_element(counts_.begin(), counts_.end());
}

ColumnCountSampler ColumnCountSampler::from_features(const FeatureMatrix& full) {
    if (full.schema != SchemaId::Full) {
        throw DomainError("column count sampler: needs full-schema features");
    }
    if (full.rows() == 0) {
        throw DomainError("column count sampler: empty feature matrix");
    }
    std::vector<std::size_t> counts(full.rows());
    for (std::size_t i = 0; i < full.rows(); ++i) {
        counts[i] = static_cast<std::size_t>(std::llround(full.values(i, 0)));
    }
    return ColumnCountSampler(std::move(counts));
}

std::size_t ColumnCountSampler::operator()(Rng& rng) const {
    return counts_[std::uniform_int_distribution<std::size_t>(0, counts_.size() - 1)(rng)];
}

RowCountSampler::RowCountSampler(std::size_t lo, std::size_t hi) : lo_(lo), hi_(hi) {
    if (lo < 2 || lo > hi) {
        throw DomainError("row count sampler: need 2 <= lo <= hi");
    }
}

std::size_t RowCountSampler::operator()(Rng& rng) const {
    std::uniform_real_distribution<double> u(std::log(static_cast<double>(lo_)),
                                              std::log(static_cast<double>(hi_) + 1.0));
    const auto v = static_cast<std::size_t>(std::floor(std::exp(u(rng))));
    return std::clamp(v, lo_, hi_);
}

CorpusHandle generate_corpus(const PriorConfig& theta, std::size_t n_tables, const ColumnCountSampler& cols,
                             const RowCountSampler& rows, std::uint64_t master_seed, unsigned workers,
                             const ReplayOptions& replay, CorpusGenerationStats* stats) {
    theta.validate();
    struct Slot {
        GenerationRequest req;
        bool replay = false;
        std::uint64_t pick = 0;
        std::uint64_t resample_seed = 0;
    };
    std::vector<Slot> slots(n_tables);
    for (std::size_t i = 0; i < n_tables; ++i) {
        Rng rng(derive_seed(master_seed, i));
        auto& s = slots[i];
        s.req.theta = theta;
        s.req.n_cols = cols(rng);
        s.req.n_rows = rows(rng);
        if (theta.balanced) {
            s.req.n_rows = std::max<std::size_t>(s.req.n_rows, static_cast<std::size_t>(theta.max_classes));
        }
        const bool replay_draw = std::bernoulli_distribution(replay.probability)(rng);
        s.replay = theta.replay_small && replay_draw;
        s.pick = rng();
        s.resample_seed = rng();
        s.req.seed = rng();
    }

    std::vector<std::shared_ptr<const Table>> tables(n_tables);
    parallel_for(n_tables, workers, [&](std::size_t i) {
        if (!slots[i].replay) {
            tables[i] = std::make_shared<const Table>(generate_table(slots[i].req, slot_name(i)));
        }
    });

    CorpusGenerationStats local;
    std::vector<std::size_t> small_fresh;
    for (std::size_t i = 0; i < n_tables; ++i) {
        if (slots[i].replay) {
            if (small_fresh.empty()) {
                tables[i] = std::make_shared<const Table>(generate_table(slots[i].req, slot_name(i)));
            } else {
                const auto& source = *tables[small_fresh[slots[i].pick % small_fresh.size()]];
                Rng rng(slots[i].resample_seed);
                tables[i] = std::make_shared<const Table>(resample_rows(source, slot_name(i), rng));
                ++local.replayed;
                continue;
            }
        }
        ++local.fresh;
        if (tables[i]->n_rows() < replay.small_rows) {
            small_fresh.push_back(i);
        }
    }
    if (stats) {
        *stats = local;
    }
    return CorpusHandle::from_tables(std::move(tables));
}

} // namespace tabaudit
