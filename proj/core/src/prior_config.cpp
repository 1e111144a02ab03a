#include "tabaudit/prior_config.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "tabaudit/csv.hpp"
#include "tabaudit/error.hpp"

namespace tabaudit {

namespace {

std::string fmt(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

double parse_real(const std::string& key, std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InputError("prior config: '" + key + "' is not a number");
    }
    return v;
}

long long parse_int(const std::string& key, std::string_view s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InputError("prior config: '" + key + "' is not an integer");
    }
    return v;
}

bool parse_flag(const std::string& key, std::string_view s) {
    if (s == "1" || s == "true") {
        return true;
    }
    if (s == "0" || s == "false") {
        return false;
    }
    throw InputError("prior config: '" + key + "' must be 0 or 1");
}

void check_range(const char* name, double v, double lo, double hi) {
    if (!(v >= lo && v <= hi)) {
        throw DomainError(std::string("prior config: ") + name + " = " + fmt(v) + " outside [" + fmt(lo) + ", " +
                          fmt(hi) + "]");
    }
}

} // namespace

std::string_view to_string(ScmType t) noexcept {
    switch (t) {
    case ScmType::Mlp: return "mlp";
    case ScmType::Tree: return "tree";
    case ScmType::Mix: return "mix";
    }
    return "?";
}

std::string_view to_string(TreeFamily f) noexcept {
    switch (f) {
    case TreeFamily::DecisionTree: return "dt";
    case TreeFamily::ExtraTrees: return "et";
    case TreeFamily::RandomForest: return "rf";
    case TreeFamily::GradientBoosted: return "xgb";
    }
    return "?";
}

std::optional<ScmType> parse_scm_type(std::string_view s) noexcept {
    for (auto t : {ScmType::Mlp, ScmType::Tree, ScmType::Mix}) {
        if (to_string(t) == s) {
            return t;
        }
    }
    return std::nullopt;
}

std::optional<TreeFamily> parse_tree_family(std::string_view s) noexcept {
    for (auto f : {TreeFamily::DecisionTree, TreeFamily::ExtraTrees, TreeFamily::RandomForest,
                   TreeFamily::GradientBoosted}) {
        if (to_string(f) == s) {
            return f;
        }
    }
    return std::nullopt;
}

void PriorConfig::validate() const {
    if (max_classes < 2 || max_classes > 20) {
        throw DomainError("prior config: max_classes must lie in [2, 20]");
    }
    check_range("p_categorical", p_categorical, 0.0, 0.6);
    check_range("p_ordered", p_ordered, 0.0, 1.0);
    if (tree_active()) {
        check_range("depth_rate", depth_rate, 0.3, 1.0);
        check_range("estimators_rate", estimators_rate, 0.3, 1.0);
    }
    if (mix_active()) {
        check_range("p_mlp", p_mlp, 0.0, 1.0);
    }
    if (min_cols < 2 || min_cols > max_cols) {
        throw DomainError("prior config: column bounds must satisfy 2 <= min_cols <= max_cols");
    }
}

std::string PriorConfig::to_text() const {
    std::ostringstream out;
    out << "max_classes=" << max_classes << '\n';
    out << "p_categorical=" << fmt(p_categorical) << '\n';
    out << "p_ordered=" << fmt(p_ordered) << '\n';
    out << "balanced=" << (balanced ? 1 : 0) << '\n';
    out << "replay_small=" << (replay_small ? 1 : 0) << '\n';
    out << "scm_type=" << to_string(scm_type) << '\n';
    if (tree_active()) {
        out << "tree_family=" << to_string(tree_family) << '\n';
        out << "depth_rate=" << fmt(depth_rate) << '\n';
        out << "estimators_rate=" << fmt(estimators_rate) << '\n';
    }
    if (mix_active()) {
        out << "p_mlp=" << fmt(p_mlp) << '\n';
    }
    out << "min_cols=" << min_cols << '\n';
    out << "max_cols=" << max_cols << '\n';
    return out.str();
}

PriorConfig PriorConfig::from_text(std::string_view text) {
    std::map<std::string, std::string> kv;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        const auto t = csv::trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw InputError("prior config: expected key=value, got '" + std::string(t) + "'");
        }
        auto key = std::string(csv::trim(t.substr(0, eq)));
        auto value = std::string(csv::trim(t.substr(eq + 1)));
        if (!kv.emplace(key, value).second) {
            throw InputError("prior config: duplicate key '" + key + "'");
        }
    }

    PriorConfig c;
    for (const auto& [key, value] : kv) {
        if (key == "max_classes") {
            c.max_classes = static_cast<int>(parse_int(key, value));
        } else if (key == "p_categorical") {
            c.p_categorical = parse_real(key, value);
        } else if (key == "p_ordered") {
            c.p_ordered = parse_real(key, value);
        } else if (key == "balanced") {
            c.balanced = parse_flag(key, value);
        } else if (key == "replay_small") {
            c.replay_small = parse_flag(key, value);
        } else if (key == "scm_type") {
            auto t = parse_scm_type(value);
            if (!t) {
                throw InputError("prior config: unknown scm_type '" + value + "'");
            }
            c.scm_type = *t;
        } else if (key == "tree_family") {
            auto f = parse_tree_family(value);
            if (!f) {
                throw InputError("prior config: unknown tree_family '" + value + "'");
            }
            c.tree_family = *f;
        } else if (key == "depth_rate") {
            c.depth_rate = parse_real(key, value);
        } else if (key == "estimators_rate") {
            c.estimators_rate = parse_real(key, value);
        } else if (key == "p_mlp") {
            c.p_mlp = parse_real(key, value);
        } else if (key == "min_cols") {
            c.min_cols = static_cast<std::size_t>(parse_int(key, value));
        } else if (key == "max_cols") {
            c.max_cols = static_cast<std::size_t>(parse_int(key, value));
        } else {
            throw InputError("prior config: unknown key '" + key + "'");
        }
    }
    c.validate();
    return c;
}

bool operator==(const PriorConfig& a, const PriorConfig& b) noexcept {
    if (a.max_classes != b.max_classes || a.p_categorical != b.p_categorical || a.p_ordered != b.p_ordered ||
        a.balanced != b.balanced || a.replay_small != b.replay_small || a.scm_type != b.scm_type ||
        a.min_cols != b.min_cols || a.max_cols != b.max_cols) {
        return false;
    }
    if (a.tree_active() && (a.tree_family != b.tree_family || a.depth_rate != b.depth_rate ||
                            a.estimators_rate != b.estimators_rate)) {
        return false;
    }
    return !a.mix_active() || a.p_mlp == b.p_mlp;
}

PriorConfig load_prior_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open prior config '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return PriorConfig::from_text(buf.str());
}

void save_prior_config(const PriorConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw InputError("cannot write prior config '" + path + "'");
    }
    out << config.to_text();
}

} // namespace tabaudit
