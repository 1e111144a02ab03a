#include "tabaudit/trials.hpp"

#include <chrono>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <unordered_map>

#include "tabaudit/csv.hpp"
#include "tabaudit/error.hpp"

namespace tabaudit {

namespace {

std::string fmt(double v) {
    if (std::isnan(v)) {
        return "";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

double parse_real(const std::string& s) {
    if (s.empty()) {
        return kNotMeasured;
    }
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InputError("trial table: bad number '" + s + "'");
    }
    return v;
}

template <typename T>
T parse_unsigned(const std::string& s) {
    T v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw InputError("trial table: bad integer '" + s + "'");
    }
    return v;
}

bool same_point(const ParamPoint& a, const ParamPoint& b) {
    if (a.size() != b.size()) {
        return false;
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool na = std::isnan(a[i]);
        if (na != std::isnan(b[i]) || (!na && a[i] != b[i])) {
            return false;
        }
    }
    return true;
}

} // namespace

TrialRecord run_trial(const Objective& objective, const ParamPoint& point, const TrialContext& ctx,
                      std::size_t group) {
    TrialRecord r;
    r.index = ctx.index;
    r.group = group;
    r.point = point;
    r.objective = objective.name;
    r.seed = ctx.seed;
    const auto start = std::chrono::steady_clock::now();
    try {
        r.eval = objective.evaluate(point, ctx);
        if (std::isnan(r.eval.value)) {
            throw DomainError("objective returned NaN");
        }
    } catch (const std::exception& e) {
        r.failed = true;
        r.error = e.what();
        r.eval = Evaluation{};
        r.eval.value = objective.worst;
    }
    r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::size_t best_trial(const std::vector<TrialRecord>& trials) {
    if (trials.empty()) {
        throw DomainError("best_trial: no trials");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < trials.size(); ++i) {
        if (trials[i].value() < trials[best].value()) {
            best = i;
        }
    }
    return best;
}

std::string trials_csv_header(const SearchSpace& space) {
    csv::Record h{"trial", "group"};
    for (const auto& p : space.params()) {
        h.push_back(p.name);
    }
    for (const char* c : {"objective", "value", "auc", "recall", "precision", "n_eval", "seed", "status", "error"}) {
        h.emplace_back(c);
    }
    return csv::join(h, ',');
}

std::string trial_csv_row(const SearchSpace& space, const TrialRecord& r) {
    csv::Record f{std::to_string(r.index), std::to_string(r.group)};
    for (std::size_t i = 0; i < space.size(); ++i) {
        f.push_back(space.format_value(i, r.point.at(i)));
    }
    f.push_back(r.objective);
    f.push_back(fmt(r.eval.value));
    f.push_back(fmt(r.eval.auc));
    f.push_back(fmt(r.eval.recall));
    f.push_back(fmt(r.eval.precision));
    f.push_back(std::to_string(r.eval.n_eval));
    f.push_back(std::to_string(r.seed));
    f.push_back(r.failed ? "failed" : "ok");
    f.push_back(r.error);
    return csv::join(f, ',');
}

std::string trials_to_csv(const SearchSpace& space, const std::vector<TrialRecord>& trials) {
    std::string out = trials_csv_header(space) + "\n";
    for (const auto& r : trials) {
        out += trial_csv_row(space, r) + "\n";
    }
    return out;
}

std::vector<TrialRecord> trials_from_csv(const SearchSpace& space, const std::string& text) {
    const auto records = csv::parse(text, ',');
    if (records.empty()) {
        return {};
    }
    if (csv::join(records.front(), ',') != trials_csv_header(space)) {
        throw InputError("trial table header does not match the search space");
    }
    const std::size_t width = 2 + space.size() + 9;
    std::vector<TrialRecord> out;
    for (std::size_t k = 1; k < records.size(); ++k) {
        const auto& f = records[k];
        if (f.size() != width) {
            throw InputError("trial table row " + std::to_string(k) + " has " + std::to_string(f.size()) +
                             " fields, expected " + std::to_string(width));
        }
        TrialRecord r;
        r.index = parse_unsigned<std::size_t>(f[0]);
        r.group = parse_unsigned<std::size_t>(f[1]);
        r.point.resize(space.size());
        for (std::size_t i = 0; i < space.size(); ++i) {
            r.point[i] = space.parse_value(i, f[2 + i]);
        }
        std::size_t c = 2 + space.size();
        r.objective = f[c++];
        r.eval.value = parse_real(f[c++]);
        r.eval.auc = parse_real(f[c++]);
        r.eval.recall = parse_real(f[c++]);
        r.eval.precision = parse_real(f[c++]);
        r.eval.n_eval = parse_unsigned<std::size_t>(f[c++]);
        r.seed = parse_unsigned<std::uint64_t>(f[c++]);
        r.failed = f[c++] == "failed";
        r.error = f[c++];
        out.push_back(std::move(r));
    }
    return out;
}

std::string timings_to_csv(const std::vector<TrialRecord>& trials) {
    std::string out = "trial,wall_seconds\n";
    for (const auto& r : trials) {
        out += std::to_string(r.index) + "," + fmt(r.wall_seconds) + "\n";
    }
    return out;
}

TrialJournal::TrialJournal(std::filesystem::path path, SearchSpace space, bool resume)
    : path_(std::move(path)), space_(std::move(space)) {
    if (resume && std::filesystem::exists(path_)) {
        std::ifstream in(path_, std::ios::binary);
        std::ostringstream buf;
        buf << in.rdbuf();
        std::string text = buf.str();
        // A crash can leave a partial last line; keep complete lines only.
        if (const auto nl = text.rfind('\n'); nl != std::string::npos && nl + 1 != text.size()) {
            text.resize(nl + 1);
            std::ofstream(path_, std::ios::binary | std::ios::trunc) << text;
        }
        existing_ = trials_from_csv(space_, text);
        if (!text.empty()) {
            return;
        }
    }
    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw InputError("cannot create journal '" + path_.string() + "'");
    }
    out << trials_csv_header(space_) << '\n';
}

void TrialJournal::append(const TrialRecord& record) {
    std::ofstream out(path_, std::ios::binary | std::ios::app);
    if (!out) {
        throw InputError("cannot append to journal '" + path_.string() + "'");
    }
    out << trial_csv_row(space_, record) << '\n';
    out.flush();
}

Objective replaying(Objective inner, std::vector<TrialRecord> journal) {
    auto by_index = std::make_shared<std::unordered_map<std::size_t, TrialRecord>>();
    for (auto& r : journal) {
        const auto idx = r.index;
        (*by_index)[idx] = std::move(r);
    }
    auto base = std::make_shared<Objective>(inner);
    Objective out = inner;
    out.evaluate = [by_index, base](const ParamPoint& point, const TrialContext& ctx) -> Evaluation {
        if (const auto it = by_index->find(ctx.index); it != by_index->end() && same_point(it->second.point, point)) {
            if (it->second.failed) {
                throw Error(it->second.error);
            }
            return it->second.eval;
        }
        return base->evaluate(point, ctx);
    };
    return out;
}

} // namespace tabaudit
