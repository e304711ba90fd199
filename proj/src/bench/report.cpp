#include "pad/bench/report.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "pad/errors.hpp"

namespace pad::bench {

std::vector<Aggregate> EvalReport::aggregates() const {
    // (method, shift) -> seed -> returns
    std::map<std::pair<std::string, std::string>, std::map<uint64_t, std::vector<double>>> groups;
    std::map<std::pair<std::string, std::string>, std::pair<int, int>> successes;
    for (const ReportRow& row : rows) {
        groups[{row.method, row.shift}][row.seed].push_back(row.episodic_return);
        auto& s = successes[{row.method, row.shift}];
        s.first += row.success ? 1 : 0;
        s.second += 1;
    }
    std::vector<Aggregate> out;
    for (const auto& [key, seeds] : groups) {
        Aggregate agg;
        agg.method = key.first;
        agg.shift = key.second;
        agg.seed_count = static_cast<int>(seeds.size());
        std::vector<double> seed_means;
        for (const auto& [seed, returns] : seeds) {
            double m = 0.0;
            for (double r : returns) m += r;
            seed_means.push_back(m / static_cast<double>(returns.size()));
        }
        double mean = 0.0;
        for (double m : seed_means) mean += m;
        mean /= static_cast<double>(seed_means.size());
        double var = 0.0;
        for (double m : seed_means) var += (m - mean) * (m - mean);
        var /= static_cast<double>(seed_means.size());
        agg.mean = mean;
        agg.stddev = std::sqrt(var);
        const auto& s = successes.at(key);
        agg.success_rate = s.second > 0 ? static_cast<double>(s.first) / s.second : 0.0;
        out.push_back(std::move(agg));
    }
    return out;
}

void EvalReport::write_csv(std::ostream& os) const {
    os << "method,env_kind,shift,seed,episode_index,episodic_return,success\n";
    for (const ReportRow& r : rows) {
        os << r.method << ',' << r.env_kind << ",\"" << r.shift << "\"," << r.seed << ','
           << r.episode_index << ',' << std::setprecision(17) << r.episodic_return << ','
           << (r.success ? 1 : 0) << '\n';
    }
}

EvalReport EvalReport::read_csv(std::istream& is) {
    EvalReport report;
    std::string line;
    if (!std::getline(is, line)) throw IoError("report csv: empty input");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        // method,env_kind,"shift",seed,episode,return,success
        std::vector<std::string> fields;
        std::string cur;
        bool quoted = false;
        for (char c : line) {
            if (c == '"') {
                quoted = !quoted;
            } else if (c == ',' && !quoted) {
                fields.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        fields.push_back(cur);
        if (fields.size() != 7) throw IoError("report csv: malformed row '" + line + "'");
        ReportRow row;
        row.method = fields[0];
        row.env_kind = fields[1];
        row.shift = fields[2];
        row.seed = std::stoull(fields[3]);
        row.episode_index = std::stoi(fields[4]);
        row.episodic_return = std::stod(fields[5]);
        row.success = fields[6] == "1";
        report.rows.push_back(std::move(row));
    }
    return report;
}

void EvalReport::write_json(std::ostream& os) const {
    nlohmann::json j;
    j["config_hash"] = config_hash;
    j["checkpoint_hash"] = checkpoint_hash;
    j["failures"] = failures;
    j["rows"] = nlohmann::json::array();
    for (const ReportRow& r : rows) {
        j["rows"].push_back({{"method", r.method},
                             {"env_kind", r.env_kind},
                             {"shift", r.shift},
                             {"seed", r.seed},
                             {"episode_index", r.episode_index},
                             {"episodic_return", r.episodic_return},
                             {"success", r.success}});
    }
    j["aggregates"] = nlohmann::json::array();
    for (const Aggregate& a : aggregates()) {
        j["aggregates"].push_back({{"method", a.method},
                                   {"shift", a.shift},
                                   {"seed_count", a.seed_count},
                                   {"mean", a.mean},
                                   {"stddev", a.stddev},
                                   {"success_rate", a.success_rate}});
    }
    os << j.dump(2) << '\n';
}

std::string EvalReport::text_table() const {
    const std::vector<Aggregate> aggs = aggregates();
    std::vector<std::string> methods, shifts;
    for (const Aggregate& a : aggs) {
        if (std::find(methods.begin(), methods.end(), a.method) == methods.end()) {
            methods.push_back(a.method);
        }
        if (std::find(shifts.begin(), shifts.end(), a.shift) == shifts.end()) {
            shifts.push_back(a.shift);
        }
    }
    auto find_agg = [&aggs](const std::string& m, const std::string& s) -> const Aggregate* {
        for (const Aggregate& a : aggs) {
            if (a.method == m && a.shift == s) return &a;
        }
        return nullptr;
    };

    std::ostringstream os;
    os << std::left << std::setw(36) << "shift";
    for (const auto& m : methods) os << std::setw(22) << m;
    os << '\n';
    for (const auto& s : shifts) {
        os << std::setw(36) << s;
        double best = -std::numeric_limits<double>::infinity();
        for (const auto& m : methods) {
            if (const Aggregate* a = find_agg(m, s)) best = std::max(best, a->mean);
        }
        for (const auto& m : methods) {
            const Aggregate* a = find_agg(m, s);
            if (!a) {
                os << std::setw(22) << "-";
                continue;
            }
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(2) << a->mean << "+-" << a->stddev;
            if (a->mean == best) cell << " *";
            os << std::setw(22) << cell.str();
        }
        os << '\n';
    }
    if (!failures.empty()) {
        os << "failed cells:\n";
        for (const auto& f : failures) os << "  " << f << '\n';
    }
    return os.str();
}

std::vector<float> relative_improvement(
    const std::vector<std::vector<padloop::EpisodeTrace>>& frozen_by_seed,
    const std::vector<std::vector<padloop::EpisodeTrace>>& pad_by_seed) {
    if (frozen_by_seed.size() != pad_by_seed.size() || frozen_by_seed.empty()) {
        throw UsageError("relative_improvement: seed counts disagree");
    }
    auto per_step_mean = [](const std::vector<padloop::EpisodeTrace>& traces) {
        size_t horizon = 0;
        for (const auto& t : traces) horizon = std::max(horizon, t.steps.size());
        std::vector<double> mean(horizon, 0.0);
        std::vector<int> count(horizon, 0);
        for (const auto& t : traces) {
            for (size_t i = 0; i < t.steps.size(); ++i) {
                mean[i] += t.steps[i].reward;
                count[i] += 1;
            }
        }
        for (size_t i = 0; i < horizon; ++i) {
            if (count[i] > 0) mean[i] /= count[i];
        }
        return mean;
    };

    std::vector<double> acc;
    for (size_t s = 0; s < frozen_by_seed.size(); ++s) {
        const auto f = per_step_mean(frozen_by_seed[s]);
        const auto p = per_step_mean(pad_by_seed[s]);
        const size_t horizon = std::min(f.size(), p.size());
        if (acc.size() < horizon) acc.resize(horizon, 0.0);
        for (size_t i = 0; i < horizon; ++i) {
            const double denom = std::max(std::fabs(f[i]), 1e-6);
            acc[i] += (p[i] - f[i]) / denom;
        }
    }
    std::vector<float> out(acc.size());
    for (size_t i = 0; i < acc.size(); ++i) {
        out[i] = static_cast<float>(acc[i] / static_cast<double>(frozen_by_seed.size()));
    }
    return out;
}

}  // namespace pad::bench
