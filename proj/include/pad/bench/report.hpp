#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pad/padloop/deploy.hpp"

namespace pad::bench {

struct ReportRow {
    std::string method;
    std::string env_kind;
    std::string shift;  // serialized ShiftSpec
    uint64_t seed = 0;
    int episode_index = 0;
    double episodic_return = 0.0;
    bool success = false;
};

struct Aggregate {
    std::string method;
    std::string shift;
    int seed_count = 0;
    double mean = 0.0;    // mean of per-seed means
    double stddev = 0.0;  // population std across per-seed means
    double success_rate = 0.0;
};

// Rows plus provenance; aggregates are recomputed from rows on demand, never
// stored.
class EvalReport {
public:
    std::vector<ReportRow> rows;
    std::string config_hash;
    std::string checkpoint_hash;
    std::vector<std::string> failures;  // failed matrix cells, if any

    std::vector<Aggregate> aggregates() const;

    void write_csv(std::ostream& os) const;
    static EvalReport read_csv(std::istream& is);
    void write_json(std::ostream& os) const;
    // Plain-text table, one line per (shift), one column per method, the best
    // method per shift marked with '*'.
    std::string text_table() const;
};

// Fig.-3 style series: per step, mean over seeds of
// (reward_pad - reward_frozen) / |reward_frozen|, rewards averaged over
// episodes within a seed first. Both maps are seed -> episode traces.
std::vector<float> relative_improvement(
    const std::vector<std::vector<padloop::EpisodeTrace>>& frozen_by_seed,
    const std::vector<std::vector<padloop::EpisodeTrace>>& pad_by_seed);

}  // namespace pad::bench
