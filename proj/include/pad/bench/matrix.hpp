#pragma once

#include <string>
#include <vector>

#include "pad/bench/checkpoint.hpp"
#include "pad/bench/report.hpp"

namespace pad::bench {

// One full evaluation grid: methods x shifts x seeds, every cell isolated
// (it loads its own checkpoint copy). Methods: frozen, pad, offline_pad,
// pad_fixed_head, blind, dr (needs dr_ckpt), finetune-K (K = episode budget).
struct MatrixSpec {
    std::vector<std::string> methods;
    std::vector<envs::ShiftSpec> shifts;
    int seeds = 5;
    int episodes = 10;
    int horizon_multiplier = 1;
    uint64_t base_seed = 0;
    std::string joint_ckpt;
    std::string dr_ckpt;
    RunConfig run_config = RunConfig::defaults();  // deploy.* settings
    // Shift used for the per-step relative-improvement series (defaults to
    // the first non-none shift when frozen and pad are both present).
    int relimp_shift_index = -1;
};

struct MatrixResult {
    EvalReport report;
    std::vector<float> rel_improvement;  // empty unless frozen & pad both ran
    std::string relimp_shift;
};

// Executes all cells; parallelism is capped by PAD_NUM_WORKERS (default 1).
// Failed cells are recorded in report.failures and the matrix continues.
MatrixResult run_matrix(const MatrixSpec& spec);

}  // namespace pad::bench
