#include "pad/bench/matrix.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "pad/errors.hpp"

namespace pad::bench {

namespace {

struct Cell {
    std::string method;
    envs::ShiftSpec shift;
    int seed_index = 0;
};

struct CellResult {
    std::vector<ReportRow> rows;
    std::vector<padloop::EpisodeTrace> traces;
    std::string failure;  // empty on success
};

int worker_cap() {
    const char* env = std::getenv("PAD_NUM_WORKERS");
    if (env == nullptr) return 1;
    const int n = std::atoi(env);
    return n < 1 ? 1 : n;
}

std::string file_crc_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "";
    std::ostringstream buf;
    buf << in.rdbuf();
    const std::string blob = buf.str();
    char hex[16];
    std::snprintf(hex, sizeof(hex), "%08x",
                  crc32(reinterpret_cast<const uint8_t*>(blob.data()), blob.size()));
    return hex;
}

bool parse_finetune_budget(const std::string& method, int& budget) {
    if (method.rfind("finetune-", 0) != 0) return false;
    budget = std::atoi(method.c_str() + 9);
    if (budget < 1) throw ConfigError("matrix: bad finetune budget in '" + method + "'");
    return true;
}

CellResult run_cell(const MatrixSpec& spec, const Cell& cell) {
    CellResult result;
    try {
        const bool is_dr = cell.method == "dr";
        int finetune_budget = 0;
        const bool is_finetune = parse_finetune_budget(cell.method, finetune_budget);

        const std::string& path = is_dr ? spec.dr_ckpt : spec.joint_ckpt;
        if (path.empty()) throw ConfigError("matrix: method '" + cell.method + "' needs a checkpoint");
        LoadedCheckpoint ckpt = checkpoint_load(path);
        const envs::EnvKind kind = ckpt.config.env_kind();
        const envs::EnvConfig env_cfg = ckpt.config.env_config();

        padloop::DeployConfig dcfg = spec.run_config.deploy_config();
        dcfg.episodes = spec.episodes;
        dcfg.horizon_multiplier = spec.horizon_multiplier;
        dcfg.seed = spec.base_seed + static_cast<uint64_t>(cell.seed_index);
        // The SSL task always matches the checkpoint's training head.
        const std::string task = ckpt.config.get("train.ssl");
        dcfg.ssl_task = task == "rotation" ? ssl::SslTask::Rotation : ssl::SslTask::Idm;

        policynet::PolicyParams params = std::move(ckpt.params);
        if (is_finetune) {
            padloop::TrainConfig tcfg = ckpt.config.train_config();
            params = padloop::finetune_with_rewards(params, kind, cell.shift, env_cfg,
                                                    finetune_budget, tcfg, dcfg.seed);
            dcfg.mode = padloop::DeployMode::Frozen;
        } else if (is_dr || cell.method == "frozen") {
            dcfg.mode = padloop::DeployMode::Frozen;
        } else {
            dcfg.mode = padloop::parse_deploy_mode(cell.method);
        }

        padloop::DeployResult res = padloop::deploy(params, kind, cell.shift, env_cfg, dcfg);
        for (size_t e = 0; e < res.episodes.size(); ++e) {
            ReportRow row;
            row.method = cell.method;
            row.env_kind = envs::env_kind_name(kind);
            row.shift = cell.shift.serialize();
            row.seed = dcfg.seed;
            row.episode_index = static_cast<int>(e);
            row.episodic_return = res.episodes[e].episodic_return;
            row.success = res.episodes[e].success;
            result.rows.push_back(std::move(row));
        }
        result.traces = std::move(res.episodes);
    } catch (const std::exception& e) {
        result.failure = cell.method + " / " + cell.shift.serialize() + " / seed " +
                         std::to_string(spec.base_seed + static_cast<uint64_t>(cell.seed_index)) +
                         ": " + e.what();
    }
    return result;
}

}  // namespace

MatrixResult run_matrix(const MatrixSpec& spec) {
    if (spec.methods.empty() || spec.shifts.empty() || spec.seeds < 1) {
        throw ConfigError("matrix: methods, shifts, and seeds must be non-empty");
    }
    std::vector<Cell> cells;
    for (const auto& method : spec.methods) {
        for (const auto& shift : spec.shifts) {
            for (int s = 0; s < spec.seeds; ++s) cells.push_back({method, shift, s});
        }
    }

    std::vector<CellResult> results(cells.size());
    const int workers = std::min<int>(worker_cap(), static_cast<int>(cells.size()));
    std::atomic<size_t> next{0};
    auto worker = [&]() {
        while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= cells.size()) break;
            results[i] = run_cell(spec, cells[i]);
        }
    };
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    MatrixResult out;
    out.report.checkpoint_hash = file_crc_hex(spec.joint_ckpt);
    {
        const std::string cfg = spec.run_config.serialize();
        char hex[16];
        std::snprintf(hex, sizeof(hex), "%08x",
                      crc32(reinterpret_cast<const uint8_t*>(cfg.data()), cfg.size()));
        out.report.config_hash = hex;
    }

    // Deterministic assembly order regardless of scheduling.
    for (size_t i = 0; i < cells.size(); ++i) {
        if (!results[i].failure.empty()) {
            out.report.failures.push_back(results[i].failure);
            continue;
        }
        for (auto& row : results[i].rows) out.report.rows.push_back(std::move(row));
    }

    // Relative-improvement series when frozen and pad both ran.
    int relimp = spec.relimp_shift_index;
    if (relimp < 0) {
        relimp = 0;
        for (size_t i = 0; i < spec.shifts.size(); ++i) {
            if (!(spec.shifts[i] == envs::ShiftSpec::none())) {
                relimp = static_cast<int>(i);
                break;
            }
        }
    }
    const bool has_frozen =
        std::find(spec.methods.begin(), spec.methods.end(), "frozen") != spec.methods.end();
    const bool has_pad =
        std::find(spec.methods.begin(), spec.methods.end(), "pad") != spec.methods.end();
    if (has_frozen && has_pad && relimp < static_cast<int>(spec.shifts.size())) {
        out.relimp_shift = spec.shifts[static_cast<size_t>(relimp)].serialize();
        std::vector<std::vector<padloop::EpisodeTrace>> frozen_traces, pad_traces;
        auto collect = [&](const std::string& method,
                           std::vector<std::vector<padloop::EpisodeTrace>>& dst) {
            for (int s = 0; s < spec.seeds; ++s) {
                for (size_t i = 0; i < cells.size(); ++i) {
                    if (cells[i].method == method && cells[i].seed_index == s &&
                        cells[i].shift == spec.shifts[static_cast<size_t>(relimp)] &&
                        results[i].failure.empty()) {
                        dst.push_back(results[i].traces);
                    }
                }
            }
        };
        collect("frozen", frozen_traces);
        collect("pad", pad_traces);
        if (!frozen_traces.empty() && frozen_traces.size() == pad_traces.size()) {
            out.rel_improvement = relative_improvement(frozen_traces, pad_traces);
        }
    }
    return out;
}

}  // namespace pad::bench
