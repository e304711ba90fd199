#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "pad/bench/checkpoint.hpp"
#include "pad/bench/matrix.hpp"
#include "pad/bench/report.hpp"
#include "pad/bench/runconfig.hpp"
#include "pad/padloop/deploy.hpp"
#include "pad/padloop/train.hpp"

namespace {

using namespace pad;

bench::RunConfig config_from(const std::string& path) {
    return path.empty() ? bench::RunConfig::defaults() : bench::RunConfig::load_file(path);
}

void apply_sets(bench::RunConfig& cfg, const std::vector<std::string>& sets) {
    for (const std::string& kv : sets) {
        const size_t eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
        cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
}

std::vector<envs::ShiftSpec> parse_shift_list(const std::string& text) {
    std::vector<envs::ShiftSpec> out;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t next = text.find(';', pos);
        if (next == std::string::npos) next = text.size();
        const std::string item = text.substr(pos, next - pos);
        if (!item.empty()) out.push_back(envs::ShiftSpec::parse(item));
        pos = next + 1;
    }
    if (out.empty()) throw ConfigError("empty shift list");
    return out;
}

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t next = text.find(',', pos);
        if (next == std::string::npos) next = text.size();
        if (next > pos) out.push_back(text.substr(pos, next - pos));
        pos = next + 1;
    }
    return out;
}

int cmd_train(const std::string& config_path, const std::string& algo, const std::string& ssl,
              bool dr, int64_t seed, const std::string& out,
              const std::vector<std::string>& sets) {
    bench::RunConfig cfg = config_from(config_path);
    if (!algo.empty()) cfg.set("train.algo", algo);
    if (!ssl.empty()) cfg.set("train.ssl", ssl);
    if (seed >= 0) cfg.set("train.seed", std::to_string(seed));
    apply_sets(cfg, sets);

    const envs::EnvKind kind = cfg.env_kind();
    const envs::EnvConfig env_cfg = cfg.env_config();
    const policynet::NetworkConfig net_cfg = cfg.network_config();
    padloop::TrainConfig tcfg = cfg.train_config();

    padloop::TrainResult result =
        dr ? padloop::train_domain_randomization(kind, env_cfg, net_cfg, tcfg)
           : padloop::train_joint(kind, env_cfg, net_cfg, tcfg);

    bench::checkpoint_save(result.params, cfg, out);

    std::ofstream curve(out + ".curve.csv");
    curve << "step,eval_return,ssl_heldout_loss,ssl_heldout_accuracy\n";
    for (const auto& p : result.curve) {
        curve << p.step << ',' << p.eval_return << ',' << p.ssl_heldout_loss << ','
              << p.ssl_heldout_accuracy << '\n';
    }
    std::cout << "trained " << result.steps_completed << " steps, "
              << result.episodes_completed << " episodes\n"
              << "heldout ssl: " << result.initial_heldout_ssl << " -> "
              << result.final_heldout_ssl;
    if (result.final_heldout_accuracy >= 0.0f) {
        std::cout << " (accuracy " << result.final_heldout_accuracy << ")";
    }
    std::cout << "\ncheckpoint: " << out << "\n";
    return 0;
}

int cmd_deploy(const std::string& ckpt_path, const std::string& env_name, const std::string& shift,
               const std::string& mode, int episodes, int horizon_mult, int64_t seed,
               const std::string& out, const std::string& traces_path,
               const std::string& config_path, const std::vector<std::string>& sets) {
    bench::LoadedCheckpoint ckpt = bench::checkpoint_load(ckpt_path);
    bench::RunConfig cfg = config_path.empty() ? ckpt.config : bench::RunConfig::load_file(config_path);
    apply_sets(cfg, sets);

    const envs::EnvKind kind = ckpt.config.env_kind();
    if (!env_name.empty() && envs::parse_env_kind(env_name) != kind) {
        throw ConfigError("checkpoint was trained on " + envs::env_kind_name(kind) +
                          ", not " + env_name);
    }
    padloop::DeployConfig dcfg = cfg.deploy_config();
    const std::string task = ckpt.config.get("train.ssl");
    dcfg.ssl_task = task == "rotation" ? ssl::SslTask::Rotation : ssl::SslTask::Idm;
    if (!mode.empty()) dcfg.mode = padloop::parse_deploy_mode(mode);
    if (episodes > 0) dcfg.episodes = episodes;
    if (horizon_mult > 0) dcfg.horizon_multiplier = horizon_mult;
    if (seed >= 0) dcfg.seed = static_cast<uint64_t>(seed);

    const envs::ShiftSpec spec = envs::ShiftSpec::parse(shift.empty() ? "none" : shift);
    padloop::DeployResult result =
        padloop::deploy(ckpt.params, kind, spec, ckpt.config.env_config(), dcfg);

    // Rows append to the report file; header only when new.
    const bool existed = std::filesystem::exists(out);
    std::ofstream rows(out, std::ios::app);
    if (!rows) throw IoError("cannot open report '" + out + "'");
    if (!existed) rows << "method,env_kind,shift,seed,episode_index,episodic_return,success\n";
    double total = 0.0;
    for (size_t e = 0; e < result.episodes.size(); ++e) {
        rows << padloop::deploy_mode_name(dcfg.mode) << ',' << envs::env_kind_name(kind) << ",\""
             << spec.serialize() << "\"," << dcfg.seed << ',' << e << ','
             << result.episodes[e].episodic_return << ','
             << (result.episodes[e].success ? 1 : 0) << '\n';
        total += result.episodes[e].episodic_return;
    }

    const std::string tpath = traces_path.empty() ? out + ".trace.csv" : traces_path;
    std::ofstream traces(tpath);
    traces << "episode,step,reward,ssl_loss,updated,drift_theta_e\n";
    for (size_t e = 0; e < result.episodes.size(); ++e) {
        const auto& steps = result.episodes[e].steps;
        for (size_t t = 0; t < steps.size(); ++t) {
            traces << e << ',' << t << ',' << steps[t].reward << ',' << steps[t].ssl_loss << ','
                   << (steps[t].updated ? 1 : 0) << ',' << steps[t].drift_theta_e << '\n';
        }
    }
    std::cout << "mean return over " << result.episodes.size()
              << " episodes: " << total / static_cast<double>(result.episodes.size()) << "\n";
    return 0;
}

int cmd_matrix(const std::string& ckpt, const std::string& dr_ckpt, const std::string& config_path,
               const std::string& out_dir, const std::string& methods, const std::string& shifts,
               int seeds, int episodes, const std::vector<std::string>& sets) {
    bench::MatrixSpec spec;
    spec.joint_ckpt = ckpt;
    spec.dr_ckpt = dr_ckpt;
    spec.run_config =
        config_path.empty() ? bench::checkpoint_load(ckpt).config : bench::RunConfig::load_file(config_path);
    apply_sets(spec.run_config, sets);
    spec.methods = split_commas(methods.empty() ? spec.run_config.get("matrix.methods") : methods);
    spec.shifts =
        parse_shift_list(shifts.empty() ? spec.run_config.get("matrix.shifts") : shifts);
    spec.seeds = seeds > 0 ? seeds : spec.run_config.get_int("matrix.seeds");
    spec.episodes = episodes > 0 ? episodes : spec.run_config.get_int("matrix.episodes");

    bench::MatrixResult result = bench::run_matrix(spec);

    std::filesystem::create_directories(out_dir);
    {
        std::ofstream csv(out_dir + "/report.csv");
        result.report.write_csv(csv);
    }
    {
        std::ofstream json(out_dir + "/report.json");
        result.report.write_json(json);
    }
    {
        std::ofstream table(out_dir + "/table.txt");
        table << result.report.text_table();
    }
    if (!result.rel_improvement.empty()) {
        std::ofstream ri(out_dir + "/relimprove.csv");
        ri << "step,relative_improvement,shift\n";
        for (size_t i = 0; i < result.rel_improvement.size(); ++i) {
            ri << i << ',' << result.rel_improvement[i] << ",\"" << result.relimp_shift << "\"\n";
        }
    }
    std::cout << result.report.text_table();
    if (!result.report.failures.empty()) {
        std::cout << result.report.failures.size() << " cell(s) failed\n";
    }
    return 0;
}

int cmd_report(const std::string& in_path, const std::string& out_path) {
    std::ifstream in(in_path);
    if (!in) throw IoError("cannot open '" + in_path + "'");
    const bench::EvalReport report = bench::EvalReport::read_csv(in);
    const std::string table = report.text_table();
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << table;
    }
    std::cout << table;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Policy adaptation benchmark"};
    app.require_subcommand(1);

    std::string config_path, algo, ssl_task, out, ckpt, dr_ckpt, env_name, shift, mode;
    std::string traces_path, out_dir, methods, shifts, report_in, report_out;
    std::vector<std::string> sets;
    bool dr = false;
    int episodes = 0, horizon_mult = 0, seeds = 0;
    int64_t seed = -1;

    auto* train = app.add_subcommand("train", "joint training (RL + self-supervised head)");
    train->add_option("--config", config_path, "config file (key=value lines)");
    train->add_option("--algo", algo, "sac | a2c");
    train->add_option("--ssl", ssl_task, "idm | rotation | none");
    train->add_flag("--dr", dr, "domain randomization baseline");
    train->add_option("--seed", seed, "training seed");
    train->add_option("--out", out, "checkpoint output path")->required();
    train->add_option("--set", sets, "override config key=value");

    auto* deploy = app.add_subcommand("deploy", "evaluate / adapt a checkpoint in a shifted env");
    deploy->add_option("--ckpt", ckpt, "checkpoint path")->required();
    deploy->add_option("--env", env_name, "environment kind (validated against the checkpoint)");
    deploy->add_option("--shift", shift, "shift spec, e.g. colors:color_set_index=7");
    deploy->add_option("--mode", mode, "frozen | pad | pad_fixed_head | offline_pad | blind");
    deploy->add_option("--episodes", episodes, "evaluation episodes");
    deploy->add_option("--horizon-mult", horizon_mult, "horizon multiplier (10x evaluation)");
    deploy->add_option("--seed", seed, "deployment seed");
    deploy->add_option("--out", out, "report rows CSV (appended)")->required();
    deploy->add_option("--traces", traces_path, "per-step trace CSV path");
    deploy->add_option("--config", config_path, "config overriding deploy.* settings");
    deploy->add_option("--set", sets, "override config key=value");

    auto* matrix = app.add_subcommand("matrix", "methods x shifts x seeds evaluation grid");
    matrix->add_option("--ckpt", ckpt, "jointly trained checkpoint")->required();
    matrix->add_option("--dr-ckpt", dr_ckpt, "domain-randomization checkpoint (for method dr)");
    matrix->add_option("--config", config_path, "config file");
    matrix->add_option("--out-dir", out_dir, "output directory")->required();
    matrix->add_option("--methods", methods, "comma-separated method list");
    matrix->add_option("--shifts", shifts, "semicolon-separated shift specs");
    matrix->add_option("--seeds", seeds, "seed count");
    matrix->add_option("--episodes", episodes, "episodes per cell");
    matrix->add_option("--set", sets, "override config key=value");

    auto* report = app.add_subcommand("report", "re-aggregate a rows CSV into a table");
    report->add_option("--in", report_in, "rows CSV")->required();
    report->add_option("--out", report_out, "table output path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(config_path, algo, ssl_task, dr, seed, out, sets);
        if (deploy->parsed()) {
            return cmd_deploy(ckpt, env_name, shift, mode, episodes, horizon_mult, seed, out,
                              traces_path, config_path, sets);
        }
        if (matrix->parsed()) {
            return cmd_matrix(ckpt, dr_ckpt, config_path, out_dir, methods, shifts, seeds,
                              episodes, sets);
        }
        if (report->parsed()) return cmd_report(report_in, report_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
