#include "mfp/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "mfp/client.hpp"
#include "mfp/ensemble.hpp"
#include "mfp/fingerprint.hpp"
#include "mfp/metrics.hpp"
#include "mfp/rng.hpp"
#include "mfp/scenario.hpp"
#include "mfp/server.hpp"

namespace fs = std::filesystem;

namespace mfp {

namespace {

struct CliConfig {
    std::string task = "classification";
    uint64_t seed = 0;
    std::string out;
    std::string ensemble_dir;
    std::string pair_path;
    std::string model_path;
    std::string endpoint;
    int n_examples = 100;
    int iters = 1000;
    double lr = 0.001;
    double rho = 0.5;
    int reps = 5;
    bool standardize = false;
    std::string sweep_mode = "n";
    std::string sweep_points;
    int seeds_per_point = 5;
    int port = 8080;
    std::string bind = "0.0.0.0";
};

std::vector<double> parse_points(const std::string& csv) {
    std::vector<double> out;
    std::string cur;
    for (char ch : csv + ",") {
        if (ch == ',') {
            if (!cur.empty()) out.push_back(parse_f64(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    return out;
}

int cmd_forge(const CliConfig& cfg) {
    require(!cfg.out.empty(), "forge: --out directory is required");
    Scenario s = make_scenario(scenario_kind_from(cfg.task), cfg.seed);
    ModelEnsemble ensemble = forge_scenario_ensemble(s, ForgeComposition{}, cfg.seed);
    save_ensemble(ensemble, cfg.out);
    int pos = 0, neg = 0, flagged = 0;
    for (const auto& e : ensemble.suspects) {
        (e.positive ? pos : neg)++;
        flagged += e.positive && !e.utility_ok ? 1 : 0;
    }
    std::cout << "forged ensemble: " << pos << " positives, " << neg << " negatives ("
              << flagged << " utility-flagged) -> " << cfg.out << "\n";
    return 0;
}

int cmd_construct(const CliConfig& cfg) {
    require(!cfg.ensemble_dir.empty(), "construct: --ensemble directory is required");
    require(!cfg.out.empty(), "construct: --out pair file is required");
    ModelEnsemble ensemble = load_ensemble(cfg.ensemble_dir);

    ConstructOptions opt;
    opt.n_examples = cfg.n_examples;
    opt.iters = cfg.iters;
    opt.lr = cfg.lr;
    opt.standardize_outputs = cfg.standardize;
    FingerprintPair pair =
        construct_fingerprint(ensemble.construction_split(), opt, Rng::mix(cfg.seed, 0xc0));
    save_pair(pair, cfg.out);

    const std::string trace_path = cfg.out + ".loss_trace.csv";
    std::ofstream os(trace_path);
    require(os.good(), "cannot write '", trace_path, "'");
    os << "iteration,objective\n";
    for (size_t i = 0; i < pair.loss_trace.size(); ++i)
        os << i << "," << fmt_g17(pair.loss_trace[i]) << "\n";

    std::cout << "constructed pair (n=" << opt.n_examples << ", iters=" << opt.iters
              << ") -> " << cfg.out << "\n";
    return 0;
}

int cmd_verify(const CliConfig& cfg) {
    require(!cfg.pair_path.empty(), "verify: --pair is required");
    require(cfg.rho > 0.0 && cfg.rho < 1.0, "verify: --rho must be in (0,1)");
    require(cfg.model_path.empty() != cfg.endpoint.empty(),
            "verify: exactly one of --model or --endpoint is required");

    FingerprintPair pair = load_pair(cfg.pair_path);
    VerificationResult res;
    if (!cfg.model_path.empty()) {
        SequentialModel suspect = load_model(cfg.model_path);
        LocalBlackBox box(suspect);
        res = verify(pair, box, cfg.rho);
    } else {
        auto box = remote_blackbox(cfg.endpoint);
        res = verify(pair, *box, cfg.rho);
    }
    std::cout << "p_plus " << fmt_g17(res.p_plus) << "\n";
    std::cout << "rho " << fmt_g17(res.rho) << "\n";
    std::cout << "decision " << (res.decision ? "True" : "False") << "\n";
    return res.decision ? 0 : 1;
}

int cmd_bench(const CliConfig& cfg) {
    require(!cfg.ensemble_dir.empty(), "bench: --ensemble directory is required");
    require(!cfg.out.empty(), "bench: --out directory is required");
    ModelEnsemble ensemble = load_ensemble(cfg.ensemble_dir);
    ConstructOptions opt;
    opt.n_examples = cfg.n_examples;
    opt.iters = cfg.iters;
    opt.lr = cfg.lr;
    opt.standardize_outputs = cfg.standardize;
    RUReport report = run_benchmark(ensemble, opt, cfg.reps, Rng::mix(cfg.seed, 0xbe));
    write_report(report, cfg.out);
    std::cout << "ARUC " << report.aruc_mean << " +/- " << report.aruc_ci95 << " ("
              << cfg.reps << " runs) -> " << cfg.out << "\n";
    return 0;
}

int cmd_sweep(const CliConfig& cfg) {
    require(!cfg.ensemble_dir.empty(), "sweep: --ensemble directory is required");
    require(!cfg.out.empty(), "sweep: --out csv path is required");
    ModelEnsemble ensemble = load_ensemble(cfg.ensemble_dir);
    ConstructOptions opt;
    opt.n_examples = cfg.n_examples;
    opt.iters = cfg.iters;
    opt.lr = cfg.lr;
    opt.standardize_outputs = cfg.standardize;

    std::vector<double> points = parse_points(cfg.sweep_points);
    require(points.size() >= 2, "sweep: need at least two --points");
    std::vector<SweepPoint> rows;
    std::string x_name;
    if (cfg.sweep_mode == "n") {
        std::vector<int> ns;
        for (double p : points) ns.push_back(static_cast<int>(p));
        rows = sweep_n(ensemble, opt, ns, cfg.seeds_per_point, Rng::mix(cfg.seed, 0x53));
        x_name = "n";
    } else if (cfg.sweep_mode == "ensemble") {
        rows = sweep_ensemble(ensemble, opt, points, cfg.seeds_per_point,
                              Rng::mix(cfg.seed, 0x53));
        x_name = "fraction";
    } else {
        fail("sweep: --mode must be n or ensemble");
    }
    write_sweep(rows, x_name, cfg.out);
    for (const auto& r : rows)
        std::cout << x_name << "=" << r.x << " mean ARUC " << r.mean_aruc << "\n";
    return 0;
}

int cmd_serve(const CliConfig& cfg) {
    require(!cfg.model_path.empty(), "serve: --model is required");
    SequentialModel model = load_model(cfg.model_path);
    std::cout << "serving " << cfg.model_path << " (d_in=" << model.d_in
              << ", d_out=" << model.d_out << ") on " << cfg.bind << ":" << cfg.port << "\n";
    serve_blocking(model, cfg.bind, cfg.port);
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"model fingerprinting toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from a config file (flags win)");

    CliConfig cfg;
    app.add_option("--seed", cfg.seed, "master seed; all sub-seeds derive from it")
        ->capture_default_str();

    auto add_common_construct = [&](CLI::App* c) {
        c->add_option("--n", cfg.n_examples, "fingerprint examples")->capture_default_str();
        c->add_option("--iters", cfg.iters, "optimization iterations")->capture_default_str();
        c->add_option("--lr", cfg.lr, "learning rate")->capture_default_str();
        c->add_flag("--standardize", cfg.standardize,
                    "standardize suspect outputs inside the verifier");
    };

    CLI::App* forge = app.add_subcommand("forge", "train a target and forge its suspect ensemble");
    forge->add_option("--task", cfg.task, "classification|regression|generative")
        ->capture_default_str();
    forge->add_option("--out", cfg.out, "output ensemble directory")->required();

    CLI::App* construct = app.add_subcommand("construct", "construct a fingerprinting pair");
    construct->add_option("--ensemble", cfg.ensemble_dir, "ensemble directory")->required();
    construct->add_option("--out", cfg.out, "output pair file")->required();
    add_common_construct(construct);

    CLI::App* verify_cmd = app.add_subcommand("verify", "verify one suspect against a pair");
    verify_cmd->add_option("--pair", cfg.pair_path, "fingerprinting pair file")->required();
    verify_cmd->add_option("--model", cfg.model_path, "suspect model file");
    verify_cmd->add_option("--endpoint", cfg.endpoint, "suspect prediction API url");
    verify_cmd->add_option("--rho", cfg.rho, "decision threshold in (0,1)")
        ->capture_default_str();

    CLI::App* bench = app.add_subcommand("bench", "repeated construction + holdout report");
    bench->add_option("--ensemble", cfg.ensemble_dir, "ensemble directory")->required();
    bench->add_option("--out", cfg.out, "report directory")->required();
    bench->add_option("--reps", cfg.reps, "repetitions")->capture_default_str();
    add_common_construct(bench);

    CLI::App* sweep = app.add_subcommand("sweep", "trend over N or ensemble fraction");
    sweep->add_option("--ensemble", cfg.ensemble_dir, "ensemble directory")->required();
    sweep->add_option("--out", cfg.out, "output trend csv")->required();
    sweep->add_option("--mode", cfg.sweep_mode, "n|ensemble")->capture_default_str();
    sweep->add_option("--points", cfg.sweep_points, "comma-separated sweep points")->required();
    sweep->add_option("--seeds-per-point", cfg.seeds_per_point, "seeds per point")
        ->capture_default_str();
    add_common_construct(sweep);

    CLI::App* serve_cmd = app.add_subcommand("serve", "expose a model as a prediction API");
    serve_cmd->add_option("--model", cfg.model_path, "model file")->required();
    serve_cmd->add_option("--port", cfg.port, "port")->capture_default_str();
    serve_cmd->add_option("--bind", cfg.bind, "bind address")->capture_default_str();

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (forge->parsed()) return cmd_forge(cfg);
        if (construct->parsed()) return cmd_construct(cfg);
        if (verify_cmd->parsed()) return cmd_verify(cfg);
        if (bench->parsed()) return cmd_bench(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (serve_cmd->parsed()) return cmd_serve(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

int run_cli(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.push_back(argv[i]);
    return run_cli(args);
}

}  // namespace mfp
