#include "erma/experiments.hpp"
#include "erma/parallel.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"erma: deterministic-equivalent analysis of regularized ERM"};
    app.require_subcommand(1);

    std::string config;
    std::string out;
    int threads = 0;
    std::uint64_t seed = 0;

    struct Sub {
        const char* name;
        const char* help;
        int (*run)(const erma::ExperimentConfig&);
    };
    const Sub subs[] = {
        {"solve", "solve the fixed-point system and write solution.json", erma::cmd_solve},
        {"compare", "theory vs Monte Carlo ERM replications (compare.csv/json)", erma::cmd_compare},
        {"sweep", "error curves over a regularization grid (sweep.csv/json)", erma::cmd_sweep},
        {"score-hist", "predicted vs empirical test-score histograms (score_hist.csv/json)",
         erma::cmd_score_hist},
    };
    std::vector<std::pair<CLI::App*, const Sub*>> apps;
    for (const Sub& s : subs) {
        CLI::App* sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--config", config, "JSON config file")->required();
        sub->add_option("--out", out, "output directory (overrides config "out")");
        sub->add_option("--threads", threads, "worker threads (0 = hardware)");
        sub->add_option("--seed", seed, "master seed (overrides config seed)");
        apps.emplace_back(sub, &s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : erma::kExitConfig;
    }

    try {
        for (auto& [sub, s] : apps) {
            if (!sub->parsed()) continue;
            erma::ConfigOverrides ov;
            if (sub->count("--seed")) ov.seed = seed;
            if (sub->count("--out")) ov.out_dir = out;
            if (sub->count("--threads")) ov.threads = threads;
            erma::ExperimentConfig cfg = erma::load_config(config, ov);
            erma::set_threads(cfg.threads);
            int rc = s->run(cfg);
            if (rc == erma::kExitNonConvergence)
                std::cerr << "erma: fixed-point iteration did not converge\n";
            return rc;
        }
    } catch (const erma::ConfigError& e) {
        std::cerr << "erma: config error: " << e.what() << "\n";
        return erma::kExitConfig;
    } catch (const erma::ConvergenceError& e) {
        std::cerr << "erma: " << e.what() << "\n";
        return erma::kExitNonConvergence;
    } catch (const std::exception& e) {
        std::cerr << "erma: " << e.what() << "\n";
        return erma::kExitConfig;
    }
    return erma::kExitConfig;
}
