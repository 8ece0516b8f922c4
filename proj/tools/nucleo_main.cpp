#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nucleo/commands.hpp"
#include "nucleo/config.hpp"
#include "nucleo/csv.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nucleus detection toolkit for cytology frames"};
    app.require_subcommand(1);

    struct Flags {
        std::string config_path;
        std::vector<std::string> sets;
        std::string dataset;
        std::string out;
        std::string seed;
        std::string threads;
    };

    const std::map<std::string, std::string> blurbs = {
        {"check", "load the dataset and print the per-grade summary table"},
        {"segment", "run the thresholding baseline, write regions.csv and rasters"},
        {"tune", "grid-search baseline parameters on the training split"},
        {"evaluate", "score a detection directory against the ground truth"},
        {"cnn-train", "train the patch classifier and save the model"},
        {"cnn-detect", "dense inference with a trained model, write point lists"},
        {"overlay", "render detections and ground truth onto a frame"},
        {"report", "combine evaluation summaries into one comparison table"},
    };

    std::vector<std::pair<CLI::App*, Flags>> subs;
    subs.reserve(nucleo::cli::kCommandNames.size());
    for (const std::string& name : nucleo::cli::kCommandNames) {
        CLI::App* sub = app.add_subcommand(name, blurbs.at(name));
        subs.emplace_back(sub, Flags{});
        Flags& f = subs.back().second;
        sub->add_option("-c,--config", f.config_path, "key=value config file");
        sub->add_option("-s,--set", f.sets, "override a single key (key=value)");
        sub->add_option("--dataset", f.dataset, "dataset root directory");
        sub->add_option("--out", f.out, "output directory");
        sub->add_option("--seed", f.seed, "rng seed");
        sub->add_option("--threads", f.threads, "worker threads, 0 = all cores");
    }

    CLI11_PARSE(app, argc, argv);

    for (auto& [sub, f] : subs) {
        if (!sub->parsed()) continue;
        try {
            nucleo::cli::KeyValueConfig cfg;
            if (!f.config_path.empty())
                cfg = nucleo::cli::KeyValueConfig::parse_file(f.config_path);
            for (const std::string& kv : f.sets) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos || eq == 0) {
                    std::cerr << "error: --set expects key=value, got \"" << kv
                              << "\"\n";
                    return nucleo::cli::kExitConfig;
                }
                cfg.set(nucleo::trim(kv.substr(0, eq)),
                        nucleo::trim(kv.substr(eq + 1)));
            }
            // command line flags win over the config file
            if (!f.dataset.empty()) cfg.set("dataset", f.dataset);
            if (!f.out.empty()) cfg.set("output_dir", f.out);
            if (!f.seed.empty()) cfg.set("seed", f.seed);
            if (!f.threads.empty()) cfg.set("threads", f.threads);
            return nucleo::cli::run_command(sub->get_name(), cfg, std::cout,
                                            std::cerr);
        } catch (const nucleo::cli::ConfigError& e) {
            std::cerr << "error: " << e.what() << "\n";
            return nucleo::cli::kExitConfig;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << "\n";
            return nucleo::cli::kExitData;
        }
    }
    return nucleo::cli::kExitConfig;
}
