#include <CLI11.hpp>

#include <iostream>

#include "rhlab/experiment.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Random real hypersurface experiments"};
    app.require_subcommand(1);
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    for (const auto& name : rhlab::experiment::experiment_names()) {
        auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
        sub->add_option("--config", config_path, "key = value [unit] config file")->required();
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--out", out_dir, "artifact directory")->capture_default_str();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : rhlab::experiment::config_error;
    }
    rhlab::experiment::RunOptions opt;
    opt.subcommand = app.get_subcommands().front()->get_name();
    if (app.get_subcommands().front()->count("--seed")) opt.seed = seed;
    opt.out_dir = out_dir;
    const auto r = rhlab::experiment::run_experiment(config_path, opt);
    for (const auto& f : r.files) std::cout << f << "\n";
    if (r.exit_code != 0) std::cerr << "rhlab: " << r.message << "\n";
    return r.exit_code;
}
