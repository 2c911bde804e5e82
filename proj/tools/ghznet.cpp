#include "ghznet/experiment.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace ghznet;

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

int list_kinds(const std::string& which)
{
    if (which.empty()) {
        for (const auto& k : experiment_registry())
            std::cout << k.name << "  " << k.summary << '\n';
        return 0;
    }
    const auto kind = parse_kind(which);
    if (!kind) {
        std::cerr << "error: unknown kind '" << which << "'; valid kinds:\n";
        for (const auto& k : experiment_registry())
            std::cerr << "  " << k.name << '\n';
        return kConfigError;
    }
    print_kind_help(std::cout, kind_info(*kind));
    return 0;
}

int run(const std::string& config_path, const Overrides& overrides, bool quiet)
{
    ExperimentSpec spec;
    try {
        std::ifstream in(config_path);
        if (!in) {
            std::cerr << "error: cannot open config '" << config_path << "'\n";
            return kConfigError;
        }
        spec = make_spec(ConfigFile::parse(in, config_path), overrides);
    }
    catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }

    try {
        std::ostream null_stream(nullptr);
        const auto files = run_experiment(spec, quiet ? null_stream : std::cerr);
        for (const auto& f : files)
            std::cout << f.string() << '\n';
    }
    catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"GHZ-fusion repeater network experiments"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::optional<std::string> out_dir;
    bool quiet = false;
    auto* run_cmd = app.add_subcommand("run", "run the experiment described by a config file");
    run_cmd->add_option("config", config_path, "config file")->required();
    run_cmd->add_option("--seed", seed, "master seed (overrides experiment.seed)");
    run_cmd->add_option("--threads", threads, "worker threads")->check(CLI::Range(1, 1024));
    run_cmd->add_option("--out-dir", out_dir, "directory for output files (default .)");
    run_cmd->add_flag("-q,--quiet", quiet, "suppress progress lines");

    std::string which;
    auto* list_cmd = app.add_subcommand("list", "list experiment kinds, or document one kind");
    list_cmd->add_option("kind", which, "experiment kind");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    if (*list_cmd)
        return list_kinds(which);

    Overrides overrides;
    overrides.seed = seed;
    overrides.threads = threads;
    if (out_dir)
        overrides.out_dir = *out_dir;
    return run(config_path, overrides, quiet);
}
