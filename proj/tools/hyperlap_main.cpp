#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "hyperlap/cli.hpp"
#include "hyperlap/numerics.hpp"

int main(int argc, char** argv) {
    CLI::App app{"hyperlap: harmonic analysis experiments on hyperbolic spaces"};
    std::string command, config_path, out_dir = ".";
    std::uint64_t seed = 0;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    bool svg = false;

    app.add_option("command", command, "experiment to run")
        ->required()
        ->check(CLI::IsMember(hyperlap::cli::command_names()));
    app.add_option("--config", config_path, "JSON configuration (defaults when omitted)")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory, created if missing");
    auto* seed_opt = app.add_option("--seed", seed, "root seed; overrides the config");
    app.add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));
    app.add_flag("--svg", svg, "also write log-log SVG plots");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        hyperlap::set_thread_count(threads);
        hyperlap::cli::RunRequest req;
        req.command = command;
        if (!config_path.empty()) req.config = hyperlap::cli::load_config(config_path);
        req.out_dir = out_dir;
        if (*seed_opt) req.seed = seed;
        req.svg = svg;
        const auto result = hyperlap::cli::run(req);
        for (const std::string& f : result.files) std::printf("%s\n", f.c_str());
        return 0;
    } catch (...) {
        const int code = hyperlap::cli::exit_code_for_current_exception();
        try {
            throw;
        } catch (const std::exception& e) {
            std::fprintf(stderr, "hyperlap %s: %s\n", command.c_str(), e.what());
        } catch (...) {
            std::fprintf(stderr, "hyperlap %s: unknown error\n", command.c_str());
        }
        return code;
    }
}
