#include "fdkin/commands.hpp"
#include "fdkin/errors.hpp"
#include "fdkin/numerics.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

namespace {

int report(const char* kind, const std::exception& e, int code)
{
    fdkin::Json j{{"error", kind}, {"message", e.what()}, {"exit_code", code}};
    std::cerr << j.dump() << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Fermi-Dirac kinetic solver"};
    app.require_subcommand(1, 1);

    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;

    for (const char* name : {"simulate", "equilibrium", "positivity", "kernel", "oracle"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "configuration file")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "overrides the config seed");
        sub->add_option("--threads", threads, "worker threads (fallback: FDKIN_THREADS)")->check(CLI::PositiveNumber);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (threads)
            fdkin::set_thread_count(*threads);
        fdkin::RunConfig cfg = fdkin::parse_config_file(config_path);
        if (seed)
            cfg.seed = *seed;
        const fdkin::Json j = fdkin::execute(command, cfg, out_dir);
        std::cout << j.dump(2) << "\n";
        return 0;
    } catch (const fdkin::ConfigError& e) {
        return report("config", e, 1);
    } catch (const fdkin::InvalidArgument& e) {
        return report("config", e, 1);
    } catch (const fdkin::NumericalError& e) {
        return report("numerical", e, 2);
    } catch (const fdkin::IoError& e) {
        return report("io", e, 3);
    } catch (const std::exception& e) {
        return report("numerical", e, 2);
    }
}
