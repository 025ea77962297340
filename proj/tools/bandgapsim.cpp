#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "bandgapsim/config.hpp"
#include "bandgapsim/errors.hpp"
#include "bandgapsim/pipelines.hpp"

namespace {

enum ExitCode { kOk = 0, kSchema = 1, kComputation = 2, kIo = 3 };

struct Flags {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
};

void add_run_flags(CLI::App* sub, Flags& f, bool config_required) {
    auto* c = sub->add_option("--config", f.config, "run document (JSON)");
    if (config_required) c->required();
    sub->add_option("--out", f.out, "output directory (overrides the document)");
    sub->add_option("--seed", f.seed, "base seed (overrides the document)");
    sub->add_option("--threads", f.threads, "worker threads, 0 = logical cores");
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("bandgapsim");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    if (const char* env = std::getenv("BANDGAPSIM_LOG")) {
        const auto lvl = spdlog::level::from_str(env);
        // from_str maps anything unknown to off; only honour real names
        if (lvl != spdlog::level::off || std::string(env) == "off") spdlog::set_level(lvl);
        else spdlog::warn("BANDGAPSIM_LOG='{}' is not a level name", env);
    }
}

int validate(const std::string& path) {
    bgs::ParsedConfig p;
    try {
        p = bgs::parse_config_file(path);
    } catch (const bgs::IoError& e) {
        std::cout << "error: " << path << ": " << e.what() << "\n";
        return kSchema;
    }
    for (const auto& d : p.diagnostics) std::cout << bgs::to_string(d) << "\n";
    return p.ok() ? kOk : kSchema;
}

}  // namespace

int main(int argc, char** argv) {
    setup_logging();
    CLI::App app{"Metamaterial-coupled qubit array simulator"};
    app.require_subcommand(1);
    app.set_version_flag("--version", bgs::kVersion);

    Flags flags;
    std::string target;
    std::string validate_path;
    for (const char* name : {"circuit", "bound-states", "quench", "learn", "purcell", "mitigate"})
        add_run_flags(app.add_subcommand(name, std::string("run the ") + name + " pipeline"), flags, true);
    auto* rep = app.add_subcommand("reproduce", "run a built-in figure pipeline");
    rep->add_option("target", target, "fig2 | fig3 | fig4 | purcell")
        ->required()
        ->check(CLI::IsMember({"fig2", "fig3", "fig4", "purcell"}));
    add_run_flags(rep, flags, false);
    auto* val = app.add_subcommand("validate", "check a run document without computing");
    val->add_option("--config,config", validate_path, "run document");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kSchema;
    }

    const std::string sub = app.get_subcommands().front()->get_name();
    if (sub == "validate") {
        if (validate_path.empty()) {
            std::cerr << "validate needs a config path\n";
            return kSchema;
        }
        return validate(validate_path);
    }

    try {
        const bgs::RunConfig cfg = !flags.config.empty() ? bgs::load_config(flags.config)
                                                          : bgs::load_config_text(bgs::builtin_config(target));
        bgs::RunOverrides o;
        o.seed = flags.seed;
        o.threads = flags.threads;
        if (!flags.out.empty()) o.output = flags.out;
        bgs::run(sub, cfg, o, target);
        return kOk;
    } catch (const bgs::SchemaError& e) {
        spdlog::error("{}", e.what());
        return kSchema;
    } catch (const bgs::IoError& e) {
        spdlog::error("{}", e.what());
        return kIo;
    } catch (const bgs::ComputationError& e) {
        spdlog::error("{}", e.what());
        return kComputation;
    } catch (const std::exception& e) {
        spdlog::error("unexpected failure: {}", e.what());
        return kComputation;
    }
}
