// Command-line runner: `imjet run --config cfg.json` or one task as a subcommand.
#include "imjet/runner.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

int main(int argc, char** argv) {
    CLI::App app{"Inertial-manifold jets and extensions: config-driven experiment runner"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(IMJET_VERSION));

    std::string config_path, out_dir;
    std::vector<std::string> overrides, tasks;
    std::uint64_t seed = 0;
    int order = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config,-c", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out,-o", out_dir, "Output directory (overrides output_dir)");
        sub->add_option("--set", overrides, "Override a field: path.to.key=value (repeatable)");
        sub->add_option("--seed", seed, "Root seed (overrides seed)");
    };

    CLI::App* run = app.add_subcommand("run", "Run the task list of the config");
    add_common(run);
    run->add_option("--tasks", tasks, "Task list (overrides tasks)")->delimiter(',');

    std::vector<CLI::App*> task_cmds;
    for (const auto& name : imjet::task_names()) {
        CLI::App* sub = app.add_subcommand(name, "Run the '" + name + "' task");
        add_common(sub);
        if (name == "jets" || name == "compat-check") sub->add_option("--order", order, "Jet order");
        task_cmds.push_back(sub);
    }

    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = imjet::load_config(config_path);
        for (const auto& o : overrides) imjet::apply_override(cfg, o);
        imjet::RunOptions ro;
        ro.out_dir = out_dir;
        for (CLI::App* sub : app.get_subcommands()) {
            if (sub->count("--seed") > 0) ro.seed = seed;
            if (sub == run) {
                if (!tasks.empty()) ro.tasks = tasks;
            } else {
                const std::string name = sub->get_name();
                ro.tasks = std::vector<std::string>{name};
                if (order > 0) cfg["task_options"][name]["order"] = order;
            }
        }
        const int code = imjet::run_experiment(cfg, ro);
        if (code != imjet::kExitOk) std::cerr << "imjet: finished with exit code " << code << " (see error/report files)\n";
        return code;
    } catch (const imjet::InputError& e) {
        std::cerr << "imjet: " << e.what() << '\n';
        return imjet::kExitSchema;
    }
}
