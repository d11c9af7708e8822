// qtrb: qutrit randomized and cycle benchmarking on a simulated device.

#include <qtrb/app.hpp>

#include <CLI11.hpp>

#include <iostream>
#include <string>

int main(int argc, char** argv) {
    CLI::App cli{"Qutrit randomized benchmarking and cycle benchmarking"};
    cli.require_subcommand(1);

    std::string config_path;
    auto* run = cli.add_subcommand("run", "Run the experiment described by a JSON config");
    run->add_option("config", config_path, "Config file")->required();

    std::string table_path;
    auto* table = cli.add_subcommand("export-table", "Write the compiled 216-element Clifford table as JSON");
    table->add_option("path", table_path, "Output file")->required();

    auto* presets = cli.add_subcommand("presets", "List stock noise presets");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = cli.exit(e);
        return code == 0 ? 0 : qtrb::app::kConfigError;
    }

    if (run->parsed()) return qtrb::app::run_command(config_path, std::cout, std::cerr);
    if (table->parsed()) return qtrb::app::export_table_command(table_path, std::cout, std::cerr);
    if (presets->parsed()) return qtrb::app::presets_command(std::cout);
    return qtrb::app::kConfigError;
}
