// Command-line front end: ingest (load/validate/export data), fit
// (optimize sketch parameters on validation windows), backtest (run the
// tuned policy on test windows), report (compare saved reports), and
// sketch check (validate a rule file).
//
// Exit codes: 0 success, 1 validation/configuration error, 2 runtime
// failure.

#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "trendtune/commands.hpp"
#include "trendtune/errors.hpp"
#include "trendtune/version.hpp"

namespace {

int run(int argc, char** argv) {
    CLI::App app{"Trend-conditioned tuning of frozen trading policies"};
    app.set_version_flag("--version", trendtune::kVersion);
    app.require_subcommand(1);

    std::string config_path;
    std::string export_dir;
    std::string label;
    std::vector<std::string> param_files;
    std::vector<std::string> report_files;
    std::string rule_file;
    int ensemble = 1;

    CLI::App* ingest = app.add_subcommand("ingest", "Load and validate the configured series");
    ingest->add_option("--config", config_path, "Run config file")->required();
    ingest->add_option("--export", export_dir, "Re-export validated series into this directory");

    CLI::App* fit = app.add_subcommand("fit", "Fit sketch parameters per rolling split");
    fit->add_option("--config", config_path, "Run config file")->required();

    CLI::App* backtest =
        app.add_subcommand("backtest", "Run the tuned policy over the test windows");
    backtest->add_option("--config", config_path, "Run config file")->required();
    backtest->add_option("--params", param_files, "Parameter file per split, in split order")
        ->required()
        ->expected(-1);
    backtest->add_option("--label", label, "Strategy label used in the report");

    CLI::App* report = app.add_subcommand("report", "Compare saved run reports");
    report->add_option("reports", report_files, "Report files")->required()->expected(-1);
    report->add_option("--export", export_dir, "Write per-seed equity curves here");

    CLI::App* sketch = app.add_subcommand("sketch", "Rule-file utilities");
    sketch->require_subcommand(1);
    CLI::App* check = sketch->add_subcommand("check", "Parse and validate a rule file");
    check->add_option("rules", rule_file, "Rule file")->required();
    check->add_option("--ensemble", ensemble, "Validate for an ensemble of this size");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    if (*ingest) {
        for (const auto& s : trendtune::cmd_ingest(config_path, export_dir)) {
            std::cout << s.asset_id << ": " << s.bars << " bars @ " << s.interval << "s, ["
                      << s.range.start << ", " << s.range.end << "), close "
                      << s.min_close << ".." << s.max_close << "\n";
        }
    } else if (*fit) {
        const trendtune::FitOutputs outputs = trendtune::cmd_fit(config_path);
        for (std::size_t i = 0; i < outputs.results.size(); ++i) {
            std::cout << "split " << i << ": best objective "
                      << outputs.results[i].best_objective << " over "
                      << outputs.results[i].history.size() << " trials -> "
                      << outputs.param_files[i] << "\n";
        }
    } else if (*backtest) {
        const trendtune::RunReport result =
            trendtune::cmd_backtest(config_path, param_files, label);
        std::cout << trendtune::render_text(result);
    } else if (*report) {
        std::cout << trendtune::cmd_report(report_files, export_dir);
    } else if (*check) {
        std::cout << trendtune::cmd_sketch_check(rule_file, ensemble);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const trendtune::EvalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const trendtune::Error& e) {
        // Parse, validation, config and domain errors all mean the inputs
        // need fixing.
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
