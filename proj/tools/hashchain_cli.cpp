// Command-line front end: scenario runs and sweeps, delay calibration,
// and ledger / broker-log inspection.
//
// Exit codes: 0 success, 1 validation or verification failure,
// 2 usage or configuration error, 3 I/O error.

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "hashchain/hashchain.hpp"

namespace {

struct CliError {
    int code;
    std::string message;
};

std::string read_text_or_throw(const std::string& path) {
    try {
        const hashchain::Bytes data = hashchain::read_file(path);
        return std::string(data.begin(), data.end());
    } catch (const std::exception& e) {
        throw CliError{3, e.what()};
    }
}

void write_text_or_throw(const std::string& path, const std::string& text) {
    try {
        hashchain::write_text_file(path, text);
    } catch (const std::exception& e) {
        throw CliError{3, e.what()};
    }
}

hashchain::ScenarioConfig load_scenario(const std::string& config_path,
                                        std::optional<std::uint64_t> seed) {
    hashchain::ScenarioConfig config;
    if (!config_path.empty()) {
        const std::string text = read_text_or_throw(config_path);
        try {
            config = hashchain::ScenarioConfig::from_kv(hashchain::KvFile::parse(text));
        } catch (const std::exception& e) {
            throw CliError{2, std::string("invalid config: ") + e.what()};
        }
    }
    if (seed) config.seed = *seed;
    return config;
}

std::string format_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            const std::string& out_path, const std::string& chain_out,
            const std::string& broker_out, bool verbose) {
    const hashchain::ScenarioConfig config = load_scenario(config_path, seed);
    const double speed = config.speeds_mps.front();
    const std::uint64_t density = config.densities.front();

    hashchain::CellArtifacts artifacts;
    hashchain::DelayReport report;
    const hashchain::CellStats hash_stats =
        hashchain::run_cell(config, hashchain::Scheme::hashchain, speed, density,
                            hashchain::cell_seed_of(config, hashchain::Scheme::hashchain, 0, 0),
                            &artifacts);
    report.rows.push_back(hash_stats.row);
    const hashchain::CellStats base_stats =
        hashchain::run_cell(config, hashchain::Scheme::baseline, speed, density,
                            hashchain::cell_seed_of(config, hashchain::Scheme::baseline, 0, 0));
    report.rows.push_back(base_stats.row);

    if (!out_path.empty()) write_text_or_throw(out_path, report.to_csv());
    if (!chain_out.empty()) {
        try {
            artifacts.source_chain.save(chain_out);
        } catch (const std::exception& e) {
            throw CliError{3, e.what()};
        }
    }
    if (!broker_out.empty())
        write_text_or_throw(broker_out, hashchain::dump_records(artifacts.blocks_log));
    if (verbose) {
        std::cout << "cell speed=" << hashchain::speed_kmh_of(speed) << "km/h density=" << density
                  << " blocks=" << artifacts.source_chain.size() << "\n";
    }
    std::cout << report.to_csv();
    return 0;
}

int cmd_sweep(const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_path, bool verbose) {
    const hashchain::ScenarioConfig config = load_scenario(config_path, seed);
    const hashchain::DelayReport report = hashchain::run_scenario(config);
    const std::string csv = report.to_csv();
    if (!out_path.empty()) write_text_or_throw(out_path, csv);
    if (verbose) std::cout << "cells: " << report.rows.size() << "\n";
    if (out_path.empty()) std::cout << csv;
    return 0;
}

int cmd_calibrate(const std::string& config_path, const std::string& targets_path,
                  std::optional<std::uint64_t> seed, const std::string& out_path, bool verbose) {
    const hashchain::ScenarioConfig config = load_scenario(config_path, seed);
    hashchain::CalibrationTargets targets;
    if (!targets_path.empty()) {
        const std::string text = read_text_or_throw(targets_path);
        try {
            targets = hashchain::CalibrationTargets::from_kv(hashchain::KvFile::parse(text));
        } catch (const std::exception& e) {
            throw CliError{2, std::string("invalid targets: ") + e.what()};
        }
    }

    const hashchain::CalibrationResult result = hashchain::calibrate_delays(config, targets);

    hashchain::KvFile out = result.fitted.to_kv();
    out.set("anchor_baseline_30kmh_ms", format_num(targets.baseline_30_ms));
    out.set("anchor_hashchain_30kmh_ms", format_num(targets.hashchain_30_ms));
    out.set("anchor_hashchain_overall_ms", format_num(targets.hashchain_overall_ms));
    out.set("residual_baseline_30kmh", format_num(result.residual_baseline_30));
    out.set("residual_hashchain_30kmh", format_num(result.residual_hashchain_30));
    out.set("residual_hashchain_overall", format_num(result.residual_hashchain_overall));
    const std::string text = out.serialize();
    if (!out_path.empty()) write_text_or_throw(out_path, text);

    if (verbose) {
        std::cout << "iterations: " << result.iterations << "\n"
                  << "model baseline@30:  " << result.model.baseline_30 << "\n"
                  << "model hashchain@30: " << result.model.hashchain_30 << "\n"
                  << "model hashchain:    " << result.model.hashchain_overall << "\n";
    }
    std::cout << "fitted ca_roundtrip_ms = " << format_num(result.fitted.ca_roundtrip_ms) << "\n"
              << "fitted contention_per_vehicle_ms = "
              << format_num(result.fitted.contention_per_vehicle_ms) << "\n"
              << "fitted block_build_ms = " << format_num(result.fitted.block_build_ms) << "\n"
              << "max residual = " << format_num(result.max_residual()) << "\n";
    if (!result.converged) {
        std::cerr << "calibration did not converge; best residuals reported\n";
        return 1;
    }
    return 0;
}

int cmd_verify_chain(const std::string& chain_path) {
    hashchain::Bytes data;
    try {
        data = hashchain::read_file(chain_path);
    } catch (const std::exception& e) {
        throw CliError{3, e.what()};
    }
    hashchain::Chain chain;
    try {
        chain = hashchain::Chain::decode(data);
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    }
    const auto fault = chain.validate();
    if (fault) {
        std::cout << "invalid at block " << fault->block_index << ": "
                  << hashchain::to_string(fault->fault) << "\n";
        return 1;
    }
    std::cout << "valid: " << chain.size() << " blocks\n";
    return 0;
}

int cmd_ledger_dump(const std::string& chain_path, const std::string& out_path) {
    hashchain::Bytes data;
    try {
        data = hashchain::read_file(chain_path);
    } catch (const std::exception& e) {
        throw CliError{3, e.what()};
    }
    hashchain::Chain chain;
    try {
        chain = hashchain::Chain::decode(data);
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    }
    const std::string text = hashchain::dump_chain(chain);
    if (!out_path.empty())
        write_text_or_throw(out_path, text);
    else
        std::cout << text;
    return 0;
}

int cmd_broker_dump(const std::string& log_path, const std::string& out_path) {
    const std::string text = read_text_or_throw(log_path);
    std::vector<hashchain::Record> records;
    try {
        records = hashchain::parse_record_dump(text);
    } catch (const std::exception& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 1;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].offset != i) {
            std::cerr << "offset gap at record " << i << " (offset " << records[i].offset << ")\n";
            return 1;
        }
    }
    std::string out;
    for (const hashchain::Record& r : records) {
        out += std::to_string(r.offset) + " " + std::to_string(r.produced_at_ms) + " " +
               std::to_string(r.payload.size()) + " bytes\n";
    }
    if (!out_path.empty())
        write_text_or_throw(out_path, out);
    else
        std::cout << out;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hashchain cross-border authentication: ledger, broker and delay simulation"};
    app.require_subcommand(1);

    std::string config_path, targets_path, out_path, chain_out, broker_out, file_arg;
    std::optional<std::uint64_t> seed;
    bool verbose = false;
    app.add_flag("--verbose", verbose, "extra progress output");

    auto add_common = [&](CLI::App* sub, bool with_config) {
        sub->fallthrough();
        if (with_config)
            sub->add_option("--config", config_path, "scenario file (key = value)");
        sub->add_option("--seed", seed, "override the scenario seed");
        sub->add_option("--out", out_path, "output file path");
    };

    CLI::App* run = app.add_subcommand("run", "run the first (speed, density) cell, both schemes");
    add_common(run, true);
    run->add_option("--chain-out", chain_out, "write the source SM chain file");
    run->add_option("--broker-out", broker_out, "write the blocks-topic log dump");

    CLI::App* sweep = app.add_subcommand("sweep", "run every (scheme, speed, density) cell");
    add_common(sweep, true);

    CLI::App* calibrate = app.add_subcommand("calibrate", "fit delay constants to anchor targets");
    add_common(calibrate, true);
    calibrate->add_option("--targets", targets_path, "anchor targets file");

    CLI::App* verify = app.add_subcommand("verify-chain", "validate a persisted chain file");
    verify->fallthrough();
    verify->add_option("file", file_arg, "chain file")->required();

    CLI::App* ldump = app.add_subcommand("ledger-dump", "print a chain file as text");
    ldump->fallthrough();
    ldump->add_option("file", file_arg, "chain file")->required();
    ldump->add_option("--out", out_path, "output file path");

    CLI::App* bdump = app.add_subcommand("broker-dump", "print a broker log dump");
    bdump->fallthrough();
    bdump->add_option("file", file_arg, "broker log file")->required();
    bdump->add_option("--out", out_path, "output file path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (run->parsed())
            return cmd_run(config_path, seed, out_path, chain_out, broker_out, verbose);
        if (sweep->parsed()) return cmd_sweep(config_path, seed, out_path, verbose);
        if (calibrate->parsed())
            return cmd_calibrate(config_path, targets_path, seed, out_path, verbose);
        if (verify->parsed()) return cmd_verify_chain(file_arg);
        if (ldump->parsed()) return cmd_ledger_dump(file_arg, out_path);
        if (bdump->parsed()) return cmd_broker_dump(file_arg, out_path);
    } catch (const CliError& e) {
        std::cerr << "error: " << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
