#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <sstream>

#include "snnconv/commands.hpp"
#include "snnconv/errors.hpp"

namespace {

std::vector<int> parse_int_list(const std::string& csv, const char* what) {
    std::vector<int> out;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        try {
            out.push_back(std::stoi(cell));
        } catch (const std::exception&) {
            throw snnconv::UsageError(std::string("bad ") + what + " value '" + cell + "'");
        }
    }
    if (out.empty()) throw snnconv::UsageError(std::string("empty ") + what + " list");
    return out;
}

std::vector<std::string> parse_str_list(const std::string& csv) {
    std::vector<std::string> out;
    std::istringstream in(csv);
    std::string cell;
    while (std::getline(in, cell, ',')) {
        if (!cell.empty()) out.push_back(cell);
    }
    return out;
}

std::string default_config_path() {
    const char* env = std::getenv("SNNCONV_CONFIG");
    return env ? env : "";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"ANN-to-SNN conversion engine with multi-stage adaptive thresholds"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::simple);

    namespace cmd = snnconv::commands;
    cmd::TrainOptions train_opts;
    cmd::CalibrateOptions calib_opts;
    cmd::SimulateOptions sim_opts;
    cmd::SweepOptions sweep_opts;
    cmd::AnalyzeSinOptions sin_opts;
    cmd::EnergyOptions energy_opts;
    std::string arch_csv, regimes_csv, tlist_csv;

    CLI::App* train = app.add_subcommand("train", "Train a toy MLP (SGD, cross-entropy)");
    train->add_option("--data", train_opts.data_path, "dataset file")->required();
    train->add_option("--arch", arch_csv, "comma-separated widths, e.g. 2,16,4")->required();
    train->add_option("--epochs", train_opts.epochs, "training epochs (0 writes the seeded init)")
        ->capture_default_str();
    train->add_option("--lr", train_opts.lr, "SGD learning rate")->capture_default_str();
    train->add_option("--seed", train_opts.seed, "RNG seed")->capture_default_str();
    train->add_option("--out", train_opts.out_path, "output model file")->required();

    CLI::App* calib = app.add_subcommand("calibrate", "Record per-layer activation maxima (V_th)");
    calib->add_option("--model", calib_opts.model_path, "model file")->required();
    calib->add_option("--data", calib_opts.data_path, "calibration dataset")->required();
    calib->add_flag("--store-pre-relu", calib_opts.store_pre_relu,
                    "store per-sample pre-ReLU tensors (needed for SIN analysis)");
    calib->add_option("--out", calib_opts.out_path, "output profile file")->required();

    const std::string cfg_help =
        "run config (INI). Threshold defaults per network family: VGG-like alpha=0.03, k_a=1, "
        "k_i=1.0, C=5.0, tau_mp=1, tau_rd=1; ResNet20-like alpha=0.3, tau_mp=tau_rd=0.5; "
        "ResNet34-like alpha=1.0, tau_mp=tau_rd=0.5. Confidence default: last IF layer only, "
        "early_steps=16, p = 1 - SIN ratio. Energy: ac_pj=0.9, mac_pj=4.6.";

    CLI::App* sim = app.add_subcommand("simulate", "Run the converted SNN over a dataset");
    sim->add_option("--model", sim_opts.model_path, "model file")->required();
    sim->add_option("--profile", sim_opts.profile_path, "activation profile")->required();
    sim->add_option("--config", sim_opts.config_path, cfg_help)
        ->default_val(default_config_path())
        ->envname("SNNCONV_CONFIG");
    sim->add_option("--data", sim_opts.data_path, "evaluation dataset")->required();
    sim->add_option("--T", sim_opts.T, "time steps (overrides the config)");
    sim->add_option("--out", sim_opts.out_path, "output report (JSON)")->required();
    sim->add_option("--jobs", sim_opts.jobs, "worker threads")->capture_default_str();
    sim->add_flag("--potential-readout", sim_opts.potential_readout,
                  "read class scores from output potentials instead of firing rates");

    CLI::App* sweep = app.add_subcommand("sweep", "Accuracy/firing-rate table over regimes and T");
    sweep->add_option("--model", sweep_opts.model_path, "model file")->required();
    sweep->add_option("--profile", sweep_opts.profile_path, "activation profile")->required();
    sweep->add_option("--config", sweep_opts.config_path, cfg_help)
        ->default_val(default_config_path())
        ->envname("SNNCONV_CONFIG");
    sweep->add_option("--data", sweep_opts.data_path, "evaluation dataset")->required();
    sweep->add_option("--regimes", regimes_csv, "comma-separated: constant,dtt,det,msat")->required();
    sweep->add_option("--T-list", tlist_csv, "comma-separated T values")->required();
    sweep->add_option("--out", sweep_opts.out_path, "output CSV")->required();
    sweep->add_option("--jobs", sweep_opts.jobs, "worker threads")->capture_default_str();

    CLI::App* sin = app.add_subcommand("analyze-sin", "Per-layer SIN ratios, ANS and confidence");
    sin->add_option("--model", sin_opts.model_path, "model file")->required();
    sin->add_option("--profile", sin_opts.profile_path, "profile with stored pre-ReLU")->required();
    sin->add_option("--config", sin_opts.config_path, cfg_help)
        ->default_val(default_config_path())
        ->envname("SNNCONV_CONFIG");
    sin->add_option("--data", sin_opts.data_path, "calibration dataset")->required();
    sin->add_option("--T", sin_opts.T, "time steps (overrides the config)");
    sin->add_option("--out", sin_opts.out_path, "output report (JSON)")->required();

    CLI::App* energy = app.add_subcommand("energy", "AC/MAC energy estimate (0.9 pJ/AC, 4.6 pJ/MAC)");
    energy->add_option("--model", energy_opts.model_path, "model file")->required();
    energy->add_option("--profile", energy_opts.profile_path, "activation profile")->required();
    energy->add_option("--config", energy_opts.config_path, cfg_help)
        ->default_val(default_config_path())
        ->envname("SNNCONV_CONFIG");
    energy->add_option("--data", energy_opts.data_path, "evaluation dataset")->required();
    energy->add_option("--T", energy_opts.T, "time steps (overrides the config)");
    energy->add_option("--out", energy_opts.out_path, "output report (JSON)")->required();
    energy->add_option("--jobs", energy_opts.jobs, "worker threads")->capture_default_str();

    try {
        app.parse(argc, argv);
        if (train->parsed()) {
            train_opts.arch = parse_int_list(arch_csv, "--arch");
            return cmd::train(train_opts);
        }
        if (calib->parsed()) return cmd::calibrate(calib_opts);
        if (sim->parsed()) return cmd::simulate(sim_opts);
        if (sweep->parsed()) {
            sweep_opts.regimes = parse_str_list(regimes_csv);
            sweep_opts.T_list = parse_int_list(tlist_csv, "--T-list");
            return cmd::sweep(sweep_opts);
        }
        if (sin->parsed()) return cmd::analyze_sin(sin_opts);
        if (energy->parsed()) return cmd::energy(energy_opts);
        std::cerr << "error: no subcommand\n";
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    } catch (const snnconv::UsageError& e) {
        std::cerr << "error: usage: " << e.what() << "\n";
        return 2;
    } catch (const snnconv::ParseError& e) {
        std::cerr << "error: parse: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}
