// ruq: batch front end for data generation, training, evaluation, Monte Carlo UQ and export.

#include <iostream>

#include <CLI11.hpp>

#include "ruq/cli/commands.hpp"

using namespace ruq::cli;

int main(int argc, char** argv)
{
    CLI::App app{"Surrogate-accelerated Monte Carlo for two-phase reservoir flow"};
    app.require_subcommand(1);

    DatagenArgs dg;
    auto* datagen = app.add_subcommand("datagen", "simulate permeability x well-set pairs and write a dataset");
    datagen->add_option("--grid", dg.grid, "cells per side")->capture_default_str();
    datagen->add_option("--n-perm", dg.n_perm, "permeability realizations")->capture_default_str();
    datagen->add_option("--n-wells", dg.n_wells, "well sets (at least 2)")->capture_default_str();
    datagen->add_option("--split-ratio", dg.split_ratio, "train fraction")->capture_default_str();
    datagen->add_option("--seed", dg.seed, "root seed")->capture_default_str();
    datagen->add_option("--jobs", dg.jobs, "parallel simulations (0: all cores)")->capture_default_str();
    datagen->add_option("--out", dg.out, "output directory")->required();

    TrainArgs tr;
    auto* train = app.add_subcommand("train", "train a V-UNet on a dataset");
    train->add_option("--data", tr.data, "dataset directory")->required();
    train->add_option("--out", tr.out, "checkpoint path")->required();
    train->add_option("--history", tr.history, "loss history CSV (default <out>.history.csv)");
    train->add_option("--lr", tr.lr)->capture_default_str();
    train->add_option("--epochs", tr.epochs)->capture_default_str();
    train->add_option("--batch", tr.batch)->capture_default_str();
    train->add_option("--l2", tr.l2, "weight penalty on every parameter group")->capture_default_str();
    train->add_option("--variant", tr.variant, "normal or reversed")->capture_default_str();
    train->add_flag("--no-inter-res", tr.no_inter_res, "drop the residual blocks between resolutions");
    train->add_flag("--no-lowres-res", tr.no_lowres_res, "drop the low-resolution residual blocks");
    train->add_option("--base-channels", tr.base_channels, "channels at full resolution (0: by grid size)")
        ->capture_default_str();
    train->add_option("--seed", tr.seed)->capture_default_str();

    EvalArgs ev;
    auto* eval = app.add_subcommand("eval", "mean relative error of a checkpoint on a dataset");
    eval->add_option("--model", ev.model, "checkpoint")->required();
    eval->add_option("--data", ev.data, "dataset directory")->required();
    eval->add_option("--split", ev.split, "all, train or val")->capture_default_str();

    UqArgs uq;
    auto* uqc = app.add_subcommand("uq", "Monte Carlo ensembles under a new well set");
    uqc->add_option("--mode", uq.mode, "baseline, surrogate or compare")->required();
    uqc->add_option("--model", uq.model, "checkpoint (surrogate and compare)");
    uqc->add_option("--data", uq.data, "dataset directory (grid and well sets)");
    uqc->add_option("--out", uq.out, "output directory")->required();
    uqc->add_option("--baseline-dir", uq.baseline_dir, "compare: saved baseline ensemble");
    uqc->add_option("--surrogate-dir", uq.surrogate_dir, "compare: saved surrogate ensemble");
    uqc->add_option("--old-wells", uq.old_wells, "observed well-set id")->capture_default_str();
    uqc->add_option("--new-wells", uq.new_wells, "target well-set id")->capture_default_str();
    uqc->add_option("--time", uq.time, "day")->capture_default_str();
    uqc->add_option("--members", uq.members, "ensemble size")->capture_default_str();
    uqc->add_option("--seed", uq.seed)->capture_default_str();
    uqc->add_option("--jobs", uq.jobs, "parallel simulations (0: all cores)")->capture_default_str();

    ExportArgs ex;
    auto* exp = app.add_subcommand("export", "write a field as PGM or CSV, or import a CSV field");
    exp->add_option("--format", ex.format, "pgm, csv, or ruq for CSV import")->capture_default_str();
    exp->add_option("--field", ex.field, "field tensor file");
    exp->add_flag("--triptych", ex.triptych, "true | predicted | difference side by side");
    exp->add_option("--truth", ex.truth, "triptych: true field");
    exp->add_option("--pred", ex.pred, "triptych: predicted field");
    exp->add_option("--from-csv", ex.from_csv, "CSV file to import");
    exp->add_option("--out", ex.out, "output file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return exit_usage;
    }

    return guarded(
        [&] {
            if (*datagen) return cmd_datagen(dg, std::cout, std::cerr);
            if (*train) return cmd_train(tr, std::cout, std::cerr);
            if (*eval) return cmd_eval(ev, std::cout, std::cerr);
            if (*uqc) return cmd_uq(uq, std::cout, std::cerr);
            return cmd_export(ex, std::cout, std::cerr);
        },
        std::cerr);
}
