// cliff-lhmp: build flow-field maps from trajectory data, roll out
// map-guided motion predictions, evaluate them against ground truth, and
// render maps/predictions to SVG.
//
// Exit codes: 0 success, 1 runtime/model error, 2 usage or IO error.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cliff/cliff.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_model_error = 1;
constexpr int exit_usage_error = 2;

/// Bad input files or option values, as opposed to model/runtime failures.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string input;
    std::string adapter = "canonical";
    std::string output;
    double target_hz = 2.5;
    std::uint64_t seed = 0;
};

struct PredictOptions {
    double beta = 1.0;
    double sampling_radius = 1.0;
    double delta_t = 1.0;
    double horizon_s = 50.0;
    double obs_horizon_s = 3.2;
    int num_rollouts = 20;
    double min_mean_speed = 0.3;
};

cliff::PredictorConfig predictor_config(const PredictOptions& p,
                                        std::uint64_t seed) {
    cliff::PredictorConfig cfg;
    cfg.beta = p.beta;
    cfg.sampling_radius = p.sampling_radius;
    cfg.delta_t = p.delta_t;
    cfg.horizon_s = p.horizon_s;
    cfg.num_rollouts = p.num_rollouts;
    cfg.seed = seed;
    return cfg;
}

cliff::SplitOptions split_options(const PredictOptions& p) {
    cliff::SplitOptions opts;
    opts.obs_horizon_s = p.obs_horizon_s;
    opts.horizon_cap_s = p.horizon_s;
    opts.min_mean_speed = p.min_mean_speed;
    return opts;
}

/// Input-side failures (missing/corrupt files, bad values) are usage errors.
template <typename Fn>
auto load_or_usage_error(Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw UsageError(e.what());
    }
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw UsageError("cannot open output file: " + path);
    }
    return out;
}

void write_predictions_csv(
    std::ostream& out,
    const std::vector<std::vector<cliff::Prediction>>& per_traj) {
    out << "traj_id,rollout,step,time_s,x_m,y_m,rho,theta,complete\n";
    char buf[192];
    for (std::size_t i = 0; i < per_traj.size(); ++i) {
        for (std::size_t r = 0; r < per_traj[i].size(); ++r) {
            const auto& pred = per_traj[i][r];
            for (std::size_t s = 0; s < pred.states.size(); ++s) {
                const auto& st = pred.states[s];
                std::snprintf(buf, sizeof(buf),
                              "%zu,%zu,%zu,%.9g,%.9g,%.9g,%.9g,%.9g,%d\n", i, r,
                              s + 1, st.time, st.x, st.y, st.rho, st.theta,
                              pred.complete ? 1 : 0);
                out << buf;
            }
        }
    }
}

/// Columns time_s,x_m,y_m keyed by (traj_id, rollout), for rendering.
std::vector<cliff::PointList> read_prediction_polylines(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open predictions file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error(path + ": empty predictions file");
    }
    std::map<std::pair<long long, long long>, cliff::PointList> lines;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        long long traj = 0, rollout = 0, step = 0;
        double t = 0, x = 0, y = 0;
        if (std::sscanf(line.c_str(), "%lld,%lld,%lld,%lf,%lf,%lf", &traj,
                        &rollout, &step, &t, &x, &y) != 6) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": bad prediction row");
        }
        lines[{traj, rollout}].emplace_back(x, y);
    }
    std::vector<cliff::PointList> out;
    out.reserve(lines.size());
    for (auto& [key, pts] : lines) out.push_back(std::move(pts));
    return out;
}

int cmd_build_map(const CommonOptions& common, double resolution,
                  int max_components, int min_observations, int workers) {
    const auto trajectories = load_or_usage_error([&] {
        return cliff::load_dataset(common.input,
                                   cliff::adapter_from_name(common.adapter),
                                   common.target_hz);
    });
    cliff::BuilderConfig cfg;
    cfg.resolution = resolution;
    cfg.max_components = max_components;
    cfg.min_observations_per_cell = static_cast<std::size_t>(min_observations);
    cfg.seed = common.seed;
    cfg.workers = workers;
    const cliff::CliffMap map = cliff::build_cliff_map(trajectories, cfg);

    auto out = open_output(common.output);
    cliff::save_map(map, out);

    double component_sum = 0.0;
    for (const auto& idx : map.sorted_indices()) {
        component_sum += static_cast<double>(map.find(idx)->mixture.size());
    }
    const double area =
        static_cast<double>(map.size()) * resolution * resolution;
    std::cout << "cells: " << map.size() << "\n"
              << "mean components: "
              << component_sum / static_cast<double>(map.size()) << "\n"
              << "coverage area: " << area << " m^2\n";
    return exit_ok;
}

int cmd_predict(const CommonOptions& common, const std::string& map_path,
                const PredictOptions& popts) {
    const cliff::CliffMap map =
        load_or_usage_error([&] { return cliff::load_map(map_path); });
    const auto trajectories = load_or_usage_error([&] {
        return cliff::load_dataset(common.input,
                                   cliff::adapter_from_name(common.adapter),
                                   common.target_hz);
    });
    const auto splits =
        cliff::filter_and_split(trajectories, split_options(popts));
    if (splits.empty()) {
        std::cerr << "no eligible trajectories in " << common.input << "\n";
        return exit_model_error;
    }
    const cliff::PredictorConfig cfg = predictor_config(popts, common.seed);

    std::vector<std::vector<cliff::Prediction>> per_traj;
    per_traj.reserve(splits.size());
    std::size_t complete = 0, total = 0;
    for (std::size_t i = 0; i < splits.size(); ++i) {
        per_traj.push_back(cliff::predict_k(splits[i].history,
                                            splits[i].current.x,
                                            splits[i].current.y, map, cfg,
                                            static_cast<std::uint64_t>(i)));
        for (const auto& pred : per_traj.back()) {
            ++total;
            if (pred.complete) ++complete;
        }
    }
    auto out = open_output(common.output);
    write_predictions_csv(out, per_traj);
    std::cout << "trajectories: " << splits.size() << "\n"
              << "rollouts: " << total << "\n"
              << "complete: " << complete << "\n";
    return exit_ok;
}

std::string sweep_output_path(const std::string& base, const std::string& param,
                              double value) {
    char suffix[64];
    std::snprintf(suffix, sizeof(suffix), "_%s_%g", param.c_str(), value);
    const auto dot = base.rfind('.');
    const auto slash = base.rfind('/');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
        return base + suffix;
    }
    return base.substr(0, dot) + suffix + base.substr(dot);
}

int cmd_evaluate(const CommonOptions& common, const std::string& map_path,
                 const PredictOptions& popts, bool cvm_only,
                 const std::vector<std::string>& sweep_args) {
    const auto trajectories = load_or_usage_error([&] {
        return cliff::load_dataset(common.input,
                                   cliff::adapter_from_name(common.adapter),
                                   common.target_hz);
    });
    const cliff::PredictorConfig cfg = predictor_config(popts, common.seed);
    const cliff::SplitOptions sopts = split_options(popts);
    const auto horizons = cliff::make_horizon_grid(cfg.delta_t, cfg.horizon_s);

    if (cvm_only) {
        const auto splits = cliff::filter_and_split(trajectories, sopts);
        if (splits.empty()) {
            std::cerr << "no eligible trajectories in " << common.input << "\n";
            return exit_model_error;
        }
        std::vector<std::vector<cliff::Prediction>> preds;
        std::vector<std::vector<cliff::State>> gts;
        for (const auto& split : splits) {
            preds.push_back({cliff::cvm_predict(split.history, split.current.x,
                                                split.current.y, cfg.horizon_s,
                                                cfg.delta_t, cfg.sigma_obs)});
            std::vector<cliff::State> gt{split.current};
            gt.insert(gt.end(), split.future.begin(), split.future.end());
            gts.push_back(std::move(gt));
        }
        cliff::EvaluationReport report;
        report.cvm = cliff::detail::aggregate_rows(preds, gts, horizons);
        auto out = open_output(common.output);
        cliff::write_metrics_csv(out, report);
        std::cout << "evaluated " << splits.size() << " trajectories (CVM only)\n";
        return exit_ok;
    }

    const cliff::CliffMap map =
        load_or_usage_error([&] { return cliff::load_map(map_path); });

    if (!sweep_args.empty()) {
        const auto param = cliff::sweep_parameter_from_name(sweep_args[0]);
        std::vector<double> values;
        std::stringstream ss(sweep_args[1]);
        std::string item;
        while (std::getline(ss, item, ',')) {
            try {
                std::size_t used = 0;
                values.push_back(std::stod(item, &used));
                if (used != item.size()) throw std::invalid_argument(item);
            } catch (const std::exception&) {
                throw UsageError("bad sweep value '" + item + "'");
            }
        }
        const auto results =
            cliff::sweep(param, values, trajectories, map, cfg, sopts);
        for (const auto& result : results) {
            const std::string path =
                sweep_output_path(common.output, sweep_args[0], result.value);
            auto out = open_output(path);
            cliff::write_metrics_csv(out, result.report);
            std::cout << sweep_args[0] << "=" << result.value << " -> " << path
                      << "\n";
        }
        return exit_ok;
    }

    const auto splits = cliff::filter_and_split(trajectories, sopts);
    if (splits.empty()) {
        std::cerr << "no eligible trajectories in " << common.input << "\n";
        return exit_model_error;
    }
    const auto report = cliff::evaluate(splits, map, cfg, horizons);
    auto out = open_output(common.output);
    cliff::write_metrics_csv(out, report);

    const auto& last = report.cliff.back();
    const auto& last_cvm = report.cvm.back();
    std::cout << "evaluated " << splits.size() << " trajectories\n"
              << "ADE/FDE at " << last.horizon_s << " s: " << last.ade_mean
              << " / " << last.fde_mean << " m (CVM " << last_cvm.ade_mean
              << " / " << last_cvm.fde_mean << " m), completion "
              << last.completion_ratio << "\n";
    return exit_ok;
}

int cmd_render(const CommonOptions& common, const std::string& map_path,
               const std::string& predictions_path, double obs_horizon_s) {
    std::optional<cliff::CliffMap> map;
    if (!map_path.empty()) {
        map = load_or_usage_error([&] { return cliff::load_map(map_path); });
    }
    cliff::SvgScene scene;
    if (map) scene.map = &*map;

    if (!common.input.empty()) {
        const auto trajectories = load_or_usage_error([&] {
            return cliff::load_dataset(common.input,
                                       cliff::adapter_from_name(common.adapter),
                                       common.target_hz);
        });
        for (const auto& traj : trajectories) {
            const auto obs_steps = static_cast<std::size_t>(
                std::llround(obs_horizon_s / traj.dt));
            cliff::PointList observed, future;
            for (std::size_t i = 0; i < traj.states.size(); ++i) {
                const auto& s = traj.states[i];
                if (i < obs_steps) {
                    observed.emplace_back(s.x, s.y);
                } else {
                    if (future.empty() && !observed.empty()) {
                        future.push_back(observed.back());
                    }
                    future.emplace_back(s.x, s.y);
                }
            }
            if (!observed.empty()) scene.observed.push_back(std::move(observed));
            if (!future.empty()) scene.ground_truth.push_back(std::move(future));
        }
    }
    if (!predictions_path.empty()) {
        scene.predictions = load_or_usage_error(
            [&] { return read_prediction_polylines(predictions_path); });
    }

    auto out = open_output(common.output);
    cliff::render_svg(out, scene);
    std::cout << "wrote " << common.output << "\n";
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "cliff-lhmp: flow-field map learning and long-term human motion "
        "prediction"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI file");

    CommonOptions common;
    PredictOptions popts;
    std::string map_path;
    std::string predictions_path;
    double resolution = 1.0;
    int max_components = 5;
    int min_observations = 10;
    int workers = 1;
    bool cvm_only = false;
    std::vector<std::string> sweep_args;

    auto add_common = [&](CLI::App* cmd, bool input_required) {
        auto* in = cmd->add_option("--input", common.input,
                                   "Trajectory data file");
        if (input_required) in->required();
        cmd->add_option("--adapter", common.adapter,
                        "Input format: canonical, atc or thor")
            ->check(CLI::IsMember({"canonical", "atc", "thor"}))
            ->capture_default_str();
        cmd->add_option("--output", common.output, "Output file")->required();
        cmd->add_option("--hz", common.target_hz,
                        "Resampling frequency in Hz")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--seed", common.seed, "Random seed")
            ->envname("CLIFF_LHMP_SEED")
            ->capture_default_str();
    };
    auto add_predictor = [&](CLI::App* cmd) {
        cmd->add_option("--beta", popts.beta, "Direction kernel parameter")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
        cmd->add_option("--rs", popts.sampling_radius,
                        "Direction sampling radius in meters")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--dt", popts.delta_t, "Prediction time step in seconds")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--horizon", popts.horizon_s,
                        "Prediction horizon in seconds")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--obs-horizon", popts.obs_horizon_s,
                        "Observation window in seconds")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--k", popts.num_rollouts,
                        "Predicted trajectories per ground truth")
            ->check(CLI::PositiveNumber)
            ->capture_default_str();
        cmd->add_option("--min-speed", popts.min_mean_speed,
                        "Minimum mean speed filter in m/s")
            ->check(CLI::NonNegativeNumber)
            ->capture_default_str();
    };

    auto* build = app.add_subcommand("build-map",
                                     "Fit a flow-field map from trajectories");
    add_common(build, true);
    build->add_option("--resolution", resolution, "Grid cell size in meters")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    build->add_option("--max-components", max_components,
                      "Mixture components per cell at most")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    build->add_option("--min-obs", min_observations,
                      "Minimum observations to fit a cell")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    build->add_option("--workers", workers, "Parallel fitting threads")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    auto* predict = app.add_subcommand("predict",
                                       "Roll out predictions over a dataset");
    add_common(predict, true);
    predict->add_option("--map", map_path, "Flow-field map JSON")->required();
    add_predictor(predict);

    auto* evaluate = app.add_subcommand(
        "evaluate", "Compare predictions against ground truth");
    add_common(evaluate, true);
    evaluate->add_option("--map", map_path, "Flow-field map JSON");
    add_predictor(evaluate);
    evaluate->add_flag("--cvm-only", cvm_only,
                       "Evaluate only the constant-velocity baseline");
    evaluate
        ->add_option("--sweep", sweep_args,
                     "Parameter sweep: <obs-horizon|beta|rs|dt> "
                     "<comma-separated values>")
        ->expected(2);

    auto* render = app.add_subcommand("render", "Write an SVG view");
    add_common(render, false);
    render->add_option("--map", map_path, "Flow-field map JSON");
    render->add_option("--predictions", predictions_path,
                       "Predictions CSV from the predict subcommand");
    render->add_option("--obs-horizon", popts.obs_horizon_s,
                       "Observation window in seconds")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage_error;
    }

    try {
        if (build->parsed()) {
            return cmd_build_map(common, resolution, max_components,
                                 min_observations, workers);
        }
        if (predict->parsed()) {
            return cmd_predict(common, map_path, popts);
        }
        if (evaluate->parsed()) {
            if (!cvm_only && map_path.empty()) {
                std::cerr << "evaluate requires --map (or --cvm-only)\n";
                return exit_usage_error;
            }
            return cmd_evaluate(common, map_path, popts, cvm_only, sweep_args);
        }
        if (render->parsed()) {
            if (map_path.empty() && common.input.empty() &&
                predictions_path.empty()) {
                std::cerr << "render needs at least one of --map, --input, "
                             "--predictions\n";
                return exit_usage_error;
            }
            return cmd_render(common, map_path, predictions_path,
                              popts.obs_horizon_s);
        }
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage_error;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_usage_error;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_model_error;
    }
    return exit_usage_error;
}
