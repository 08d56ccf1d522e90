// SPDX-License-Identifier: Apache-2.0
//
// xband - cross-band radio channel prediction toolkit
// Copyright (C) 2026 the xband contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------
//
// Pipeline driver: every subcommand is a pure function of (config, seed)
// and writes a manifest with the digests of everything it read and wrote,
// so identical invocations produce identical artifacts.

#include <filesystem>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "xband/xband.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace xband;

namespace {

struct GlobalOpts {
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
    int workers = 0;
    bool deterministic = false;
    std::vector<std::string> overrides;
};

struct RunContext {
    GlobalOpts opts;
    Config config;
    PipelineConfig pc;
    std::vector<std::pair<std::string, uint32_t>> inputs, outputs;

    void note_input(const std::string &path) { inputs.emplace_back(path, file_crc32(path)); }
    void note_output(const std::string &path) { outputs.emplace_back(path, file_crc32(path)); }

    std::string out(const std::string &name) const
    {
        return (fs::path(opts.out_dir) / name).string();
    }

    void write_manifest(const std::string &subcommand)
    {
        json m;
        m["tool"] = "xband";
        m["version"] = kVersion;
        m["subcommand"] = subcommand;
        m["config_digest"] = strf("%016llx", (unsigned long long)config.digest());
        m["seed"] = pc.seed;
        m["workers"] = worker_count();
        m["deterministic"] = opts.deterministic;
        m["inputs"] = json::array();
        for (const auto &[p, crc] : inputs)
            m["inputs"].push_back({{"path", p}, {"crc32", strf("%08x", crc)}});
        m["outputs"] = json::array();
        for (const auto &[p, crc] : outputs)
            m["outputs"].push_back({{"path", p}, {"crc32", strf("%08x", crc)}});
        std::string path = out("manifest_" + subcommand + ".json");
        std::ofstream os(path);
        os << m.dump(2) << "\n";
    }
};

RunContext make_context(const GlobalOpts &opts)
{
    RunContext ctx;
    ctx.opts = opts;
    std::string cfg_path = opts.config_path;
    if (cfg_path.empty()) {
        const char *env = std::getenv("XBAND_CONFIG");
        if (env)
            cfg_path = env;
    }
    ctx.config = cfg_path.empty() ? Config::parse("") : Config::parse_file(cfg_path);
    for (const auto &o : opts.overrides)
        ctx.config.set_dotted(o);
    if (opts.seed_set)
        ctx.config.set_dotted(strf("run.seed=%llu", (unsigned long long)opts.seed));
    if (opts.workers > 0)
        ctx.config.set_dotted(strf("run.workers=%d", opts.workers));
    ctx.pc = PipelineConfig::from_config(ctx.config);
    if (ctx.pc.workers > 0)
        set_worker_count(ctx.pc.workers);
    fs::create_directories(opts.out_dir);
    if (!cfg_path.empty())
        ctx.note_input(cfg_path);
    return ctx;
}

std::vector<std::string> scene_files_in(const std::string &dir)
{
    std::vector<std::string> files;
    if (!fs::is_directory(dir))
        throw DataError(strf("scene directory '%s' does not exist", dir.c_str()));
    for (const auto &e : fs::directory_iterator(dir))
        if (e.path().extension() == ".scene")
            files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw DataError(strf("no .scene files in '%s'", dir.c_str()));
    return files;
}

Scene load_scene_file(const std::string &path)
{
    std::ifstream is(path);
    if (!is)
        throw DataError(strf("cannot open scene '%s'", path.c_str()));
    std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    return parse_scene(text);
}

// ------------------------------------------------------------- stages ----

int cmd_gen_scenes(RunContext &ctx)
{
    auto scenes = pipeline_scenes(ctx.pc);
    fs::create_directories(ctx.out("scenes"));
    for (size_t i = 0; i < scenes.size(); ++i) {
        std::string path = ctx.out(strf("scenes/scene_%04zu.scene", i));
        std::ofstream os(path);
        os << serialize_scene(scenes[i]);
        os.close();
        ctx.note_output(path);
    }
    ctx.write_manifest("gen-scenes");
    std::cout << "wrote " << scenes.size() << " scenes to " << ctx.out("scenes") << "\n";
    return 0;
}

int cmd_trace(RunContext &ctx, const std::string &scene_path, int bs_index,
              const std::string &rx_spec)
{
    Scene scene = load_scene_file(scene_path);
    ctx.note_input(scene_path);
    GridSpec grid = GridSpec::for_scene(scene, ctx.pc.nx, ctx.pc.ny);
    OccupancyMap occ = rasterize_occupancy(scene, grid);
    BsConfig bs = place_bs(scene, occ, stage_seed(ctx.pc.seed, "bs", 0, uint64_t(bs_index)),
                           ctx.pc.bs_height);
    TraceGeometry geom = TraceGeometry::from_scene(scene);
    if (!rx_spec.empty()) {
        Vec3 rx;
        if (std::sscanf(rx_spec.c_str(), "%lf,%lf,%lf", &rx.x, &rx.y, &rx.z) != 3)
            throw ConfigError("--rx expects x,y,z in meters");
        auto res = trace_paths(geom, bs.position, rx, ctx.pc.trace_limits());
        std::string path = ctx.out("paths.xpth");
        write_path_dump(path, res.paths);
        ctx.note_output(path);
        std::cout << "bs (" << bs.position.x << ", " << bs.position.y << ", " << bs.position.z
                  << ") rx (" << rx.x << ", " << rx.y << ", " << rx.z << "): "
                  << res.paths.size() << " paths"
                  << (res.status == TraceStatus::occluded_endpoint ? " (occluded endpoint)" : "")
                  << "\n";
        for (const auto &p : res.paths)
            std::cout << strf("  d=%.3f m  tau=%.3f ns  order=%d  aod=%.1f deg\n", p.d,
                              p.tau * 1e9, p.order(), p.aod_az * 180 / kPi);
    } else {
        auto traces = trace_map(geom, bs.position, grid, occ, ctx.pc.trace_limits(),
                                ctx.pc.rx_height);
        size_t paths = 0, los = 0, free_cells = 0;
        std::ostringstream csv;
        csv << "ix,iy,paths,has_los\n";
        for (int iy = 0; iy < grid.ny; ++iy)
            for (int ix = 0; ix < grid.nx; ++ix) {
                const auto &r = traces[size_t(iy) * grid.nx + ix];
                if (r.status != TraceStatus::ok)
                    continue;
                ++free_cells;
                paths += r.paths.size();
                bool has_los = !r.paths.empty() && r.paths[0].is_los();
                los += has_los;
                csv << ix << "," << iy << "," << r.paths.size() << "," << int(has_los) << "\n";
            }
        std::string path = ctx.out("trace_summary.csv");
        std::ofstream os(path);
        os << csv.str();
        os.close();
        ctx.note_output(path);
        std::cout << "free cells " << free_cells << ", total paths " << paths << ", LoS fraction "
                  << strf("%.3f", free_cells ? double(los) / double(free_cells) : 0.0) << "\n";
    }
    ctx.write_manifest("trace");
    return 0;
}

int cmd_build_dataset(RunContext &ctx, const std::string &scenes_dir, const std::string &kind_str)
{
    DatasetKind kind = ctx.pc.kind;
    if (!kind_str.empty()) {
        if (kind_str == "gain")
            kind = DatasetKind::gain;
        else if (kind_str == "phase")
            kind = DatasetKind::phase;
        else if (kind_str == "commap")
            kind = DatasetKind::commap;
        else
            throw ConfigError(strf("--kind '%s' is not gain|phase|commap", kind_str.c_str()));
    }
    std::string dir = scenes_dir.empty() ? ctx.out("scenes") : scenes_dir;
    auto files = scene_files_in(dir);
    std::vector<Sample> samples;
    for (uint32_t sid = 0; sid < files.size(); ++sid) {
        ctx.note_input(files[sid]);
        Scene scene = load_scene_file(files[sid]);
        for (int b = 0; b < ctx.pc.bs_per_scene; ++b)
            samples.push_back(pipeline_sample(ctx.pc, scene, sid, b, kind));
    }
    const char *kn = kind == DatasetKind::gain ? "gain"
                     : kind == DatasetKind::phase ? "phase"
                                                  : "commap";
    std::string path = ctx.out(strf("dataset_%s.cirx", kn));
    write_dataset(path, samples, ctx.pc.features);
    ctx.note_output(path);
    ctx.write_manifest("build-dataset");
    std::cout << "wrote " << samples.size() << " samples (" << samples[0].c_in << " -> "
              << samples[0].c_out << " channels) to " << path << "\n";
    return 0;
}

int cmd_train(RunContext &ctx, const std::string &dataset_path)
{
    ctx.note_input(dataset_path);
    auto samples = read_dataset(dataset_path, &ctx.pc.features);
    TrainedModel tm = pipeline_train(ctx.pc, samples);
    if (tm.result.diverged)
        throw NumericError("training diverged (non-finite loss); last good checkpoint kept");
    std::string ckpt = ctx.out(strf("checkpoint_%s.xbck", arch_name(tm.model.spec.arch)));
    save_checkpoint(ckpt, tm.model, nullptr, uint32_t(tm.result.best_epoch),
                    tm.result.best_val);
    ctx.note_output(ckpt);
    std::string hist = ctx.out("history.csv");
    {
        std::ofstream os(hist);
        os << "epoch,train_loss,val_loss\n";
        for (size_t e = 0; e < tm.result.history.size(); ++e)
            os << e << "," << fmt_double(tm.result.history[e].train_loss) << ","
               << fmt_double(tm.result.history[e].val_loss) << "\n";
    }
    ctx.note_output(hist);
    ctx.write_manifest("train");
    std::cout << "trained " << arch_name(tm.model.spec.arch) << " for "
              << tm.result.history.size() << " epochs; best val " << tm.result.best_val
              << " at epoch " << tm.result.best_epoch << "; checkpoint " << ckpt << "\n";
    if (tm.split.scenes.short_split_warning)
        std::cout << "warning: scene count too small for the 80/10/10 split; "
                     "validation took one scene from train\n";
    return 0;
}

ModelSpec spec_for_dataset(const PipelineConfig &pc, const std::vector<Sample> &samples)
{
    ModelSpec spec = pc.model_spec(samples[0].kind);
    if (spec.in_channels != samples[0].c_in || spec.out_channels != samples[0].c_out)
        throw ConfigError(strf("model expects %d -> %d channels but the dataset carries "
                               "%d -> %d; adjust [dataset]/[model]",
                               spec.in_channels, spec.out_channels, samples[0].c_in,
                               samples[0].c_out));
    return spec;
}

int cmd_predict(RunContext &ctx, const std::string &dataset_path, const std::string &ckpt_path)
{
    ctx.note_input(dataset_path);
    ctx.note_input(ckpt_path);
    auto samples = read_dataset(dataset_path, &ctx.pc.features);
    auto lc = load_checkpoint(ckpt_path, spec_for_dataset(ctx.pc, samples));
    std::vector<Sample> outs = samples;
    for (size_t i = 0; i < samples.size(); ++i)
        outs[i].targets = predict(lc.model, samples[i], ctx.pc.features);
    std::string path = ctx.out("predictions.cirx");
    write_dataset(path, outs, ctx.pc.features);
    ctx.note_output(path);
    ctx.write_manifest("predict");
    std::cout << "wrote predictions for " << outs.size() << " samples to " << path << "\n";
    return 0;
}

int cmd_evaluate(RunContext &ctx, const std::string &dataset_path, const std::string &ckpt_path,
                 const std::string &split)
{
    ctx.note_input(dataset_path);
    ctx.note_input(ckpt_path);
    auto samples = read_dataset(dataset_path, &ctx.pc.features);
    auto lc = load_checkpoint(ckpt_path, spec_for_dataset(ctx.pc, samples));
    SampleSplit ss = split_samples(ctx.pc, samples);
    std::vector<size_t> idx;
    if (split == "test")
        idx = ss.test;
    else if (split == "val")
        idx = ss.val;
    else if (split == "train")
        idx = ss.train;
    else if (split == "all")
        for (size_t i = 0; i < samples.size(); ++i)
            idx.push_back(i);
    else
        throw ConfigError(strf("--split '%s' is not train|val|test|all", split.c_str()));
    if (idx.empty())
        throw DataError(strf("split '%s' holds no samples", split.c_str()));

    MetricReport rep = pipeline_evaluate(ctx.pc, lc.model, samples, idx);
    std::string csv = ctx.out("report.csv");
    {
        std::ofstream os(csv);
        os << report_to_csv(rep);
    }
    ctx.note_output(csv);
    std::string jpath = ctx.out("report.json");
    {
        json j;
        j["metric"] = rep.metric;
        j["split"] = split;
        j["rows"] = json::array();
        for (const auto &r : rep.rows)
            j["rows"].push_back({{"stratum", r.stratum},
                                 {"count", r.stats.count},
                                 {"q1", r.stats.q1},
                                 {"median", r.stats.median},
                                 {"q3", r.stats.q3},
                                 {"iqr", r.stats.iqr}});
        std::ofstream os(jpath);
        os << j.dump(2) << "\n";
    }
    ctx.note_output(jpath);
    ctx.write_manifest("evaluate");
    const ReportRow *all = find_row(rep, "all");
    std::cout << "evaluated " << idx.size() << " samples (" << split << " split): median "
              << all->stats.median << " " << rep.metric << ", IQR " << all->stats.iqr << "\n";
    return 0;
}

int cmd_tput_oracle(RunContext &ctx, const std::string &dataset_path)
{
    ctx.note_input(dataset_path);
    auto samples = read_dataset(dataset_path, &ctx.pc.features);
    if (samples[0].kind != DatasetKind::gain)
        throw DataError("tput-oracle expects a gain dataset");
    MimoConfig mimo = ctx.pc.mimo;
    mimo.carrier_hz = ctx.pc.features.band_out;
    std::vector<Sample> outs;
    for (const auto &s : samples)
        outs.push_back(assemble_commap_sample(s, nullptr, mimo, ctx.pc.features));
    std::string path = ctx.out("dataset_commap.cirx");
    write_dataset(path, outs, ctx.pc.features);
    ctx.note_output(path);
    // Per-sample summary.
    std::string csv = ctx.out("tput_summary.csv");
    {
        std::ofstream os(csv);
        os << "sample,scene,valid_cells,median_mbps,max_mbps\n";
        for (size_t i = 0; i < outs.size(); ++i) {
            std::vector<double> rates;
            for (size_t c = 0; c < outs[i].cell_count(); ++c)
                if (outs[i].valid[c])
                    rates.push_back(double(outs[i].targets[c]));
            auto qs = quartile_stats(rates);
            os << i << "," << outs[i].meta.scene_id << "," << rates.size() << ","
               << fmt_double(qs.median) << ","
               << fmt_double(*std::max_element(rates.begin(), rates.end())) << "\n";
        }
    }
    ctx.note_output(csv);
    ctx.write_manifest("tput-oracle");
    std::cout << "wrote " << outs.size() << " throughput samples to " << path << "\n";
    return 0;
}

int cmd_report(RunContext &ctx, const std::string &dataset_path, const std::string &ckpt_path,
               double top_k)
{
    ctx.note_input(dataset_path);
    ctx.note_input(ckpt_path);
    auto samples = read_dataset(dataset_path, &ctx.pc.features);
    auto lc = load_checkpoint(ckpt_path, spec_for_dataset(ctx.pc, samples));
    SampleSplit ss = split_samples(ctx.pc, samples);
    std::vector<size_t> idx = ss.test.empty() ? ss.val : ss.test;
    if (idx.empty())
        throw DataError("no held-out samples to report on");
    MetricReport rep = pipeline_evaluate(ctx.pc, lc.model, samples, idx);
    std::string box = ctx.out("boxplot.csv");
    {
        std::ofstream os(box);
        os << boxplot_to_csv(rep);
    }
    ctx.note_output(box);
    // Top-error overlay for the first held-out sample.
    const Sample &s0 = samples[idx[0]];
    auto pred = predict(lc.model, s0, ctx.pc.features);
    auto tem = top_error_map(s0, pred, top_k);
    std::string overlay = ctx.out("top_error.csv");
    {
        std::ofstream os(overlay);
        os << "ix,iy,err\n";
        for (const auto &c : tem.cells)
            os << c.ix << "," << c.iy << "," << fmt_double(c.err) << "\n";
        os << strf("# bs_cell,%d,%d\n", int(tem.bs.x / s0.res), int(tem.bs.y / s0.res));
        os << strf("# worst_cell,%d,%d\n", tem.worst.ix, tem.worst.iy);
    }
    ctx.note_output(overlay);
    ctx.write_manifest("report");
    std::cout << "wrote " << box << " and " << overlay << " (top " << top_k << "% of "
              << tem.cells.size() << " cells)\n";
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"cross-band radio channel prediction toolkit"};
    app.require_subcommand(1);

    GlobalOpts opts;
    app.add_option("--config", opts.config_path,
                   "run configuration file (default: $XBAND_CONFIG)");
    app.add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    auto *seed_opt = app.add_option("--seed", opts.seed, "master seed override");
    app.add_option("--workers", opts.workers, "worker thread count");
    app.add_flag("--deterministic", opts.deterministic,
                 "record deterministic mode in manifests (execution is always "
                 "deterministic for a fixed worker count)");
    app.add_option("--set", opts.overrides, "config override section.key=value")
        ->take_all();

    auto *gen = app.add_subcommand("gen-scenes", "generate procedural scenes");
    auto *trace = app.add_subcommand("trace", "trace one scene and dump paths or a summary");
    std::string scene_path, rx_spec;
    int bs_index = 0;
    trace->add_option("--scene", scene_path, "scene document")->required();
    trace->add_option("--bs-index", bs_index, "BS placement index");
    trace->add_option("--rx", rx_spec, "receiver position x,y,z (dump individual paths)");

    auto *build = app.add_subcommand("build-dataset", "trace scenes and build tensor samples");
    std::string scenes_dir, kind_str;
    build->add_option("--scenes", scenes_dir, "scene directory (default <out>/scenes)");
    build->add_option("--kind", kind_str, "gain|phase|commap (default [dataset].kind)");

    auto *train_cmd = app.add_subcommand("train", "train a model on a dataset");
    std::string dataset_path, ckpt_path, split = "test";
    train_cmd->add_option("--dataset", dataset_path, "dataset container")->required();

    auto *predict_cmd = app.add_subcommand("predict", "run a checkpoint over a dataset");
    predict_cmd->add_option("--dataset", dataset_path, "dataset container")->required();
    predict_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();

    auto *eval_cmd = app.add_subcommand("evaluate", "stratified error report for a checkpoint");
    eval_cmd->add_option("--dataset", dataset_path, "dataset container")->required();
    eval_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    eval_cmd->add_option("--split", split, "train|val|test|all")->capture_default_str();

    auto *tput = app.add_subcommand("tput-oracle", "throughput maps from a gain dataset");
    tput->add_option("--dataset", dataset_path, "gain dataset container")->required();

    auto *report_cmd = app.add_subcommand("report", "boxplot and top-error dumps");
    double top_k = 5.0;
    report_cmd->add_option("--dataset", dataset_path, "dataset container")->required();
    report_cmd->add_option("--checkpoint", ckpt_path, "model checkpoint")->required();
    report_cmd->add_option("--top-error", top_k, "top error percentile")->capture_default_str();

    CLI11_PARSE(app, argc, argv);
    opts.seed_set = seed_opt->count() > 0;

    std::string stage = app.get_subcommands().front()->get_name();
    try {
        RunContext ctx = make_context(opts);
        if (gen->parsed())
            return cmd_gen_scenes(ctx);
        if (trace->parsed())
            return cmd_trace(ctx, scene_path, bs_index, rx_spec);
        if (build->parsed())
            return cmd_build_dataset(ctx, scenes_dir, kind_str);
        if (train_cmd->parsed())
            return cmd_train(ctx, dataset_path);
        if (predict_cmd->parsed())
            return cmd_predict(ctx, dataset_path, ckpt_path);
        if (eval_cmd->parsed())
            return cmd_evaluate(ctx, dataset_path, ckpt_path, split);
        if (tput->parsed())
            return cmd_tput_oracle(ctx, dataset_path);
        if (report_cmd->parsed())
            return cmd_report(ctx, dataset_path, ckpt_path, top_k);
        return 1;
    } catch (const ConfigError &e) {
        std::cerr << "config error [" << stage << "]: " << e.what() << "\n";
        return 2;
    } catch (const DataError &e) {
        std::cerr << "data error [" << stage << "]: " << e.what() << "\n";
        return 3;
    } catch (const NumericError &e) {
        std::cerr << "numeric error [" << stage << "]: " << e.what() << "\n";
        return 4;
    } catch (const std::exception &e) {
        std::cerr << "error [" << stage << "]: " << e.what() << "\n";
        return 1;
    }
}
