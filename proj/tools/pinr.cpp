// pinr: partitioned implicit neural representation experiments.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "json.hpp"
#include "pinr/checks.hpp"
#include "pinr/error.hpp"
#include "pinr/hypothesis.hpp"
#include "pinr/io.hpp"
#include "pinr/meta.hpp"
#include "pinr/metrics.hpp"
#include "pinr/models.hpp"
#include "pinr/partition.hpp"
#include "pinr/spectra.hpp"
#include "pinr/trainer.hpp"
#include "settings.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace pinr;
using cli::Key;
using cli::Settings;

namespace {

struct Globals {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string out_dir = "out";
    std::string config;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
};

const std::string kAssets = PINR_ASSET_DIR;

std::vector<Key> fit_keys() {
    return {
        {"image", "", "input PNG"},
        {"gray", false, "average RGB to one channel"},
        {"arch", "sine", "sine or relu_pe"},
        {"heads", 1, "number of partition heads"},
        {"rule", "none", "none, pog or pos"},
        {"rx", 0, "PoG cell width in pixels (0: near-square grid of `heads` cells)"},
        {"ry", 0, "PoG cell height in pixels"},
        {"hidden", 0, "hidden width per head (0: capacity table)"},
        {"width_scale", 1.0, "multiplier on capacity-table widths"},
        {"hidden_layers", 3, "hidden-to-hidden layers"},
        {"omega_first", 60.0, "first-layer sine frequency"},
        {"omega_hidden", 30.0, "hidden sine frequency"},
        {"n_harmonics", 60, "harmonics of the relu_pe embedding"},
        {"steps", 300, "optimizer steps"},
        {"lr", 1e-4, "Adam learning rate"},
        {"batch_pixels", 0, "pixels per step and head (0: full batch)"},
        {"local_coords", false, "renormalize coordinates per head"},
        {"patience", 0, "early-stop patience in steps (0: off)"},
        {"pos_scale", 0.0, "over-segmentation scale (0: adaptive)"},
        {"pos_min_size", 20, "over-segmentation minimum region size"},
        {"save_weights", true, "write one weight file per head"},
    };
}

std::vector<Key> segment_keys() {
    return {
        {"image", "", "input PNG"},
        {"gray", false, "average RGB to one channel"},
        {"rule", "pos", "pog or pos"},
        {"k", 4, "number of regions"},
        {"rx", 0, "PoG cell width (0: derive from k)"},
        {"ry", 0, "PoG cell height"},
        {"scale", 0.0, "over-segmentation scale (0: adaptive)"},
        {"min_size", 20, "over-segmentation minimum region size"},
    };
}

std::vector<Key> hypothesis_keys() {
    return {
        {"dim", 1, "signal dimension (1 or 2)"},
        {"preset", "desk", "desk or full"},
        {"ns", json::array(), "boundary counts (1D) or M values (2D); empty: preset"},
        {"seeds", 0, "seeds per N (0: preset)"},
        {"lr", 1e-3, "Adam learning rate"},
        {"threshold", 0.05, "test MSE that counts as converged"},
        {"cap", 50000, "maximum epochs per run"},
    };
}

std::vector<Key> spectra_keys() {
    return {
        {"image", "", "input PNG"},
        {"cells_x", 2, "grid columns"},
        {"cells_y", 2, "grid rows"},
    };
}

std::vector<Key> meta_train_keys() {
    return {
        {"corpus", kAssets + "/meta/train", "directory of training PNGs"},
        {"gray", true, "average RGB to one channel"},
        {"rule", "none", "none, pog or pos"},
        {"k", 4, "heads per image for pog/pos"},
        {"hidden", 128, "hidden width"},
        {"hidden_layers", 3, "hidden-to-hidden layers"},
        {"omega_first", 30.0, "first-layer sine frequency"},
        {"omega_hidden", 30.0, "hidden sine frequency"},
        {"inner_steps", 3, "inner gradient steps"},
        {"alpha", json::array({1e-5}), "inner step sizes (one, or one per step)"},
        {"beta", 1e-4, "outer Adam learning rate"},
        {"batch_size", 4, "tasks per outer step"},
        {"outer_steps", 2000, "outer steps"},
        {"reduction", "sum", "inner loss reduction: sum or mean"},
        {"checkpoint_every", 0, "checkpoint period in outer steps (0: final only)"},
        {"select_window", 0, "keep the theta0 ending the lowest-loss window of this many steps (0: last)"},
    };
}

std::vector<Key> meta_finetune_keys() {
    return {
        {"checkpoint", "", "checkpoint stem (without .inrp/.meta)"},
        {"images", kAssets + "/meta/heldout", "directory of held-out PNGs"},
        {"gray", true, "average RGB to one channel"},
        {"rule", "none", "none, pog or pos"},
        {"k", 4, "heads per image for pog/pos"},
        {"views", 3, "fine-tuning steps"},
        {"alpha", json::array(), "step sizes (empty: the checkpoint's)"},
    };
}

std::vector<Key> check_keys() {
    return {
        {"grad_nets", 20, "random nets per architecture"},
        {"instances", 1000, "random proposition instances"},
        {"parseval_images", 20, "random images for the Parseval check"},
        {"partition", true, "run the partition validity suite on bundled photos"},
    };
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out.precision(17);
    return out;
}

ImageField load_input(const Settings& s) {
    const std::string path = s.text("image");
    if (path.empty()) throw ConfigError("--image is required");
    return load_png(path, s.values().contains("gray") && s.flag("gray"));
}

OversegParams overseg_params(double scale, int min_size) {
    OversegParams p;
    p.scale = scale;
    p.min_size = min_size;
    return p;
}

void save_mask_files(const fs::path& dir, const PartitionMask& mask) {
    save_mask_raw((dir / "mask.mask").string(), mask);
    std::ofstream side(dir / "mask.mask.txt");
    side << mask_sidecar(mask);
    if (mask.k <= 256) save_mask_png((dir / "mask.png").string(), mask);
}

// ---------------------------------------------------------------------------

int run_fit(const Settings& s, const Globals& g, const fs::path& out) {
    const ImageField image = load_input(s);
    const std::string rule = s.text("rule");
    int heads = s.integer("heads");
    if (rule == "none" && heads != 1) throw ConfigError("rule 'none' needs heads = 1");
    const PartitionMask mask = make_mask(image, rule, heads, {s.integer("rx"), s.integer("ry")},
                                         overseg_params(s.number("pos_scale"), s.integer("pos_min_size")));
    heads = mask.k;

    ModelConfig base;
    base.arch = arch_from_string(s.text("arch"));
    base.output_dim = image.channels;
    base.hidden_layers = s.integer("hidden_layers");
    base.omega_first = s.number("omega_first");
    base.omega_hidden = s.number("omega_hidden");
    base.n_harmonics = s.integer("n_harmonics");
    ModelConfig cfg = base;
    if (s.integer("hidden") > 0)
        cfg.hidden_features = s.integer("hidden");
    else
        cfg = config_for_heads(base, heads, s.number("width_scale"));

    FitOptions o;
    o.steps = s.integer("steps");
    o.adam.lr = s.number("lr");
    o.seed = g.seed;
    o.threads = g.threads;
    o.batch_pixels = s.integer("batch_pixels");
    o.local_coords = s.flag("local_coords");
    o.patience = s.integer("patience");

    const FitResult r = fit_partitioned(image, mask, {cfg}, o);
    {
        auto csv = open_out(out / "metrics.csv");
        write_fit_csv(csv, r.report);
    }
    save_png((out / "reconstruction.png").string(), r.reconstruction);
    if (rule != "none") save_mask_files(out, mask);

    json manifest;
    manifest["final_psnr"] = psnr_capped(r.report.final_psnr);
    manifest["final_ssim"] = std::isnan(r.report.final_ssim) ? json(nullptr) : json(r.report.final_ssim);
    manifest["seconds"] = r.report.seconds;
    manifest["steps_run"] = r.report.steps_run;
    manifest["pixel_forwards"] = r.report.pixel_forwards;
    manifest["hidden_features"] = cfg.hidden_features;
    manifest["parameters"] = parameter_count(cfg) * heads;
    manifest["mask"] = rule == "none" ? json(nullptr) : json("mask.mask");
    const auto areas = mask.areas();
    for (int h = 0; h < heads; ++h) {
        json head{{"index", h}, {"pixels", areas[std::size_t(h)]}, {"steps", r.report.head_steps[std::size_t(h)]}};
        if (s.flag("save_weights")) {
            const std::string name = "head_" + std::to_string(h) + ".inrp";
            save_weights((out / name).string(), r.heads[std::size_t(h)], cfg);
            head["weights"] = name;
        }
        manifest["heads"].push_back(head);
    }
    write_json(out / "manifest.json", manifest);
    std::cout << "psnr " << psnr_capped(r.report.final_psnr) << " dB, ssim " << r.report.final_ssim << ", "
              << r.report.seconds << " s\n";
    return 0;
}

int run_segment(const Settings& s, const Globals&, const fs::path& out) {
    const ImageField image = load_input(s);
    const std::string rule = s.text("rule");
    if (rule != "pog" && rule != "pos") throw ConfigError("segment rule must be pog or pos");
    const PartitionMask mask = make_mask(image, rule, s.integer("k"), {s.integer("rx"), s.integer("ry")},
                                         overseg_params(s.number("scale"), s.integer("min_size")));
    save_mask_files(out, mask);
    const auto areas = mask.areas();
    {
        auto csv = open_out(out / "areas.csv");
        csv << "label,area\n";
        for (std::size_t i = 0; i < areas.size(); ++i) csv << i << ',' << areas[i] << '\n';
    }
    const auto [lo, hi] = std::minmax_element(areas.begin(), areas.end());
    write_json(out / "manifest.json", {{"k", mask.k},
                                       {"rule", rule},
                                       {"provenance", mask.provenance},
                                       {"area_ratio", double(*hi) / double(*lo)},
                                       {"mask", "mask.mask"}});
    std::cout << "k " << mask.k << ", max/min area " << double(*hi) / double(*lo) << '\n';
    return 0;
}

int run_hypothesis(const Settings& s, const Globals& g, const fs::path& out) {
    SweepConfig c = SweepConfig::preset(s.text("preset"), s.integer("dim"));
    const auto ns = s.numbers("ns");
    if (!ns.empty()) {
        c.ns.clear();
        for (double n : ns) {
            if (n != std::floor(n) || n < 0) throw ConfigError("ns entries must be non-negative integers");
            c.ns.push_back(static_cast<int>(n));
        }
    }
    if (s.integer("seeds") > 0) c.seeds = s.integer("seeds");
    c.base_seed = g.seed;
    c.threads = g.threads;
    c.convergence.lr = s.number("lr");
    c.convergence.threshold = s.number("threshold");
    c.convergence.cap = s.integer("cap");

    const HypothesisReport rep = run_sweep(c);
    {
        auto csv = open_out(out / "sweep.csv");
        write_sweep_csv(csv, rep);
    }
    {
        auto csv = open_out(out / "summary.csv");
        csv << "N,mean_steps,std_steps,censored\n";
        for (std::size_t i = 0; i < rep.ns.size(); ++i)
            csv << rep.ns[i] << ',' << rep.mean_steps[i] << ',' << rep.std_steps[i] << ',' << rep.censored[i] << '\n';
    }
    json fit{{"fit_ok", rep.fit_ok}, {"spearman", rep.spearman_rho}};
    if (rep.fit_ok) {
        fit["p"] = rep.fit.p;
        fit["slope"] = rep.fit.slope;
        fit["intercept"] = rep.fit.intercept;
        fit["r2"] = rep.fit.r2;
    }
    write_json(out / "fit.json", fit);
    std::cout << sweep_summary(rep) << '\n';
    return rep.fit_ok ? 0 : 2;
}

int run_spectra(const Settings& s, const Globals&, const fs::path& out) {
    const ImageField image = load_input(s);
    const PartitionMask mask = pog(image.height, image.width,
                                   grid_for_cells(image.height, image.width, s.integer("cells_y"), s.integer("cells_x")));
    const auto rows = compare_subparts(image, mask);
    {
        auto csv = open_out(out / "spectra.csv");
        write_spectrum_csv(csv, rows);
    }
    auto csv = open_out(out / "slices.csv");
    csv << "part,axis,frequency,amplitude\n";
    for (const auto& r : rows) {
        const Spectrum sp = dft2(image, r.x0, r.y0, r.width, r.height);
        for (Axis a : {Axis::X, Axis::Y})
            for (const auto& p : amplitude_slice(sp, a))
                csv << r.part << ',' << (a == Axis::X ? 'x' : 'y') << ',' << p.frequency << ',' << p.amplitude << '\n';
    }
    std::cout << rows.size() - 1 << " parts; whole high band x/y " << rows[0].high_x << " / " << rows[0].high_y << '\n';
    return 0;
}

std::vector<ImageField> load_dir(const std::string& dir, bool gray) {
    std::vector<ImageField> out;
    for (const auto& p : list_pngs(dir)) out.push_back(load_png(p, gray));
    if (out.empty()) throw IoError("no PNG files in " + dir);
    return out;
}

std::vector<PartitionMask> masks_for(const std::vector<ImageField>& images, const std::string& rule, int k) {
    std::vector<PartitionMask> masks;
    if (rule == "none") return masks;
    for (const auto& im : images) masks.push_back(make_mask(im, rule, k));
    return masks;
}

LossReduction reduction_from(const std::string& name) {
    if (name == "sum") return LossReduction::Sum;
    if (name == "mean") return LossReduction::Mean;
    throw ConfigError("reduction must be sum or mean");
}

int run_meta_train(const Settings& s, const Globals& g, const fs::path& out) {
    const auto corpus = load_dir(s.text("corpus"), s.flag("gray"));
    const std::string rule = s.text("rule");
    const auto masks = masks_for(corpus, rule, s.integer("k"));
    MetaConfig c;
    c.model.output_dim = corpus.front().channels;
    c.model.hidden_features = s.integer("hidden");
    c.model.hidden_layers = s.integer("hidden_layers");
    c.model.omega_first = s.number("omega_first");
    c.model.omega_hidden = s.number("omega_hidden");
    c.inner_steps = s.integer("inner_steps");
    c.alpha = s.numbers("alpha");
    c.beta = s.number("beta");
    c.batch_size = s.integer("batch_size");
    c.outer_steps = s.integer("outer_steps");
    c.reduction = reduction_from(s.text("reduction"));
    c.seed = g.seed;
    c.threads = g.threads;
    c.train_rule = rule;
    c.checkpoint_every = s.integer("checkpoint_every");
    c.select_window = s.integer("select_window");
    c.checkpoint_dir = (out / "checkpoints").string();

    std::vector<double> trace;
    const auto t0 = std::chrono::steady_clock::now();
    const MetaState state = meta_train(corpus, masks, c, &trace);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    save_meta_checkpoint((out / "meta").string(), state);
    auto csv = open_out(out / "loss.csv");
    csv << "outer_step,adapted_loss\n";
    for (std::size_t i = 0; i < trace.size(); ++i) csv << i + 1 << ',' << trace[i] << '\n';
    write_json(out / "manifest.json", {{"checkpoint", "meta"}, {"outer_steps", state.outer_step}, {"seconds", secs}});
    std::cout << state.outer_step << " outer steps in " << secs << " s\n";
    return 0;
}

int run_meta_finetune(const Settings& s, const Globals&, const fs::path& out) {
    if (s.text("checkpoint").empty()) throw ConfigError("--checkpoint is required");
    const MetaState state = load_meta_checkpoint(s.text("checkpoint"));
    const auto images = load_dir(s.text("images"), s.flag("gray"));
    const auto masks = masks_for(images, s.text("rule"), s.integer("k"));
    std::vector<double> alpha = s.numbers("alpha");
    if (alpha.empty()) alpha = state.alpha;
    const int views = s.integer("views");
    const auto names = list_pngs(s.text("images"));

    auto csv = open_out(out / "finetune.csv");
    csv << "image,view,psnr\n";
    std::vector<double> mean(std::size_t(views) + 1, 0.0);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const auto r = meta_finetune(state, images[i], masks.empty() ? nullptr : &masks[i], views, alpha);
        for (std::size_t v = 0; v < r.psnr.size(); ++v) {
            csv << csv_field(fs::path(names[i]).filename().string()) << ',' << v << ',' << psnr_capped(r.psnr[v]) << '\n';
            mean[v] += psnr_capped(r.psnr[v]) / double(images.size());
        }
    }
    write_json(out / "manifest.json", {{"mean_psnr_per_view", mean}, {"images", images.size()}});
    std::cout << "mean psnr after " << views << " views: " << mean.back() << " dB\n";
    return 0;
}

int run_check(const Settings& s, const Globals& g, const fs::path& out) {
    auto csv = open_out(out / "check.csv");
    csv << "check,value,limit,pass\n";
    bool ok = true;
    auto row = [&](const std::string& name, double value, double limit, bool pass, bool gate = true) {
        csv << name << ',' << value << ',' << limit << ',' << (pass ? 1 : 0) << '\n';
        std::cout << (pass ? "ok   " : "FAIL ") << name << " = " << value << " (limit " << limit << ")\n";
        if (gate) ok = ok && pass;
    };
    const GradSuite gs = run_grad_suite(s.integer("grad_nets"), g.seed);
    row("grad_sine_max_rel", gs.sine_max_rel, 1e-5, gs.sine_max_rel < 1e-5);
    row("grad_relu_max_rel", gs.relu_max_rel, 1e-5, gs.relu_max_rel < 1e-5);
    row("grad_sine30_max_scaled", gs.sine30_max_scaled, 1e-5, gs.sine30_max_scaled < 1e-5);

    const PropositionSuite ps = run_proposition_suite(s.integer("instances"), g.seed);
    row("proposition_failures", ps.theorem_failures, 0, ps.theorem_failures == 0);
    row("proposition_corrected_variant_failures", ps.corrected_failures, 0, ps.corrected_failures == 0);
    // The per-head variant's stated condition admits counterexamples; reported, not gated.
    row("proposition_stated_variant_counterexamples", ps.variant_failures, 0, ps.variant_failures == 0, false);
    if (!ps.first_counterexample.empty()) std::cout << "     e.g. " << ps.first_counterexample << '\n';

    const ParsevalSuite pv = run_parseval_suite(s.integer("parseval_images"), g.seed);
    row("parseval_max_rel", pv.max_rel_error, 1e-9, pv.max_rel_error < 1e-9);
    if (s.flag("partition")) {
        const auto photos = load_dir(kAssets + "/photos", false);
        const PartitionSuite pt = run_partition_suite(photos, {2, 4, 9}, g.seed);
        row("partition_failures", pt.failures, 0, pt.failures == 0);
        for (const auto& l : pt.log) std::cout << "     " << l << '\n';
    }
    return ok ? 0 : 2;
}

struct Command {
    std::string name;
    std::string help;
    std::vector<Key> keys;
    int (*run)(const Settings&, const Globals&, const fs::path&);
};

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Command> commands{
        {"fit", "fit one image with a single or partitioned network", fit_keys(), run_fit},
        {"segment", "export a PoG or PoS mask", segment_keys(), run_segment},
        {"hypothesis", "convergence-steps sweep on synthetic signals", hypothesis_keys(), run_hypothesis},
        {"spectra", "amplitude spectra of an image and its grid sub-parts", spectra_keys(), run_spectra},
        {"meta-train", "meta-learn an initialization", meta_train_keys(), run_meta_train},
        {"meta-finetune", "fine-tune a meta-learned initialization on held-out images", meta_finetune_keys(),
         run_meta_finetune},
        {"check", "gradient, proposition, spectral and partition self-checks", check_keys(), run_check},
    };

    CLI::App app{"Partitioned implicit neural representations"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    g.seed_opt = app.add_option("--seed", g.seed, "random seed (default 0)");
    g.threads_opt = app.add_option("--threads", g.threads, "worker threads (default 0: all cores)");
    app.add_option("--out-dir", g.out_dir, "results directory (default out)");
    app.add_option("--config", g.config, "JSON config; flags override its values");

    std::vector<std::unique_ptr<Settings>> settings;
    std::vector<CLI::App*> subs;
    for (const auto& c : commands) {
        settings.push_back(std::make_unique<Settings>(c.name, c.keys));
        subs.push_back(app.add_subcommand(c.name, c.help));
        settings.back()->bind(*subs.back());
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        for (std::size_t i = 0; i < commands.size(); ++i) {
            if (!subs[i]->parsed()) continue;
            Settings& s = *settings[i];
            s.resolve(g.config);
            if (!g.config.empty()) {
                std::ifstream in(g.config);
                const json cfg = json::parse(in);
                if (g.seed_opt->count() == 0 && cfg.contains("seed")) g.seed = cfg.at("seed").get<std::uint64_t>();
                if (g.threads_opt->count() == 0 && cfg.contains("threads")) g.threads = cfg.at("threads").get<int>();
            }
            const fs::path out(g.out_dir);
            fs::create_directories(out);
            json snap = s.snapshot();
            snap["seed"] = g.seed;
            snap["threads"] = g.threads;
            write_json(out / "config.json", snap);
            return commands[i].run(s, g, out);
        }
    } catch (const TrainingError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
