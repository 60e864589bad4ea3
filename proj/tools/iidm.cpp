// iidm: semantic image synthesis via image-to-image diffusion.
// Subcommands: train, sample, refine, color-transfer, ensemble, eval,
// schedule-dump. All randomness flows from a single seed; every output is
// written atomically with a .manifest.json audit record beside it.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iidm/iidm.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw UsageError("missing config file: " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw UsageError("malformed config " + path + ": " + e.what());
    }
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path))
        throw UsageError(std::string("missing ") + what + " file: " + path);
}

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    }
};

iidm::Codec codec_from_config(const json& cfg) {
    if (cfg.contains("codec_file")) {
        std::string path = cfg["codec_file"].get<std::string>();
        require_file(path, "codec");
        return iidm::load_codec(path);
    }
    auto kind = iidm::codec_kind_from_string(cfg.value("codec", "identity"));
    if (kind == iidm::CodecKind::identity) return iidm::Codec::identity();
    return iidm::Codec::linear_patch(cfg.value("codec_seed", std::uint64_t{0}));
}

iidm::NoiseSchedule schedule_from_config(const json& cfg) {
    return iidm::build_schedule(cfg.value("t_max", 1000), cfg.value("slope", 0.001));
}

// --------------------------------------------------------------------------
// schedule-dump
// --------------------------------------------------------------------------

int cmd_schedule_dump(int t_max, double slope, const std::string& out) {
    Timer timer;
    iidm::NoiseSchedule s = iidm::build_schedule(t_max, slope);
    std::ostringstream csv;
    csv << "t,beta,alpha,alpha_bar\n";
    csv.precision(17);
    for (int t = 1; t <= s.t_max; ++t)
        csv << t << "," << s.beta_at(t) << "," << s.alpha_at(t) << ","
            << s.alpha_bar_at(t) << "\n";
    iidm::detail::write_file_atomic(out, csv.str());

    iidm::RunManifest m;
    m.command = "schedule-dump";
    m.resolved_config = {{"t_max", t_max}, {"slope", slope}};
    m.duration_seconds = timer.seconds();
    m.add_output(out);
    m.write(out);
    std::cout << "wrote " << out << " (" << s.t_max << " steps)\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// train
// --------------------------------------------------------------------------

std::vector<iidm::TrainSample> load_dataset(const std::string& dir, int label_count) {
    if (!fs::is_directory(dir)) throw UsageError("missing data directory: " + dir);
    std::vector<std::string> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        auto is_image = name.ends_with(".png") || name.ends_with(".ppm");
        if (is_image && name.find(".mask.") == std::string::npos)
            stems.push_back(entry.path().string());
    }
    std::sort(stems.begin(), stems.end());
    std::vector<iidm::TrainSample> data;
    for (const auto& img_path : stems) {
        fs::path p(img_path);
        fs::path mask_path = p.parent_path() / (p.stem().string() + ".mask.png");
        if (!fs::exists(mask_path))
            mask_path = p.parent_path() / (p.stem().string() + ".mask.ppm");
        require_file(mask_path.string(), "mask");
        iidm::TrainSample s;
        s.image = iidm::read_image(img_path);
        s.mask = iidm::read_mask(mask_path.string(), label_count);
        if (s.mask.height != s.image.height || s.mask.width != s.image.width)
            throw UsageError("mask/image dimensions differ for " + img_path);
        data.push_back(std::move(s));
    }
    if (data.empty()) throw UsageError("no image/mask pairs found in " + dir);
    return data;
}

int cmd_train(const std::string& config_path, const std::string& data_dir,
              const std::string& out_dir, std::optional<std::uint64_t> seed_flag) {
    Timer timer;
    json cfg = load_config(config_path);
    if (seed_flag) cfg["seed"] = *seed_flag;

    iidm::TrainConfig tc;
    tc.steps = cfg.value("steps", 2000);
    tc.batch_size = cfg.value("batch_size", 32);
    tc.learning_rate = cfg.value("learning_rate", 0.05);
    tc.seed = cfg.value("seed", std::uint64_t{0});
    tc.checkpoint_cadence = cfg.value("checkpoint_cadence", 500);
    int label_count = cfg.value("label_count", 3);

    iidm::NoiseSchedule schedule = schedule_from_config(cfg);
    iidm::Codec codec = codec_from_config(cfg);
    auto dataset = load_dataset(data_dir, label_count);

    iidm::Latent z0 = iidm::encode(codec, dataset.front().image);
    iidm::ArchDescriptor arch = iidm::make_mlp_arch(
        z0.channels, z0.height, z0.width, label_count, cfg.value("hidden_width", 128),
        cfg.value("hidden_layers", 3), cfg.value("time_dim", 32));
    iidm::DenoiserParams params = iidm::init_mlp_params(arch, tc.seed);

    std::cout << "training: " << dataset.size() << " samples, "
              << params.parameter_count() << " parameters, " << tc.steps << " steps\n";
    iidm::TrainResult result =
        iidm::train_loop(tc, dataset, std::move(params), codec, schedule);

    fs::create_directories(out_dir);
    iidm::RunManifest m;
    m.command = "train";
    m.resolved_config = cfg;
    m.seed = tc.seed;
    m.inputs = {data_dir};
    std::string final_path;
    for (const auto& ckpt : result.checkpoints) {
        std::string path =
            (fs::path(out_dir) / ("ckpt_step" + std::to_string(ckpt.step) + ".ckpt"))
                .string();
        iidm::save_checkpoint(path, ckpt.params);
        m.add_output(path);
        final_path = path;
    }
    std::ostringstream csv;
    csv << "step,loss\n";
    csv.precision(17);
    for (const auto& [step, loss] : result.history) csv << step << "," << loss << "\n";
    std::string loss_path = (fs::path(out_dir) / "loss.csv").string();
    iidm::detail::write_file_atomic(loss_path, csv.str());
    m.add_output(loss_path);
    if (codec.kind != iidm::CodecKind::identity) {
        std::string codec_path = (fs::path(out_dir) / "codec.ckpt").string();
        iidm::save_codec(codec_path, codec);
        m.add_output(codec_path);
    }
    m.duration_seconds = timer.seconds();
    m.write(final_path.empty() ? loss_path : final_path);
    std::cout << "wrote " << result.checkpoints.size() << " checkpoints to " << out_dir
              << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// sample / refine
// --------------------------------------------------------------------------

iidm::PipelineConfig pipeline_from_config(const json& cfg,
                                          const iidm::NoiseSchedule& schedule) {
    iidm::PipelineConfig pc;
    pc.t_start = cfg.value("t_start", 320);
    pc.rounds = cfg.value("rounds", 3);
    pc.color_transfer_enabled = cfg.value("color_transfer", true);
    pc.sampler_mode =
        iidm::sampler_mode_from_string(cfg.value("sampler_mode", "ddpm-standard"));
    pc.start = iidm::start_point_from_string(cfg.value("start", "style"));
    pc.seed = cfg.value("seed", std::uint64_t{0});
    pc.validate(schedule);
    return pc;
}

int cmd_sample(const std::string& mask_path, const std::string& style_path,
               const std::string& ckpt_path, const std::string& config_path,
               const std::string& out, std::optional<std::uint64_t> seed_flag,
               bool refine_mode, const std::string& initial_path) {
    Timer timer;
    json cfg = load_config(config_path);
    if (seed_flag) cfg["seed"] = *seed_flag;

    require_file(mask_path, "mask");
    require_file(style_path, "style image");
    require_file(ckpt_path, "checkpoint");

    iidm::NoiseSchedule schedule = schedule_from_config(cfg);
    iidm::Codec codec = codec_from_config(cfg);
    iidm::PipelineConfig pc = pipeline_from_config(cfg, schedule);
    iidm::DenoiserParams params = iidm::load_checkpoint(ckpt_path);

    iidm::SynthesisConditions cond;
    cond.style_ref = iidm::read_image(style_path);
    cond.mask = iidm::read_mask(mask_path, params.arch.label_count);
    cond.validate();

    iidm::MlpDenoiser denoiser{&params};
    iidm::RgbImage result;
    std::vector<std::string> inputs = {mask_path, style_path, ckpt_path};
    if (refine_mode) {
        require_file(initial_path, "input image");
        inputs.push_back(initial_path);
        iidm::RgbImage initial = iidm::read_image(initial_path);
        result = iidm::run_refinement(pc, cond, initial, schedule, codec, denoiser);
    } else {
        result = iidm::run_inference(pc, cond, schedule, codec, denoiser);
    }
    iidm::write_image(out, result);

    iidm::RunManifest m;
    m.command = refine_mode ? "refine" : "sample";
    m.resolved_config = cfg;
    m.seed = pc.seed;
    m.inputs = std::move(inputs);
    m.duration_seconds = timer.seconds();
    m.add_output(out);
    m.write(out);
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// color-transfer
// --------------------------------------------------------------------------

int cmd_color_transfer(const std::string& src, const std::string& ref,
                       const std::string& out) {
    Timer timer;
    require_file(src, "source image");
    require_file(ref, "reference image");
    iidm::RgbImage result =
        iidm::color_transfer(iidm::read_image(src), iidm::read_image(ref));
    iidm::write_image(out, result);

    iidm::RunManifest m;
    m.command = "color-transfer";
    m.resolved_config = {{"src", src}, {"ref", ref}};
    m.inputs = {src, ref};
    m.duration_seconds = timer.seconds();
    m.add_output(out);
    m.write(out);
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// ensemble
// --------------------------------------------------------------------------

int cmd_ensemble(const std::vector<std::string>& inputs, const std::string& out) {
    Timer timer;
    std::vector<iidm::DenoiserParams> sets;
    for (const auto& path : inputs) {
        require_file(path, "checkpoint");
        sets.push_back(iidm::load_checkpoint(path));
    }
    iidm::DenoiserParams avg = iidm::ensemble_average(sets);
    iidm::save_checkpoint(out, avg);

    iidm::RunManifest m;
    m.command = "ensemble";
    m.resolved_config = {{"inputs", inputs}};
    m.inputs = inputs;
    m.duration_seconds = timer.seconds();
    m.add_output(out);
    m.write(out);
    std::cout << "averaged " << sets.size() << " checkpoints into " << out << "\n";
    return kExitOk;
}

// --------------------------------------------------------------------------
// eval
// --------------------------------------------------------------------------

std::vector<std::string> list_images(const std::string& dir) {
    if (!fs::is_directory(dir)) throw UsageError("missing image directory: " + dir);
    std::vector<std::string> out;
    for (const auto& entry : fs::directory_iterator(dir)) {
        std::string name = entry.path().filename().string();
        if ((name.ends_with(".png") || name.ends_with(".ppm")) &&
            name.find(".mask.") == std::string::npos)
            out.push_back(name);
    }
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_eval(const std::string& gen_dir, const std::string& ref_dir,
             const std::string& report_path, const std::string& sidecar_path,
             int bins) {
    Timer timer;
    auto gen_names = list_images(gen_dir);
    auto ref_names = list_images(ref_dir);
    if (gen_names.empty() || ref_names.empty())
        throw UsageError("eval: image directories must be nonempty");

    std::vector<iidm::RgbImage> gen_imgs, ref_imgs;
    json per_image = json::array();
    double s_sum = 0.0;
    int s_count = 0;
    std::ostringstream csv;
    csv << "name,style_similarity\n";
    for (const auto& name : gen_names) {
        iidm::RgbImage g = iidm::read_image((fs::path(gen_dir) / name).string());
        gen_imgs.push_back(g);
        fs::path ref_path = fs::path(ref_dir) / name;
        if (fs::exists(ref_path)) {
            iidm::RgbImage r = iidm::read_image(ref_path.string());
            double s = iidm::style_similarity(g, r, bins);
            per_image.push_back({{"name", name}, {"style_similarity", s}});
            csv << name << "," << s << "\n";
            s_sum += s;
            ++s_count;
        }
    }
    for (const auto& name : ref_names)
        ref_imgs.push_back(iidm::read_image((fs::path(ref_dir) / name).string()));
    if (s_count == 0)
        throw UsageError("eval: no generated image has a same-named reference");
    if (gen_imgs.size() < 2 || ref_imgs.size() < 2)
        throw UsageError("eval: need at least 2 images per directory for the "
                         "distribution distance");

    double fid = iidm::frechet_distance_between_sets(gen_imgs, ref_imgs);
    double s_mean = s_sum / s_count;

    json report = {{"images", per_image},
                   {"fid", fid},
                   {"style_similarity", s_mean},
                   {"mask_accuracy", nullptr},
                   {"aesthetic", nullptr},
                   {"total", nullptr}};
    if (!sidecar_path.empty()) {
        require_file(sidecar_path, "sidecar");
        json sidecar = load_config(sidecar_path);
        if (!sidecar.contains("mask_accuracy") || !sidecar.contains("aesthetic"))
            throw UsageError("sidecar must provide mask_accuracy and aesthetic: " +
                             sidecar_path);
        double m_acc = sidecar["mask_accuracy"].get<double>();
        double aest = sidecar["aesthetic"].get<double>();
        report["mask_accuracy"] = m_acc;
        report["aesthetic"] = aest;
        report["total"] = iidm::total_score(m_acc, aest, fid, s_mean);
    }
    csv << "summary,fid=" << fid << ",style_similarity=" << s_mean << "\n";

    iidm::detail::write_file_atomic(report_path, report.dump(2) + "\n");
    std::string csv_path = report_path + ".csv";
    iidm::detail::write_file_atomic(csv_path, csv.str());

    iidm::RunManifest m;
    m.command = "eval";
    m.resolved_config = {{"gen", gen_dir}, {"ref", ref_dir}, {"bins", bins}};
    m.inputs = {gen_dir, ref_dir};
    m.duration_seconds = timer.seconds();
    m.add_output(report_path);
    m.add_output(csv_path);
    m.write(report_path);
    std::cout << "fid=" << fid << " style_similarity=" << s_mean << " -> "
              << report_path << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"image-to-image diffusion toolkit"};
    app.require_subcommand(1);

    // schedule-dump
    int sd_t_max = 1000;
    double sd_slope = 0.001;
    std::string sd_out = "schedule.csv";
    auto* sd = app.add_subcommand("schedule-dump", "write the noise schedule as CSV");
    sd->add_option("--t-max", sd_t_max, "number of diffusion steps");
    sd->add_option("--slope", sd_slope, "beta slope (beta_t = slope * t)");
    sd->add_option("--out", sd_out, "output CSV path")->required();

    // train
    std::string tr_config, tr_data, tr_out;
    std::optional<std::uint64_t> tr_seed;
    auto* tr = app.add_subcommand("train", "train the toy denoiser");
    tr->add_option("--config", tr_config, "training config JSON")->required();
    tr->add_option("--data", tr_data, "directory of image/mask pairs")->required();
    tr->add_option("--out", tr_out, "checkpoint output directory")->required();
    tr->add_option("--seed", tr_seed, "override the config seed");

    // sample
    std::string sm_mask, sm_style, sm_ckpt, sm_config, sm_out;
    std::optional<std::uint64_t> sm_seed;
    auto* sm = app.add_subcommand("sample", "synthesize an image from mask + style");
    sm->add_option("--mask", sm_mask)->required();
    sm->add_option("--style", sm_style)->required();
    sm->add_option("--ckpt", sm_ckpt)->required();
    sm->add_option("--config", sm_config, "pipeline config JSON");
    sm->add_option("--out", sm_out)->required();
    sm->add_option("--seed", sm_seed, "override the config seed");

    // refine
    std::string rf_in, rf_mask, rf_style, rf_ckpt, rf_config, rf_out;
    std::optional<std::uint64_t> rf_seed;
    auto* rf = app.add_subcommand("refine", "refine an existing generated image");
    rf->add_option("--in", rf_in, "image to refine")->required();
    rf->add_option("--mask", rf_mask)->required();
    rf->add_option("--style", rf_style)->required();
    rf->add_option("--ckpt", rf_ckpt)->required();
    rf->add_option("--config", rf_config, "pipeline config JSON");
    rf->add_option("--out", rf_out)->required();
    rf->add_option("--seed", rf_seed, "override the config seed");

    // color-transfer
    std::string ct_src, ct_ref, ct_out;
    auto* ct = app.add_subcommand("color-transfer",
                                  "match source image statistics to a reference");
    ct->add_option("--src", ct_src)->required();
    ct->add_option("--ref", ct_ref)->required();
    ct->add_option("--out", ct_out)->required();

    // ensemble
    std::vector<std::string> en_in;
    std::string en_out;
    auto* en = app.add_subcommand("ensemble", "average checkpoints elementwise");
    en->add_option("--in", en_in, "input checkpoints")->required()->expected(-1);
    en->add_option("--out", en_out)->required();

    // eval
    std::string ev_gen, ev_ref, ev_report, ev_sidecar;
    int ev_bins = 256;
    auto* ev = app.add_subcommand("eval", "score generated images against references");
    ev->add_option("--gen", ev_gen, "generated image directory")->required();
    ev->add_option("--ref", ev_ref, "reference image directory")->required();
    ev->add_option("--report", ev_report, "output report JSON")->required();
    ev->add_option("--sidecar", ev_sidecar,
                   "JSON with externally computed mask_accuracy and aesthetic");
    ev->add_option("--bins", ev_bins, "histogram bins for style similarity");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // exit 0 with usage text
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (sd->parsed()) return cmd_schedule_dump(sd_t_max, sd_slope, sd_out);
        if (tr->parsed()) return cmd_train(tr_config, tr_data, tr_out, tr_seed);
        if (sm->parsed())
            return cmd_sample(sm_mask, sm_style, sm_ckpt, sm_config, sm_out, sm_seed,
                              false, "");
        if (rf->parsed())
            return cmd_sample(rf_mask, rf_style, rf_ckpt, rf_config, rf_out, rf_seed,
                              true, rf_in);
        if (ct->parsed()) return cmd_color_transfer(ct_src, ct_ref, ct_out);
        if (en->parsed()) return cmd_ensemble(en_in, en_out);
        if (ev->parsed())
            return cmd_eval(ev_gen, ev_ref, ev_report, ev_sidecar, ev_bins);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
