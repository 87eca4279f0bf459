// caos: plan, simulate, decode and run experiment presets from the shell.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "caos/decode.hpp"
#include "caos/errors.hpp"
#include "caos/experiment.hpp"
#include "caos/image_io.hpp"
#include "caos/metrics.hpp"
#include "caos/plan.hpp"
#include "caos/sensor.hpp"

namespace fs = std::filesystem;
using namespace caos;

namespace {

enum Exit { Ok = 0, Runtime = 1, Config = 2, Validation = 3, Acceptance = 4 };

struct Common {
    std::string config;
    std::string preset;
    bool full_scale = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> key;
    std::string convention;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
    cmd->add_option("--config", c.config, "experiment config file (JSON)");
    cmd->add_option("--preset", c.preset, "named preset instead of a config file");
    cmd->add_flag("--full-scale", c.full_scale, "preset at laboratory grid size and bit rate");
    cmd->add_option("--seed", c.seed, "noise seed");
    cmd->add_option("--key", c.key, "plan key seed (0 keeps raster assignment)");
    cmd->add_option("--convention", c.convention, "dB convention: 20log or 10log")->check(CLI::IsMember({"20log", "10log"}));
    if (with_out) cmd->add_option("--out", c.out, "output directory");
}

ExperimentConfig resolve(const Common& c) {
    if (c.config.empty() == c.preset.empty()) throw ConfigError("give exactly one of --config or --preset");
    ExperimentConfig cfg = c.config.empty() ? preset(c.preset, c.full_scale) : load_config(c.config);
    if (c.seed) cfg.noise_seed = *c.seed;
    if (c.key) cfg.plan.key_seed = *c.key;
    if (!c.convention.empty()) cfg.convention = parse_convention(c.convention);
    if (!c.out.empty()) cfg.output = c.out;
    return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void print_report(const CodingPlan& plan, const ValidationReport& rep) {
    std::printf("mode %s  Q=%d  P=%d  J=%d  W=%d  F=%ld  T=%g s  frame %g s\n", std::string(to_string(plan.mode())).c_str(),
                plan.pixel_count(), plan.channel_count(), plan.set_count(), plan.frame_bits(), plan.samples_per_bit(),
                plan.bit_time(), plan.frame_time());
    std::printf("speedup vs single channel: %.3f\n", rep.speedup_vs_single_channel);
    for (const auto& c : rep.checks) {
        std::printf("  %-4s %s%s%s\n", c.passed ? "ok" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                    c.detail.c_str());
    }
}

int cmd_plan(const Common& c) {
    const auto cfg = resolve(c);
    const auto plan = build_plan(cfg.plan, false);
    const auto rep = validate(plan);
    print_report(plan, rep);
    if (!rep.ok()) {
        try {
            build_plan(cfg.plan, true);
        } catch (const Error& e) {
            std::fprintf(stderr, "validation error: %s\n", e.what());
        }
        return Validation;
    }
    const fs::path dir = c.out.empty() ? fs::path(cfg.output) : fs::path(c.out);
    write_text(dir / "plan.json", plan_to_json(plan));
    std::ostringstream csv;
    write_assignment_csv(csv, plan);
    write_text(dir / "assignment.csv", csv.str());
    std::printf("wrote %s\n", (dir / "plan.json").string().c_str());
    return Ok;
}

int cmd_simulate(const Common& c, const std::string& plan_file) {
    const auto cfg = resolve(c);
    const auto plan = plan_file.empty() ? build_plan(cfg.plan) : plan_from_json(read_text(plan_file));
    const auto d1 = resolve_detector(cfg.pd1);
    const auto built = build_scene(cfg.scene, plan.grid(), cfg.convention, d1.responsivity);
    const fs::path dir = c.out.empty() ? fs::path(cfg.output) : fs::path(c.out);
    fs::create_directories(dir);
    if (plan_file.empty()) write_text(dir / "plan.json", plan_to_json(plan));
    if (cfg.pd2) {
        const auto d2 = resolve_detector(*cfg.pd2);
        auto s = synthesize_dual(plan, built.scene, d1, d2);
        write_stream(dir / "pd1.f32", adc(add_noise(s.pd1, d1, cfg.noise_seed, 0), d1));
        write_stream(dir / "pd2.f32", adc(add_noise(s.pd2, d2, cfg.noise_seed, 1), d2));
    } else {
        write_stream(dir / "pd1.f32", adc(add_noise(synthesize(plan, built.scene, d1), d1, cfg.noise_seed, 0), d1));
    }
    std::printf("wrote streams to %s (W=%d, F=%ld)\n", dir.string().c_str(), plan.frame_bits(), plan.samples_per_bit());
    return Ok;
}

int cmd_decode(const std::string& plan_file, const std::vector<std::string>& streams, const std::string& out,
               const Common& truth_src, double threshold) {
    const auto plan = plan_from_json(read_text(plan_file));
    const fs::path dir = out.empty() ? fs::path("out/decode") : fs::path(out);
    fs::create_directories(dir);
    std::optional<std::vector<double>> truth;
    if (!truth_src.config.empty() || !truth_src.preset.empty()) {
        const auto cfg = resolve(truth_src);
        const auto d1 = resolve_detector(cfg.pd1);
        const auto built = build_scene(cfg.scene, plan.grid(), cfg.convention, d1.responsivity);
        truth = built.scene.is_active() ? built.scene.per_source.front() : effective_irradiance(built.scene, d1);
    }
    bool low = false;
    for (std::size_t i = 0; i < streams.size(); ++i) {
        const auto side = i == 0 ? DetectorSide::Pd1 : DetectorSide::Pd2;
        const std::string stem = i == 0 ? "pd1" : "pd2";
        const auto stream = read_stream(streams[i]);
        const auto spectra = per_bit_spectra(stream, plan);
        const auto img = decode_frame(stream, plan, side);
        std::ofstream rep(dir / ("decode_" + stem + ".json"));
        write_decode_report(rep, img, &spectra);
        for (int k = 0; k < img.image_count(); ++k) {
            const std::string name = img.image_count() > 1 ? stem + "_image" + std::to_string(k + 1) : stem;
            const auto raster = to_raster(img.grid, img.values[static_cast<std::size_t>(k)]);
            std::ofstream pgm(dir / (name + ".pgm"), std::ios::binary);
            write_pgm16(pgm, raster);
            std::ofstream csv(dir / (name + ".csv"));
            write_raster_csv(csv, raster);
        }
        std::printf("%s: %d image(s), normalization reference %.6g\n", stem.c_str(), img.image_count(),
                    img.normalization_reference);
        if (truth && i == 0) {
            const double rho = pearson(img.raw.front(), *truth);
            const bool flag = rho < threshold;
            low = low || flag;
            std::printf("ground-truth correlation %.4f%s\n", rho, flag ? "  LOW: wrong key or tampered plan?" : "");
        }
    }
    if (low) std::printf("warning: decoded image does not match the ground truth\n");
    return Ok;
}

int cmd_experiment(const Common& c, bool log_render) {
    const auto cfg = resolve(c);
    const auto r = run_experiment(cfg);
    const fs::path dir = cfg.output;
    write_outputs(r, dir, log_render);
    std::printf("%s: W=%d J=%d F=%ld frame %g s, %zu detector image set(s) -> %s\n", cfg.name.c_str(),
                r.plan.frame_bits(), r.plan.set_count(), r.plan.samples_per_bit(), r.plan.frame_time(),
                r.images.size(), dir.string().c_str());
    if (r.patches) {
        for (const auto& p : r.patches->patches) {
            std::printf("  %-18s DR %8.3f dB  SNR %8.3f\n", p.name.c_str(), p.dr_db, p.snr);
        }
    }
    for (const auto& ch : r.checks) {
        std::printf("  %-4s %s%s%s\n", ch.passed ? "PASS" : "FAIL", ch.name.c_str(), ch.detail.empty() ? "" : ": ",
                    ch.detail.c_str());
    }
    std::printf("%s\n", r.passed() ? "acceptance: PASS" : "acceptance: FAIL");
    return r.passed() ? Ok : Acceptance;
}

int cmd_calibrate(const Common& c, int patch, double target) {
    Common cc = c;
    if (cc.config.empty() && cc.preset.empty()) cc.preset = "exp1-fmcdma";
    const auto cfg = resolve(cc);
    const auto cal = calibrate_flicker(cfg, patch, target);
    for (const auto& s : cal.steps) std::printf("  flicker %.9g  SNR %.6f\n", s.flicker, s.snr);
    std::printf("source_flicker = %.6g (SNR %.4f on patch %d, target %.3g)\n", cal.flicker, cal.snr, patch + 1, target);
    return Ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CAOS FDMA-CDMA camera simulator and codec"};
    app.require_subcommand(1);

    Common plan_c, sim_c, exp_c, cal_c, cfg_c, truth_c;
    auto* plan = app.add_subcommand("plan", "build and validate a coding plan");
    add_common(plan, plan_c);

    std::string sim_plan;
    auto* sim = app.add_subcommand("simulate", "synthesize detector streams");
    add_common(sim, sim_c);
    sim->add_option("--plan", sim_plan, "plan file (default: build from the config)");

    std::string dec_plan, dec_out;
    std::vector<std::string> dec_streams;
    double threshold = 0.9;
    auto* dec = app.add_subcommand("decode", "decode stream files into images");
    dec->add_option("--plan", dec_plan, "plan file")->required();
    dec->add_option("--stream", dec_streams, "PD1 stream, then optionally PD2")->required()->expected(1, 2);
    dec->add_option("--out", dec_out, "output directory");
    dec->add_option("--truth-config", truth_c.config, "config whose scene is the ground truth");
    dec->add_option("--truth-preset", truth_c.preset, "preset whose scene is the ground truth");
    dec->add_option("--min-correlation", threshold, "flag ground-truth correlation below this");

    bool log_render = false;
    auto* exp = app.add_subcommand("experiment", "run a preset or config end to end");
    add_common(exp, exp_c);
    exp->add_flag("--log-render", log_render, "also write dB-scaled PGM renderings");

    int patch = 3;
    double target = kHdrCalibrationSnr;
    auto* cal = app.add_subcommand("calibrate", "fit the source flicker to a target patch SNR");
    add_common(cal, cal_c, false);
    cal->add_option("--patch", patch, "0-based patch index")->capture_default_str();
    cal->add_option("--target", target, "target SNR")->capture_default_str();

    auto* presets = app.add_subcommand("presets", "list preset names");
    auto* config = app.add_subcommand("config", "print the config of a preset");
    add_common(config, cfg_c, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? Ok : Config;
    }

    try {
        if (*plan) return cmd_plan(plan_c);
        if (*sim) return cmd_simulate(sim_c, sim_plan);
        if (*dec) return cmd_decode(dec_plan, dec_streams, dec_out, truth_c, threshold);
        if (*exp) return cmd_experiment(exp_c, log_render);
        if (*cal) return cmd_calibrate(cal_c, patch, target);
        if (*presets) {
            for (const auto& n : preset_names()) std::printf("%s\n", n.c_str());
            return Ok;
        }
        if (*config) {
            std::fputs(config_to_json(resolve(cfg_c)).c_str(), stdout);
            return Ok;
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return Config;
    } catch (const TimingError& e) {
        std::fprintf(stderr, "validation error (timing): %s\n", e.what());
        return Validation;
    } catch (const NyquistError& e) {
        std::fprintf(stderr, "validation error (nyquist): %s\n", e.what());
        return Validation;
    } catch (const UnsupportedOrder& e) {
        std::fprintf(stderr, "validation error (code length): %s\n", e.what());
        return Validation;
    } catch (const LayoutError& e) {
        std::fprintf(stderr, "validation error (layout): %s\n", e.what());
        return Validation;
    } catch (const PlanMismatch& e) {
        std::fprintf(stderr, "validation error (plan mismatch): %s\n", e.what());
        return Validation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return Runtime;
    }
    return Runtime;
}
