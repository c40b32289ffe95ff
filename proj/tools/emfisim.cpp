// Copyright 2026 The emfisim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end. Subcommands: quantize, inject, analyze, campaign,
// faultmap. Exit codes: 0 success, 1 usage/config error, 2 domain error,
// 3 I/O error. All randomness flows through explicit seeds, so rerunning a
// command with the same inputs produces byte-identical outputs.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "emfisim/analytics.hpp"
#include "emfisim/campaign.hpp"
#include "emfisim/io.hpp"
#include "emfisim/quantize.hpp"

namespace fs = std::filesystem;
using namespace emfisim;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitDomain = 2;
constexpr int kExitIo = 3;

struct FaultFlags {
    std::string kind = "emfi";
    double ber = 0.06;
    double fraction = 0.15;
    int value = 0xFF;
    uint64_t window_len = 0;  // 0 -> whole blob
    uint64_t boundary_offset = 2ull << 20;
    uint64_t row_len = 16;
    uint64_t row_period = 64;
    double target_rate = 0.15;
    double post_boundary_rate = 0.01;
    double ff_fraction = 0.35;

    void add_options(CLI::App* cmd) {
        cmd->add_option("--fault", kind, "Fault model: emfi, bitflips, byteset")
            ->check(CLI::IsMember({"emfi", "bitflips", "byteset"}));
        cmd->add_option("--ber", ber, "Bit error rate (bitflips model)");
        cmd->add_option("--fraction", fraction, "Corrupted byte fraction (byteset model)");
        cmd->add_option("--value", value, "Byte value (byteset model)")
            ->check(CLI::Range(0, 255));
        cmd->add_option("--window-len", window_len, "Mask window bytes (0 = whole blob)");
        cmd->add_option("--boundary-offset", boundary_offset,
                        "Offset where fault density drops (emfi model)");
        cmd->add_option("--row-len", row_len, "Corrupted row length (emfi model)");
        cmd->add_option("--row-period", row_period, "Row period (emfi model)");
        cmd->add_option("--target-rate", target_rate,
                        "Corrupted byte fraction before the boundary (emfi model)");
        cmd->add_option("--post-rate", post_boundary_rate,
                        "Corrupted byte fraction after the boundary (emfi model)");
        cmd->add_option("--ff-fraction", ff_fraction,
                        "Share of overwrite-row bytes set to 0xFF (emfi model)");
    }

    FaultModelSpec to_spec() const {
        FaultModelSpec spec;
        if (kind == "bitflips") {
            spec.kind = FaultModelKind::RandomBitflips;
            spec.ber = ber;
        } else if (kind == "byteset") {
            spec.kind = FaultModelKind::ByteSet;
            spec.fraction = fraction;
            spec.value = static_cast<uint8_t>(value);
        } else {
            spec.kind = FaultModelKind::EmfiPattern;
            spec.emfi.boundary_offset = boundary_offset;
            spec.emfi.row_len = row_len;
            spec.emfi.row_period = row_period;
            spec.emfi.target_rate = target_rate;
            spec.emfi.post_boundary_rate = post_boundary_rate;
            spec.emfi.ff_fraction = ff_fraction;
        }
        return spec;
    }
};

void write_report(const CorruptionReport& report, const fs::path& out_dir,
                  const std::string& stem) {
    write_file_atomic(out_dir / (stem + ".csv"),
                      report_csv_header() + "\n" + report_to_csv_row(report) + "\n");
    nlohmann::json doc{{"ber", report.ber}, {"feff_fraction", report.feff_fraction}};
    if (report.nan_fraction) doc["nan_fraction"] = *report.nan_fraction;
    if (report.inf_fraction) doc["inf_fraction"] = *report.inf_fraction;
    if (report.pre_range) doc["pre_range"] = {report.pre_range->first, report.pre_range->second};
    if (report.post_range) {
        doc["post_range"] = {report.post_range->first, report.post_range->second};
    }
    if (report.range_expansion) doc["range_expansion"] = *report.range_expansion;
    write_file_atomic(out_dir / (stem + ".json"), doc.dump(2) + "\n");
}

uint32_t map_cell_bytes(uint64_t window_len) {
    // Default map geometry for 4 MiB windows is 256 columns x 64-byte cells;
    // smaller windows shrink the cell so the map keeps visible structure.
    if (window_len >= (1ull << 22)) return kDefaultBytesPerCell;
    uint64_t cell = window_len / (kDefaultMapWidth * 64);
    return cell == 0 ? 1 : static_cast<uint32_t>(cell);
}

int cmd_quantize(const fs::path& manifest, const fs::path& blob, const std::string& format,
                 const fs::path& out_dir) {
    const WeightStore src = load_store(manifest, blob);
    const FormatKind target = format_from_name(format);
    const WeightStore dst = quantize_store(src, target);
    fs::create_directories(out_dir);
    save_store(dst, out_dir / ("manifest_" + format + ".json"),
               out_dir / ("weights_" + format + ".bin"));
    std::printf("quantized %zu tensors to %s (%zu bytes)\n", dst.tensors.size(),
                format.c_str(), dst.blob.size());
    return 0;
}

int cmd_inject(const fs::path& manifest, const fs::path& blob_path, const FaultFlags& flags,
               uint64_t seed, const fs::path& out_dir) {
    WeightStore pre = load_store(manifest, blob_path);
    FaultModelSpec fault = flags.to_spec();
    const uint64_t window = flags.window_len == 0
                                ? pre.blob.size()
                                : std::min<uint64_t>(flags.window_len, pre.blob.size());

    FaultMask mask = fault.make_mask(window, seed, 0);
    WeightStore post = pre;
    post.blob = apply_mask(pre.blob, mask, 0);

    fs::create_directories(out_dir);
    write_file_atomic(out_dir / "corrupted.bin", post.blob);
    save_mask_json(mask, out_dir / "mask.json");
    write_file_atomic(out_dir / "mask.bin", mask_to_binary(mask));

    const CorruptionReport report = window_corruption_stats(pre, post, 0, window);
    write_report(report, out_dir, "report");

    const FaultMap map = render_fault_map(mask, kDefaultMapWidth, map_cell_bytes(window));
    write_file_atomic(out_dir / "mask.pgm", fault_map_to_pgm(map));

    std::printf("injected %zu fault records over %llu bytes (ber %.6f)\n",
                mask.records.size(), static_cast<unsigned long long>(window), report.ber);
    return 0;
}

int cmd_analyze(const fs::path& manifest, const fs::path& pre_blob, const fs::path& post_blob,
                const fs::path& out_dir) {
    const WeightStore pre = load_store(manifest, pre_blob);
    WeightStore post = pre;
    post.blob = read_binary_file(post_blob);
    if (post.blob.size() != pre.blob.size()) {
        raise(ErrorCode::LengthMismatch, "pre/post blobs differ in length");
    }
    const CorruptionReport report = fp_corruption_stats(pre, post);
    fs::create_directories(out_dir);
    write_report(report, out_dir, "report");
    std::printf("%s\n%s\n", report_csv_header().c_str(), report_to_csv_row(report).c_str());
    return 0;
}

int cmd_faultmap(const fs::path& mask_path, uint32_t width, uint32_t bytes_per_cell,
                 const fs::path& out_pgm) {
    const FaultMask mask = load_mask_json(mask_path);
    const FaultMap map = render_fault_map(mask, width, bytes_per_cell);
    if (out_pgm.has_parent_path()) fs::create_directories(out_pgm.parent_path());
    write_file_atomic(out_pgm, fault_map_to_pgm(map));
    fs::path csv = out_pgm;
    csv.replace_extension(".csv");
    write_file_atomic(csv, fault_map_to_csv(map));
    std::printf("fault map %ux%u cells -> %s\n", map.width, map.height,
                out_pgm.string().c_str());
    return 0;
}

struct CampaignConfig {
    fs::path model, manifest, blob, eval;
    fs::path out_dir;
    std::vector<std::string> formats;
    CampaignSpec spec;
};

CampaignConfig load_campaign_config(const fs::path& config_path) {
    std::ifstream in(config_path);
    if (!in) raise(ErrorCode::IoError, "cannot open " + config_path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::IoError, config_path.string() + ": " + e.what());
    }

    CampaignConfig cfg;
    try {
        const fs::path base = config_path.parent_path();
        cfg.model = base / doc.at("model").get<std::string>();
        cfg.manifest = base / doc.at("manifest").get<std::string>();
        cfg.blob = base / doc.at("blob").get<std::string>();
        cfg.eval = base / doc.at("eval").get<std::string>();
        cfg.out_dir = base / doc.value("out_dir", "out");
        cfg.formats = doc.value("formats", std::vector<std::string>{"fp32"});
        cfg.spec.seed = doc.value("seed", 21ull);
        cfg.spec.chunk_len = doc.value("chunk_len", 0ull);
        if (doc.contains("fault")) {
            cfg.spec.fault = fault_model_from_json(doc.at("fault"));
        }
    } catch (const nlohmann::json::exception& e) {
        raise(ErrorCode::InvalidArgument, std::string("bad campaign config: ") + e.what());
    }
    return cfg;
}

int cmd_campaign(const CampaignConfig& cfg) {
    const Model fp32_model = load_model(cfg.model, cfg.manifest, cfg.blob);
    const EvalSet eval = load_eval_set(cfg.eval);
    fs::create_directories(cfg.out_dir / "maps");

    for (const std::string& fmt_name : cfg.formats) {
        const FormatKind fmt = format_from_name(fmt_name);
        Model model = fp32_model;
        if (fmt != FormatKind::FP32) {
            model.store = quantize_store(fp32_model.store, fmt);
        }

        const CampaignResult result = run_campaign(model, eval, cfg.spec);
        write_file_atomic(cfg.out_dir / ("results_" + fmt_name + ".csv"),
                          campaign_to_csv(result, fmt, model.store.blob.size()));
        write_file_atomic(cfg.out_dir / ("regions_" + fmt_name + ".csv"),
                          aggregate_to_csv(aggregate_regions(result.chunks)));
        write_file_atomic(cfg.out_dir / ("campaign_" + fmt_name + ".json"),
                          campaign_to_json(result, fmt, cfg.spec).dump(2) + "\n");

        for (const auto& chunk : result.chunks) {
            const FaultMask mask =
                cfg.spec.fault.make_mask(chunk.range.length(), cfg.spec.seed,
                                         chunk.chunk_index);
            const FaultMap map = render_fault_map(mask, kDefaultMapWidth,
                                                  map_cell_bytes(chunk.range.length()));
            char name[64];
            std::snprintf(name, sizeof(name), "%s_chunk_%03zu.pgm", fmt_name.c_str(),
                          chunk.chunk_index);
            write_file_atomic(cfg.out_dir / "maps" / name, fault_map_to_pgm(map));
        }

        std::printf("%s: baseline top1 %.4f top5 %.4f, %zu chunks\n", fmt_name.c_str(),
                    result.baseline.top1, result.baseline.top5, result.chunks.size());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"EMFI weight-corruption simulator and sensitivity-campaign harness"};
    app.require_subcommand(1);

    uint64_t seed = 21;
    app.add_option("--seed", seed, "Seed for all mask generation")->capture_default_str();

    // quantize
    auto* quantize = app.add_subcommand("quantize", "Convert an FP32 store to another format");
    std::string q_manifest, q_blob, q_format, q_out = "out";
    quantize->add_option("--manifest", q_manifest, "FP32 manifest JSON")->required();
    quantize->add_option("--blob", q_blob, "FP32 weight blob")->required();
    quantize->add_option("--format", q_format, "Target format")
        ->required()
        ->check(CLI::IsMember({"fp32", "fp16", "int8", "int4"}));
    quantize->add_option("--out", q_out, "Output directory");

    // inject
    auto* inject = app.add_subcommand("inject", "Apply a fault mask to a weight blob");
    std::string i_manifest, i_blob, i_out = "out";
    FaultFlags i_flags;
    inject->add_option("--manifest", i_manifest, "Manifest JSON")->required();
    inject->add_option("--blob", i_blob, "Weight blob")->required();
    inject->add_option("--out", i_out, "Output directory");
    i_flags.add_options(inject);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Corruption statistics for pre/post blobs");
    std::string a_manifest, a_pre, a_post, a_out = "out";
    analyze->add_option("--manifest", a_manifest, "Manifest JSON")->required();
    analyze->add_option("--pre", a_pre, "Original blob")->required();
    analyze->add_option("--post", a_post, "Corrupted blob")->required();
    analyze->add_option("--out", a_out, "Output directory");

    // campaign
    auto* campaign = app.add_subcommand("campaign", "Chunked sensitivity campaign");
    std::string c_config;
    std::string c_out;
    std::vector<std::string> c_formats;
    uint64_t c_chunk_len = 0;
    campaign->add_option("--config", c_config, "Campaign config JSON")->required();
    campaign->add_option("--out", c_out, "Override output directory");
    campaign->add_option("--format", c_formats, "Override formats (repeatable)")
        ->check(CLI::IsMember({"fp32", "fp16", "int8", "int4"}));
    campaign->add_option("--chunk-len", c_chunk_len, "Override chunk length in bytes");

    // faultmap
    auto* faultmap = app.add_subcommand("faultmap", "Render a mask file as a PGM image");
    std::string f_mask, f_out = "map.pgm";
    uint32_t f_width = kDefaultMapWidth;
    uint32_t f_cell = kDefaultBytesPerCell;
    faultmap->add_option("--mask", f_mask, "Mask JSON file")->required();
    faultmap->add_option("--width", f_width, "Map width in cells");
    faultmap->add_option("--bytes-per-cell", f_cell, "Bytes per map cell");
    faultmap->add_option("--out", f_out, "Output PGM path");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (quantize->parsed()) {
            return cmd_quantize(q_manifest, q_blob, q_format, q_out);
        }
        if (inject->parsed()) {
            return cmd_inject(i_manifest, i_blob, i_flags, seed, i_out);
        }
        if (analyze->parsed()) {
            return cmd_analyze(a_manifest, a_pre, a_post, a_out);
        }
        if (campaign->parsed()) {
            CampaignConfig cfg = load_campaign_config(c_config);
            // Command-line flags override config-file fields.
            if (app.count("--seed")) cfg.spec.seed = seed;
            if (!c_out.empty()) cfg.out_dir = c_out;
            if (!c_formats.empty()) cfg.formats = c_formats;
            if (campaign->count("--chunk-len")) cfg.spec.chunk_len = c_chunk_len;
            return cmd_campaign(cfg);
        }
        if (faultmap->parsed()) {
            return cmd_faultmap(f_mask, f_width, f_cell, f_out);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        switch (e.code()) {
            case ErrorCode::IoError: return kExitIo;
            case ErrorCode::InvalidArgument: return kExitUsage;
            default: return kExitDomain;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitDomain;
    }
    return kExitUsage;
}
