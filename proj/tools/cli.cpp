#include "cli.hpp"

#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "wicked/analysis.hpp"
#include "wicked/config.hpp"
#include "wicked/dataset.hpp"
#include "wicked/eval.hpp"
#include "wicked/hash.hpp"
#include "wicked/manifest.hpp"
#include "wicked/model.hpp"
#include "wicked/openai_client.hpp"
#include "wicked/sba.hpp"
#include "wicked/transform.hpp"

#include <CLI11.hpp>

namespace wicked {

namespace {

namespace fs = std::filesystem;

DatasetFormat format_for(const std::string& path, const std::string& flag) {
    if (flag == "csv") return DatasetFormat::kCsv;
    if (flag == "jsonl") return DatasetFormat::kCanonicalJsonl;
    if (!flag.empty()) throw CLI::ValidationError("--format", "unknown format " + flag);
    return fs::path(path).extension() == ".csv" ? DatasetFormat::kCsv
                                                : DatasetFormat::kCanonicalJsonl;
}

void warn_rejections(const ValidationReport& report) {
    for (const auto& issue : report.errors) {
        std::cerr << "warning: row " << issue.row << " rejected: " << issue.reason
                  << '\n';
    }
}

std::vector<std::uint64_t> parse_seeds(const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::istringstream in(csv);
    std::string part;
    while (std::getline(in, part, ',')) {
        if (part.empty()) continue;
        seeds.push_back(std::stoull(part));
    }
    if (seeds.empty()) throw CLI::ValidationError("--seeds", "no seeds given");
    return seeds;
}

std::optional<std::string> opt_of(const std::string& s) {
    if (s.empty()) return std::nullopt;
    return s;
}

// Shared flag bundle resolved through flags > config file > environment.
struct Resolved {
    KvConfig file;
    std::string base_url;
    std::string model;
    std::string nota;
    std::string api_key_env;

    static Resolved make(const std::string& config_path,
                         const std::string& base_url_flag,
                         const std::string& model_flag,
                         const std::string& nota_flag) {
        Resolved r;
        if (!config_path.empty()) r.file = KvConfig::parse_file(config_path);
        r.base_url = resolve_setting(opt_of(base_url_flag), r.file,
                                     "endpoint.base_url", "WICKED_BASE_URL", "");
        r.model = resolve_setting(opt_of(model_flag), r.file, "endpoint.model",
                                  "WICKED_MODEL", "");
        r.nota = resolve_setting(opt_of(nota_flag), r.file, "nota", "WICKED_NOTA",
                                 std::string(kDefaultNotaText));
        r.api_key_env = resolve_setting(std::nullopt, r.file, "api_key_env", "",
                                        "OPENAI_API_KEY");
        return r;
    }
};

ModelEndpoint make_endpoint(const Resolved& r) {
    ModelEndpoint endpoint;
    endpoint.base_url = r.base_url;
    endpoint.model_name = r.model;
    endpoint.api_key_env = r.api_key_env;
    if (auto v = r.file.get("endpoint.max_in_flight")) {
        endpoint.max_in_flight = std::stoi(*v);
    }
    if (auto v = r.file.get("endpoint.timeout_ms")) endpoint.timeout_ms = std::stoi(*v);
    if (auto v = r.file.get("endpoint.max_attempts")) {
        endpoint.retry.max_attempts = std::stoi(*v);
    }
    if (auto v = r.file.get("endpoint.length_normalize")) {
        endpoint.length_normalize = *v == "1" || *v == "true";
    }
    return endpoint;
}

int cmd_transform(const std::string& input, const std::string& format_flag,
                  const std::string& out_dir, const std::string& seeds_csv,
                  const std::string& labels_path, bool constant_sca,
                  bool embedded_sba, const std::string& nota_flag,
                  const std::string& config_path) {
    auto resolved = Resolved::make(config_path, "", "", nota_flag);
    auto seeds = parse_seeds(seeds_csv);

    auto ingest = ingest_dataset(input, format_for(input, format_flag));
    warn_rejections(ingest.report);
    const Dataset& dataset = ingest.dataset;

    SbaLabelSet labels;
    if (!labels_path.empty()) labels = load_sba_labels(labels_path);
    auto cover = [&](const McqExample& e) {
        if (labels.has(e.id)) return;
        if (embedded_sba && e.sba) {
            labels.labels[e.id] = SbaLabel{e.id, *e.sba, LabelProvenance::kLabelFile};
            return;
        }
        if (constant_sca) {
            labels.labels[e.id] = SbaLabel{e.id, false, LabelProvenance::kConstant};
        }
    };
    for (const auto& e : dataset.examples) cover(e);
    for (const auto& e : dataset.fewshot_pool) cover(e);

    TransformOptions options;
    options.nota_text = resolved.nota;
    auto variants = make_variants(dataset, seeds, labels, options);

    fs::create_directories(out_dir);
    RunManifest manifest;
    manifest.command = "transform";
    manifest.dataset_hash = to_hex(dataset_content_hash(dataset));
    manifest.seeds = seeds;
    manifest.nota_text = options.nota_text;
    manifest.created_at = iso8601_utc_now();
    manifest.settings["input"] = input;
    manifest.settings["labels"] = labels_path;
    manifest.settings["constant_sca"] = constant_sca ? "1" : "0";
    manifest.settings["embedded_sba"] = embedded_sba ? "1" : "0";
    manifest.settings["nota"] = options.nota_text;
    manifest.config_hash = hash_settings(manifest.settings);

    for (const auto& v : variants) {
        auto stem = "variant_seed" + std::to_string(v.seed);
        auto data_path = (fs::path(out_dir) / (stem + ".jsonl")).string();
        auto records_path = (fs::path(out_dir) / (stem + ".records.jsonl")).string();
        write_variant(v, data_path, records_path);
        manifest.artifacts.push_back(data_path);
        manifest.artifacts.push_back(records_path);
        std::cout << "wrote " << data_path << '\n';
    }
    write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    return 0;
}

int cmd_label_sba(const std::string& input, const std::string& format_flag,
                  const std::string& provider_name, const std::string& out_path,
                  const std::string& labels_in, const std::string& cache_path,
                  const std::string& base_url_flag, const std::string& model_flag,
                  int max_in_flight, const std::string& config_path) {
    auto resolved = Resolved::make(config_path, base_url_flag, model_flag, "");

    auto ingest = ingest_dataset(input, format_for(input, format_flag));
    warn_rejections(ingest.report);
    const Dataset& dataset = ingest.dataset;

    std::unique_ptr<SbaCache> cache;
    if (!cache_path.empty()) cache = std::make_unique<SbaCache>(cache_path);

    std::unique_ptr<OpenAiClient> client;
    std::unique_ptr<SbaProvider> provider;
    if (provider_name == "constant") {
        provider = std::make_unique<ConstantScaProvider>();
    } else if (provider_name == "file") {
        if (labels_in.empty()) {
            throw CLI::ValidationError("--labels-in", "file provider needs a label file");
        }
        provider = std::make_unique<FileLabelProvider>(load_sba_labels(labels_in));
    } else if (provider_name == "remote") {
        if (resolved.base_url.empty() || resolved.model.empty()) {
            throw CLI::ValidationError("--endpoint/--model",
                                       "remote provider needs an endpoint and model");
        }
        auto endpoint = make_endpoint(resolved);
        client = std::make_unique<OpenAiClient>(endpoint);
        // Single-digit classification: temperature 0, 4-token cap.
        provider = std::make_unique<RemoteLlmProvider>(
            [&client](const std::string& prompt) {
                return client->chat_complete(prompt, 4);
            },
            max_in_flight);
    } else {
        throw CLI::ValidationError("--provider", "unknown provider " + provider_name);
    }

    auto labels = annotate_sba(dataset, *provider, cache.get());
    write_sba_labels(labels, out_path);

    std::cout << "labeled " << labels.labels.size() << " ids; coverage "
              << labels.coverage(dataset) << ", sba_rate " << labels.sba_rate(dataset)
              << '\n';

    RunManifest manifest;
    manifest.command = "label-sba";
    manifest.dataset_hash = to_hex(dataset_content_hash(dataset));
    manifest.created_at = iso8601_utc_now();
    manifest.endpoint_base_url = provider_name == "remote" ? resolved.base_url : "";
    manifest.endpoint_model = provider_name == "remote" ? resolved.model : "";
    manifest.settings["provider"] = provider_name;
    manifest.settings["input"] = input;
    manifest.settings["cache"] = cache_path;
    manifest.settings["api_key_env"] = resolved.api_key_env;
    manifest.config_hash = hash_settings(manifest.settings);
    manifest.artifacts.push_back(out_path);
    write_manifest(manifest, out_path + ".manifest.json");
    return 0;
}

int cmd_eval(const std::string& dataset_path, const std::string& records_path,
             const std::string& format_flag, const std::string& out_path,
             const std::string& mock_name, std::uint64_t mock_seed,
             const std::string& base_url_flag, const std::string& model_flag,
             const std::string& mode_name_flag, int shots_flag, int max_tokens,
             const std::string& templates_path, int workers,
             const std::string& partial_path, const std::string& config_path) {
    auto resolved = Resolved::make(config_path, base_url_flag, model_flag, "");

    Dataset dataset;
    std::vector<WickedRecord> records;
    std::optional<std::uint64_t> variant_seed;
    if (!records_path.empty()) {
        auto variant = read_variant(dataset_path, records_path);
        dataset = std::move(variant.dataset);
        records = std::move(variant.records);
        variant_seed = variant.seed;
    } else {
        auto ingest = ingest_dataset(dataset_path, format_for(dataset_path, format_flag));
        warn_rejections(ingest.report);
        dataset = std::move(ingest.dataset);
    }

    PromptSpec spec;
    try {
        spec.mode = mode_from_name(mode_name_flag);
    } catch (const std::exception& e) {
        throw CLI::ValidationError("--mode", e.what());
    }
    spec.shots = shots_flag >= 0 ? shots_flag
                                 : (spec.mode == PromptMode::kDirect ? 5 : 0);
    spec.max_gen_tokens = max_tokens;
    if (!templates_path.empty()) spec.templates = PromptTemplates::load(templates_path);
    spec.validate(); // cot with shots > 0 is a usage error, caught below

    std::unique_ptr<ModelHandle> model;
    if (!mock_name.empty()) {
        MockKind kind;
        try {
            kind = mock_kind_from_name(mock_name);
        } catch (const std::exception& e) {
            throw CLI::ValidationError("--mock", e.what());
        }
        Knowledge knowledge;
        if (kind == MockKind::kOracle) {
            knowledge = knowledge_from_dataset(dataset);
        } else if (kind == MockKind::kStringMatcher) {
            knowledge = records.empty()
                            ? knowledge_from_dataset(dataset)
                            : source_knowledge_from_variant(dataset, records);
        }
        model = std::make_unique<MockModel>(kind, mock_seed, std::move(knowledge));
    } else {
        if (resolved.base_url.empty() || resolved.model.empty()) {
            throw CLI::ValidationError("--endpoint/--model",
                                       "remote eval needs an endpoint and model");
        }
        model = std::make_unique<OpenAiClient>(make_endpoint(resolved));
    }

    EvalOptions options;
    options.workers = workers;
    options.partial_path = partial_path;

    EvalRun run = spec.mode == PromptMode::kDirect
                      ? eval_direct(dataset, variant_seed, *model, spec, options)
                      : eval_cot(dataset, variant_seed, *model, spec, options);
    write_eval_run(run, out_path);
    std::cout << "wrote " << out_path << " (" << run.items.size() << " items, accuracy "
              << accuracy(run) << ")\n";

    RunManifest manifest;
    manifest.command = "eval";
    manifest.dataset_hash = to_hex(run.dataset_hash);
    if (variant_seed) manifest.seeds = {*variant_seed};
    manifest.created_at = iso8601_utc_now();
    manifest.endpoint_base_url = mock_name.empty() ? resolved.base_url : "";
    manifest.endpoint_model = mock_name.empty() ? resolved.model : mock_name;
    manifest.template_fingerprints["prompt_spec"] = to_hex(spec.fingerprint());
    manifest.template_fingerprints["templates"] = to_hex(spec.templates.fingerprint());
    manifest.settings["dataset"] = dataset_path;
    manifest.settings["mode"] = mode_name(spec.mode);
    manifest.settings["shots"] = std::to_string(spec.shots);
    manifest.settings["max_tokens"] = std::to_string(spec.max_gen_tokens);
    manifest.settings["mock"] = mock_name;
    manifest.settings["mock_seed"] = std::to_string(mock_seed);
    manifest.settings["api_key_env"] = resolved.api_key_env;
    manifest.settings["cot_extraction"] = std::string(kCotExtractionVersion);
    manifest.config_hash = hash_settings(manifest.settings);
    manifest.artifacts.push_back(out_path);
    write_manifest(manifest, out_path + ".manifest.json");
    return 0;
}

int cmd_report(const std::string& original_path,
               const std::vector<std::string>& wicked_paths,
               const std::string& out_dir) {
    EvalRun original = read_eval_run(original_path);
    std::vector<EvalRun> wicked;
    wicked.reserve(wicked_paths.size());
    for (const auto& p : wicked_paths) wicked.push_back(read_eval_run(p));

    RunReport report = make_run_report(original, wicked);
    std::vector<TransitionMatrix> matrices;
    matrices.reserve(wicked.size());
    for (const auto& run : wicked) {
        matrices.push_back(transition_matrix(original, run));
    }
    emit_report({report}, matrices, out_dir);

    RunManifest manifest;
    manifest.command = "report";
    manifest.created_at = iso8601_utc_now();
    for (const auto& run : wicked) {
        if (run.variant_seed) manifest.seeds.push_back(*run.variant_seed);
    }
    manifest.settings["original"] = original_path;
    manifest.settings["estimator"] = "sample-std(n-1)";
    manifest.settings["mode"] = mode_name(report.mode);
    manifest.config_hash = hash_settings(manifest.settings);
    manifest.artifacts = {"reports.jsonl", "table.txt", "transitions.txt"};
    write_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());

    std::cout << render_table({report});
    return 0;
}

} // namespace

int run_cli(const std::vector<std::string>& args) {
    CLI::App app{"WiCkeD benchmark variants: transform, annotate, evaluate, report"};
    app.require_subcommand(1);

    // transform
    std::string t_input, t_format, t_out, t_seeds = "1,2,3,4,5", t_labels, t_nota,
                t_config;
    bool t_constant_sca = false, t_embedded_sba = false;
    auto* transform = app.add_subcommand(
        "transform", "Create seeded variants of a benchmark");
    transform->add_option("--input", t_input, "Benchmark file")->required();
    transform->add_option("--format", t_format, "jsonl|csv (default by extension)");
    transform->add_option("--out", t_out, "Output directory")->required();
    transform->add_option("--seeds", t_seeds, "Comma-separated seeds");
    transform->add_option("--labels", t_labels, "SBA label file");
    transform->add_flag("--constant-sca", t_constant_sca,
                        "Treat unlabeled ids as SCA");
    transform->add_flag("--embedded-sba", t_embedded_sba,
                        "Use sba fields embedded in the dataset");
    transform->add_option("--nota", t_nota, "Wildcard option text");
    transform->add_option("--config", t_config, "Key-value config file");

    // label-sba
    std::string l_input, l_format, l_provider, l_out, l_labels_in, l_cache,
        l_endpoint, l_model, l_config;
    int l_max_in_flight = 8;
    auto* label = app.add_subcommand("label-sba", "Annotate SBA/SCA labels");
    label->add_option("--input", l_input, "Benchmark file")->required();
    label->add_option("--format", l_format, "jsonl|csv");
    label->add_option("--provider", l_provider, "remote|file|constant")->required();
    label->add_option("--out", l_out, "Label file to write")->required();
    label->add_option("--labels-in", l_labels_in, "Existing label file (file provider)");
    label->add_option("--cache", l_cache, "Append-only annotation cache");
    label->add_option("--endpoint", l_endpoint, "OpenAI-compatible base URL");
    label->add_option("--model", l_model, "Model name");
    label->add_option("--max-in-flight", l_max_in_flight, "Concurrent requests");
    label->add_option("--config", l_config, "Key-value config file");

    // eval
    std::string e_dataset, e_records, e_format, e_out, e_mock, e_endpoint, e_model,
        e_mode = "direct", e_templates, e_partial, e_config;
    std::uint64_t e_mock_seed = 0;
    int e_shots = -1, e_max_tokens = 4096, e_workers = 1;
    auto* eval = app.add_subcommand("eval", "Evaluate a model over a dataset");
    eval->add_option("--dataset", e_dataset, "Dataset or variant file")->required();
    eval->add_option("--records", e_records, "Variant records sidecar");
    eval->add_option("--format", e_format, "jsonl|csv");
    eval->add_option("--out", e_out, "Run file to write")->required();
    eval->add_option("--mock", e_mock, "oracle|string_matcher|uniform_guesser");
    eval->add_option("--mock-seed", e_mock_seed, "Mock randomness seed");
    eval->add_option("--endpoint", e_endpoint, "OpenAI-compatible base URL");
    eval->add_option("--model", e_model, "Model name");
    eval->add_option("--mode", e_mode, "direct|cot");
    eval->add_option("--shots", e_shots, "Few-shot count (default 5 direct, 0 cot)");
    eval->add_option("--max-tokens", e_max_tokens, "Generation cap");
    eval->add_option("--templates", e_templates, "Prompt templates JSON");
    eval->add_option("--workers", e_workers, "Concurrent example workers");
    eval->add_option("--partial", e_partial, "Partial-results file for resume");
    eval->add_option("--config", e_config, "Key-value config file");

    // report
    std::string r_original, r_out;
    std::vector<std::string> r_wicked;
    auto* report = app.add_subcommand("report", "Aggregate runs into a report");
    report->add_option("--original", r_original, "Original-benchmark run")->required();
    report->add_option("--wicked", r_wicked, "Variant runs")->required();
    report->add_option("--out", r_out, "Report directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    try {
        if (transform->parsed()) {
            return cmd_transform(t_input, t_format, t_out, t_seeds, t_labels,
                                 t_constant_sca, t_embedded_sba, t_nota, t_config);
        }
        if (label->parsed()) {
            return cmd_label_sba(l_input, l_format, l_provider, l_out, l_labels_in,
                                 l_cache, l_endpoint, l_model, l_max_in_flight,
                                 l_config);
        }
        if (eval->parsed()) {
            return cmd_eval(e_dataset, e_records, e_format, e_out, e_mock,
                            e_mock_seed, e_endpoint, e_model, e_mode, e_shots,
                            e_max_tokens, e_templates, e_workers, e_partial,
                            e_config);
        }
        if (report->parsed()) {
            return cmd_report(r_original, r_wicked, r_out);
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace wicked
