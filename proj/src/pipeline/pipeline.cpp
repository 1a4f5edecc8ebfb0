#include "qzlora/pipeline/pipeline.hpp"

#include "qzlora/corpus/store.hpp"
#include "qzlora/error.hpp"
#include "qzlora/gen/prompts.hpp"
#include "qzlora/providers/openai.hpp"
#include "qzlora/quiz/generate.hpp"
#include "qzlora/scoring/scorer.hpp"
#include "qzlora/stats/stats.hpp"
#include "qzlora/train/train.hpp"

#include <algorithm>
#include <atomic>
#include <set>
#include <thread>

namespace qzlora::pipeline {

using nlohmann::json;
using selection::Condition;
using selection::ConditionKind;

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Ingest: return "ingest";
    case Stage::Quiz: return "quiz";
    case Stage::Score: return "score";
    case Stage::Select: return "select";
    case Stage::Manifest: return "manifest";
    case Stage::Train: return "train";
    case Stage::Generate: return "generate";
    case Stage::Evaluate: return "evaluate";
    case Stage::Report: return "report";
  }
  return "ingest";
}

std::optional<Stage> parse_stage(std::string_view text) {
  for (Stage s : kStageOrder) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

namespace {

struct Unit {
  std::string key;
  std::string topic;
  std::optional<Condition> condition;
  std::string group;  // selection key for manifest and train units
  std::vector<std::string> deps;
};

struct UnitResult {
  std::vector<fs::path> outputs;
  std::map<std::string, std::string> info;
  std::vector<std::string> dry_run_lines;
};

std::vector<scoring::SubjectRef> subject_refs(const std::vector<std::pair<std::string, fs::path>>& items) {
  std::vector<scoring::SubjectRef> refs;
  for (const auto& [id, path] : items) refs.push_back({id, path, std::nullopt});
  return refs;
}

std::vector<scoring::ScoreRecord> require_all(const std::vector<scoring::BatchEntry>& entries) {
  std::vector<scoring::ScoreRecord> records;
  std::size_t failed = 0;
  std::string first;
  for (const auto& e : entries) {
    if (e.record) {
      records.push_back(*e.record);
    } else if (failed++ == 0) {
      first = e.subject_id + ": " + e.error_message;
    }
  }
  if (failed) {
    throw Error(ErrorCode::ProviderFailure,
                std::to_string(failed) + " of " + std::to_string(entries.size()) + " subjects failed; first " + first);
  }
  return records;
}

}  // namespace

struct Pipeline::Impl {
  Impl(const PipelineConfig& c, RunState& s, Services services, Logger logger)
      : cfg(c),
        state(s),
        log(std::move(logger)),
        registry(c.registry),
        corpus(c.work / "corpus"),
        quizzes(c.work / "quizzes"),
        scores(c.work / "scores"),
        selections(c.work / "selections"),
        generated(c.work / "generated"),
        clock(c.deterministic_clock ? Clock::fixed() : Clock::system()),
        retry{c.retry_attempts, std::chrono::milliseconds{c.retry_backoff_ms}} {
    try {
      prompt_templates = gen::TemplateSet::load(c.prompts);
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigError, e.what());
    }
    if (!c.templates.empty() && fs::exists(c.templates / "quiz_system.txt")) {
      quiz_templates = quiz::QuizPromptTemplates::load(c.templates);
    }
    if (!c.templates.empty() && fs::exists(c.templates / "vlm_system.txt")) {
      vision_templates = scoring::VisionPromptTemplates::load(c.templates);
    }

    source = services.source;
    if (!source) {
      if (c.ingest_source == "local") {
        source = std::make_shared<corpus::LocalDirectorySource>(c.source);
      } else {
        corpus::CommonsSource::Options options;
        options.retry = retry;
        source = std::make_shared<corpus::CommonsSource>(options);
      }
    }

    text = services.text;
    if (!text) {
      if (c.text.kind == "mock") {
        text = std::make_shared<providers::MockTextProvider>(c.text.fixtures);
      } else if (c.text.kind == "replay") {
        text = std::make_shared<providers::ReplayTextProvider>(providers::CallLog(c.text.fixtures));
      } else {
        text = std::make_shared<providers::ChatCompletionsTextProvider>(
            providers::ChatEndpoint{c.text.endpoint, c.text.api_key});
      }
    }
    vision = services.vision;
    if (!vision) {
      if (c.vision.kind == "mock") {
        vision = std::make_shared<providers::HashVisionProvider>();
      } else if (c.vision.kind == "replay") {
        vision = std::make_shared<providers::ReplayVisionProvider>(providers::CallLog(c.vision.fixtures));
      } else {
        vision = std::make_shared<providers::ChatCompletionsVisionProvider>(
            providers::ChatEndpoint{c.vision.endpoint, c.vision.api_key});
      }
    }
    if (c.record_calls) {
      call_log = std::make_unique<providers::CallLog>(c.work / "calls" / "calls.jsonl");
      // The recording wrappers hold references to the inner providers.
      inner_text = text;
      inner_vision = vision;
      text = std::make_shared<providers::RecordingTextProvider>(*inner_text, *call_log);
      vision = std::make_shared<providers::RecordingVisionProvider>(*inner_vision, *call_log);
    }

    backend = services.backend;
    if (!backend) {
      if (c.backend_kind == "stub") {
        backend = std::make_shared<gen::StubImageBackend>(c.backend_model_tag, c.stub_size);
      } else {
        backend = std::make_shared<gen::HttpImageBackend>(c.backend_endpoint, c.backend_model_tag, retry);
      }
    }
  }

  void note(const std::string& line) const {
    if (log) log(line);
  }

  // --- lookups -------------------------------------------------------------

  std::string quiz_id(const std::string& topic) const {
    const auto u = state.get(unit_key("quiz", topic));
    if (!u || !u->info.count("quiz_id")) throw Error(ErrorCode::UpstreamIncomplete, "no quiz for " + topic);
    return u->info.at("quiz_id");
  }

  fs::path ranking_path(const std::string& topic) const { return cfg.work / "rankings" / (topic + ".json"); }

  std::vector<selection::RankedSubject> load_ranking(const std::string& topic, std::string* quiz = nullptr) const {
    const json j = read_json(ranking_path(topic));
    if (quiz) *quiz = j.at("quiz_id").get<std::string>();
    std::vector<selection::RankedSubject> out;
    for (const auto& r : j.at("ranking")) {
      out.push_back({r.at("subject_id").get<std::string>(), r.at("accuracy").get<double>()});
    }
    return out;
  }

  fs::path dataset_root(const std::string& topic, const std::string& key) const {
    return cfg.work / "datasets" / topic / key;
  }
  fs::path manifest_path(const std::string& topic, const std::string& key) const {
    return cfg.work / "manifests" / topic / (key + ".manifest");
  }
  fs::path model_path(const std::string& topic, const std::string& key) const {
    return cfg.work / "models" / topic / (key + ".safetensors");
  }
  fs::path evaluation_path(const std::string& topic, const Condition& c) const {
    return cfg.work / "evaluations" / topic / (c.file_stem() + ".json");
  }

  scoring::ScoreOptions score_options() {
    scoring::ScoreOptions o;
    o.model_id = cfg.vision.model_id;
    o.templates = vision_templates;
    o.retry = retry;
    o.clock = clock;
    o.store = &scores;
    return o;
  }

  // --- stages --------------------------------------------------------------

  UnitResult ingest(const Unit& u) {
    const corpus::Topic topic = registry.get(u.topic);
    corpus::FetchOptions options;
    options.cap = cfg.ingest_cap;
    options.parallelism = cfg.ingest_parallelism;
    options.min_width = cfg.min_width;
    options.min_height = cfg.min_height;
    options.retry = retry;
    const corpus::FetchResult fetched = corpus.fetch_candidates(topic, *source, options);
    const corpus::EligibilityVerdict verdict = corpus::check_eligibility(topic, fetched.available_count);
    std::string reasons;
    for (auto r : verdict.reasons) reasons += (reasons.empty() ? "" : ",") + std::string(corpus::to_string(r));
    if (!verdict.eligible() && cfg.enforce_eligibility) {
      throw Error(ErrorCode::InvalidTopic, u.topic + " is not eligible (" + reasons + ")");
    }
    UnitResult r;
    r.outputs.push_back(corpus.manifest_path(u.topic));
    for (const auto& image : fetched.images) {
      r.outputs.push_back(corpus.image_path(image));
      r.outputs.push_back(corpus.topic_dir(u.topic) / image.caption_file_name());
    }
    r.info = {{"available_count", std::to_string(fetched.available_count)},
              {"stored", std::to_string(fetched.images.size())},
              {"eligible", verdict.eligible() ? "true" : "false"}};
    if (!reasons.empty()) r.info["ineligible_reasons"] = reasons;
    return r;
  }

  UnitResult make_quiz(const Unit& u) {
    const corpus::Topic topic = registry.get(u.topic);
    std::vector<std::pair<std::string, std::string>> distractors;
    for (const auto& id : topic.distractor_ids) distractors.emplace_back(id, registry.get(id).summary_sentence);
    quiz::QuizGenOptions options;
    options.model_id = cfg.text.model_id;
    options.templates = quiz_templates;
    options.retry = retry;
    options.clock = clock;
    options.store = &quizzes;
    const quiz::Quiz q = quiz::generate_quiz(topic, distractors, cfg.question_count, *text, options);
    return {{quizzes.path_for(u.topic, q.quiz_id)}, {{"quiz_id", q.quiz_id}}, {}};
  }

  UnitResult score(const Unit& u) {
    const quiz::Quiz q = quizzes.load(u.topic, quiz_id(u.topic));
    std::vector<std::pair<std::string, fs::path>> items;
    for (const auto& image : corpus.load_corpus(u.topic)) {
      if (!image.corrupt) items.emplace_back(image.image_id, corpus.image_path(image));
    }
    const auto records =
        require_all(scoring::score_batch(subject_refs(items), q, *vision, score_options(), cfg.parallelism));
    const auto ranking = selection::rank(records);
    json list = json::array();
    for (const auto& r : ranking) list.push_back({{"subject_id", r.subject_id}, {"accuracy", r.accuracy}});
    atomic_write(ranking_path(u.topic), pretty_json({{"topic_id", u.topic},
                                                     {"quiz_id", q.quiz_id},
                                                     {"vlm_model_id", cfg.vision.model_id},
                                                     {"ranking", list}}));
    UnitResult r;
    r.outputs.push_back(ranking_path(u.topic));
    for (const auto& record : records) r.outputs.push_back(scores.path_for(q.quiz_id, record.subject_hash));
    return r;
  }

  UnitResult select(const Unit& u) {
    const Condition& c = *u.condition;
    selection::SelectionSet s;
    if (c.is_top()) {
      std::string quiz;
      s = selection::select_top_k(load_ranking(u.topic, &quiz), c.k);
      s.source_quiz_id = quiz;
    } else {
      s = selection::select_random_k(corpus.load_corpus(u.topic), c.k,
                                     selection::derive_selection_seed(cfg.seed, u.topic, c.selection_key()));
    }
    s.topic_id = u.topic;
    s.condition = c;
    return {{selections.save(s)},
            {{"size", std::to_string(s.image_ids.size())}, {"short", s.short_set ? "true" : "false"}},
            {}};
  }

  UnitResult manifest(const Unit& u) {
    const selection::SelectionSet s = selections.load(u.topic, *u.condition);
    const corpus::Topic topic = registry.get(u.topic);
    const auto& overrides = cfg.manifest_overrides;
    train::DatasetOptions dataset;
    dataset.num_repeats = overrides.num_repeats.value_or(dataset.num_repeats);
    dataset.instance_token = overrides.instance_token.value_or("");
    const fs::path root = dataset_root(u.topic, u.group);
    const fs::path image_dir = train::emit_dataset(s, corpus, topic, root, dataset);
    const train::TrainingManifest m = train::emit_manifest(s, root, model_path(u.topic, u.group), overrides);
    atomic_write(manifest_path(u.topic, u.group), train::serialize_manifest(m));
    UnitResult r;
    r.outputs.push_back(manifest_path(u.topic, u.group));
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(image_dir)) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    r.outputs.insert(r.outputs.end(), files.begin(), files.end());
    return r;
  }

  UnitResult train_lora(const Unit& u, bool dry_run) {
    const fs::path path = manifest_path(u.topic, u.group);
    const train::TrainingManifest m = train::parse_manifest(read_file(path));
    const fs::path log_path = cfg.work / "runs" / u.topic / (u.group + ".log");
    const train::TrainerResult result = train::invoke_trainer(m, path, cfg.trainer_command, log_path, dry_run);
    UnitResult r;
    if (dry_run) {
      r.dry_run_lines.push_back(result.command);
      return r;
    }
    note("[train] " + u.topic + "/" + u.group + " finished in " + std::to_string(result.wall_time_seconds) + " s");
    r.outputs.push_back(m.output_model_path);
    return r;
  }

  UnitResult generate(const Unit& u, bool dry_run) {
    const Condition& c = *u.condition;
    const corpus::Topic topic = registry.get(u.topic);
    const gen::PromptPair prompts = gen::build_prompts(topic, c.style, prompt_templates);
    gen::GenerateOptions options;
    options.n = cfg.samples;
    options.steps = cfg.steps;
    options.cfg = cfg.cfg;
    options.width = cfg.width;
    options.height = cfg.height;
    options.lora_weight = cfg.lora_weight;
    if (c.uses_lora()) options.lora_model_path = model_path(u.topic, c.selection_key());
    options.store = &generated;
    UnitResult r;
    if (dry_run) {
      for (int i = 0; i < options.n; ++i) {
        r.dry_run_lines.push_back(c.label() + " sample " + std::to_string(i) + " seed " +
                                  std::to_string(gen::derive_generation_seed(u.topic, c.label(), i)) +
                                  (c.uses_lora() ? " lora " + options.lora_model_path->string() : ""));
      }
      r.dry_run_lines.push_back("positive: " + prompts.positive);
      r.dry_run_lines.push_back("negative: " + prompts.negative);
      return r;
    }
    const auto images = gen::generate_samples(topic, c, prompts, *backend, options);
    r.outputs.push_back(generated.records_path(u.topic, c));
    for (const auto& g : images) r.outputs.push_back(generated.image_path(g));
    return r;
  }

  UnitResult evaluate(const Unit& u) {
    const Condition& c = *u.condition;
    const quiz::Quiz q = quizzes.load(u.topic, quiz_id(u.topic));
    std::vector<std::pair<std::string, fs::path>> items;
    std::optional<selection::SelectionSet> chosen;
    if (c.kind != ConditionKind::NoLoRA) chosen = selections.load(u.topic, c);
    if (c.is_generated()) {
      for (const auto& g : generated.load_records(u.topic, c)) items.emplace_back(g.gen_id, generated.image_path(g));
    } else {
      std::map<std::string, corpus::CandidateImage> by_id;
      for (auto& image : corpus.load_corpus(u.topic)) by_id[image.image_id] = image;
      for (const auto& id : chosen->image_ids) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) throw Error(ErrorCode::MissingImage, id);
        items.emplace_back(id, corpus.image_path(it->second));
      }
    }
    const auto records =
        require_all(scoring::score_batch(subject_refs(items), q, *vision, score_options(), cfg.parallelism));

    EvaluationRecord e;
    e.topic_id = u.topic;
    e.condition = c.label();
    e.quiz_id = q.quiz_id;
    for (const auto& record : records) e.samples.emplace_back(record.subject_id, record.accuracy);
    e.mean_accuracy = stats::mean(e.per_sample_accuracies());
    if (chosen) {
      std::map<std::string, double> ranked;
      for (const auto& r : load_ranking(u.topic)) ranked[r.subject_id] = r.accuracy;
      std::vector<double> inputs;
      for (const auto& id : chosen->image_ids) {
        if (auto it = ranked.find(id); it != ranked.end()) inputs.push_back(it->second);
      }
      if (!inputs.empty()) e.input_mean_accuracy = stats::mean(inputs);
    }
    atomic_write(evaluation_path(u.topic, c), pretty_json(to_json(e)));
    return {{evaluation_path(u.topic, c)}, {}, {}};
  }

  UnitResult report(const std::vector<std::string>& topics, const std::vector<std::string>& sweep,
                    const std::function<std::vector<Condition>(const std::string&)>& conditions_for) {
    ReportInputs in;
    in.topics = topics;
    in.conditions = cfg.conditions;
    in.ks = cfg.ks;
    in.seed = cfg.seed;
    for (const auto& t : sweep) {
      if (std::find(topics.begin(), topics.end(), t) != topics.end()) in.sweep_topics.push_back(t);
    }
    for (const auto& t : topics) {
      for (const auto& c : conditions_for(t)) {
        in.evaluations[t][c.label()] = evaluation_from_json(read_json(evaluation_path(t, c)));
      }
      in.available_counts[t] = corpus.available_count(t);
    }
    return {write_report(cfg.work / "report", in), {}, {}};
  }

  const PipelineConfig& cfg;
  RunState& state;
  Logger log;
  corpus::TopicRegistry registry;
  corpus::CorpusStore corpus;
  quiz::QuizStore quizzes;
  scoring::ScoreStore scores;
  selection::SelectionStore selections;
  gen::GenerationStore generated;
  Clock clock;
  RetryPolicy retry;
  gen::TemplateSet prompt_templates;
  quiz::QuizPromptTemplates quiz_templates = quiz::QuizPromptTemplates::defaults();
  scoring::VisionPromptTemplates vision_templates = scoring::VisionPromptTemplates::defaults();
  std::shared_ptr<corpus::ImageSource> source;
  std::unique_ptr<providers::CallLog> call_log;
  std::shared_ptr<providers::TextCompletionProvider> inner_text;
  std::shared_ptr<providers::VisionProvider> inner_vision;
  std::shared_ptr<providers::TextCompletionProvider> text;
  std::shared_ptr<providers::VisionProvider> vision;
  std::shared_ptr<gen::ImageBackend> backend;
};

Pipeline::Pipeline(PipelineConfig config, Services services, Logger log) : config_(std::move(config)) {
  config_.validate();
  state_ = std::make_unique<RunState>(config_.work / "state" / "run_state.json", config_.work,
                                      config_.fingerprint().substr(0, 16));
  impl_ = std::make_unique<Impl>(config_, *state_, std::move(services), std::move(log));
}

Pipeline::~Pipeline() = default;

std::vector<std::string> Pipeline::all_topics() const {
  if (!config_.topics.empty()) return config_.topics;
  std::vector<std::string> ids;
  for (const auto& t : impl_->registry.all()) ids.push_back(t.topic_id);
  return ids;
}

std::vector<std::string> Pipeline::scoped_topics(const RunOptions& options) const {
  const std::vector<std::string> all = all_topics();
  if (options.topics.empty()) return all;
  for (const auto& t : options.topics) {
    if (std::find(all.begin(), all.end(), t) == all.end()) {
      throw Error(ErrorCode::ConfigError, "topic " + t + " is not configured");
    }
  }
  std::vector<std::string> out;
  for (const auto& t : all) {
    if (std::find(options.topics.begin(), options.topics.end(), t) != options.topics.end()) out.push_back(t);
  }
  return out;
}

std::vector<std::string> Pipeline::sweep_topics() const {
  return stats::sample_topics(all_topics(), config_.sweep_topics, config_.seed);
}

std::vector<Condition> Pipeline::conditions_for(const std::string& topic_id) const {
  std::vector<Condition> out = config_.conditions;
  const auto sweep = sweep_topics();
  if (std::find(sweep.begin(), sweep.end(), topic_id) != sweep.end()) {
    for (int k : config_.ks) {
      const Condition c = Condition::make(ConditionKind::QZLoRATopK, k, selection::Style::Realistic);
      if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    }
  }
  return out;
}

StageReport Pipeline::run_stage(Stage stage, const RunOptions& options) {
  const std::vector<std::string> topics = scoped_topics(options);
  std::vector<Unit> units;
  const std::string name(to_string(stage));

  for (const auto& t : topics) {
    const auto conditions = conditions_for(t);
    auto condition_units = [&](auto&& wanted, auto&& deps) {
      for (const auto& c : conditions) {
        if (wanted(c)) units.push_back({unit_key(name, t, c.label()), t, c, "", deps(c)});
      }
    };
    switch (stage) {
      case Stage::Ingest:
        units.push_back({unit_key(name, t), t, std::nullopt, "", {}});
        break;
      case Stage::Quiz:
        units.push_back({unit_key(name, t), t, std::nullopt, "", {unit_key("ingest", t)}});
        break;
      case Stage::Score:
        units.push_back({unit_key(name, t), t, std::nullopt, "", {unit_key("quiz", t)}});
        break;
      case Stage::Select:
        condition_units([](const Condition& c) { return c.kind != ConditionKind::NoLoRA; },
                        [&](const Condition&) { return std::vector<std::string>{unit_key("score", t)}; });
        break;
      case Stage::Manifest:
      case Stage::Train: {
        std::set<std::string> seen;
        for (const auto& c : conditions) {
          if (!c.uses_lora() || !seen.insert(c.selection_key()).second) continue;
          const std::string dep = stage == Stage::Manifest ? unit_key("select", t, c.label())
                                                           : unit_key("manifest", t, c.selection_key());
          units.push_back({unit_key(name, t, c.selection_key()), t, c, c.selection_key(), {dep}});
        }
        break;
      }
      case Stage::Generate:
        condition_units([](const Condition& c) { return c.is_generated(); },
                        [&](const Condition& c) {
                          return std::vector<std::string>{c.uses_lora() ? unit_key("train", t, c.selection_key())
                                                                        : unit_key("score", t)};
                        });
        break;
      case Stage::Evaluate:
        condition_units([](const Condition&) { return true; },
                        [&](const Condition& c) {
                          return std::vector<std::string>{c.is_generated() ? unit_key("generate", t, c.label())
                                                                           : unit_key("select", t, c.label())};
                        });
        break;
      case Stage::Report:
        break;
    }
  }
  if (stage == Stage::Report) {
    std::vector<std::string> deps;
    for (const auto& t : topics) {
      deps.push_back(unit_key("ingest", t));
      for (const auto& c : conditions_for(t)) deps.push_back(unit_key("evaluate", t, c.label()));
    }
    std::string scope = "-";
    if (!options.topics.empty()) {
      scope.clear();
      for (const auto& t : topics) scope += (scope.empty() ? "" : "+") + t;
    }
    units.push_back({unit_key(name, scope), scope, std::nullopt, "", deps});
  }

  std::vector<std::string> missing;
  std::set<std::string> checked;
  for (const auto& u : units) {
    for (const auto& d : u.deps) {
      if (checked.insert(d).second && !state_->is_done(d)) missing.push_back(d);
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 5; ++i) list += (i ? ", " : "") + missing[i];
    if (missing.size() > 5) list += ", ...";
    throw Error(ErrorCode::UpstreamIncomplete, name + " needs " + list);
  }

  const bool dry_run = options.dry_run && (stage == Stage::Train || stage == Stage::Generate);
  StageReport report;
  report.stage = stage;
  std::vector<const Unit*> pending;
  for (const auto& u : units) {
    if (state_->is_done(u.key)) {
      ++report.skipped;
    } else {
      pending.push_back(&u);
    }
  }

  std::vector<std::optional<UnitFailure>> failures(pending.size());
  std::vector<std::vector<std::string>> dry_lines(pending.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < pending.size();) {
      const Unit& u = *pending[i];
      try {
        UnitResult r;
        switch (stage) {
          case Stage::Ingest: r = impl_->ingest(u); break;
          case Stage::Quiz: r = impl_->make_quiz(u); break;
          case Stage::Score: r = impl_->score(u); break;
          case Stage::Select: r = impl_->select(u); break;
          case Stage::Manifest: r = impl_->manifest(u); break;
          case Stage::Train: r = impl_->train_lora(u, dry_run); break;
          case Stage::Generate: r = impl_->generate(u, dry_run); break;
          case Stage::Evaluate: r = impl_->evaluate(u); break;
          case Stage::Report:
            r = impl_->report(topics, sweep_topics(), [this](const std::string& t) { return conditions_for(t); });
            break;
        }
        if (dry_run) {
          dry_lines[i] = std::move(r.dry_run_lines);
        } else {
          state_->mark_done(u.key, r.outputs, std::move(r.info));
          impl_->note("[" + name + "] " + u.key + " done");
        }
      } catch (const std::exception& e) {
        state_->mark_failed(u.key, e.what());
        failures[i] = UnitFailure{u.key, e.what()};
        impl_->note("[" + name + "] " + u.key + " failed: " + e.what());
      }
    }
  };
  std::size_t threads = std::min(config_.parallelism, std::max<std::size_t>(pending.size(), 1));
  if (stage == Stage::Train) threads = std::min(threads, config_.trainer_jobs);
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  for (std::size_t i = 0; i < pending.size(); ++i) {
    if (failures[i]) report.failures.push_back(*failures[i]);
    for (auto& line : dry_lines[i]) report.dry_run_lines.push_back(std::move(line));
  }
  report.executed = pending.size();
  return report;
}

std::vector<StageReport> Pipeline::run_all(const RunOptions& options) {
  std::vector<StageReport> reports;
  for (Stage stage : kStageOrder) {
    reports.push_back(run_stage(stage, options));
    if (!reports.back().ok()) break;
    if (options.dry_run && stage == Stage::Train) break;
  }
  return reports;
}

}  // namespace qzlora::pipeline
