// Copyright 2026 The svdfkws Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "kws/audio_io.hpp"
#include "kws/evaluation.hpp"
#include "kws/model_io.hpp"
#include "kws/synth.hpp"
#include "kws/topology.hpp"
#include "kws/training.hpp"

namespace kws::cli {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

void require_file(const std::string& path, const char* what) {
  if (!fs::is_regular_file(path)) throw DataError(std::string(what) + " '" + path + "' does not exist");
}

void require_output(const std::string& path) {
  if (path.empty() || path == "-") return;
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty() && !fs::is_directory(parent))
    throw DataError("output directory '" + parent.string() + "' does not exist");
}

// Writes to `path`, or to `fallback` when the path is empty or "-".
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback, bool binary = false) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_.open(path, binary ? std::ios::binary : std::ios::out);
    if (!file_) throw DataError("cannot write '" + path + "'");
    stream_ = &file_;
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::ofstream file_;
  std::ostream* stream_ = nullptr;
};

void echo(std::ostream& err, const std::string& command, const std::vector<std::pair<std::string, std::string>>& kv) {
  err << "# kws " << command << " effective config\n";
  for (const auto& [k, v] : kv) err << "#   " << k << " = " << v << "\n";
}

template <typename T>
std::string str(const T& v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

std::vector<float> load_input_audio(const std::string& wav, bool pcm, std::istream& in) {
  if (pcm) return read_pcm16(in);
  return read_wav(wav);
}

std::vector<FeatureFrame> frames_of(const ManifestEntry& e) {
  std::vector<FeatureFrame> frames =
      e.feature_path.empty() ? stream_frames(read_wav(e.audio_path)) : read_features(e.feature_path);
  if (static_cast<int>(frames.size()) != e.alignment.num_frames)
    throw DataError(e.alignment.id + ": manifest says " + std::to_string(e.alignment.num_frames) +
                    " frames, audio has " + std::to_string(frames.size()));
  return frames;
}

void check_manifest_paths(const std::vector<ManifestEntry>& entries) {
  for (const auto& e : entries) {
    if (!e.feature_path.empty())
      require_file(e.feature_path, "feature file");
    else
      require_file(e.audio_path, "audio file");
  }
}

// ---------------------------------------------------------------- features

int cmd_features(const std::string& wav, bool pcm, const std::string& format, const std::string& out_path,
                 std::istream& in, std::ostream& out, std::ostream& err) {
  if (wav.empty() == !pcm) throw InvalidArgument("give exactly one of --wav or --pcm");
  if (!pcm) require_file(wav, "input");
  require_output(out_path);
  echo(err, "features", {{"input", pcm ? "stdin (raw PCM16)" : wav}, {"format", format}, {"out", out_path.empty() ? "stdout" : out_path}});
  const auto frames = stream_frames(load_input_audio(wav, pcm, in));
  Sink sink(out_path, out, format == "bin");
  write_features(*sink, frames, format == "csv" ? FeatureFormat::kCsv : FeatureFormat::kBinary);
  err << "# " << frames.size() << " frames\n";
  return 0;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::uint64_t seed = 1;
  int positives = 100;
  int negatives = 100;
  double noise = 0.02;
  double neg_hours = 0.0;
  std::int64_t piece_ms = 60000;
  std::string out_dir;
};

int cmd_synth(const SynthArgs& a, std::ostream& out, std::ostream& err) {
  if (!fs::is_directory(a.out_dir)) throw DataError("output directory '" + a.out_dir + "' does not exist");
  echo(err, "synth", {{"seed", str(a.seed)}, {"positives", str(a.positives)}, {"negatives", str(a.negatives)},
                      {"noise", str(a.noise)}, {"neg_hours", str(a.neg_hours)}, {"piece_ms", str(a.piece_ms)},
                      {"out", a.out_dir}});
  const KeywordSpec spec = KeywordSpec::ok_google();
  auto utts = gen_synthetic_dataset(a.seed, a.positives, a.negatives, spec, a.noise).utterances;
  if (a.neg_hours > 0.0) {
    auto streams = gen_negative_streams(a.seed, a.neg_hours, spec, a.noise, a.piece_ms);
    utts.insert(utts.end(), streams.begin(), streams.end());
  }
  fs::create_directories(fs::path(a.out_dir) / "audio");
  for (const auto& u : utts) write_wav((fs::path(a.out_dir) / "audio" / (u.id + ".wav")).string(), u.render());
  const std::string manifest = manifest_jsonl(utts, spec, "audio");
  const std::string manifest_path = (fs::path(a.out_dir) / "manifest.jsonl").string();
  std::ofstream(manifest_path) << manifest;
  out << json{{"manifest", manifest_path}, {"utterances", utts.size()}}.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string config;
  std::string manifest;
  std::string out_path;
  std::string train_config;
  int extra_positives = -1;
  int encoder_epochs = -1;
  // Optional overrides; set only when the flag was given.
  std::optional<std::string> recipe, encoder_init, checkpoint_path;
  std::optional<double> lr, momentum, adaptation_rate, clip_norm, target_loss;
  std::optional<int> epochs, batch_size, truncation, checkpoint_every;
  std::optional<std::uint64_t> seed;
  bool freeze_encoder = false;
};

std::vector<LabeledSequence> build_sequences(const std::vector<ManifestEntry>& entries,
                                             const std::vector<std::vector<FeatureFrame>>& frames,
                                             const ContextConfig& ctx, const KeywordSpec& spec, bool binary,
                                             int extra) {
  std::vector<LabeledSequence> out;
  out.reserve(entries.size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& a = entries[i].alignment;
    const auto labels = binary ? generate_e2e_labels(a, spec, extra) : generate_encoder_labels(a, spec);
    out.push_back(make_labeled_sequence(a.id, frames[i], labels, ctx));
  }
  return out;
}

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  require_file(a.manifest, "manifest");
  require_output(a.out_path);
  if (!a.train_config.empty()) require_file(a.train_config, "train config");
  if (a.encoder_init) require_file(*a.encoder_init, "encoder init model");

  const ModelConfig config = load_config(a.config);
  TrainConfig tc;
  if (!a.train_config.empty()) {
    std::ifstream f(a.train_config);
    std::stringstream buf;
    buf << f.rdbuf();
    tc = parse_train_config(buf.str(), tc);
  }
  if (a.recipe) tc.recipe = parse_recipe(*a.recipe);
  if (a.encoder_init) tc.encoder_init = *a.encoder_init;
  if (a.checkpoint_path) tc.checkpoint_path = *a.checkpoint_path;
  if (a.lr) tc.learning_rate = *a.lr;
  if (a.momentum) tc.momentum = *a.momentum;
  if (a.adaptation_rate) tc.adaptation_rate = *a.adaptation_rate;
  if (a.clip_norm) tc.clip_norm = *a.clip_norm;
  if (a.target_loss) tc.target_loss = *a.target_loss;
  if (a.epochs) tc.epochs = *a.epochs;
  if (a.batch_size) tc.batch_size = *a.batch_size;
  if (a.truncation) tc.truncation = *a.truncation;
  if (a.checkpoint_every) tc.checkpoint_every = *a.checkpoint_every;
  if (a.seed) tc.seed = *a.seed;
  if (a.freeze_encoder) tc.freeze_encoder = true;
  tc.validate();

  const KeywordSpec spec = KeywordSpec::ok_google();
  const auto entries = read_manifest(a.manifest);
  if (entries.empty()) throw DataError("manifest '" + a.manifest + "' is empty");
  check_manifest_paths(entries);

  std::vector<AlignedUtterance> alignments;
  for (const auto& e : entries) alignments.push_back(e.alignment);
  const int extra = a.extra_positives >= 0 ? a.extra_positives
                                           : choose_extra_positives(alignments, spec, config.context);

  {
    std::vector<std::pair<std::string, std::string>> kv = {
        {"model_config", config.name}, {"manifest", a.manifest}, {"out", a.out_path},
        {"extra_positives", str(extra)}};
    if (tc.recipe == Recipe::kTwoStage)
      kv.emplace_back("encoder_epochs", str(a.encoder_epochs >= 0 ? a.encoder_epochs : tc.epochs));
    std::istringstream lines(to_text(tc));
    for (std::string line; std::getline(lines, line);) {
      const auto eq = line.find(" = ");
      kv.emplace_back(line.substr(0, eq), line.substr(eq + 3));
    }
    echo(err, "train", kv);
  }

  std::vector<std::vector<FeatureFrame>> frames;
  frames.reserve(entries.size());
  for (const auto& e : entries) frames.push_back(frames_of(e));

  auto progress = [&](int epoch, double loss) { err << "epoch " << epoch << " loss " << loss << "\n"; };
  json report;
  Model<float> model(config);
  if (tc.recipe == Recipe::kTwoStage) {
    if (config.encoder_boundary <= 0) throw ConfigError("two_stage training needs an encoder boundary");
    const ModelConfig enc = encoder_config(config, spec.num_classes);
    const ModelConfig dec = decoder_config(config, spec.num_classes);
    TrainConfig stage1 = tc;
    if (a.encoder_epochs >= 0) stage1.epochs = a.encoder_epochs;
    const auto enc_data = build_sequences(entries, frames, config.context, spec, false, extra);
    const auto dec_data = build_sequences(entries, frames, config.context, spec, true, extra);
    auto result = train_two_stage(enc, dec, enc_data, dec_data, stage1, tc, progress);
    model = std::move(result.model);
    report["encoder"] = {{"final_loss", result.encoder_report.final_loss},
                         {"epochs_run", result.encoder_report.epochs_run}};
    report["final_loss"] = result.decoder_report.final_loss;
    report["epochs_run"] = result.decoder_report.epochs_run;
    report["wall_seconds"] = result.encoder_report.wall_seconds + result.decoder_report.wall_seconds;
  } else {
    model = Model<float>::initialized(config, tc.seed);
    const bool binary = model.num_classes() == 2;
    const auto data = build_sequences(entries, frames, config.context, spec, binary, extra);
    const TrainReport r = train(model, data, tc, progress);
    report["final_loss"] = r.final_loss;
    report["epochs_run"] = r.epochs_run;
    report["wall_seconds"] = r.wall_seconds;
  }
  save_model(model, a.out_path);
  report["model"] = a.out_path;
  report["checksum"] = parameter_checksum(model);
  report["extra_positives"] = extra;
  out << report.dump() << "\n";
  return 0;
}

// ---------------------------------------------------------------- stream

// Two-class models score end to end; others by smoothed keyword posteriors.
std::unique_ptr<KeywordDetector> make_detector(const std::string& path) {
  auto model = std::make_shared<const Model<float>>(load_model(path));
  DetectorOptions options;
  if (model->num_classes() != 2) {
    const KeywordSpec spec = KeywordSpec::ok_google();
    if (model->num_classes() != spec.num_classes)
      throw InvalidArgument(path + ": expected 2 or " + std::to_string(spec.num_classes) + " output classes");
    options.keyword_classes = spec.keyword_class_sequence();
  }
  return std::make_unique<KeywordDetector>(std::move(model), std::move(options));
}

struct StreamArgs {
  std::string model;
  double threshold = 0.5;
  std::string wav;
  bool pcm = false;
  double suppression_ms = 1000.0;
  std::string events;
  std::string out_path;
  std::size_t chunk = 1600;
};

int cmd_stream(const StreamArgs& a, std::istream& in, std::ostream& out, std::ostream& err) {
  if (a.wav.empty() == !a.pcm) throw InvalidArgument("give exactly one of --wav or --pcm");
  if (!(a.threshold > 0.0 && a.threshold < 1.0)) throw InvalidArgument("--threshold must be in (0, 1)");
  require_file(a.model, "model");
  if (!a.pcm) require_file(a.wav, "input");
  require_output(a.events);
  require_output(a.out_path);
  echo(err, "stream", {{"model", a.model}, {"threshold", str(a.threshold)}, {"input", a.pcm ? "stdin" : a.wav},
                       {"suppression_ms", str(a.suppression_ms)}, {"chunk_samples", str(a.chunk)},
                       {"events", a.events.empty() ? "stderr" : a.events}});
  auto detector = make_detector(a.model);
  const auto pcm = load_input_audio(a.wav, a.pcm, in);
  const StreamResult result = detect_stream(*detector, pcm, a.threshold, a.suppression_ms, a.chunk);
  Sink scores(a.out_path, out);
  (*scores).precision(9);
  *scores << "timestamp_ms,score\n";
  for (const auto& p : result.scores) *scores << p.timestamp_ms << ',' << p.score << '\n';
  Sink events(a.events, err);
  for (const auto& e : result.events)
    *events << json{{"trigger_timestamp_ms", e.trigger_timestamp_ms}, {"peak_score", e.peak_score},
                    {"threshold", e.threshold}}
                   .dump()
            << '\n';
  return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> models;
  std::vector<std::string> scores;
  std::vector<std::string> save_scores;
  std::string manifest;
  std::uint64_t seed = 1;
  int positives = 0;
  double neg_hours = 0.0;
  double noise = 0.02;
  double target_fa = 0.1;
  double min_neg_hours = 10.0;
  double suppression_ms = 1000.0;
  int thresholds = 1001;
  int jobs = 1;
  std::string out_path;
  std::string roc_csv_path;
};

EvalSet eval_set_from_manifest(const std::string& path, const KeywordSpec& spec) {
  const auto entries = read_manifest(path);
  check_manifest_paths(entries);
  EvalSet set;
  for (const auto& e : entries) {
    EvalUtterance u;
    u.id = e.alignment.id;
    u.is_keyword = e.alignment.is_keyword;
    u.duration_ms = e.alignment.num_frames > 0 ? (e.alignment.num_frames - 1) * kHopMs + kWindowMs : 0;
    u.keyword_end_ms = e.keyword_end_ms >= 0 ? e.keyword_end_ms : keyword_end_ms(e.alignment, spec);
    if (u.is_keyword && u.keyword_end_ms < 0)
      throw DataError(u.id + ": keyword utterance without a '" + spec.last_component() + "' segment");
    if (!e.feature_path.empty()) {
      u.load_frames = [e] { return frames_of(e); };
    } else {
      u.load_audio = [p = e.audio_path] { return read_wav(p); };
    }
    set.utterances.push_back(std::move(u));
  }
  return set;
}

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  if (a.models.empty() == a.scores.empty()) throw InvalidArgument("give --model or --scores (not both)");
  if (!a.save_scores.empty() && a.save_scores.size() != a.models.size())
    throw InvalidArgument("--save-scores needs one path per --model");
  const bool synth = a.positives > 0 || a.neg_hours > 0.0;
  if (!a.models.empty() && a.manifest.empty() == !synth)
    throw InvalidArgument("live evaluation needs --manifest or --positives/--neg-hours");
  if (synth && (a.positives <= 0 || a.neg_hours <= 0.0))
    throw InvalidArgument("synthetic evaluation needs both --positives and --neg-hours");
  if (a.jobs < 1) throw InvalidArgument("--jobs must be >= 1");
  for (const auto& m : a.models) require_file(m, "model");
  for (const auto& s : a.scores) require_file(s, "score cache");
  if (!a.manifest.empty()) require_file(a.manifest, "manifest");
  for (const auto& s : a.save_scores) require_output(s);
  require_output(a.out_path);
  require_output(a.roc_csv_path);
  echo(err, "eval", {{"models", str(a.models.size())}, {"score_caches", str(a.scores.size())},
                     {"manifest", a.manifest.empty() ? "-" : a.manifest}, {"seed", str(a.seed)},
                     {"positives", str(a.positives)}, {"neg_hours", str(a.neg_hours)}, {"noise", str(a.noise)},
                     {"target_fa_per_hour", str(a.target_fa)}, {"min_negative_hours", str(a.min_neg_hours)},
                     {"suppression_ms", str(a.suppression_ms)}, {"thresholds", str(a.thresholds)},
                     {"jobs", str(a.jobs)}});

  const KeywordSpec spec = KeywordSpec::ok_google();
  std::vector<std::string> names;
  std::vector<ScoredSet> scored;
  if (!a.models.empty()) {
    EvalSet set;
    if (!a.manifest.empty()) {
      set = eval_set_from_manifest(a.manifest, spec);
    } else {
      SynthDataset pos = gen_synthetic_dataset(a.seed, a.positives, 1, spec, a.noise);
      pos.utterances.pop_back();
      auto negs = gen_negative_streams(a.seed, a.neg_hours, spec, a.noise);
      pos.utterances.insert(pos.utterances.end(), negs.begin(), negs.end());
      set = make_eval_set(pos.utterances, spec);
    }
    std::vector<std::unique_ptr<KeywordDetector>> detectors;
    std::vector<const KeywordDetector*> ptrs;
    for (const auto& m : a.models) {
      detectors.push_back(make_detector(m));
      ptrs.push_back(detectors.back().get());
      names.push_back(fs::path(m).stem().string());
    }
    scored = score_eval_set(set, ptrs, a.jobs);
    for (std::size_t i = 0; i < a.save_scores.size(); ++i) {
      std::ofstream f(a.save_scores[i]);
      if (!f) throw DataError("cannot write '" + a.save_scores[i] + "'");
      write_score_cache(f, scored[i]);
    }
  } else {
    for (const auto& s : a.scores) {
      std::ifstream f(s);
      scored.push_back(read_score_cache(f));
      names.push_back(fs::path(s).stem().string());
    }
  }

  EvalOptions options;
  options.suppression_ms = a.suppression_ms;
  options.min_negative_hours = a.min_neg_hours;
  const auto thresholds = default_thresholds(a.thresholds);
  std::vector<EvalReport> reports;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    reports.push_back(evaluate(scored[i], names[i], a.target_fa, thresholds, options));
    const auto& r = reports.back();
    err << "# " << r.name << ": ";
    if (r.operating_point)
      err << "FR " << r.operating_point->fr_rate << " at " << r.operating_point->fa_per_hour << " FA/h (threshold "
          << r.operating_point->threshold << ")\n";
    else
      err << "no operating point at " << a.target_fa << " FA/h\n";
  }
  Sink report(a.out_path, out);
  *report << report_json(reports);
  if (!a.roc_csv_path.empty()) {
    std::ofstream f(a.roc_csv_path);
    f << roc_csv(reports);
  }
  return 0;
}

// ---------------------------------------------------------------- count

int cmd_count(const std::string& name, std::ostream& out, std::ostream& err) {
  const ModelConfig config = load_config(name);
  echo(err, "count", {{"config", name}});
  const auto rf = receptive_field(config);
  json j;
  j["name"] = config.name;
  j["params"] = count_params(config);
  j["bias_params"] = count_bias_params(config);
  j["macs_per_inference"] = count_macs(config, MacConvention::kPerInference);
  j["macs_per_10ms"] = count_macs(config, MacConvention::kPer10msFrame);
  j["inference_stride_ms"] = config.context.stride * kHopMs;
  j["receptive_field_steps"] = rf.inference_steps;
  j["receptive_field_ms"] = rf.milliseconds;
  out << j.dump() << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
  CLI::App app{"Streaming keyword spotting: features, synthesis, training, detection, evaluation."};
  app.name("kws");
  app.require_subcommand(1);

  std::string wav, format = "bin", out_path;
  bool pcm = false;
  auto* features = app.add_subcommand("features", "Log-mel features of a WAV file or raw PCM16 on stdin");
  features->add_option("--wav", wav, "PCM16 16 kHz mono WAV input");
  features->add_flag("--pcm", pcm, "Read raw little-endian PCM16 from stdin");
  features->add_option("--format", format, "bin (float32 LE, 40 per frame) or csv")
      ->check(CLI::IsMember({"bin", "csv"}));
  features->add_option("--out", out_path, "Output path (default stdout)");

  SynthArgs sa;
  auto* synth = app.add_subcommand("synth", "Write a seeded synthetic dataset (WAVs + manifest.jsonl)");
  synth->add_option("--seed", sa.seed, "Random seed");
  synth->add_option("--positives", sa.positives, "Keyword utterances")->check(CLI::PositiveNumber);
  synth->add_option("--negatives", sa.negatives, "Short non-keyword utterances")->check(CLI::PositiveNumber);
  synth->add_option("--noise", sa.noise, "Noise standard deviation")->check(CLI::NonNegativeNumber);
  synth->add_option("--neg-hours", sa.neg_hours, "Hours of additional long negative streams")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--piece-ms", sa.piece_ms, "Length of each negative stream");
  synth->add_option("--out", sa.out_dir, "Existing output directory")->required();

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a manifest");
  train_cmd->add_option("--config", ta.config, "Builtin topology name or config file")->required();
  train_cmd->add_option("--manifest", ta.manifest, "Training manifest (JSON lines)")->required();
  train_cmd->add_option("--out", ta.out_path, "Model output path")->required();
  train_cmd->add_option("--train-config", ta.train_config, "key = value training config file");
  train_cmd->add_option("--recipe", ta.recipe, "one_stage or two_stage");
  train_cmd->add_option("--epochs", ta.epochs, "Epochs (stage 2 for two_stage)");
  train_cmd->add_option("--encoder-epochs", ta.encoder_epochs, "Stage 1 epochs for two_stage");
  train_cmd->add_option("--lr", ta.lr, "Learning rate");
  train_cmd->add_option("--momentum", ta.momentum, "Momentum");
  train_cmd->add_option("--batch-size", ta.batch_size, "Sequences per update");
  train_cmd->add_option("--adaptation-rate", ta.adaptation_rate, "Encoder gradient scale (one_stage)");
  train_cmd->add_option("--encoder-init", ta.encoder_init, "Model file whose encoder layers seed training");
  train_cmd->add_flag("--freeze-encoder", ta.freeze_encoder, "Keep encoder layers fixed");
  train_cmd->add_option("--clip-norm", ta.clip_norm, "Global gradient norm clip (<= 0 disables)");
  train_cmd->add_option("--truncation", ta.truncation, "BPTT chunk length (0 = full)");
  train_cmd->add_option("--target-loss", ta.target_loss, "Stop once the per-frame loss is below this");
  train_cmd->add_option("--checkpoint-every", ta.checkpoint_every, "Save every N epochs");
  train_cmd->add_option("--checkpoint-path", ta.checkpoint_path, "Checkpoint file");
  train_cmd->add_option("--extra-positives", ta.extra_positives, "Extra positive frames (-1 = automatic)");
  train_cmd->add_option("--seed", ta.seed, "Random seed (initialization and shuffling)");

  StreamArgs st;
  auto* stream = app.add_subcommand("stream", "Stream audio through a model: CSV scores, JSONL events");
  stream->add_option("--model", st.model, "Model file")->required();
  stream->add_option("--threshold", st.threshold, "Detection threshold in (0, 1)");
  stream->add_option("--wav", st.wav, "PCM16 16 kHz mono WAV input");
  stream->add_flag("--pcm", st.pcm, "Read raw little-endian PCM16 from stdin");
  stream->add_option("--suppression-ms", st.suppression_ms, "Silence after each event");
  stream->add_option("--events", st.events, "Events output (default stderr)");
  stream->add_option("--out", st.out_path, "Scores output (default stdout)");
  stream->add_option("--chunk", st.chunk, "Samples per streaming chunk")->check(CLI::PositiveNumber);

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "ROC and FR at a target FA/h for models or cached scores");
  eval->add_option("--model", ea.models, "Model file (repeatable)");
  eval->add_option("--scores", ea.scores, "Score cache from --save-scores (repeatable)");
  eval->add_option("--save-scores", ea.save_scores, "Score cache output, one per --model");
  eval->add_option("--manifest", ea.manifest, "Evaluation manifest");
  eval->add_option("--seed", ea.seed, "Seed of a synthetic evaluation set");
  eval->add_option("--positives", ea.positives, "Synthetic keyword utterances");
  eval->add_option("--neg-hours", ea.neg_hours, "Hours of synthetic negative streams");
  eval->add_option("--noise", ea.noise, "Synthetic noise standard deviation");
  eval->add_option("--target-fa", ea.target_fa, "Target false accepts per hour");
  eval->add_option("--min-neg-hours", ea.min_neg_hours, "Least negative audio needed for an operating point");
  eval->add_option("--suppression-ms", ea.suppression_ms, "Silence after each event");
  eval->add_option("--thresholds", ea.thresholds, "Number of evenly spaced thresholds");
  eval->add_option("--jobs", ea.jobs, "Worker threads");
  eval->add_option("--out", ea.out_path, "JSON report (default stdout)");
  eval->add_option("--roc-csv", ea.roc_csv_path, "ROC plot data as CSV");

  std::string count_config;
  auto* count = app.add_subcommand("count", "Parameter and multiply-accumulate counts of a topology");
  count->add_option("--config", count_config, "Builtin topology name or config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "kws: " << e.what() << "\n";
    for (auto* sub : app.get_subcommands()) {
      err << sub->help();
      return 1;
    }
    err << "Run with --help for usage.\n";
    return 1;
  }

  try {
    if (features->parsed()) return cmd_features(wav, pcm, format, out_path, in, out, err);
    if (synth->parsed()) return cmd_synth(sa, out, err);
    if (train_cmd->parsed()) return cmd_train(ta, out, err);
    if (stream->parsed()) return cmd_stream(st, in, out, err);
    if (eval->parsed()) return cmd_eval(ea, out, err);
    if (count->parsed()) return cmd_count(count_config, out, err);
  } catch (const TrainingDiverged& e) {
    err << "kws: training diverged: " << e.what() << "\n";
    return 3;
  } catch (const InvalidArgument& e) {
    err << "kws: " << e.what() << "\n";
    return 1;
  } catch (const PreconditionViolation& e) {
    err << "kws: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    err << "kws: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    err << "kws: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "kws: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace kws::cli
