// halluguard command-line tool.
//
// Exit status: 0 success, 1 failed validation or unexpected error, 2 bad
// input or parameters, 3 an evaluation with a single class.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "halluguard/bound.hpp"
#include "halluguard/bundle_io.hpp"
#include "halluguard/csv.hpp"
#include "halluguard/detectors.hpp"
#include "halluguard/error.hpp"
#include "halluguard/eval.hpp"
#include "halluguard/keyvalue.hpp"
#include "halluguard/score.hpp"
#include "halluguard/seed.hpp"
#include "halluguard/tinylm/beam.hpp"
#include "halluguard/tinylm/checkpoint.hpp"
#include "halluguard/tinylm/corpus.hpp"
#include "halluguard/tinylm/dataset.hpp"
#include "halluguard/tinylm/jacobian.hpp"
#include "halluguard/tinylm/sample.hpp"
#include "halluguard/tinylm/train.hpp"

namespace fs = std::filesystem;
using namespace halluguard;
using namespace halluguard::tinylm;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitBadInput = 2;
constexpr int kExitSingleClass = 3;

// Carries an exit status out of a command body.
struct ExitStatus {
  int code;
  std::string message;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUndefinedMetric: return kExitSingleClass;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kBadMagic:
    case ErrorCode::kVersionMismatch:
    case ErrorCode::kTruncated:
    case ErrorCode::kInvalidBundle:
    case ErrorCode::kNonFinite:
    case ErrorCode::kParse:
    case ErrorCode::kIo:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kContextOverflow:
    case ErrorCode::kOutOfRange: return kExitBadInput;
    default: return kExitFailure;
  }
}

// Output stream that is either a file or stdout.
class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty() && path != "-") {
      file_.open(path, std::ios::binary);
      if (!file_) throw ExitStatus{kExitBadInput, "cannot open " + path + " for writing"};
    }
  }
  std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

// Expands directories to their *.hgb files; the result is sorted.
std::vector<fs::path> bundle_paths(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        if (e.is_regular_file() && e.path().extension() == ".hgb") out.push_back(e.path());
      }
    } else {
      out.push_back(p);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<TrajectoryBundle> load_bundles(const std::vector<std::string>& inputs) {
  std::vector<TrajectoryBundle> bundles;
  for (const auto& path : bundle_paths(inputs)) {
    try {
      bundles.push_back(read_bundle_file(path));
    } catch (const Error& e) {
      throw ExitStatus{kExitBadInput, path.string() + ": " + e.what()};
    }
  }
  if (bundles.empty()) throw ExitStatus{kExitBadInput, "no bundles found"};
  return bundles;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<Example> read_examples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ExitStatus{kExitBadInput, "cannot open " + path};
  return read_corpus(in);
}

// Builtin task name or a corpus file.
std::vector<Example> task_examples(const std::string& task, int copy_count, std::uint64_t seed) {
  if (task == "addition") return addition_examples();
  if (task == "copy") return copy_examples(copy_count, 1, 6, derive_seed(seed, "corpus.copy"));
  return read_examples(task);
}

Vocabulary vocabulary_for(const std::string& task, const std::vector<Example>& examples) {
  if (task == "addition") return Vocabulary::arithmetic();
  if (task == "copy") return Vocabulary(kCopyAlphabet);
  std::string chars;
  for (const auto& e : examples) chars += e.prompt + e.answer;
  std::sort(chars.begin(), chars.end());
  chars.erase(std::unique(chars.begin(), chars.end()), chars.end());
  return Vocabulary(chars);
}

// --config is expanded into --key=value arguments before parsing (see
// expand_config), so it appears here only for --help.
void add_config(CLI::App* cmd) {
  cmd->add_option("--config", "flat key=value file of long option names; later flags override it");
}

std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    std::string path;
    if (a == "--config" && i + 1 < argc) {
      path = argv[++i];
    } else if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
    } else {
      args.push_back(a);
      continue;
    }
    KeyValueFile kv;
    try {
      kv = KeyValueFile::load(path);
    } catch (const Error& e) {
      throw ExitStatus{kExitBadInput, path + ": " + e.what()};
    }
    for (const auto& [key, value] : kv.values()) {
      if (key == "config") throw ExitStatus{kExitBadInput, path + ": nested config files are not supported"};
      args.push_back("--" + key + "=" + value);
    }
  }
  std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
  return args;
}

struct HalluGuardFlags {
  double ridge = kDefaultRidge;
  std::size_t bank = kDefaultBankCapacity;
  double quantile = kDefaultClipQuantile;
  bool no_clip = false;
  bool beta_avg = false;
  std::string amp = "proxy";
  int max_iters = PowerIterationOptions{}.max_iters;

  void add(CLI::App* cmd) {
    cmd->add_option("--ridge", ridge, "Gram ridge alpha")->check(CLI::PositiveNumber);
    cmd->add_option("--bank", bank, "clipping memory bank capacity")->check(CLI::PositiveNumber);
    cmd->add_option("--quantile", quantile, "clipping quantile q")->check(CLI::Range(1e-12, 0.5));
    cmd->add_flag("--no-clip", no_clip, "disable feature clipping");
    cmd->add_flag("--beta-avg", beta_avg, "use the per-step average log amplification");
    cmd->add_option("--amp", amp, "amplification estimator: proxy or exact (needs --checkpoint)")
        ->check(CLI::IsMember({"proxy", "exact"}));
    cmd->add_option("--max-iters", max_iters, "power-iteration budget for --amp exact")
        ->check(CLI::PositiveNumber);
  }

  HalluGuardConfig config() const {
    HalluGuardConfig c;
    c.ridge = ridge;
    c.bank_capacity = bank;
    c.clip_quantile = quantile;
    c.clip = !no_clip;
    c.use_beta_avg = beta_avg;
    c.amp_mode = amp == "exact" ? AmplificationMode::kExactJacobian : AmplificationMode::kStateDeltaProxy;
    return c;
  }
};

struct DecodeFlags {
  DecodeConfig d;

  void add(CLI::App* cmd, bool with_k = true) {
    cmd->add_option("--temperature", d.temperature, "sampling temperature");
    cmd->add_option("--top-p", d.top_p, "nucleus mass");
    cmd->add_option("--top-k", d.top_k, "top-k cutoff");
    if (with_k) cmd->add_option("-k,--samples", d.k, "generations per prompt (K)");
    cmd->add_option("--max-steps", d.max_steps, "maximum generated tokens");
    cmd->add_flag("--greedy", d.greedy, "arg-max decoding");
    cmd->add_option("--state-noise", d.state_noise, "std of Gaussian noise on the mid-layer state");
  }
};

void write_seed_header(std::ostream& out, std::uint64_t seed) { out << "# seed=" << seed << "\n"; }

// ---------------------------------------------------------------- score

struct ScoreCmd {
  std::vector<std::string> inputs;
  std::string out;
  std::string detectors = "all";
  std::string calibrate_on;
  std::string checkpoint;
  double rouge_tau = kDefaultRougeTau;
  double link_threshold = kDefaultLinkThreshold;
  std::uint64_t seed = kDefaultSeed;
  HalluGuardFlags hg;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("score", "score bundles with every requested detector");
    cmd->add_option("inputs", inputs, "bundle files or directories of *.hgb")->required();
    cmd->add_option("-o,--out", out, "score CSV (default stdout)");
    cmd->add_option("--detectors", detectors, "comma-separated detector names or 'all'");
    cmd->add_option("--calibrate-on", calibrate_on,
                    "bundle directory used to fit z-calibration of the HalluGuard terms");
    cmd->add_option("--checkpoint", checkpoint, "tiny LM checkpoint for --amp exact");
    cmd->add_option("--rouge-tau", rouge_tau, "ROUGE-L labeling threshold");
    cmd->add_option("--link-threshold", link_threshold, "cosine link threshold for semantic entropy");
    cmd->add_option("--seed", seed, "root seed (echoed in the output)");
    hg.add(cmd);
    add_config(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    std::vector<std::string> names = detectors == "all" ? all_detectors() : split_list(detectors);
    for (const auto& n : names) {
      try {
        detector_orientation(n);
      } catch (const Error& e) {
        throw ExitStatus{kExitBadInput, e.what()};
      }
    }
    DetectorConfig config;
    config.halluguard = hg.config();
    config.link_threshold = link_threshold;
    if (!calibrate_on.empty()) {
      config.calibration = fit_z_calibration(dataset_components(load_bundles({calibrate_on}), config.halluguard));
    }
    const auto bundles = load_bundles(inputs);
    AmplifierFactory factory;
    std::optional<Checkpoint> ck;
    if (config.halluguard.amp_mode == AmplificationMode::kExactJacobian) {
      if (checkpoint.empty()) throw ExitStatus{kExitBadInput, "--amp exact needs --checkpoint"};
      ck = load_checkpoint(checkpoint);
      PowerIterationOptions po;
      po.max_iters = hg.max_iters;
      po.seed = derive_seed(seed, "power_iteration");
      factory = [&ck, po](const TrajectoryBundle& b) { return make_exact_amplifier(ck->model, ck->vocab, b, po); };
    }
    const ScoreTable table = score_dataset(bundles, names, config, rouge_tau, factory);
    Output o(out);
    write_seed_header(o.stream(), seed);
    write_score_csv(o.stream(), table);
  }
};

// ---------------------------------------------------------------- eval

struct EvalCmd {
  std::vector<std::string> inputs;
  std::string out;
  std::string labels = "auto";
  std::string detectors = "all";
  std::string threshold = "quantile";
  double pi_target = -1.0;
  double fpr = 0.05;
  double c_fp = 1.0;
  double c_fn = 1.0;
  double prior = 0.5;
  double rouge_tau = kDefaultRougeTau;
  std::uint64_t seed = kDefaultSeed;
  HalluGuardFlags hg;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("eval", "AUROC, AUPRC, F1 and TPR at fixed FPR per detector");
    cmd->add_option("inputs", inputs, "one score CSV, or bundle files / directories")->required();
    cmd->add_option("-o,--out", out, "report CSV (the table always goes to stdout)");
    cmd->add_option("--labels", labels, "label source for bundles: auto (stored, else ROUGE), stored or rouge")
        ->check(CLI::IsMember({"auto", "stored", "rouge"}));
    cmd->add_option("--detectors", detectors, "detectors to score bundles with");
    cmd->add_option("--threshold", threshold, "F1 threshold rule: quantile, fixed-fpr or bayes")
        ->check(CLI::IsMember({"quantile", "fixed-fpr", "bayes"}));
    cmd->add_option("--pi-target", pi_target, "quantile rule positive rate (<0: empirical)");
    cmd->add_option("--fpr", fpr, "fixed-fpr rule target");
    cmd->add_option("--c-fp", c_fp, "bayes rule false-positive cost");
    cmd->add_option("--c-fn", c_fn, "bayes rule false-negative cost");
    cmd->add_option("--prior", prior, "bayes rule hallucination prior");
    cmd->add_option("--rouge-tau", rouge_tau, "ROUGE-L labeling threshold");
    cmd->add_option("--seed", seed, "root seed (echoed in the output)");
    hg.add(cmd);
    add_config(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    ScoreTable table;
    const bool csv_input = inputs.size() == 1 && fs::path(inputs[0]).extension() == ".csv";
    if (csv_input) {
      std::ifstream in(inputs[0]);
      if (!in) throw ExitStatus{kExitBadInput, "cannot open " + inputs[0]};
      try {
        table = read_score_csv(in);
      } catch (const Error& e) {
        throw ExitStatus{kExitBadInput, inputs[0] + ": " + e.what()};
      }
    } else {
      auto bundles = load_bundles(inputs);
      for (auto& b : bundles) {
        if (labels == "rouge") b.label.reset();
        if (labels == "stored" && !b.label) throw ExitStatus{kExitBadInput, b.prompt_id + ": no stored label"};
      }
      DetectorConfig config;
      config.halluguard = hg.config();
      table = score_dataset(bundles, detectors == "all" ? all_detectors() : split_list(detectors), config,
                            rouge_tau);
    }
    if (std::none_of(table.rows.begin(), table.rows.end(), [](const ScoreRow& r) { return r.label.has_value(); })) {
      throw ExitStatus{kExitBadInput, "no labels available"};
    }
    EvalConfig config;
    config.threshold.mode = threshold == "bayes"       ? ThresholdMode::kBayes
                            : threshold == "fixed-fpr" ? ThresholdMode::kFixedFpr
                                                       : ThresholdMode::kQuantile;
    config.threshold.pi_target = pi_target;
    config.threshold.fpr = fpr;
    config.threshold.c_fp = c_fp;
    config.threshold.c_fn = c_fn;
    config.threshold.prior = prior;
    const EvalReport report = evaluate_table(table, config);
    write_report_table(std::cout, report);
    if (!out.empty()) {
      Output o(out);
      write_seed_header(o.stream(), seed);
      write_report_csv(o.stream(), report);
    }
  }
};

// ---------------------------------------------------------------- simulate-bound

struct SimulateBoundCmd {
  std::string params;
  std::string out;
  int t_min = 0;
  int t_max = 24;
  double noise = 0.05;
  std::uint64_t seed = kDefaultSeed;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("simulate-bound", "risk bound terms and a simulated empirical risk over T");
    cmd->add_option("--params", params, "key=value bound parameter file (defaults otherwise)");
    cmd->add_option("-o,--out", out, "CSV output (default stdout)");
    cmd->add_option("--t-min", t_min, "first horizon")->check(CLI::NonNegativeNumber);
    cmd->add_option("--t-max", t_max, "last horizon")->check(CLI::NonNegativeNumber);
    cmd->add_option("--noise", noise, "std of the simulated risk noise")->check(CLI::NonNegativeNumber);
    cmd->add_option("--seed", seed, "root seed (echoed in the output)");
    add_config(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    if (t_max < t_min) throw ExitStatus{kExitBadInput, "--t-max must be >= --t-min"};
    BoundParams p;
    if (!params.empty()) {
      try {
        p = parse_bound_params(KeyValueFile::load(params));
      } catch (const Error& e) {
        throw ExitStatus{kExitBadInput, params + ": " + e.what()};
      }
    }
    std::vector<int> range;
    for (int t = t_min; t <= t_max; ++t) range.push_back(t);
    const auto rows = simulate_empirical_risk(p, noise, derive_seed(seed, "simulate_bound"), range);
    Output o(out);
    write_seed_header(o.stream(), seed);
    write_bound_csv(o.stream(), rows);
  }
};

// ---------------------------------------------------------------- tinylm

struct TrainCmd {
  std::string task = "addition";
  std::string out;
  std::string loss_csv;
  int copy_count = 2000;
  TinyLMConfig model;
  TrainConfig train;

  void add(CLI::App* parent) {
    auto* cmd = parent->add_subcommand("train", "train a tiny LM and write a checkpoint");
    cmd->add_option("--task", task, "addition, copy or a tab-separated corpus file");
    cmd->add_option("-o,--out", out, "checkpoint path")->required();
    cmd->add_option("--loss-csv", loss_csv, "write the per-step loss curve here");
    cmd->add_option("--copy-count", copy_count, "examples generated for the copy task");
    cmd->add_option("--d-model", model.d_model, "model width");
    cmd->add_option("--layers", model.n_layers, "transformer blocks");
    cmd->add_option("--heads", model.n_heads, "attention heads");
    cmd->add_option("--d-ff", model.d_ff, "MLP width");
    cmd->add_option("--context", model.context_len, "context length");
    cmd->add_option("--steps", train.steps, "optimizer steps");
    cmd->add_option("--batch", train.batch, "sequences per step");
    cmd->add_option("--lr", train.lr, "peak learning rate");
    cmd->add_option("--warmup", train.warmup, "linear warmup steps");
    cmd->add_option("--clip", train.grad_clip, "global gradient-norm clip (0 = off)");
    cmd->add_option("--seed", train.seed, "root seed");
    cmd->add_option("--log-every", train.log_every, "print the loss every N steps (0 = silent)");
    add_config(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto examples = task_examples(task, copy_count, train.seed);
    if (examples.empty()) throw ExitStatus{kExitBadInput, "empty corpus"};
    const Vocabulary vocab = vocabulary_for(task, examples);
    model.vocab_size = vocab.size();
    model.seed = train.seed;
    TinyLM lm(model);
    const auto result = train_tiny_lm(lm, to_sequences(vocab, examples), train);
    save_checkpoint(out, lm, vocab);
    if (!loss_csv.empty()) {
      Output o(loss_csv);
      write_seed_header(o.stream(), train.seed);
      o.stream() << "step,loss\n";
      for (std::size_t i = 0; i < result.loss_curve.size(); ++i) {
        o.stream() << i + 1 << "," << csv::format_number(result.loss_curve[i]) << "\n";
      }
    }
    std::fprintf(stderr, "trained %d steps, final loss %.6f, %zu parameters -> %s\n", train.steps,
                 result.loss_curve.empty() ? 0.0 : result.loss_curve.back(), lm.parameter_count(), out.c_str());
  }
};

struct SampleCmd {
  std::string checkpoint;
  std::string prompt;
  std::string prompt_id = "prompt";
  std::string prompts;
  std::string out;
  DecodeFlags decode;

  void add(CLI::App* parent) {
    auto* cmd = parent->add_subcommand("sample", "sample K generations per prompt into bundles");
    cmd->add_option("--checkpoint", checkpoint, "tiny LM checkpoint")->required();
    auto* one = cmd->add_option("--prompt", prompt, "a single prompt");
    cmd->add_option("--prompt-id", prompt_id, "id of the single prompt");
    auto* many = cmd->add_option("--prompts", prompts, "corpus file; answers become references");
    one->excludes(many);
    cmd->add_option("-o,--out", out, "bundle file (--prompt) or directory (--prompts)")->required();
    decode.add(cmd);
    cmd->add_option("--seed", decode.d.seed, "root seed");
    add_config(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const Checkpoint ck = load_checkpoint(checkpoint);
    if (!prompts.empty()) {
      fs::create_directories(out);
      for (const auto& p : labeled_prompts(read_examples(prompts))) {
        const auto b = sample_k(ck.model, ck.vocab, p.prompt_id, p.prompt, decode.d, p.references);
        write_bundle_file(b, fs::path(out) / (p.prompt_id + ".hgb"));
      }
    } else {
      if (prompt.empty()) throw ExitStatus{kExitBadInput, "give --prompt or --prompts"};
      write_bundle_file(sample_k(ck.model, ck.vocab, prompt_id, prompt, decode.d), out);
    }
  }
};

struct RerankCmd {
  std::string checkpoint;
  std::string prompts = "addition";
  std::string out;
  int n = 200;
  int max_iters = 100;
  BeamConfig beam;
  DecodeFlags probe;

  void add(CLI::App* parent) {
    auto* cmd = parent->add_subcommand("rerank", "beam search reranked by the HalluGuard score");
    cmd->add_option("--checkpoint", checkpoint, "tiny LM checkpoint")->required();
    cmd->add_option("--prompts", prompts, "addition or a corpus file with reference answers");
    cmd->add_option("-n,--count", n, "prompts drawn (seeded) from the corpus; 0 = all");
    cmd->add_option("-o,--out", out, "CSV of outputs (default stdout)");
    cmd->add_option("--beam", beam.beam, "beam width");
    cmd->add_option("--weight", beam.weight, "weight of the reliability z-score (0 = plain beam search)");
    cmd->add_option("--rerank-every", beam.rerank_every, "rerank every N steps");
    cmd->add_option("--pool", beam.rerank_pool, "expansions reranked per step (0 = 2 x beam)");
    cmd->add_option("--max-steps", beam.max_steps, "maximum generated tokens");
    cmd->add_option("--max-iters", max_iters, "power-iteration budget of the exact amplifier");
    probe.d.k = 5;
    probe.d.max_steps = 4;
    auto* g = cmd->add_option_group("probe", "continuations sampled to score each candidate");
    g->add_option("--probe-temperature", probe.d.temperature, "probe temperature");
    g->add_option("--probe-top-p", probe.d.top_p, "probe nucleus mass");
    g->add_option("--probe-top-k", probe.d.top_k, "probe top-k");
    g->add_option("--probe-k", probe.d.k, "probe continuations per candidate");
    g->add_option("--probe-max-steps", probe.d.max_steps, "probe continuation length");
    cmd->add_option("--seed", beam.seed, "root seed");
    add_config(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const Checkpoint ck = load_checkpoint(checkpoint);
    auto examples = prompts == "addition" ? addition_examples() : read_examples(prompts);
    if (n > 0 && static_cast<std::size_t>(n) < examples.size()) {
      std::mt19937_64 rng(derive_seed(beam.seed, "rerank.prompts"));
      std::shuffle(examples.begin(), examples.end(), rng);
      examples.resize(static_cast<std::size_t>(n));
    }
    beam.probe = probe.d;
    PowerIterationOptions po;
    po.max_iters = max_iters;
    HalluGuardConfig hc;
    hc.amp_mode = AmplificationMode::kExactJacobian;
    const CandidateScorer scorer = [&](const TrajectoryBundle& b) {
      const ExactAmplifier amp = make_exact_amplifier(ck.model, ck.vocab, b, po);
      return halluguard_score(halluguard_components(b, hc, nullptr, &amp));
    };
    Output o(out);
    write_seed_header(o.stream(), beam.seed);
    csv::write_row(o.stream(), {"prompt", "reference", "output", "correct", "logprob", "scorer_failures"});
    int correct = 0;
    for (const auto& e : examples) {
      const BeamResult r = beam_search(ck.model, ck.vocab, e.prompt, beam, scorer);
      const bool ok = r.text == e.answer;
      correct += ok;
      csv::write_row(o.stream(), {e.prompt, e.answer, r.text, ok ? "1" : "0", csv::format_number(r.logprob),
                                  std::to_string(r.scorer_failures)});
    }
    std::fprintf(stderr, "accuracy %d/%zu\n", correct, examples.size());
  }
};

struct DatasetCmd {
  std::string checkpoint;
  std::string prompts = "addition";
  std::string out;
  std::string corruption = "none";
  int n = 500;
  double rouge_tau = kDefaultRougeTau;
  CorruptionConfig cc;
  DecodeFlags decode;

  void add(CLI::App* parent) {
    auto* cmd = parent->add_subcommand("dataset", "labeled bundles under an optional corruption");
    cmd->add_option("--checkpoint", checkpoint, "tiny LM checkpoint")->required();
    cmd->add_option("--prompts", prompts, "addition or a corpus file with reference answers");
    cmd->add_option("-n,--count", n, "prompts drawn (seeded) from the corpus; 0 = all");
    cmd->add_option("-o,--out", out, "output directory of *.hgb bundles")->required();
    cmd->add_option("--corruption", corruption, "none, high-temp or state-noise")
        ->check(CLI::IsMember({"none", "high-temp", "state-noise"}));
    cmd->add_option("--rho", cc.rho, "state-noise budget");
    cmd->add_option("--noise-unit", cc.noise_unit, "state-noise std per unit of rho");
    cmd->add_option("--high-temperature", cc.high_temperature, "temperature of the high-temp corruption");
    cmd->add_option("--rouge-tau", rouge_tau, "ROUGE-L labeling threshold");
    decode.add(cmd);
    cmd->add_option("--seed", decode.d.seed, "root seed");
    add_config(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const Checkpoint ck = load_checkpoint(checkpoint);
    auto examples = prompts == "addition" ? addition_examples() : read_examples(prompts);
    if (n > 0 && static_cast<std::size_t>(n) < examples.size()) {
      std::mt19937_64 rng(derive_seed(decode.d.seed, "dataset.prompts"));
      std::shuffle(examples.begin(), examples.end(), rng);
      examples.resize(static_cast<std::size_t>(n));
    }
    cc.mode = parse_corruption(corruption);
    const auto bundles = make_labeled_dataset(ck.model, ck.vocab, labeled_prompts(examples), decode.d, cc, rouge_tau);
    fs::create_directories(out);
    for (const auto& b : bundles) write_bundle_file(b, fs::path(out) / (b.prompt_id + ".hgb"));
    std::printf("# seed=%llu\nbundles=%zu hallucination_rate=%.4f\n",
                static_cast<unsigned long long>(decode.d.seed), bundles.size(), hallucination_rate(bundles));
  }
};

// ---------------------------------------------------------------- bundle

struct BundleCmd {
  std::vector<std::string> validate_inputs;
  std::vector<std::string> inspect_inputs;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("bundle", "bundle utilities");
    cmd->require_subcommand(1);
    auto* v = cmd->add_subcommand("validate", "check every structural invariant");
    v->add_option("inputs", validate_inputs, "bundle files or directories")->required();
    v->callback([this] { validate(); });
    auto* i = cmd->add_subcommand("inspect", "print a summary of each bundle");
    i->add_option("inputs", inspect_inputs, "bundle files or directories")->required();
    i->callback([this] { inspect(); });
  }

  void validate() {
    int bad = 0;
    for (const auto& path : bundle_paths(validate_inputs)) {
      TrajectoryBundle b;
      try {
        b = read_bundle_file(path, /*check=*/false);
      } catch (const Error& e) {
        throw ExitStatus{kExitBadInput, path.string() + ": " + e.what()};
      }
      const auto report = validate_bundle(b);
      if (report.ok) {
        std::printf("%s: ok\n", path.string().c_str());
      } else {
        ++bad;
        for (const auto& v : report.violations) std::printf("%s: %s\n", path.string().c_str(), v.c_str());
      }
    }
    if (bad > 0) throw ExitStatus{kExitFailure, std::to_string(bad) + " invalid bundle(s)"};
  }

  void inspect() {
    for (const auto& b : load_bundles(inspect_inputs)) {
      std::printf("prompt_id: %s\nprompt: %s\nK: %zu  d: %u\n", b.prompt_id.c_str(), b.prompt_text.c_str(), b.k(),
                  b.embed_dim);
      if (b.label) std::printf("label: %d\n", *b.label);
      if (b.rouge_to_ref) std::printf("rouge_to_ref: %.4f\n", *b.rouge_to_ref);
      for (const auto& r : b.references) std::printf("reference: %s\n", r.c_str());
      for (const auto& [k, v] : b.meta) std::printf("meta %s = %s\n", k.c_str(), v.c_str());
      for (std::size_t g = 0; g < b.k(); ++g) {
        const auto& gen = b.generations[g];
        std::printf("  [%zu] T=%zu states=%s perplexity=%.4f text=%s\n", g, gen.steps(),
                    gen.has_states() ? "yes" : "no", perplexity(gen.logprob), gen.text.c_str());
      }
    }
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"HalluGuard: spectral hallucination scoring of sampled trajectories"};
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", "halluguard 0.1.0");

  ScoreCmd score;
  EvalCmd eval;
  SimulateBoundCmd bound;
  TrainCmd train;
  SampleCmd sample;
  RerankCmd rerank;
  DatasetCmd dataset;
  BundleCmd bundle;
  score.add(app);
  eval.add(app);
  bound.add(app);
  auto* lm = app.add_subcommand("tinylm", "train, sample, rerank and build datasets with the tiny LM");
  lm->require_subcommand(1);
  train.add(lm);
  sample.add(lm);
  rerank.add(lm);
  dataset.add(lm);
  bundle.add(app);

  try {
    app.parse(expand_config(argc, argv));
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitBadInput;
  } catch (const ExitStatus& s) {
    std::fprintf(stderr, "error: %s\n", s.message.c_str());
    return s.code;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitFailure;
  }
  return 0;
}
