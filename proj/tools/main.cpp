// sentigen: train, decode and evaluate sentiment-controllable caption models
// over precomputed image features.

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <sstream>

#include "sentigen/checkpoint.hpp"
#include "sentigen/corpus.hpp"
#include "sentigen/decoder.hpp"
#include "sentigen/gradcheck.hpp"
#include "sentigen/metrics.hpp"
#include "sentigen/trainer.hpp"

namespace fs = std::filesystem;
using namespace sentigen;

namespace {

// post-parse validation problems that should exit like flag errors do
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void echo_config(const CLI::App* cmd) {
  std::cout << "# " << cmd->get_name() << " configuration\n";
  std::istringstream lines(cmd->config_to_str(true, false));
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty()) std::cout << line << "\n";
  std::cout << "#\n";
}

Sentiment parse_label(const std::string& name) {
  try {
    return sentiment_from_name(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Flat `key = value` config support for the train subcommand. File values
// are injected as flags right after the subcommand name, so real flags come
// later and win (options use the take-last policy). Echoed config blocks can
// be fed straight back in: quotes are stripped and # lines skipped.
std::vector<std::string> expand_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string path;
  for (size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size())
      path = args[i + 1];
    else if (args[i].rfind("--config=", 0) == 0)
      path = args[i].substr(9);
  }
  if (path.empty() || args.empty()) return args;

  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::vector<std::string> injected;
  std::string line;
  while (std::getline(in, line)) {
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config file " + path + ": expected key = value, got '" + t + "'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty()) throw std::runtime_error("config file " + path + ": empty key");
    if (key == "config") continue;
    injected.push_back("--" + key);
    injected.push_back(value);
  }
  args.insert(args.begin() + 1, injected.begin(), injected.end());
  return args;
}

Tensor feature_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open feature file " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<double> values;
  // JSON array or plain whitespace-separated numbers
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    values = j.get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    std::istringstream nums(text);
    double v;
    while (nums >> v) values.push_back(v);
  }
  if (values.empty()) throw std::runtime_error("feature file " + path + " holds no numbers");
  const int n = static_cast<int>(values.size());
  return Tensor({n}, std::move(values));
}

struct GenCorpusArgs {
  std::string spec_file;
  std::string out_dir;
  uint64_t seed = 0;
  bool seed_set = false;
};

int cmd_gen_corpus(const GenCorpusArgs& args) {
  SyntheticCorpusSpec spec = args.spec_file.empty()
                                 ? SyntheticCorpusSpec::default_spec()
                                 : SyntheticCorpusSpec::from_json_file(args.spec_file);
  if (args.seed_set) spec.seed = args.seed;
  SyntheticCorpus corpus = generate_synthetic(spec);

  fs::create_directories(args.out_dir);
  save_dataset((fs::path(args.out_dir) / "train.jsonl").string(), corpus.train);
  save_dataset((fs::path(args.out_dir) / "val.jsonl").string(), corpus.val);
  save_dataset((fs::path(args.out_dir) / "test.jsonl").string(), corpus.test);
  save_lexicon((fs::path(args.out_dir) / "lexicon_pos.txt").string(), spec.positive_adjectives);
  save_lexicon((fs::path(args.out_dir) / "lexicon_neg.txt").string(), spec.negative_adjectives);

  std::cout << "train records: " << corpus.train.size() << "\n";
  std::cout << "val records:   " << corpus.val.size() << "\n";
  std::cout << "test records:  " << corpus.test.size() << "\n";
  std::cout << "feature dim:   " << spec.effective_feature_dim() << "\n";
  std::cout << "wrote " << args.out_dir << "/{train,val,test}.jsonl and lexicon files\n";
  return 0;
}

struct TrainArgs {
  std::string data_dir;
  std::string out_ckpt;
  std::string variant = "direct";
  std::string log_file;
  TrainConfig tc;
  int embed_dim = 32;
  int hidden_dim = 64;
  int sentiment_embed_dim = 16;
  int classifier_hidden = 0;
  int min_count = 1;
};

int cmd_train(const TrainArgs& args) {
  std::vector<RawRecord> raw = load_dataset((fs::path(args.data_dir) / "train.jsonl").string());
  if (raw.empty()) throw std::runtime_error("training set is empty");

  std::vector<std::string> captions;
  captions.reserve(raw.size());
  for (const RawRecord& r : raw) captions.push_back(r.caption);
  Vocabulary vocab = Vocabulary::build(captions, args.min_count);

  ModelConfig cfg;
  cfg.variant = variant_from_name(args.variant);
  cfg.vocab_size = vocab.size();
  cfg.embed_dim = args.embed_dim;
  cfg.hidden_dim = args.hidden_dim;
  cfg.sentiment_embed_dim = args.sentiment_embed_dim;
  cfg.classifier_hidden = args.classifier_hidden;
  cfg.feature_dim = raw[0].feature.dim(0);

  std::vector<CaptionRecord> corpus = encode_corpus(raw, vocab);
  ModelParams params = ModelParams::init(cfg, args.tc.seed * 7919 + 1);

  std::ofstream log;
  if (!args.log_file.empty()) {
    log.open(args.log_file);
    if (!log) throw std::runtime_error("cannot write log file " + args.log_file);
  }
  auto emit = [&](const EpochStats& s) {
    std::ostringstream line;
    line << "epoch=" << s.epoch << " word_loss=" << s.word_loss
         << " sentiment_loss=" << s.sentiment_loss << " total=" << s.total;
    std::cout << line.str() << "\n";
    if (log) log << line.str() << "\n";
  };

  std::cout << "vocab size: " << vocab.size() << ", records: " << corpus.size() << "\n";
  train(params, corpus, args.tc, emit);

  save_checkpoint({std::move(params), std::move(vocab)}, args.out_ckpt);
  std::cout << "saved checkpoint " << args.out_ckpt << "\n";
  return 0;
}

struct GenerateArgs {
  std::string ckpt;
  std::string label = "neu";
  std::string dataset;
  std::string image_id;
  std::string feature_file;
  int beam = 5;
  int max_len = 20;
  bool greedy = false;
  bool flip = false;
};

int cmd_generate(const GenerateArgs& args) {
  Sentiment label = parse_label(args.label);
  if (args.flip && label == Sentiment::kNeutral)
    throw UsageError("--flip needs a pos or neg label; flipping neutral is undefined");
  if (args.feature_file.empty() && (args.dataset.empty() || args.image_id.empty()))
    throw UsageError("give either --feature-file or both --dataset and --image-id");

  Checkpoint ckpt = load_checkpoint(args.ckpt);

  Tensor feature;
  if (!args.feature_file.empty()) {
    feature = feature_from_file(args.feature_file);
  } else {
    std::vector<RawRecord> records = load_dataset(args.dataset);
    bool found = false;
    for (const RawRecord& r : records)
      if (r.image_id == args.image_id) {
        feature = r.feature;
        found = true;
        break;
      }
    if (!found)
      throw std::runtime_error("image id '" + args.image_id + "' not found in " + args.dataset);
  }

  auto caption_text = [&](const std::vector<int>& tokens) {
    return detokenize(ckpt.vocab.decode(tokens));
  };

  if (args.greedy) {
    std::vector<int> tokens = greedy_decode(ckpt.params, feature, label, args.max_len);
    std::cout << caption_text(tokens) << "\n";
    return 0;
  }
  if (args.flip) {
    FlipResult r = generate_with_flip(ckpt.params, feature, label, args.beam, args.max_len);
    std::cout << "label=" << sentiment_name(label) << " score=" << r.original.score << " "
              << caption_text(r.original.tokens) << "\n";
    std::cout << "label=" << sentiment_name(sentiment_flip(label))
              << " score=" << r.flipped.score << " " << caption_text(r.flipped.tokens) << "\n";
    return 0;
  }
  std::vector<Hypothesis> ranked =
      beam_search(ckpt.params, feature, label, args.beam, args.max_len);
  for (const Hypothesis& hyp : ranked)
    std::cout << hyp.score << "\t" << caption_text(hyp.tokens) << "\n";
  return 0;
}

struct EvaluateArgs {
  std::string ckpt;
  std::string test_file;
  std::string pos_lexicon;
  std::string neg_lexicon;
  std::string report_file;
  int beam = 5;
  int max_len = 20;
};

int cmd_evaluate(const EvaluateArgs& args) {
  Checkpoint ckpt = load_checkpoint(args.ckpt);
  std::vector<RawRecord> test = load_dataset(args.test_file);
  std::vector<std::string> pos = load_lexicon(args.pos_lexicon);
  std::vector<std::string> neg = load_lexicon(args.neg_lexicon);

  EvalConfig ec;
  ec.beam_size = args.beam;
  ec.max_len = args.max_len;
  EvalReport report = evaluate(ckpt.params, ckpt.vocab, test, pos, neg, ec);

  print_report_kv(std::cout, report);
  std::cout << "\n";
  print_report_tables(std::cout, report);
  if (!args.report_file.empty()) {
    std::ofstream out(args.report_file);
    if (!out) throw std::runtime_error("cannot write report file " + args.report_file);
    print_report_kv(out, report);
  }
  return 0;
}

struct GradCheckArgs {
  std::string variant = "all";
  uint64_t seed = 7;
  int embed_dim = 8;
  int hidden_dim = 6;
  int vocab_size = 11;
  int feature_dim = 5;
  int sentiment_embed_dim = 4;
  double lambda = 1.0;
};

int cmd_gradcheck(const GradCheckArgs& args) {
  std::vector<Variant> variants;
  if (args.variant == "all")
    variants = {Variant::kBaseline, Variant::kDirect, Variant::kFlow};
  else
    variants = {variant_from_name(args.variant)};

  bool all_pass = true;
  for (Variant variant : variants) {
    ModelConfig cfg;
    cfg.variant = variant;
    cfg.vocab_size = args.vocab_size;
    cfg.embed_dim = args.embed_dim;
    cfg.hidden_dim = args.hidden_dim;
    cfg.sentiment_embed_dim = args.sentiment_embed_dim;
    cfg.feature_dim = args.feature_dim;
    ModelParams params = ModelParams::init(cfg, args.seed);
    CaptionRecord record = make_random_record(cfg, args.seed + 1, 1);
    GradCheckReport report = gradcheck_model(params, record, args.lambda);
    bool ok = report.pass();
    all_pass = all_pass && ok;
    std::cout << "variant=" << variant_name(variant) << " parameters_checked=" << report.n_checked
              << " max_rel_err=" << report.max_rel_err << " worst=" << report.worst_param << "["
              << report.worst_index << "] " << (ok ? "PASS" : "FAIL") << "\n";
  }
  if (!all_pass) throw std::runtime_error("gradient check failed");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sentiment-controllable caption generation over precomputed image features"};
  app.require_subcommand(1);

  GenCorpusArgs gc;
  CLI::App* gen_corpus = app.add_subcommand("gen-corpus", "write a synthetic templated corpus");
  gen_corpus->add_option("--spec", gc.spec_file, "corpus spec (json); defaults are built in")
      ->check(CLI::ExistingFile);
  gen_corpus->add_option("--out", gc.out_dir, "output directory")->required();
  gen_corpus->add_option("--seed", gc.seed, "override the spec seed")
      ->each([&gc](const std::string&) { gc.seed_set = true; });

  TrainArgs tr;
  std::string config_path;
  CLI::App* train_cmd = app.add_subcommand("train", "train a captioning model");
  train_cmd->add_option("--config", config_path,
                        "flat key = value file; keys mirror the long flags, flags win");
  train_cmd->add_option("--data", tr.data_dir, "dataset directory (needs train.jsonl)")
      ->required();
  train_cmd->add_option("--out", tr.out_ckpt, "checkpoint output path")->required();
  train_cmd->add_option("--variant", tr.variant, "baseline | direct | flow")
      ->check(CLI::IsMember({"baseline", "direct", "flow"}))
      ->capture_default_str();
  train_cmd->add_option("--lr", tr.tc.learning_rate, "learning rate")->capture_default_str();
  train_cmd->add_option("--batch-size", tr.tc.batch_size, "mini-batch size")
      ->capture_default_str();
  train_cmd->add_option("--epochs", tr.tc.epochs, "training epochs")->capture_default_str();
  train_cmd->add_option("--lambda", tr.tc.lambda, "sentiment-loss weight")
      ->capture_default_str();
  train_cmd->add_option("--seed", tr.tc.seed, "run seed")->capture_default_str();
  train_cmd->add_option("--clip-norm", tr.tc.clip_norm, "global gradient-norm clip")
      ->capture_default_str();
  train_cmd->add_option("--embed-dim", tr.embed_dim, "word embedding size")
      ->capture_default_str();
  train_cmd->add_option("--hidden-dim", tr.hidden_dim, "recurrent state size")
      ->capture_default_str();
  train_cmd->add_option("--sentiment-embed-dim", tr.sentiment_embed_dim,
                        "sentiment label embedding size")
      ->capture_default_str();
  train_cmd->add_option("--classifier-hidden", tr.classifier_hidden,
                        "sentiment classifier width (0 = hidden/4)")
      ->capture_default_str();
  train_cmd->add_option("--min-count", tr.min_count, "vocabulary frequency cutoff")
      ->capture_default_str();
  train_cmd->add_option("--log", tr.log_file, "epoch log file");
  // config-file values are injected before the real flags; last one wins
  for (CLI::Option* opt : train_cmd->get_options())
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  GenerateArgs ge;
  CLI::App* generate_cmd = app.add_subcommand("generate", "decode captions from a checkpoint");
  generate_cmd->add_option("--checkpoint", ge.ckpt, "trained checkpoint")->required();
  generate_cmd->add_option("--label", ge.label, "neg | neu | pos")->capture_default_str();
  generate_cmd->add_option("--dataset", ge.dataset, "dataset file to pull a feature from");
  generate_cmd->add_option("--image-id", ge.image_id, "record id inside --dataset");
  generate_cmd->add_option("--feature-file", ge.feature_file,
                           "file with a feature vector (json array or numbers)");
  generate_cmd->add_option("--beam", ge.beam, "beam size")->capture_default_str();
  generate_cmd->add_option("--max-len", ge.max_len, "maximum caption length")
      ->capture_default_str();
  generate_cmd->add_flag("--greedy", ge.greedy, "greedy decode instead of beam search");
  generate_cmd->add_flag("--flip", ge.flip, "also decode with the opposite label");

  EvaluateArgs ev;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "score a checkpoint on a test set");
  evaluate_cmd->add_option("--checkpoint", ev.ckpt, "trained checkpoint")->required();
  evaluate_cmd->add_option("--test", ev.test_file, "test dataset (jsonl)")->required();
  evaluate_cmd->add_option("--pos-lexicon", ev.pos_lexicon, "positive word list")->required();
  evaluate_cmd->add_option("--neg-lexicon", ev.neg_lexicon, "negative word list")->required();
  evaluate_cmd->add_option("--beam", ev.beam, "beam size")->capture_default_str();
  evaluate_cmd->add_option("--max-len", ev.max_len, "maximum caption length")
      ->capture_default_str();
  evaluate_cmd->add_option("--report", ev.report_file, "also write the report here");

  GradCheckArgs gr;
  CLI::App* gradcheck_cmd =
      app.add_subcommand("gradcheck", "finite-difference check of every parameter gradient");
  gradcheck_cmd->add_option("--variant", gr.variant, "baseline | direct | flow | all")
      ->check(CLI::IsMember({"baseline", "direct", "flow", "all"}))
      ->capture_default_str();
  gradcheck_cmd->add_option("--seed", gr.seed, "model/record seed")->capture_default_str();
  gradcheck_cmd->add_option("--embed-dim", gr.embed_dim, "embedding size")
      ->capture_default_str();
  gradcheck_cmd->add_option("--hidden-dim", gr.hidden_dim, "recurrent state size")
      ->capture_default_str();
  gradcheck_cmd->add_option("--vocab-size", gr.vocab_size, "vocabulary size")
      ->capture_default_str();
  gradcheck_cmd->add_option("--feature-dim", gr.feature_dim, "image feature size")
      ->capture_default_str();
  gradcheck_cmd->add_option("--lambda", gr.lambda, "sentiment-loss weight")
      ->capture_default_str();

  try {
    std::vector<std::string> args = expand_config_args(argc, argv);
    std::reverse(args.begin(), args.end());  // CLI11 consumes from the back
    app.parse(std::move(args));
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (gen_corpus->parsed()) {
      echo_config(gen_corpus);
      return cmd_gen_corpus(gc);
    }
    if (train_cmd->parsed()) {
      echo_config(train_cmd);
      return cmd_train(tr);
    }
    if (generate_cmd->parsed()) {
      echo_config(generate_cmd);
      return cmd_generate(ge);
    }
    if (evaluate_cmd->parsed()) {
      echo_config(evaluate_cmd);
      return cmd_evaluate(ev);
    }
    if (gradcheck_cmd->parsed()) {
      echo_config(gradcheck_cmd);
      return cmd_gradcheck(gr);
    }
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
