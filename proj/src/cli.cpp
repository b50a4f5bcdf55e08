#include "icesar/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "icesar/data_model.hpp"
#include "icesar/ensemble.hpp"
#include "icesar/errors.hpp"
#include "icesar/gbm.hpp"
#include "icesar/harness.hpp"
#include "icesar/image_ops.hpp"
#include "icesar/nn/checkpoint.hpp"
#include "icesar/nn/network.hpp"
#include "icesar/run_config.hpp"
#include "icesar/sar_features.hpp"

namespace icesar {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string out = ".";
  std::string input;
  std::vector<std::string> overrides;
};

struct Options {
  std::string source;       // ingest
  bool unlabeled = false;   // ingest
  std::string init;         // train-cnn
  std::string model;        // predict
  std::string test;         // stack
  std::string predictions;  // eval, report
  std::string history;      // report
  std::string run;          // report
  std::vector<std::string> ids;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

class Run {
 public:
  Run(const Globals& g, const Options& o) : g_(g), o_(o), out_(g.out) {
    if (!g.config.empty()) cfg_ = RunConfig::from_file(g.config);
    for (const auto& s : g.overrides) cfg_.set(s);
    if (g.seed_given) cfg_.set_seed(g.seed);
    fs::create_directories(out_);
    write_file(out_ / "config.json", cfg_.dump());
  }

  void synth() {
    save_samples(synth_dataset(cfg_.synth()), (out_ / "samples.json").string());
  }

  void ingest() {
    if (o_.source.empty()) throw InvalidArgument("ingest: --from is required");
    const auto set = load_samples(o_.source, !o_.unlabeled, cfg_.side());
    save_samples(set, (out_ / "samples.json").string());
  }

  void augment() {
    const auto set = input(true);
    const auto aug = augment_dataset(set, cfg_.augment_policy(), cfg_.augment_multiplier(), cfg_.seed());
    save_samples(aug, (out_ / "augmented.json").string());
  }

  void features() {
    const auto set = input(false);
    const double mean_angle = impute_incidence(set).second;
    std::vector<FeatureVector> vs;
    for (const auto& s : set.samples()) vs.push_back(feature_vector(s, mean_angle));
    std::ostringstream f, c;
    write_features_csv(f, set, vs);
    write_file(out_ / "features.csv", f.str());
    const auto fields = raw_band_stat_fields();
    write_correlation_csv(c, correlation_matrix(vs, fields), fields);
    write_file(out_ / "correlation.csv", c.str());
  }

  void train_gbm() {
    const auto [train, val, mean_angle] = split();
    const auto model = fit_gbm(feature_rows(train, mean_angle), labels_of(train), cfg_.gbm());
    write_file(out_ / "gbm_model.json", serialize_gbm(model));
    write_predictions(val, predict_gbm(model, feature_rows(val, mean_angle)), "val_predictions.csv");
  }

  void pretrain_ae() {
    const auto set = impute_incidence(input(false)).first;
    const auto result = nn::pretrain_autoencoder(nn::build_autoencoder(cfg_.arch(), cfg_.seed()), set, cfg_.pretrain());
    nn::save_model(result.autoencoder, (out_ / "ae_model.json").string(), "autoencoder");
    std::ostringstream h;
    h << "epoch,mse\n";
    char buf[64];
    for (std::size_t e = 0; e < result.epoch_mse.size(); ++e) {
      std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, result.epoch_mse[e]);
      h << buf;
    }
    write_file(out_ / "ae_history.csv", h.str());
  }

  void train_cnn() {
    auto [train, val, mean_angle] = split();
    const auto mult = cfg_.augment_multiplier();
    if (mult > 1) train = augment_dataset(train, cfg_.augment_policy(), mult, cfg_.seed());
    auto net = nn::build_classifier(cfg_.arch(), cfg_.seed());
    if (!o_.init.empty()) {
      std::string kind;
      const auto ae = nn::load_model(o_.init, &kind);
      if (kind != "autoencoder") throw InvalidArgument("train-cnn: --init must name an autoencoder checkpoint");
      if (ae.recipe != cfg_.cnn().recipe) throw InvalidArgument("train-cnn: autoencoder channel recipe differs");
      net = nn::transfer_encoder(ae.net, net);
    }
    const auto result = nn::fit(std::move(net), train, val, cfg_.cnn());
    nn::save_model(result.model, (out_ / "cnn_model.json").string());
    std::ostringstream h;
    nn::write_history_csv(h, result.history);
    write_file(out_ / "history.csv", h.str());
    write_predictions(val, nn::predict_cnn(result.model, val), "val_predictions.csv");
  }

  void predict() {
    if (o_.model.empty()) throw InvalidArgument("predict: --model is required");
    const auto raw = read_file(o_.model);
    auto set = input(false, false);
    const auto imputation = fs::path(o_.model).parent_path() / "imputation.json";
    const double mean_angle = fs::is_regular_file(imputation)
                                  ? nlohmann::json::parse(read_file(imputation.string())).at("mean_angle").get<double>()
                                  : impute_incidence(set).second;
    set = impute_incidence_with(set, mean_angle);
    std::vector<double> p;
    if (nlohmann::json::parse(raw).contains("header")) {
      p = predict_gbm(deserialize_gbm(raw), feature_rows(set, mean_angle));
    } else {
      std::string kind;
      const auto model = nn::deserialize_model(raw, &kind);
      if (kind != "classifier") throw InvalidArgument("predict: model is not a classifier");
      p = nn::predict_cnn(model, set);
    }
    write_predictions(set, p, "submission.csv");
  }

  void stack() {
    const auto set = input(true);
    const auto members = make_members();
    const auto oof = oof_predictions(set, members, cfg_.k_folds(), cfg_.seed());
    std::ostringstream csv;
    write_oof_csv(csv, oof);
    write_file(out_ / "oof.csv", csv.str());
    const auto stacker = fit_stacker(oof, oof.labels);
    write_file(out_ / "stacker.json", serialize_stacker(stacker, oof.members));
    write_predictions(set, predict_stacker(stacker, oof.columns), "stack_oof_predictions.csv");
    std::vector<PredictionSet> cols;
    for (std::size_t m = 0; m < oof.columns.size(); ++m) cols.push_back(oof.column(m));
    write_submission(blend(cols, BlendMode::mean), (out_ / "blend_oof_predictions.csv").string());

    if (!o_.test.empty()) {
      auto test = load_samples(o_.test, false, cfg_.side());
      std::vector<std::vector<double>> test_cols;
      for (const auto& m : members) test_cols.push_back(m.fit_predict(set, test));
      write_predictions(test, predict_stacker(stacker, test_cols), "submission.csv");
    }
  }

  void eval() {
    const auto preds = read_submission(o_.predictions.empty() ? (out_ / "val_predictions.csv").string() : o_.predictions);
    write_file(out_ / "metrics.json", metrics_json(preds, scored_subset(input(true), preds), cfg_.dump()));
  }

  void curve() {
    const auto fractions = cfg_.curve_fractions();
    const auto rows = learning_curve(input(true), fractions, cfg_.curve());
    std::ostringstream csv;
    write_curve_csv(csv, rows);
    write_file(out_ / "curve.csv", csv.str());
  }

  void report() {
    const fs::path run = o_.run.empty() ? out_ : fs::path(o_.run);
    ReportInputs in;
    in.predictions = o_.predictions.empty() ? (run / "val_predictions.csv").string() : o_.predictions;
    in.samples = g_.input.empty() ? (run / "samples.json").string() : g_.input;
    in.history = o_.history.empty() ? (fs::exists(run / "history.csv") ? (run / "history.csv").string() : "")
                                    : o_.history;
    in.config = (out_ / "config.json").string();
    in.composite_ids = o_.ids;
    in.side = cfg_.side();
    write_report(in, (out_ / "report").string());
  }

 private:
  SampleSet input(bool labeled, bool required_labels = true) const {
    const auto path = g_.input.empty() ? (out_ / "samples.json").string() : g_.input;
    return load_samples(path, labeled && required_labels, cfg_.side());
  }

  struct Split {
    SampleSet train, val;
    double mean_angle;
  };

  Split split() const {
    const auto set = input(true);
    auto [train, val] = split_train_validation(set, cfg_.val_ratio(), cfg_.seed());
    const auto [train_imputed, mean_angle] = impute_incidence(train);
    nlohmann::ordered_json imp{{"mean_angle", mean_angle}};
    write_file(out_ / "imputation.json", imp.dump(2) + "\n");
    return {train_imputed, impute_incidence_with(val, mean_angle), mean_angle};
  }

  void write_predictions(const SampleSet& set, const std::vector<double>& p, const char* name) const {
    PredictionSet preds;
    for (const auto& s : set.samples()) preds.ids.push_back(s.id);
    preds.probs = p;
    write_submission(preds, (out_ / name).string());
  }

  static SampleSet scored_subset(const SampleSet& set, const PredictionSet& preds) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < set.size(); ++i) index.emplace(set[i].id, i);
    std::vector<SarSample> out;
    for (const auto& id : preds.ids) {
      const auto it = index.find(id);
      if (it == index.end()) throw DimensionError("no labeled sample for prediction id " + id);
      out.push_back(set[it->second]);
    }
    return SampleSet(std::move(out), set.provenance());
  }

  std::vector<Member> make_members() const {
    std::vector<Member> members;
    for (const auto& name : cfg_.stack_members()) {
      if (name == "gbm") {
        members.push_back(gbm_member(cfg_.gbm()));
      } else if (name == "cnn") {
        CnnMemberConfig c;
        c.train = cfg_.cnn();
        c.train.epochs = cfg_.stack_cnn_epochs();
        c.arch = cfg_.arch();
        c.val_ratio = cfg_.val_ratio();
        members.push_back(cnn_member(c));
      } else {
        throw InvalidArgument("stack: unknown member " + name);
      }
    }
    return members;
  }

  const Globals& g_;
  const Options& o_;
  fs::path out_;
  RunConfig cfg_;
};

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"SAR iceberg/ship classification pipeline", "icesar"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Globals g;
  Options o;
  app.add_option("--config", g.config, "JSON run configuration")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", g.seed, "Seed for every random stream");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--input", g.input, "Samples JSON (default: <out>/samples.json)");
  app.add_option("--set", g.overrides, "Config override key.path=value (repeatable)");

  using Action = void (Run::*)();
  const std::vector<std::tuple<std::string, std::string, Action>> commands = {
      {"synth", "Generate a synthetic labeled scene set", &Run::synth},
      {"ingest", "Validate competition JSON into <out>/samples.json", &Run::ingest},
      {"augment", "Write an augmented copy of the input", &Run::augment},
      {"features", "Write the feature table and band-statistic correlations", &Run::features},
      {"train-gbm", "Fit the gradient-boosted baseline on a 4:1 split", &Run::train_gbm},
      {"pretrain-ae", "Train the convolutional autoencoder", &Run::pretrain_ae},
      {"train-cnn", "Train the CNN classifier on a 4:1 split", &Run::train_cnn},
      {"predict", "Score the input with a saved model", &Run::predict},
      {"stack", "Out-of-fold predictions and a logistic stacker", &Run::stack},
      {"eval", "Metrics JSON for stored predictions", &Run::eval},
      {"curve", "Learning-curve table over training fractions", &Run::curve},
      {"report", "Metrics, history, correlations and composites for a run", &Run::report},
  };
  Action chosen = nullptr;
  for (const auto& [name, help, action] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->callback([&chosen, action = action] { chosen = action; });
    if (name == "ingest") {
      sub->add_option("--from", o.source, "Competition JSON file")->required();
      sub->add_flag("--unlabeled", o.unlabeled, "Records carry no is_iceberg");
    } else if (name == "train-cnn") {
      sub->add_option("--init", o.init, "Autoencoder checkpoint for encoder transfer");
    } else if (name == "predict") {
      sub->add_option("--model", o.model, "gbm_model.json or cnn_model.json")->required();
    } else if (name == "stack") {
      sub->add_option("--test", o.test, "Unlabeled JSON to score with the stacked ensemble");
    } else if (name == "eval") {
      sub->add_option("--predictions", o.predictions, "Submission-format CSV");
    } else if (name == "report") {
      sub->add_option("--run", o.run, "Run directory (default: --out)");
      sub->add_option("--predictions", o.predictions, "Submission-format CSV");
      sub->add_option("--history", o.history, "History CSV");
      sub->add_option("--ids", o.ids, "Sample ids to render as color composites");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "icesar: " << e.what() << "\n" << app.help();
    return 2;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    Run run(g, o);
    (run.*chosen)();
  } catch (const std::exception& e) {
    std::cerr << "icesar: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace icesar
