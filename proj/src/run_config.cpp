#include "icesar/run_config.hpp"

#include <fstream>
#include <sstream>

#include "icesar/errors.hpp"

namespace icesar {

using nlohmann::ordered_json;

namespace {

void merge_into(ordered_json& dst, const ordered_json& src, const std::string& where) {
  if (!src.is_object()) throw InvalidArgument("config: " + (where.empty() ? "document" : where) + " must be an object");
  for (const auto& [key, value] : src.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!dst.contains(key)) throw InvalidArgument("config: unknown key " + path);
    auto& slot = dst[key];
    if (slot.is_object()) {
      merge_into(slot, value, path);
    } else {
      const bool ok = slot.is_number() ? value.is_number()
                                       : slot.type() == value.type() || (slot.is_array() && value.is_array());
      if (!ok) throw InvalidArgument("config: wrong type for " + path);
      slot = value;
    }
  }
}

template <typename T>
T get(const ordered_json& doc, std::initializer_list<const char*> path) {
  const ordered_json* node = &doc;
  for (const char* key : path) node = &node->at(key);
  return node->get<T>();
}

}  // namespace

RunConfig::RunConfig() {
  const nn::TrainConfig t;
  const GbmParams g;
  const AugmentationPolicy a;
  const nn::PretrainConfig pc;
  const nn::ArchSpec arch;
  doc_ = {
      {"seed", 42},
      {"synth", {{"n_samples", 1200}, {"iceberg_fraction", 0.5}, {"speckle_looks", 6}, {"side", 75}}},
      {"split", {{"val_ratio", 0.2}}},
      {"gbm",
       {{"n_trees", g.n_trees},
        {"max_depth", g.max_depth},
        {"shrinkage", g.shrinkage},
        {"min_samples_leaf", g.min_samples_leaf}}},
      {"cnn",
       {{"epochs", t.epochs},
        {"batch_size", t.batch_size},
        {"lr0", t.lr0},
        {"patience", t.plateau_patience},
        {"factor", t.plateau_factor},
        {"min_lr", t.min_lr},
        {"channels", t.recipe.to_string()},
        {"incidence_normalize", t.recipe.incidence_normalize},
        {"smooth_sigma", t.recipe.smooth_sigma},
        {"conv_channels", arch.conv_channels},
        {"dense_units", arch.dense_units},
        {"dropout", arch.dropout}}},
      {"augment",
       {{"multiplier", 1},
        {"width_shift_frac", a.width_shift_frac},
        {"height_shift_frac", a.height_shift_frac},
        {"rotation_max_deg", a.rotation_max_deg},
        {"horizontal_reflect", a.allow_horizontal_reflect},
        {"vertical_reflect", a.allow_vertical_reflect}}},
      {"ae", {{"epochs", pc.epochs}, {"batch_size", pc.batch_size}, {"lr", pc.lr}}},
      {"stack", {{"k_folds", 5}, {"members", {"gbm", "cnn"}}, {"cnn_epochs", 10}}},
      {"curve", {{"fractions", {0.1, 0.3, 1.0}}, {"val_ratio", 0.2}}},
  };
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  RunConfig cfg;
  try {
    cfg.merge(ordered_json::parse(buf.str()));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("config " + path + ": " + e.what());
  }
  return cfg;
}

void RunConfig::merge(const ordered_json& patch) { merge_into(doc_, patch, ""); }

void RunConfig::set(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw InvalidArgument("override must look like key.path=value");
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  ordered_json value;
  try {
    value = ordered_json::parse(raw);
  } catch (const nlohmann::json::parse_error&) {
    value = raw;
  }
  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string key; std::getline(ss, key, '.');) {
    if (key.empty()) throw InvalidArgument("override key has an empty component: " + path);
    keys.push_back(key);
  }
  if (keys.empty() || path.back() == '.') throw InvalidArgument("override key has an empty component: " + path);
  ordered_json patch = value;
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) patch = ordered_json{{*it, patch}};
  merge(patch);
}

std::uint64_t RunConfig::seed() const { return get<std::uint64_t>(doc_, {"seed"}); }
void RunConfig::set_seed(std::uint64_t seed) { doc_["seed"] = seed; }

SynthConfig RunConfig::synth() const {
  SynthConfig c;
  c.n_samples = get<std::size_t>(doc_, {"synth", "n_samples"});
  c.iceberg_fraction = get<double>(doc_, {"synth", "iceberg_fraction"});
  c.speckle_looks = get<int>(doc_, {"synth", "speckle_looks"});
  c.side = side();
  c.seed = seed();
  c.validate();
  return c;
}

std::size_t RunConfig::side() const { return get<std::size_t>(doc_, {"synth", "side"}); }
double RunConfig::val_ratio() const { return get<double>(doc_, {"split", "val_ratio"}); }

GbmParams RunConfig::gbm() const {
  GbmParams p;
  p.n_trees = get<int>(doc_, {"gbm", "n_trees"});
  p.max_depth = get<int>(doc_, {"gbm", "max_depth"});
  p.shrinkage = get<double>(doc_, {"gbm", "shrinkage"});
  p.min_samples_leaf = get<std::size_t>(doc_, {"gbm", "min_samples_leaf"});
  p.seed = seed();
  p.validate();
  return p;
}

nn::TrainConfig RunConfig::cnn() const {
  nn::TrainConfig t;
  const auto& c = doc_.at("cnn");
  t.epochs = c.at("epochs").get<int>();
  t.batch_size = c.at("batch_size").get<std::size_t>();
  t.lr0 = c.at("lr0").get<double>();
  t.plateau_patience = c.at("patience").get<int>();
  t.plateau_factor = c.at("factor").get<double>();
  t.min_lr = c.at("min_lr").get<double>();
  t.recipe = nn::ChannelRecipe::parse(c.at("channels").get<std::string>(), c.at("incidence_normalize").get<bool>());
  t.recipe.smooth_sigma = c.at("smooth_sigma").get<double>();
  t.seed = seed();
  t.validate();
  return t;
}

nn::ArchSpec RunConfig::arch() const {
  nn::ArchSpec a;
  const auto& c = doc_.at("cnn");
  a.input_ch = cnn().recipe.channels.size();
  a.height = a.width = side();
  const auto conv = c.at("conv_channels").get<std::vector<std::size_t>>();
  if (conv.size() != 3) throw InvalidArgument("config: cnn.conv_channels needs three entries");
  std::copy(conv.begin(), conv.end(), a.conv_channels.begin());
  a.dense_units = c.at("dense_units").get<std::size_t>();
  a.dropout = c.at("dropout").get<double>();
  return a;
}

AugmentationPolicy RunConfig::augment_policy() const {
  AugmentationPolicy p;
  const auto& a = doc_.at("augment");
  p.width_shift_frac = a.at("width_shift_frac").get<double>();
  p.height_shift_frac = a.at("height_shift_frac").get<double>();
  p.rotation_max_deg = a.at("rotation_max_deg").get<double>();
  p.allow_horizontal_reflect = a.at("horizontal_reflect").get<bool>();
  p.allow_vertical_reflect = a.at("vertical_reflect").get<bool>();
  p.validate();
  return p;
}

int RunConfig::augment_multiplier() const {
  const int m = get<int>(doc_, {"augment", "multiplier"});
  if (m < 1) throw InvalidArgument("config: augment.multiplier must be >= 1");
  return m;
}

nn::PretrainConfig RunConfig::pretrain() const {
  nn::PretrainConfig p;
  p.epochs = get<int>(doc_, {"ae", "epochs"});
  p.batch_size = get<std::size_t>(doc_, {"ae", "batch_size"});
  p.lr = get<double>(doc_, {"ae", "lr"});
  p.seed = seed();
  p.recipe = cnn().recipe;
  if (p.epochs < 1 || p.batch_size < 1 || !(p.lr > 0.0)) throw InvalidArgument("config: invalid ae section");
  return p;
}

int RunConfig::k_folds() const { return get<int>(doc_, {"stack", "k_folds"}); }

std::vector<std::string> RunConfig::stack_members() const {
  return get<std::vector<std::string>>(doc_, {"stack", "members"});
}

int RunConfig::stack_cnn_epochs() const { return get<int>(doc_, {"stack", "cnn_epochs"}); }

CurveConfig RunConfig::curve() const {
  CurveConfig c;
  c.train = cnn();
  c.arch = arch();
  c.policy = augment_policy();
  c.augment_multiplier = augment_multiplier();
  c.val_ratio = get<double>(doc_, {"curve", "val_ratio"});
  c.seed = seed();
  return c;
}

std::vector<double> RunConfig::curve_fractions() const {
  return get<std::vector<double>>(doc_, {"curve", "fractions"});
}

}  // namespace icesar
