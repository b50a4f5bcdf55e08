#include "icesar/nn/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "icesar/errors.hpp"

namespace icesar::nn {

using nlohmann::json;

namespace {

json layer_to_json(const Layer& layer) {
  json j{{"type", layer_name(layer)}};
  if (const auto* c = std::get_if<Conv2d>(&layer)) {
    j["in_ch"] = c->in_ch;
    j["out_ch"] = c->out_ch;
    j["weight"] = c->weight;
    j["bias"] = c->bias;
  } else if (const auto* d = std::get_if<Dense>(&layer)) {
    j["in"] = d->in;
    j["out"] = d->out;
    j["weight"] = d->weight;
    j["bias"] = d->bias;
  } else if (const auto* dr = std::get_if<Dropout>(&layer)) {
    j["rate"] = dr->rate;
  } else if (const auto* u = std::get_if<Upsample2>(&layer)) {
    j["out_h"] = u->out_h;
    j["out_w"] = u->out_w;
  }
  return j;
}

Layer layer_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "conv2d") {
    return Conv2d{j.at("in_ch").get<std::size_t>(), j.at("out_ch").get<std::size_t>(),
                  j.at("weight").get<std::size_t>(), j.at("bias").get<std::size_t>()};
  }
  if (type == "dense") {
    return Dense{j.at("in").get<std::size_t>(), j.at("out").get<std::size_t>(), j.at("weight").get<std::size_t>(),
                 j.at("bias").get<std::size_t>()};
  }
  if (type == "relu") return Relu{};
  if (type == "maxpool2") return MaxPool2{};
  if (type == "dropout") return Dropout{j.at("rate").get<double>()};
  if (type == "flatten") return Flatten{};
  if (type == "sigmoid") return Sigmoid{};
  if (type == "upsample2") return Upsample2{j.at("out_h").get<std::size_t>(), j.at("out_w").get<std::size_t>()};
  throw ParseError("checkpoint: unknown layer type " + type);
}

void check_param_refs(const Network& net) {
  auto check = [&](std::size_t idx, const Shape& expected) {
    if (idx >= net.params.size() || net.params[idx].shape != expected) {
      throw ParseError("checkpoint: parameter " + std::to_string(idx) + " missing or misshapen");
    }
  };
  for (const auto& l : net.layers) {
    if (const auto* c = std::get_if<Conv2d>(&l)) {
      check(c->weight, {c->out_ch, c->in_ch, 3, 3});
      check(c->bias, {c->out_ch});
    } else if (const auto* d = std::get_if<Dense>(&l)) {
      check(d->weight, {d->out, d->in});
      check(d->bias, {d->out});
    }
  }
  try {
    (void)net.output_shape();
  } catch (const DimensionError& e) {
    throw ParseError(std::string("checkpoint: layers do not chain: ") + e.what());
  }
}

}  // namespace

std::string serialize_model(const CnnModel& model, std::string_view kind) {
  json doc;
  doc["version"] = kCheckpointVersion;
  doc["kind"] = kind;
  doc["input"] = model.net.input;
  json layers = json::array();
  for (const auto& l : model.net.layers) layers.push_back(layer_to_json(l));
  doc["layers"] = std::move(layers);
  json params = json::array();
  for (const auto& p : model.net.params) params.push_back({{"shape", p.shape}, {"values", p.values}});
  doc["params"] = std::move(params);
  doc["recipe"] = {{"channels", model.recipe.to_string()},
                   {"incidence_normalize", model.recipe.incidence_normalize},
                   {"smooth_sigma", model.recipe.smooth_sigma}};
  doc["standardization"] = {{"mean", model.standardization.mean}, {"stddev", model.standardization.stddev}};
  return doc.dump();
}

CnnModel deserialize_model(std::string_view bytes, std::string* kind) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("checkpoint: malformed JSON: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != kCheckpointVersion) throw ParseError("checkpoint: unsupported version");
    CnnModel m;
    if (kind) *kind = doc.at("kind").get<std::string>();
    m.net.input = doc.at("input").get<Shape>();
    for (const auto& jl : doc.at("layers")) m.net.layers.push_back(layer_from_json(jl));
    for (const auto& jp : doc.at("params")) {
      m.net.params.emplace_back(jp.at("shape").get<Shape>(), jp.at("values").get<std::vector<double>>());
    }
    check_param_refs(m.net);
    m.net.reset_optimizer();
    const auto& r = doc.at("recipe");
    m.recipe = ChannelRecipe::parse(r.at("channels").get<std::string>(), r.at("incidence_normalize").get<bool>());
    m.recipe.smooth_sigma = r.at("smooth_sigma").get<double>();
    m.standardization.mean = doc.at("standardization").at("mean").get<std::vector<double>>();
    m.standardization.stddev = doc.at("standardization").at("stddev").get<std::vector<double>>();
    if (m.standardization.mean.size() != m.recipe.channels.size() ||
        m.standardization.stddev.size() != m.recipe.channels.size() || m.net.input.at(0) != m.recipe.channels.size()) {
      throw ParseError("checkpoint: recipe, standardization and input channels disagree");
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  } catch (const DimensionError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

void save_model(const CnnModel& model, const std::string& path, std::string_view kind) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << serialize_model(model, kind);
  if (!out) throw IoError("write failed: " + path);
}

CnnModel load_model(const std::string& path, std::string* kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return deserialize_model(buf.str(), kind);
}

}  // namespace icesar::nn
