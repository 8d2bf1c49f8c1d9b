#include "efenet/config.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "efenet/errors.hpp"

namespace efenet {
namespace {

using json = nlohmann::json;
using Handlers = std::map<std::string, std::function<void(const json&)>>;

void visit(const json& obj, const std::string& where, const Handlers& handlers) {
  if (!obj.is_object()) throw ConfigError("'" + where + "' must be an object");
  for (const auto& [key, value] : obj.items()) {
    const auto it = handlers.find(key);
    if (it == handlers.end()) throw ConfigError("unknown key '" + key + "' in '" + where + "'");
    try {
      it->second(value);
    } catch (const json::exception& e) {
      throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("bad value for '" + where + "." + key + "': " + e.what());
    }
  }
}

template <class T>
std::function<void(const json&)> set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

std::function<void(const json&)> set_path(std::filesystem::path& field) {
  return [&field](const json& v) { field = v.get<std::string>(); };
}

std::function<void(const json&)> set_optional_path(std::optional<std::filesystem::path>& field) {
  return [&field](const json& v) {
    if (v.is_null())
      field.reset();
    else
      field = v.get<std::string>();
  };
}

void parse_synth(const json& j, SynthClipConfig& s) {
  visit(j, "data.synthetic",
        {{"height", set(s.height)},
         {"width", set(s.width)},
         {"channels", set(s.channels)},
         {"n", set(s.n)},
         {"motion", [&](const json& v) { s.motion = parse_motion_model(v.get<std::string>()); }},
         {"max_step_displacement", set(s.max_step_displacement)},
         {"step_translation",
          [&](const json& v) {
            if (v.is_null())
              s.step_translation.reset();
            else
              s.step_translation = v.get<std::array<double, 2>>();
          }},
         {"noise_sigma", set(s.noise_sigma)},
         {"texture_bandwidth", set(s.texture_bandwidth)},
         {"texture_components", set(s.texture_components)},
         {"texture_contrast", set(s.texture_contrast)}});
}

}  // namespace

void RunConfig::finalize() {
  synth.seed = seed;
  train.seed = seed;
  strategies.seed = seed;
  train.n = synth.n;
}

RunConfig parse_run_config(const json& doc, RunConfig c) {
  visit(doc, "<root>",
        {{"seed", set(c.seed)},
         {"out", set_path(c.out)},
         {"checkpoint", set_optional_path(c.checkpoint)},
         {"data",
          [&](const json& d) {
            visit(d, "data",
                  {{"root", set_optional_path(c.data_root)},
                   {"count", set(c.synth_count)},
                   {"eval_count", set(c.eval_count)},
                   {"synthetic", [&](const json& s) { parse_synth(s, c.synth); }}});
          }},
         {"train",
          [&](const json& t) {
            visit(t, "train",
                  {{"learning_rate", set(c.train.learning_rate)},
                   {"beta1", set(c.train.beta1)},
                   {"beta2", set(c.train.beta2)},
                   {"epsilon", set(c.train.epsilon)},
                   {"iterations", set(c.train.iterations)},
                   {"batch_size", set(c.train.batch_size)},
                   {"checkpoint_interval", set(c.train.checkpoint_interval)},
                   {"loss_border", set(c.train.loss_border)}});
          }},
         {"loss_weights",
          [&](const json& w) {
            visit(w, "loss_weights",
                  {{"sr", set(c.train.weights.sr)},
                   {"flow1", set(c.train.weights.flow1)},
                   {"flow2", set(c.train.weights.flow2)}});
          }},
         {"strategies", [&](const json& s) {
            visit(s, "strategies",
                  {{"provider",
                    [&](const json& v) { c.strategies.provider = parse_provider_kind(v.get<std::string>()); }},
                   {"noise_sigma", set(c.strategies.noise_sigma)},
                   {"margin", set(c.strategies.margin)}});
          }}});
  if (c.synth_count < 0 || c.eval_count < 0) throw ConfigError("data.count and data.eval_count must be >= 0");
  if (c.strategies.margin < 0 || !(c.strategies.noise_sigma >= 0.0))
    throw ConfigError("strategies.margin and strategies.noise_sigma must be >= 0");
  try {
    c.synth.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("data.synthetic: ") + e.what());
  }
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "': " + e.what());
  }
  return parse_run_config(doc, std::move(base));
}

json to_json(const RunConfig& c) {
  json synth = {{"height", c.synth.height},
                {"width", c.synth.width},
                {"channels", c.synth.channels},
                {"n", c.synth.n},
                {"motion", to_string(c.synth.motion)},
                {"max_step_displacement", c.synth.max_step_displacement},
                {"noise_sigma", c.synth.noise_sigma},
                {"texture_bandwidth", c.synth.texture_bandwidth},
                {"texture_components", c.synth.texture_components},
                {"texture_contrast", c.synth.texture_contrast}};
  synth["step_translation"] = c.synth.step_translation ? json(*c.synth.step_translation) : json(nullptr);
  json data = {{"count", c.synth_count}, {"eval_count", c.eval_count}, {"synthetic", synth}};
  data["root"] = c.data_root ? json(c.data_root->string()) : json(nullptr);
  json doc = {{"seed", c.seed},
              {"out", c.out.string()},
              {"data", data},
              {"train",
               {{"learning_rate", c.train.learning_rate},
                {"beta1", c.train.beta1},
                {"beta2", c.train.beta2},
                {"epsilon", c.train.epsilon},
                {"iterations", c.train.iterations},
                {"batch_size", c.train.batch_size},
                {"checkpoint_interval", c.train.checkpoint_interval},
                {"loss_border", c.train.loss_border}}},
              {"loss_weights", {{"sr", c.train.weights.sr}, {"flow1", c.train.weights.flow1}, {"flow2", c.train.weights.flow2}}},
              {"strategies",
               {{"provider", to_string(c.strategies.provider)},
                {"noise_sigma", c.strategies.noise_sigma},
                {"margin", c.strategies.margin}}}};
  doc["checkpoint"] = c.checkpoint ? json(c.checkpoint->string()) : json(nullptr);
  return doc;
}

}  // namespace efenet
