#include "anatgraph/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anatgraph/errors.hpp"

namespace anatgraph {

namespace {

using json = nlohmann::json;

[[noreturn]] void wrong_type(const std::string& path, const char* expected, const json& v) {
  throw ConfigError("expected " + std::string(expected) + ", got " + v.dump(), path);
}

template <class T>
ConfigField bind_field(const std::string& path, T& ref) {
  ConfigField f;
  f.path = path;
  f.get = [&ref] { return json(ref); };
  f.set = [&ref, path](const json& v) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) wrong_type(path, "a boolean", v);
      ref = v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) wrong_type(path, "a string", v);
      ref = v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) wrong_type(path, "a number", v);
      ref = v.get<T>();
    } else if constexpr (std::is_unsigned_v<T>) {
      if (!v.is_number_unsigned()) wrong_type(path, "a non-negative integer", v);
      ref = v.get<T>();
    } else {
      if (!v.is_number_integer()) wrong_type(path, "an integer", v);
      ref = v.get<T>();
    }
  };
  return f;
}

template <class E>
ConfigField bind_enum(const std::string& path, E& ref, std::function<std::string(E)> name,
                      std::function<E(const std::string&)> parse) {
  ConfigField f;
  f.path = path;
  f.get = [&ref, name] { return json(name(ref)); };
  f.set = [&ref, parse, path](const json& v) {
    if (!v.is_string()) wrong_type(path, "a string", v);
    try {
      ref = parse(v.get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(e.what(), path);
    }
  };
  return f;
}

std::string source_name(DataSource s) { return s == DataSource::synthetic ? "synthetic" : "csv"; }

DataSource parse_source(const std::string& s) {
  if (s == "synthetic") return DataSource::synthetic;
  if (s == "csv") return DataSource::csv;
  throw ConfigError("unknown data source '" + s + "' (expected synthetic or csv)");
}

ConfigField bind_coupling(const std::string& path, std::vector<RowMatrix>& ref) {
  ConfigField f;
  f.path = path;
  f.get = [&ref] {
    json out = json::array();
    for (const auto& m : ref) {
      json rows = json::array();
      for (Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row(m.row(i).data(), m.row(i).data() + m.cols());
        rows.push_back(row);
      }
      out.push_back(rows);
    }
    return out;
  };
  f.set = [&ref, path](const json& v) {
    if (!v.is_array()) wrong_type(path, "an array of square matrices", v);
    std::vector<RowMatrix> mats;
    for (std::size_t a = 0; a < v.size(); ++a) {
      const std::string p = path + "[" + std::to_string(a) + "]";
      const json& rows = v[a];
      if (!rows.is_array() || rows.empty()) wrong_type(p, "a non-empty array of rows", rows);
      const Index n = static_cast<Index>(rows.size());
      RowMatrix m(n, n);
      for (Index i = 0; i < n; ++i) {
        const json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Index>(row.size()) != n)
          throw ConfigError("row " + std::to_string(i) + " must have " + std::to_string(n) + " numbers", p);
        for (Index j = 0; j < n; ++j) {
          if (!row[static_cast<std::size_t>(j)].is_number()) wrong_type(p, "numbers", row);
          m(i, j) = row[static_cast<std::size_t>(j)].get<double>();
        }
      }
      mats.push_back(std::move(m));
    }
    ref = std::move(mats);
  };
  return f;
}

ConfigField bind_optional_seed(const std::string& path, std::optional<std::uint64_t>& ref) {
  ConfigField f;
  f.path = path;
  f.get = [&ref] { return ref ? json(*ref) : json(nullptr); };
  f.set = [&ref, path](const json& v) {
    if (v.is_null()) {
      ref.reset();
      return;
    }
    if (!v.is_number_unsigned()) wrong_type(path, "a non-negative integer or null", v);
    ref = v.get<std::uint64_t>();
  };
  return f;
}

}  // namespace

std::vector<ConfigField> config_fields(RunConfig& c) {
  auto& syn = c.data.synthetic;
  auto& m = c.model;
  auto& t = c.train;
  std::function<std::string(DatasetId)> id_name = [](DatasetId id) { return to_string(id); };
  std::function<DatasetId(const std::string&)> id_parse = [](const std::string& s) { return parse_dataset_id(s); };
  std::function<std::string(OptimizerKind)> opt_name = [](OptimizerKind k) { return to_string(k); };
  std::function<OptimizerKind(const std::string&)> opt_parse = parse_optimizer_kind;
  return {
      bind_enum<DataSource>("data.source", c.data.source, source_name, parse_source),
      bind_field("data.synthetic.n_users", syn.n_users),
      bind_field("data.synthetic.n_activities", syn.n_activities),
      bind_enum<DatasetId>("data.synthetic.layout", syn.layout, id_name, id_parse),
      bind_field("data.synthetic.channels", syn.channels),
      bind_field("data.synthetic.segments_per_activity", syn.segments_per_activity),
      bind_field("data.synthetic.segment_length", syn.segment_length),
      bind_field("data.synthetic.noise", syn.noise),
      bind_field("data.synthetic.amplitude_bias", syn.amplitude_bias),
      bind_field("data.synthetic.phase_bias", syn.phase_bias),
      bind_field("data.synthetic.offset_bias", syn.offset_bias),
      bind_field("data.synthetic.frequency_bias", syn.frequency_bias),
      bind_field("data.synthetic.interaction_bias", syn.interaction_bias),
      bind_field("data.synthetic.sampling_rate_hz", syn.sampling_rate_hz),
      bind_coupling("data.synthetic.coupling", syn.coupling),
      bind_optional_seed("data.synthetic.seed", c.data.synthetic_seed),
      bind_field("data.csv_path", c.data.csv_path),
      bind_field("data.manifest_path", c.data.manifest_path),
      bind_field("data.window", c.data.window),
      bind_field("data.stride", c.data.stride),
      bind_field("graph.rules_path", c.graph.rules_path),
      bind_field("graph.cross_lateral", c.graph.cross_lateral),
      bind_field("model.conv1_channels", m.node.conv1_channels),
      bind_field("model.conv2_channels", m.node.conv2_channels),
      bind_field("model.kernel", m.node.kernel),
      bind_field("model.pool", m.node.pool),
      bind_field("model.bn_eps", m.node.bn_eps),
      bind_field("model.bn_momentum", m.node.bn_momentum),
      bind_field("model.edge_init.alpha", m.edge_init.alpha),
      bind_field("model.edge_init.r_min", m.edge_init.r_min),
      bind_field("model.edge_init.r_max", m.edge_init.r_max),
      bind_field("model.edge_init.beta", m.edge_init.beta),
      bind_field("model.edge_init.seed", m.edge_init.seed),
      bind_field("model.embed_dim", m.edge.embed_dim),
      bind_field("model.latent_dim", m.edge.latent_dim),
      bind_field("model.cvae_hidden", m.edge.hidden),
      bind_field("model.leaky_slope", m.edge.leaky_slope),
      bind_field("model.uniform_attention", m.edge.uniform_attention),
      bind_field("model.gcn1_dim", m.acke.layer1_dim),
      bind_field("model.gcn2_dim", m.acke.layer2_dim),
      bind_field("model.graph_embedding_dim", m.acke.embedding_dim),
      bind_field("model.classifier_hidden", m.classifier_hidden),
      bind_field("model.discriminator_hidden", m.discriminator_hidden),
      bind_field("loss.lambda_edge", c.loss.lambda_edge),
      bind_field("loss.kl_weight", c.loss.kl_weight),
      bind_field("loss.zeta", c.loss.zeta),
      bind_field("train.epochs", t.epochs),
      bind_field("train.batch_size", t.batch_size),
      bind_enum<OptimizerKind>("train.optimizer", t.optimizer.kind, opt_name, opt_parse),
      bind_field("train.lr", t.optimizer.learning_rate),
      bind_field("train.beta1", t.optimizer.beta1),
      bind_field("train.beta2", t.optimizer.beta2),
      bind_field("train.adam_eps", t.optimizer.epsilon),
      bind_field("train.phase_epochs", t.phase_epochs),
      bind_field("train.cvae_warmup_epochs", t.cvae_warmup_epochs),
      bind_field("train.track_target_accuracy", t.track_target_accuracy),
      bind_field("train.within_user_holdout", t.within_user_holdout),
      bind_field("train.target_cluster", t.target_cluster),
      bind_field("analysis.pearson_step", c.analysis.pearson_step),
      bind_field("seed", c.seed),
  };
}

void RunConfig::validate() const {
  if (data.source == DataSource::csv) {
    if (data.csv_path.empty()) throw ConfigError("required when data.source is csv", "data.csv_path");
    if (data.manifest_path.empty()) throw ConfigError("required when data.source is csv", "data.manifest_path");
  } else {
    SyntheticConfig s = data.synthetic;
    s.window = data.window;
    s.validate();
  }
  if (data.window < 1) throw ConfigError("must be >= 1", "data.window");
  if (data.stride < 1) throw ConfigError("must be >= 1", "data.stride");
  ModelConfig resolved = model;
  resolved.node.window = data.window;
  if (data.source == DataSource::synthetic) resolved.node.channels = data.synthetic.channels;
  resolved.validate();
  loss.validate();
  if (train.epochs < 1) throw ConfigError("must be >= 1", "train.epochs");
  if (train.batch_size < 2) throw ConfigError("must be >= 2 (batch normalization)", "train.batch_size");
  if (!(train.optimizer.learning_rate > 0.0)) throw ConfigError("must be > 0", "train.lr");
  if (!(train.optimizer.beta1 >= 0.0 && train.optimizer.beta1 < 1.0)) throw ConfigError("must be in [0, 1)", "train.beta1");
  if (!(train.optimizer.beta2 >= 0.0 && train.optimizer.beta2 < 1.0)) throw ConfigError("must be in [0, 1)", "train.beta2");
  if (!(train.optimizer.epsilon > 0.0)) throw ConfigError("must be > 0", "train.adam_eps");
  if (train.phase_epochs < 1) throw ConfigError("must be >= 1", "train.phase_epochs");
  if (train.cvae_warmup_epochs < 0 || train.cvae_warmup_epochs >= train.epochs)
    throw ConfigError("must be in [0, train.epochs)", "train.cvae_warmup_epochs");
  if (analysis.pearson_step < 1) throw ConfigError("must be >= 1", "analysis.pearson_step");
}

nlohmann::ordered_json config_to_json(const RunConfig& config) {
  RunConfig copy = config;
  nlohmann::ordered_json doc = nlohmann::ordered_json::object();
  doc["format_version"] = 1;
  for (const auto& f : config_fields(copy)) {
    nlohmann::ordered_json* node = &doc;
    std::string path = f.path;
    std::size_t dot;
    while ((dot = path.find('.')) != std::string::npos) {
      node = &(*node)[path.substr(0, dot)];
      path = path.substr(dot + 1);
    }
    (*node)[path] = nlohmann::ordered_json::parse(f.get().dump());
  }
  return doc;
}

namespace {

void apply_json(const json& node, const std::string& prefix, std::map<std::string, ConfigField*>& index) {
  for (const auto& [key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (prefix.empty() && key == "format_version") {
      if (!value.is_number_integer() || value.get<int>() != 1) throw ConfigError("unsupported version", path);
      continue;
    }
    if (auto it = index.find(path); it != index.end()) {
      it->second->set(value);
    } else if (value.is_object()) {
      bool any = false;
      for (const auto& [p, f] : index) any = any || p.rfind(path + ".", 0) == 0;
      if (!any) throw ConfigError("unknown key", path);
      apply_json(value, path, index);
    } else {
      throw ConfigError("unknown key", path);
    }
  }
}

}  // namespace

RunConfig config_from_json(const json& doc, RunConfig base) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object", "<root>");
  auto fields = config_fields(base);
  std::map<std::string, ConfigField*> index;
  for (auto& f : fields) index[f.path] = &f;
  apply_json(doc, "", index);
  base.validate();
  return base;
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override must look like key=value, got '" + assignment + "'", "--set");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  auto fields = config_fields(config);
  ConfigField* target = nullptr;
  std::vector<std::string> matches;
  for (auto& f : fields)
    if (f.path == key) target = &f;
  if (!target) {
    for (auto& f : fields) {
      const auto dot = f.path.rfind('.');
      const std::string leaf = dot == std::string::npos ? f.path : f.path.substr(dot + 1);
      const bool suffix = f.path.size() > key.size() &&
                          f.path.compare(f.path.size() - key.size(), key.size(), key) == 0 &&
                          f.path[f.path.size() - key.size() - 1] == '.';
      if (leaf == key || suffix) {
        target = &f;
        matches.push_back(f.path);
      }
    }
    if (matches.empty()) throw ConfigError("unknown key", key);
    if (matches.size() > 1) {
      std::string all;
      for (const auto& m : matches) all += (all.empty() ? "" : ", ") + m;
      throw ConfigError("ambiguous key (matches " + all + ")", key);
    }
  }
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  target->set(value);
}

std::vector<std::string> preset_names() { return {"synth_default"}; }

RunConfig load_config(const std::string& preset_or_path) {
  if (preset_or_path == "synth_default") return RunConfig{};
  std::ifstream in(preset_or_path);
  if (!in) {
    std::string names;
    for (const auto& n : preset_names()) names += (names.empty() ? "" : ", ") + n;
    throw ConfigError("no such file or preset '" + preset_or_path + "' (presets: " + names + ")", "--config");
  }
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "--config");
  }
  return config_from_json(doc);
}

void write_config(const std::filesystem::path& path, const RunConfig& config) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << config_to_json(config).dump(2) << '\n';
}

}  // namespace anatgraph
