#include "anatgraph/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>

#include "anatgraph/errors.hpp"
#include "anatgraph/layers.hpp"

namespace anatgraph {

void RawRecording::validate() const {
  for (std::size_t s = 1; s < streams.size(); ++s)
    if (streams[s].rows() != streams[0].rows() || streams[s].cols() != streams[0].cols())
      throw LayoutError("recording of user " + std::to_string(user_id) + ": stream " + std::to_string(s) +
                        " is " + std::to_string(streams[s].rows()) + "x" + std::to_string(streams[s].cols()) +
                        ", stream 0 is " + std::to_string(streams[0].rows()) + "x" +
                        std::to_string(streams[0].cols()));
}

std::string Manifest::column(Index sensor, Index channel) const {
  return layout.at(sensor).key + "_" + channels.at(static_cast<std::size_t>(channel));
}

RelationRules Manifest::relation_rules() const {
  return rules ? *rules : RelationRules::defaults(layout.dataset());
}

void Manifest::validate() const {
  if (layout.size() < 2) throw ConfigError("layout needs at least two positions", "manifest.layout");
  if (channels.empty()) throw ConfigError("channel list is empty", "manifest.channels");
  std::set<std::string> seen;
  for (const auto& c : channels)
    if (c.empty() || !seen.insert(c).second)
      throw ConfigError("channel names must be non-empty and unique", "manifest.channels");
  if (classes.empty()) throw ConfigError("class list is empty", "manifest.classes");
  if (!(sampling_rate_hz > 0.0)) throw ConfigError("must be > 0", "manifest.sampling_rate_hz");
  std::set<int> users;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const std::string path = "manifest.clusters[" + std::to_string(i) + "]";
    if (clusters[i].users.empty()) throw ConfigError("cluster has no users", path);
    for (int u : clusters[i].users)
      if (!users.insert(u).second) throw ConfigError("user " + std::to_string(u) + " in two clusters", path);
  }
}

std::vector<std::string> builtin_classes(DatasetId id) {
  switch (id) {
    case DatasetId::oppt:
      return {"Open Door 1",     "Open Door 2",     "Close Door 1",     "Close Door 2",
              "Open Fridge",     "Close Fridge",    "Open Dishwasher",  "Close Dishwasher",
              "Open Drawer 1",   "Close Drawer 1",  "Open Drawer 2",    "Close Drawer 2",
              "Open Drawer 3",   "Close Drawer 3",  "Clean Table",      "Drink From Cup",
              "Toggle Switch"};
    case DatasetId::dsads:
      return {"Sitting",
              "Standing",
              "Lying On Back",
              "Lying On Right",
              "Ascending Stairs",
              "Descending Stairs",
              "Standing In Elevator Still",
              "Moving Around In Elevator",
              "Walking In Parking Lot",
              "Walking On Treadmill In Flat",
              "Walking On Treadmill Inclined Positions",
              "Running On Treadmill In Flat",
              "Exercising On Stepper",
              "Exercising On Cross Trainer",
              "Cycling On Exercise Bike In Horizontal Positions",
              "Cycling On Exercise Bike In Vertical Positions",
              "Rowing",
              "Jumping",
              "Playing Basketball"};
    case DatasetId::custom: break;
  }
  throw LayoutError("custom layouts have no built-in class list");
}

Manifest builtin_manifest(DatasetId id) {
  Manifest m;
  m.layout = SensorLayout::for_dataset(id);
  m.channels = {"x", "y", "z"};
  m.classes = builtin_classes(id);
  if (id == DatasetId::oppt) {
    m.sampling_rate_hz = 30.0;
    for (int u = 1; u <= 4; ++u) m.clusters.push_back({std::string(1, static_cast<char>('A' + u - 1)), {u}});
  } else {
    m.sampling_rate_hz = 25.0;
    for (int c = 0; c < 4; ++c)
      m.clusters.push_back({std::string(1, static_cast<char>('A' + c)), {2 * c + 1, 2 * c + 2}});
  }
  return m;
}

nlohmann::json manifest_to_json(const Manifest& m) {
  nlohmann::ordered_json doc;
  doc["format_version"] = 1;
  doc["layout"] = to_string(m.layout.dataset());
  if (!m.rules_path.empty()) doc["rules_path"] = m.rules_path;
  doc["channels"] = m.channels;
  doc["classes"] = m.classes;
  doc["sampling_rate_hz"] = m.sampling_rate_hz;
  nlohmann::ordered_json clusters = nlohmann::ordered_json::array();
  for (const auto& c : m.clusters) clusters.push_back({{"name", c.name}, {"users", c.users}});
  doc["clusters"] = clusters;
  return nlohmann::json::parse(doc.dump());
}

namespace {

template <class T>
T field(const nlohmann::json& doc, const std::string& key, const std::string& path) {
  if (!doc.contains(key)) throw ConfigError("missing field", path + "." + key);
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("wrong type", path + "." + key);
  }
}

}  // namespace

Manifest manifest_from_json(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
  const std::string root = "manifest";
  if (!doc.is_object()) throw ConfigError("manifest must be a JSON object", root);
  static const std::set<std::string> known{"format_version", "layout",           "rules_path", "channels",
                                           "classes",        "sampling_rate_hz", "clusters"};
  for (const auto& [k, v] : doc.items())
    if (!known.count(k)) throw ConfigError("unknown field", root + "." + k);
  if (field<int>(doc, "format_version", root) != 1) throw ConfigError("unsupported version", root + ".format_version");

  Manifest m;
  const auto layout_name = field<std::string>(doc, "layout", root);
  DatasetId id;
  try {
    id = parse_dataset_id(layout_name);
  } catch (const LayoutError& e) {
    throw ConfigError(e.what(), root + ".layout");
  }
  if (doc.contains("rules_path")) {
    m.rules_path = field<std::string>(doc, "rules_path", root);
    std::filesystem::path p = m.rules_path;
    if (p.is_relative()) p = base_dir / p;
    RulesDocument rules = load_rules(p);
    if (rules.layout.dataset() != id)
      throw ConfigError("rules file is for layout " + to_string(rules.layout.dataset()), root + ".rules_path");
    m.layout = rules.layout;
    m.rules = rules.rules;
  } else {
    if (id == DatasetId::custom) throw ConfigError("custom layouts need rules_path", root + ".layout");
    m.layout = SensorLayout::for_dataset(id);
  }
  m.channels = field<std::vector<std::string>>(doc, "channels", root);
  if (doc.contains("classes"))
    m.classes = field<std::vector<std::string>>(doc, "classes", root);
  else if (id != DatasetId::custom)
    m.classes = builtin_classes(id);
  m.sampling_rate_hz = field<double>(doc, "sampling_rate_hz", root);
  if (doc.contains("clusters")) {
    const auto& arr = doc.at("clusters");
    if (!arr.is_array()) throw ConfigError("wrong type", root + ".clusters");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string path = root + ".clusters[" + std::to_string(i) + "]";
      m.clusters.push_back({field<std::string>(arr[i], "name", path), field<std::vector<int>>(arr[i], "users", path)});
    }
  }
  m.validate();
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read manifest " + path.string(), "manifest");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what(), "manifest");
  }
  return manifest_from_json(doc, path.parent_path());
}

std::vector<int> Dataset::users() const {
  std::set<int> s;
  for (const auto& r : recordings) s.insert(r.user_id);
  return {s.begin(), s.end()};
}

std::vector<UserCluster> Dataset::clusters() const {
  if (!manifest.clusters.empty()) return manifest.clusters;
  std::vector<UserCluster> out;
  for (int u : users()) out.push_back({"U" + std::to_string(u), {u}});
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool is_missing(std::string_view s) {
  return s.empty() || s == "nan" || s == "NaN" || s == "NAN" || s == "NA" || s == "null";
}

double parse_number(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError(where + ": not a number: '" + std::string(s) + "'");
  return v;
}

int parse_int(std::string_view s, const std::string& where) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw SchemaError(where + ": not an integer: '" + std::string(s) + "'");
  return v;
}

struct SegmentBuilder {
  int user = 0;
  int activity = 0;
  double last_time = 0.0;
  std::vector<std::vector<double>> rows;  // per time step, S*C values
};

}  // namespace

IngestResult ingest_csv(std::istream& in, const Manifest& schema, const std::string& source) {
  schema.validate();
  const Index S = schema.sensors(), C = schema.channel_count();
  IngestResult result;
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(source + ": row 1: empty file, expected a header");
  const auto header = split_commas(line);

  std::unordered_map<std::string, Index> wanted;
  for (Index s = 0; s < S; ++s)
    for (Index c = 0; c < C; ++c) wanted[schema.column(s, c)] = s * C + c;
  int col_user = -1, col_activity = -1, col_time = -1;
  std::vector<Index> slot(header.size(), -1);
  std::vector<bool> filled(static_cast<std::size_t>(S * C), false);
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name(trim(header[i]));
    if (name == "user_id") col_user = static_cast<int>(i);
    else if (name == "activity_id") col_activity = static_cast<int>(i);
    else if (name == "timestamp") col_time = static_cast<int>(i);
    else if (auto it = wanted.find(name); it != wanted.end()) {
      if (filled[static_cast<std::size_t>(it->second)])
        throw SchemaError(source + ": row 1: duplicate column '" + name + "'");
      filled[static_cast<std::size_t>(it->second)] = true;
      slot[i] = it->second;
    } else {
      throw SchemaError(source + ": row 1: unknown column '" + name + "'");
    }
  }
  if (col_user < 0) throw SchemaError(source + ": row 1: missing column 'user_id'");
  if (col_activity < 0) throw SchemaError(source + ": row 1: missing column 'activity_id'");
  if (col_time < 0) throw SchemaError(source + ": row 1: missing column 'timestamp'");
  for (const auto& [name, idx] : wanted)
    if (!filled[static_cast<std::size_t>(idx)]) throw SchemaError(source + ": row 1: missing column '" + name + "'");

  const int classes = static_cast<int>(schema.classes.size());
  std::optional<SegmentBuilder> current;
  auto flush = [&] {
    if (!current || current->rows.empty()) {
      current.reset();
      return;
    }
    RawRecording rec;
    rec.user_id = current->user;
    rec.activity = current->activity;
    const Index n = static_cast<Index>(current->rows.size());
    rec.streams.assign(static_cast<std::size_t>(S), RowMatrix(n, C));
    for (Index t = 0; t < n; ++t)
      for (Index s = 0; s < S; ++s)
        for (Index c = 0; c < C; ++c)
          rec.streams[static_cast<std::size_t>(s)](t, c) = current->rows[static_cast<std::size_t>(t)]
                                                                        [static_cast<std::size_t>(s * C + c)];
    result.recordings.push_back(std::move(rec));
    current.reset();
  };

  Index row = 1;
  std::vector<double> values(static_cast<std::size_t>(S * C));
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    ++result.rows;
    const std::string where = source + ": row " + std::to_string(row);
    const auto fields = split_commas(line);
    if (fields.size() != header.size())
      throw SchemaError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    bool missing = false;
    for (const auto f : fields) missing = missing || is_missing(trim(f));
    if (missing) {
      ++result.dropped_rows;
      flush();
      continue;
    }
    const int user = parse_int(trim(fields[static_cast<std::size_t>(col_user)]), where);
    const int activity = parse_int(trim(fields[static_cast<std::size_t>(col_activity)]), where);
    if (activity < 0 || activity >= classes)
      throw SchemaError(where + ": unknown activity id " + std::to_string(activity) + " (classes 0.." +
                        std::to_string(classes - 1) + ")");
    const double time = parse_number(trim(fields[static_cast<std::size_t>(col_time)]), where);
    for (std::size_t i = 0; i < fields.size(); ++i)
      if (slot[i] >= 0) values[static_cast<std::size_t>(slot[i])] = parse_number(trim(fields[i]), where);

    if (current && (current->user != user || current->activity != activity || time <= current->last_time))
      flush();
    if (!current) current = SegmentBuilder{user, activity, time, {}};
    current->last_time = time;
    current->rows.push_back(values);
  }
  flush();
  return result;
}

IngestResult ingest_csv(const std::filesystem::path& path, const Manifest& schema) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot read " + path.string());
  return ingest_csv(in, schema, path.string());
}

void write_csv(std::ostream& out, const Dataset& dataset) {
  const Manifest& m = dataset.manifest;
  const Index S = m.sensors(), C = m.channel_count();
  out << "user_id,activity_id,timestamp";
  for (Index s = 0; s < S; ++s)
    for (Index c = 0; c < C; ++c) out << ',' << m.column(s, c);
  out << '\n';
  char buf[40];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << ',' << buf;
  };
  for (const auto& rec : dataset.recordings) {
    rec.validate();
    if (rec.sensors() != S || rec.channels() != C)
      throw LayoutError("recording shape does not match the manifest");
    for (Index t = 0; t < rec.length(); ++t) {
      out << rec.user_id << ',' << rec.activity;
      std::snprintf(buf, sizeof buf, ",%.17g", static_cast<double>(t) / m.sampling_rate_hz);
      out << buf;
      for (Index s = 0; s < S; ++s)
        for (Index c = 0; c < C; ++c) put(rec.streams[static_cast<std::size_t>(s)](t, c));
      out << '\n';
    }
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& dataset) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(out, dataset);
}

// ---------------------------------------------------------------------------
// Windows

std::vector<Window> windowize(const RawRecording& rec, Index length, Index stride) {
  if (length <= 0) throw std::invalid_argument("window length must be positive, got " + std::to_string(length));
  if (stride < 1) throw std::invalid_argument("window stride must be >= 1, got " + std::to_string(stride));
  rec.validate();
  std::vector<Window> out;
  const Index n = rec.length(), S = rec.sensors(), C = rec.channels();
  if (n < length) return out;
  for (Index start = 0; start + length <= n; start += stride) {
    Window w;
    w.user_id = rec.user_id;
    w.activity = rec.activity;
    w.data.resize(S * length * C);
    for (Index s = 0; s < S; ++s)
      w.data.segment(s * length * C, length * C) =
          rec.streams[static_cast<std::size_t>(s)].middleRows(start, length).reshaped<Eigen::RowMajor>();
    out.push_back(std::move(w));
  }
  return out;
}

WindowSet windowize(const Dataset& dataset, Index length, Index stride) {
  WindowSet set;
  set.sensors = dataset.manifest.sensors();
  set.length = length;
  set.channels = dataset.manifest.channel_count();
  for (std::size_t r = 0; r < dataset.recordings.size(); ++r) {
    const auto& rec = dataset.recordings[r];
    if (rec.sensors() != set.sensors || rec.channels() != set.channels)
      throw LayoutError("recording " + std::to_string(r) + " does not match the manifest shape");
    for (auto& w : windowize(rec, length, stride)) {
      w.segment = static_cast<int>(r);
      set.windows.push_back(std::move(w));
    }
  }
  return set;
}

UserSplit split_by_users(const WindowSet& all, const std::vector<int>& target_users) {
  const std::set<int> target(target_users.begin(), target_users.end());
  WindowSet src, tgt;
  src.sensors = tgt.sensors = all.sensors;
  src.length = tgt.length = all.length;
  src.channels = tgt.channels = all.channels;
  for (const auto& w : all.windows) (target.count(w.user_id) ? tgt : src).windows.push_back(w);
  return UserSplit{SourceWindows(std::move(src)), std::move(tgt)};
}

HoldoutSplit split_last_segments(const SourceWindows& source) {
  const WindowSet& all = source.windows();
  std::map<std::pair<int, int>, std::set<int>> segments;
  for (const auto& w : all.windows) segments[{w.user_id, w.activity}].insert(w.segment);
  WindowSet train, holdout;
  train.sensors = holdout.sensors = all.sensors;
  train.length = holdout.length = all.length;
  train.channels = holdout.channels = all.channels;
  for (const auto& w : all.windows) {
    const auto& segs = segments[{w.user_id, w.activity}];
    const bool held = segs.size() >= 2 && w.segment == *segs.rbegin();
    (held ? holdout : train).windows.push_back(w);
  }
  return HoldoutSplit{SourceWindows(std::move(train)), std::move(holdout)};
}

NormStats NormStats::fit(const SourceWindows& source) {
  const WindowSet& set = source.windows();
  if (set.empty()) throw std::invalid_argument("normalization needs at least one source window");
  NormStats st;
  st.sensors_ = set.sensors;
  st.length_ = set.length;
  st.channels_ = set.channels;
  const Index F = set.sensors * set.channels;
  Vector sum = Vector::Zero(F), sq = Vector::Zero(F);
  for (const auto& w : set.windows)
    for (Index s = 0; s < set.sensors; ++s)
      for (Index t = 0; t < set.length; ++t)
        for (Index c = 0; c < set.channels; ++c) sum[s * set.channels + c] += w.data[(s * set.length + t) * set.channels + c];
  const double n = static_cast<double>(set.size() * static_cast<std::size_t>(set.length));
  st.mean_ = sum / n;
  for (const auto& w : set.windows)
    for (Index s = 0; s < set.sensors; ++s)
      for (Index t = 0; t < set.length; ++t)
        for (Index c = 0; c < set.channels; ++c) {
          const double d = w.data[(s * set.length + t) * set.channels + c] - st.mean_[s * set.channels + c];
          sq[s * set.channels + c] += d * d;
        }
  st.std_ = (sq / n).cwiseSqrt().cwiseMax(kStdFloor);
  return st;
}

void NormStats::apply_in_place(WindowSet& set) const {
  if (set.sensors != sensors_ || set.channels != channels_ || set.length != length_)
    throw DimensionError("normalization statistics do not match the window shape");
  for (auto& w : set.windows)
    for (Index s = 0; s < sensors_; ++s)
      for (Index t = 0; t < length_; ++t)
        for (Index c = 0; c < channels_; ++c) {
          double& v = w.data[(s * length_ + t) * channels_ + c];
          v = (v - mean_[s * channels_ + c]) / std_[s * channels_ + c];
        }
}

WindowSet NormStats::apply(const WindowSet& windows) const {
  WindowSet out = windows;
  apply_in_place(out);
  return out;
}

Tensor stack_windows(const WindowSet& set, const std::vector<std::size_t>& order, std::size_t first,
                     std::size_t count) {
  if (first + count > order.size()) throw std::out_of_range("batch exceeds the window order");
  const Index w = set.window_size();
  Vector data(static_cast<Index>(count) * w);
  for (std::size_t i = 0; i < count; ++i)
    data.segment(static_cast<Index>(i) * w, w) = set.windows.at(order[first + i]).data;
  return Tensor({static_cast<Index>(count), set.sensors, set.length, set.channels}, std::move(data));
}

std::uint64_t window_hash(const Window& w) {
  std::uint64_t h = 1469598103934665603ull;
  const auto* bytes = reinterpret_cast<const unsigned char*>(w.data.data());
  for (std::size_t i = 0; i < static_cast<std::size_t>(w.data.size()) * sizeof(double); ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
  return h;
}

// ---------------------------------------------------------------------------
// Synthetic generator

void SyntheticConfig::validate() const {
  if (n_users < 1) throw ConfigError("must be >= 1", "data.synthetic.n_users");
  if (n_activities < 2) throw ConfigError("must be >= 2", "data.synthetic.n_activities");
  if (layout == DatasetId::custom) throw ConfigError("must be OPPT or DSADS", "data.synthetic.layout");
  if (window < 1) throw ConfigError("must be >= 1", "data.synthetic.window");
  if (channels < 1) throw ConfigError("must be >= 1", "data.synthetic.channels");
  if (segments_per_activity < 1) throw ConfigError("must be >= 1", "data.synthetic.segments_per_activity");
  if (segment_length < 1) throw ConfigError("must be >= 1", "data.synthetic.segment_length");
  if (!(sampling_rate_hz > 0.0)) throw ConfigError("must be > 0", "data.synthetic.sampling_rate_hz");
  const std::pair<double, const char*> scales[] = {
      {noise, "data.synthetic.noise"},
      {amplitude_bias, "data.synthetic.amplitude_bias"},
      {phase_bias, "data.synthetic.phase_bias"},
      {offset_bias, "data.synthetic.offset_bias"},
      {frequency_bias, "data.synthetic.frequency_bias"},
      {interaction_bias, "data.synthetic.interaction_bias"}};
  for (const auto& [v, path] : scales)
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("must be finite and >= 0", path);
  if (!coupling.empty()) {
    const Index S = SensorLayout::for_dataset(layout).size();
    if (static_cast<int>(coupling.size()) != n_activities)
      throw ConfigError("need one coupling matrix per activity", "data.synthetic.coupling");
    for (std::size_t a = 0; a < coupling.size(); ++a) {
      const std::string path = "data.synthetic.coupling[" + std::to_string(a) + "]";
      const RowMatrix& k = coupling[a];
      if (k.rows() != S || k.cols() != S)
        throw ConfigError("must be " + std::to_string(S) + "x" + std::to_string(S), path);
      if (!k.allFinite()) throw ConfigError("must be finite", path);
      if ((k - k.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw ConfigError("must be symmetric", path);
    }
  }
}

namespace {

Rng stream_rng(std::uint64_t seed, std::uint32_t tag, std::uint32_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag, index};
  return Rng(seq);
}

}  // namespace

Dataset generate_synthetic(const SyntheticConfig& cfg) {
  cfg.validate();
  constexpr double kTwoPi = 6.283185307179586;
  Dataset ds;
  ds.manifest.layout = SensorLayout::for_dataset(cfg.layout);
  ds.manifest.sampling_rate_hz = cfg.sampling_rate_hz;
  for (Index c = 0; c < cfg.channels; ++c)
    ds.manifest.channels.push_back(cfg.channels == 3 ? std::string(1, static_cast<char>('x' + c))
                                                     : "c" + std::to_string(c));
  for (int a = 0; a < cfg.n_activities; ++a) ds.manifest.classes.push_back("activity_" + std::to_string(a));
  const Index S = ds.manifest.sensors(), C = cfg.channels;
  const int A = cfg.n_activities;

  // Activity structure shared by every user.
  Rng shared = stream_rng(cfg.seed, 0x5a, 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<RowMatrix> coupling = cfg.coupling;
  RowMatrix freq(A, S), phase(A, S);
  std::vector<RowMatrix> loading(static_cast<std::size_t>(A), RowMatrix(S, C));
  for (int a = 0; a < A; ++a) {
    for (Index j = 0; j < S; ++j) {
      // cycles per window, spread so that activities occupy distinct bands
      freq(a, j) = 1.0 + 1.2 * a + 0.8 * unit(shared);
      phase(a, j) = kTwoPi * unit(shared);
    }
    for (Index s = 0; s < S; ++s)
      for (Index c = 0; c < C; ++c) loading[static_cast<std::size_t>(a)](s, c) = 2.0 * unit(shared) - 1.0;
    if (cfg.coupling.empty()) {
      RowMatrix r(S, S);
      for (Index i = 0; i < S; ++i)
        for (Index j = 0; j < S; ++j) r(i, j) = 1.6 * unit(shared) - 0.8;
      coupling.push_back(RowMatrix::Identity(S, S) + 0.5 * (r + r.transpose()));
    }
  }

  struct UserBias {
    RowMatrix gain, offset;  // [S x C]
    Vector phase;            // [S]
    double freq = 1.0;
    std::vector<RowMatrix> interaction;  // per activity [S x C]
  };
  std::vector<UserBias> bias(static_cast<std::size_t>(cfg.n_users));
  for (int u = 0; u < cfg.n_users; ++u) {
    Rng r = stream_rng(cfg.seed, 0xb1, static_cast<std::uint32_t>(u));
    UserBias& b = bias[static_cast<std::size_t>(u)];
    b.gain.resize(S, C);
    b.offset.resize(S, C);
    b.phase.resize(S);
    for (Index s = 0; s < S; ++s)
      for (Index c = 0; c < C; ++c) {
        b.gain(s, c) = std::exp(cfg.amplitude_bias * normal(r));
        b.offset(s, c) = cfg.offset_bias * normal(r);
      }
    for (Index j = 0; j < S; ++j) b.phase[j] = cfg.phase_bias * normal(r);
    b.freq = std::max(0.5, 1.0 + cfg.frequency_bias * normal(r));
    for (int a = 0; a < A; ++a) {
      RowMatrix m(S, C);
      for (Index s = 0; s < S; ++s)
        for (Index c = 0; c < C; ++c) m(s, c) = cfg.interaction_bias * normal(r);
      b.interaction.push_back(m);
    }
  }

  const Index n = cfg.segment_length;
  const double per_sample = kTwoPi / static_cast<double>(cfg.window);
  for (int u = 0; u < cfg.n_users; ++u) {
    const UserBias& b = bias[static_cast<std::size_t>(u)];
    Rng r = stream_rng(cfg.seed, 0xd7, static_cast<std::uint32_t>(u));
    // Segments interleave activities so consecutive recordings never share a label.
    for (int seg = 0; seg < cfg.segments_per_activity; ++seg)
      for (int a = 0; a < A; ++a) {
        RowMatrix sources(n, S);
        for (Index j = 0; j < S; ++j) {
          const double w = freq(a, j) * b.freq * per_sample;
          const double start = kTwoPi * unit(r);
          for (Index t = 0; t < n; ++t) {
            const double arg = w * static_cast<double>(t) + phase(a, j) + b.phase[j] + start;
            sources(t, j) = std::sin(arg) + 0.4 * std::sin(2.0 * arg + 0.5 * phase(a, j));
          }
        }
        const RowMatrix mixed = sources * coupling[static_cast<std::size_t>(a)];  // symmetric
        RawRecording rec;
        rec.user_id = u + 1;
        rec.activity = a;
        rec.streams.assign(static_cast<std::size_t>(S), RowMatrix(n, C));
        const RowMatrix& load = loading[static_cast<std::size_t>(a)];
        for (Index s = 0; s < S; ++s) {
          RowMatrix& x = rec.streams[static_cast<std::size_t>(s)];
          for (Index t = 0; t < n; ++t)
            for (Index c = 0; c < C; ++c)
              x(t, c) = b.gain(s, c) * load(s, c) * mixed(t, s) + b.offset(s, c) +
                        b.interaction[static_cast<std::size_t>(a)](s, c) + cfg.noise * normal(r);
        }
        ds.recordings.push_back(std::move(rec));
      }
  }
  return ds;
}

}  // namespace anatgraph
