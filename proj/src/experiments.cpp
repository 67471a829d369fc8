#include "anatgraph/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include "anatgraph/errors.hpp"
#include "anatgraph/log.hpp"
#include "anatgraph/optimizer.hpp"
#include "anatgraph/stats.hpp"

namespace anatgraph {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Rng seeded_rng(std::uint64_t seed, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag};
  return Rng(seq);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

PreparedData prepare_data(const RunConfig& config) {
  config.validate();
  PreparedData out;
  if (config.data.source == DataSource::synthetic) {
    SyntheticConfig syn = config.data.synthetic;
    syn.window = config.data.window;
    syn.seed = config.effective_synthetic_seed();
    out.dataset = generate_synthetic(syn);
  } else {
    out.dataset.manifest = load_manifest(config.data.manifest_path);
    IngestResult ingest = ingest_csv(config.data.csv_path, out.dataset.manifest);
    out.dataset.recordings = std::move(ingest.recordings);
    out.dropped_rows = ingest.dropped_rows;
    if (ingest.dropped_rows > 0)
      log_line(LogLevel::info, "warning: dropped " + std::to_string(ingest.dropped_rows) +
                                   " rows with missing values from " + config.data.csv_path);
  }
  const Manifest& m = out.dataset.manifest;
  if (!config.graph.rules_path.empty()) {
    RulesDocument doc = load_rules(config.graph.rules_path);
    if (doc.layout.size() != m.layout.size())
      throw ConfigError("rules layout has " + std::to_string(doc.layout.size()) + " positions, data has " +
                            std::to_string(m.layout.size()),
                        "graph.rules_path");
    out.graph = build_graph(doc.layout, doc.rules);
  } else if (m.rules) {
    out.graph = build_graph(m.layout, *m.rules);
  } else {
    out.graph = build_graph(m.layout, RelationRules::defaults(m.layout.dataset(), config.graph.cross_lateral));
  }
  out.windows = windowize(out.dataset, config.data.window, config.data.stride);
  return out;
}

std::vector<FoldSpec> loso_folds(const std::vector<UserCluster>& clusters) {
  if (clusters.size() < 2)
    throw ProtocolError("leave-one-cluster-out needs at least 2 user clusters, got " +
                        std::to_string(clusters.size()));
  std::vector<FoldSpec> folds;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    FoldSpec f;
    f.name = clusters[i].name;
    f.target_users = clusters[i].users;
    for (std::size_t j = 0; j < clusters.size(); ++j)
      if (j != i) f.source_clusters.push_back(clusters[j]);
    folds.push_back(std::move(f));
  }
  return folds;
}

namespace {

bool gradients_finite(const std::vector<Tensor>& params) {
  for (const auto& p : params)
    if (p.has_grad() && !p.grad().allFinite()) return false;
  return true;
}

// Only reached after a step produced non-finite gradients. Replays the batch
// from the same RNG state and backpropagates one weighted term at a time.
[[noreturn]] void blame_nonfinite_gradient(AnatGraphModel& model, Optimizer& optimizer,
                                           const std::vector<Tensor>& params, const Tensor& x,
                                           const std::vector<Index>& acts, const std::vector<Index>& doms,
                                           Phase phase, const LossWeights& weights, const Rng& rng_before,
                                           bool warmup) {
  const std::vector<std::string> names{"L_HAR", "L_recon", "L_KL", "L_edge_class", "L_D"};
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (warmup && (k == 0 || k == 4)) continue;
    Rng rng = rng_before;
    const ForwardResult fwd = model.forward(x, Mode::train, rng);
    const ObjectiveTerms terms = model.objective(fwd, acts, doms, phase, weights);
    Tensor term;
    switch (k) {
      case 0: term = terms.activities; break;
      case 1: term = terms.cvae.reconstruction; break;
      case 2: term = weights.kl_weight * terms.cvae.kl; break;
      case 3: term = weights.lambda_edge * terms.cvae.edge_class; break;
      default: term = terms.discriminator; break;
    }
    if (!term.defined()) continue;
    optimizer.zero_grad();
    term.backward();
    if (!gradients_finite(params))
      throw NonFiniteLossError(names[k], "non-finite gradient of loss term " + names[k]);
  }
  throw NonFiniteLossError("total", "non-finite gradient of the total loss");
}

void check_cluster_cover(const Dataset& dataset, const std::vector<UserCluster>& clusters) {
  std::set<int> covered;
  for (const auto& c : clusters)
    for (int u : c.users)
      if (!covered.insert(u).second) throw ProtocolError("user " + std::to_string(u) + " is in two clusters");
  for (int u : dataset.users())
    if (!covered.count(u)) throw ProtocolError("user " + std::to_string(u) + " belongs to no cluster");
}

std::vector<Index> labels_of(const WindowSet& set) {
  std::vector<Index> out;
  out.reserve(set.size());
  for (const auto& w : set.windows) out.push_back(w.activity);
  return out;
}

std::vector<Index> predict_all(AnatGraphModel& model, const WindowSet& set) {
  constexpr std::size_t kChunk = 256;
  std::vector<std::size_t> order(set.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Index> out;
  out.reserve(set.size());
  for (std::size_t first = 0; first < set.size(); first += kChunk) {
    const std::size_t count = std::min(kChunk, set.size() - first);
    for (Index p : model.predict(stack_windows(set, order, first, count))) out.push_back(p);
  }
  return out;
}

double accuracy_on(AnatGraphModel& model, const WindowSet& set, Index classes) {
  if (set.empty()) return kNaN;
  return accuracy_of(confusion_matrix(predict_all(model, set), labels_of(set), classes));
}

/// Batch boundaries; a trailing batch of one window joins the previous one.
std::vector<std::pair<std::size_t, std::size_t>> batch_ranges(std::size_t n, std::size_t batch) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t first = 0; first < n; first += batch) out.push_back({first, std::min(batch, n - first)});
  if (out.size() >= 2 && out.back().second == 1) {
    out.pop_back();
    out.back().second += 1;
  }
  return out;
}

void accumulate(LossBreakdown& acc, const LossBreakdown& b, double w) {
  acc.har += w * b.har;
  acc.reconstruction += w * b.reconstruction;
  acc.kl += w * b.kl;
  acc.edge_class += w * b.edge_class;
  acc.discriminator += w * b.discriminator;
  acc.har_term += w * b.har_term;
  acc.reconstruction_term += w * b.reconstruction_term;
  acc.kl_term += w * b.kl_term;
  acc.edge_class_term += w * b.edge_class_term;
  acc.discriminator_term += w * b.discriminator_term;
  acc.total += w * b.total;
}

}  // namespace

std::uint64_t fold_seed(std::uint64_t run_seed, std::size_t index) {
  // splitmix64 of (seed, index)
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

FoldRecord train_fold(const PreparedData& data, const FoldSpec& fold, const RunConfig& config,
                      std::uint64_t seed) {
  const Index classes = static_cast<Index>(data.dataset.manifest.classes.size());
  FoldRecord rec;
  rec.name = fold.name;
  rec.target_users = fold.target_users;
  rec.seed = seed;
  std::map<int, Index> domain_of;
  for (std::size_t c = 0; c < fold.source_clusters.size(); ++c)
    for (int u : fold.source_clusters[c].users) {
      domain_of[u] = static_cast<Index>(c);
      rec.source_users.push_back(u);
    }
  std::sort(rec.source_users.begin(), rec.source_users.end());

  UserSplit split = split_by_users(data.windows, fold.target_users);
  for (const auto& w : split.source.windows().windows)
    if (!domain_of.count(w.user_id))
      throw ProtocolError("fold " + fold.name + ": user " + std::to_string(w.user_id) +
                          " is neither a source nor a target user");
  std::optional<HoldoutSplit> held;
  if (config.train.within_user_holdout) held.emplace(split_last_segments(split.source));
  const SourceWindows& train_source = held ? held->train : split.source;

  std::unordered_set<std::uint64_t> train_hashes;
  for (const auto& w : train_source.windows().windows) train_hashes.insert(window_hash(w));
  for (const auto& w : split.target.windows) rec.isolation_overlap += train_hashes.count(window_hash(w)) ? 1 : 0;

  const NormStats stats = NormStats::fit(train_source);
  const WindowSet train = stats.apply(train_source.windows());
  const WindowSet target = stats.apply(split.target);
  const WindowSet holdout = held ? stats.apply(held->holdout) : WindowSet{};
  rec.train_windows = static_cast<Index>(train.size());
  rec.target_windows = static_cast<Index>(target.size());
  rec.holdout_windows = static_cast<Index>(holdout.size());
  if (train.size() < 2) throw ProtocolError("fold " + fold.name + " has fewer than 2 training windows");
  if (target.empty()) throw ProtocolError("fold " + fold.name + " has no target windows");

  std::vector<Index> activity(train.size()), domain(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    activity[i] = train.windows[i].activity;
    domain[i] = domain_of.at(train.windows[i].user_id);
  }

  ModelConfig mc = config.model;
  mc.node.window = train.length;
  mc.node.channels = train.channels;
  AnatGraphModel model(data.graph, mc, classes, static_cast<Index>(fold.source_clusters.size()), seed);
  ParameterCollector params = model.parameters();
  const std::vector<Tensor> param_tensors = params.tensors();
  Optimizer optimizer(param_tensors, config.train.optimizer);
  Rng rng = seeded_rng(seed, 0x7a11);
  const PhaseSchedule schedule{config.train.phase_epochs, config.loss.zeta};

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto ranges = batch_ranges(train.size(), static_cast<std::size_t>(config.train.batch_size));

  for (int epoch = 1; epoch <= config.train.epochs; ++epoch) {
    EpochLog log;
    log.epoch = epoch;
    log.phase = phase_of(epoch, schedule);
    const bool warmup = epoch <= config.train.cvae_warmup_epochs;
    std::shuffle(order.begin(), order.end(), rng);
    for (const auto& [first, count] : ranges) {
      const Tensor x = stack_windows(train, order, first, count);
      std::vector<Index> acts(count), doms(count);
      for (std::size_t i = 0; i < count; ++i) {
        acts[i] = activity[order[first + i]];
        doms[i] = domain[order[first + i]];
      }
      const Rng rng_before = rng;
      TotalLoss loss;
      ObjectiveTerms terms;
      try {
        const ForwardResult fwd = model.forward(x, Mode::train, rng);
        terms = model.objective(fwd, acts, doms, log.phase, config.loss);
        loss = total_loss(terms, config.loss);
      } catch (const NumericError& e) {
        // overflowing activations: no term survives the forward pass
        throw NonFiniteLossError("total", std::string("non-finite forward pass: ") + e.what());
      }
      optimizer.zero_grad();
      (warmup ? terms.cvae.total : loss.total).backward();
      if (!gradients_finite(param_tensors))
        blame_nonfinite_gradient(model, optimizer, param_tensors, x, acts, doms, log.phase, config.loss, rng_before,
                                 warmup);
      optimizer.step();
      accumulate(log.losses, loss.breakdown, static_cast<double>(count) / static_cast<double>(train.size()));
    }
    log.target_accuracy = config.train.track_target_accuracy ? accuracy_on(model, target, classes) : kNaN;
    if (log_level() >= LogLevel::debug)
      log_line(LogLevel::debug, "fold " + fold.name + " epoch " + std::to_string(epoch) + " " +
                                    to_string(log.phase) + " total=" + fmt(log.losses.total) +
                                    " target_acc=" + fmt(log.target_accuracy));
    rec.epochs.push_back(log);
  }

  rec.confusion = confusion_matrix(predict_all(model, target), labels_of(target), classes);
  rec.accuracy = accuracy_of(rec.confusion);
  rec.within_user_accuracy = accuracy_on(model, holdout, classes);
  {
    NoGradGuard guard;
    const EdgeFeatures edges = model.edge_features().forward(Mode::eval, rng);
    rec.edge_class_accuracy = edge_class_accuracy(edges.cvae, model.edge_features().codes());
    rec.attention = report_attention(edges.attention.alpha.data(), data.graph);
  }
  log_line(LogLevel::info, "fold " + fold.name + ": target accuracy " + fmt(rec.accuracy) +
                               ", within-user " + fmt(rec.within_user_accuracy));
  return rec;
}

RunSummary RunRecord::summary() const {
  if (folds.empty()) throw ProtocolError("run has no folds");
  std::vector<double> acc, within;
  for (const auto& f : folds) {
    acc.push_back(f.accuracy);
    if (!std::isnan(f.within_user_accuracy)) within.push_back(f.within_user_accuracy);
  }
  RunSummary s;
  s.mean_accuracy = mean_of(acc);
  s.std_accuracy = population_std(acc);
  s.mean_within_user_accuracy = within.empty() ? kNaN : mean_of(within);
  return s;
}

RunRecord run_loso(const PreparedData& data, const RunConfig& config, int parallel_folds) {
  const auto clusters = data.dataset.clusters();
  const auto folds = loso_folds(clusters);
  check_cluster_cover(data.dataset, clusters);
  RunRecord record;
  record.config = config_to_json(config);
  record.classes = data.dataset.manifest.classes;
  record.folds.resize(folds.size());

  const std::size_t workers =
      std::clamp<std::size_t>(static_cast<std::size_t>(std::max(parallel_folds, 1)), 1, folds.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mu;
  std::exception_ptr error;
  auto work = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < folds.size();) {
      try {
        record.folds[i] = train_fold(data, folds[i], config, fold_seed(config.seed, i));
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t t = 0; t < workers; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);
  return record;
}

RunRecord run_single(const PreparedData& data, const RunConfig& config) {
  const auto clusters = data.dataset.clusters();
  const auto folds = loso_folds(clusters);
  check_cluster_cover(data.dataset, clusters);
  std::size_t pick = folds.size() - 1;
  if (!config.train.target_cluster.empty()) {
    auto it = std::find_if(folds.begin(), folds.end(),
                           [&](const FoldSpec& f) { return f.name == config.train.target_cluster; });
    if (it == folds.end())
      throw ConfigError("no cluster named '" + config.train.target_cluster + "'", "train.target_cluster");
    pick = static_cast<std::size_t>(it - folds.begin());
  }
  RunRecord record;
  record.config = config_to_json(config);
  record.classes = data.dataset.manifest.classes;
  record.folds.push_back(train_fold(data, folds[pick], config, fold_seed(config.seed, pick)));
  return record;
}

Eigen::MatrixXi confusion_matrix(const std::vector<Index>& predictions, const std::vector<Index>& truths,
                                 Index classes) {
  if (predictions.size() != truths.size())
    throw DimensionError("confusion_matrix: " + std::to_string(predictions.size()) + " predictions for " +
                         std::to_string(truths.size()) + " labels");
  if (classes < 1) throw LabelError("confusion_matrix needs at least one class");
  Eigen::MatrixXi m = Eigen::MatrixXi::Zero(classes, classes);
  for (std::size_t i = 0; i < truths.size(); ++i) {
    const Index t = truths[i], p = predictions[i];
    if (t < 0 || t >= classes || p < 0 || p >= classes)
      throw LabelError("label pair (" + std::to_string(t) + ", " + std::to_string(p) + ") at index " +
                       std::to_string(i) + " outside [0, " + std::to_string(classes) + ")");
    m(t, p) += 1;
  }
  return m;
}

double accuracy_of(const Eigen::MatrixXi& confusion) {
  const long total = confusion.sum();
  if (total == 0) return kNaN;
  return static_cast<double>(confusion.trace()) / static_cast<double>(total);
}

std::vector<double> epoch_series(const std::vector<EpochLog>& epochs, const std::string& name) {
  std::vector<double> out;
  out.reserve(epochs.size());
  for (const auto& e : epochs) {
    const LossBreakdown& b = e.losses;
    if (name == "l_har") out.push_back(b.har);
    else if (name == "l_recon") out.push_back(b.reconstruction);
    else if (name == "l_kl") out.push_back(b.kl);
    else if (name == "l_edge_class") out.push_back(b.edge_class);
    else if (name == "l_d") out.push_back(b.discriminator);
    else if (name == "total") out.push_back(b.total);
    else if (name == "target_accuracy") out.push_back(e.target_accuracy);
    else throw std::invalid_argument("unknown epoch series '" + name + "'");
  }
  return out;
}

std::vector<PearsonRow> pearson_analysis(const std::vector<EpochLog>& epochs, std::size_t prefix_step,
                                         const std::string& scope) {
  const auto accuracy = epoch_series(epochs, "target_accuracy");
  std::vector<PearsonRow> rows;
  for (std::size_t end : prefix_ends(epochs.size(), prefix_step)) {
    const std::vector<double> acc(accuracy.begin(), accuracy.begin() + static_cast<long>(end));
    const bool acc_known = std::none_of(acc.begin(), acc.end(), [](double v) { return std::isnan(v); });
    for (const auto& name : loss_series_names()) {
      const auto full = epoch_series(epochs, name);
      const std::vector<double> loss(full.begin(), full.begin() + static_cast<long>(end));
      PearsonRow row{scope, name, end, end, std::nullopt, std::nullopt};
      if (acc_known) {
        const PearsonResult res = pearson_test(loss, acc);
        row.r = res.r;
        row.p = res.p;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

std::vector<PearsonRow> pearson_analysis(const RunRecord& record, std::size_t prefix_step) {
  std::vector<PearsonRow> rows;
  for (const auto& f : record.folds) {
    auto r = pearson_analysis(f.epochs, prefix_step, f.name);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  if (record.folds.size() >= 2) {
    const std::size_t n = record.folds.front().epochs.size();
    bool aligned = true;
    for (const auto& f : record.folds) aligned = aligned && f.epochs.size() == n;
    if (aligned) {
      std::vector<EpochLog> pooled(n);
      const double k = static_cast<double>(record.folds.size());
      for (std::size_t e = 0; e < n; ++e) {
        pooled[e].epoch = record.folds.front().epochs[e].epoch;
        pooled[e].phase = record.folds.front().epochs[e].phase;
        for (const auto& f : record.folds) {
          accumulate(pooled[e].losses, f.epochs[e].losses, 1.0 / k);
          pooled[e].target_accuracy += f.epochs[e].target_accuracy / k;
        }
      }
      auto r = pearson_analysis(pooled, prefix_step, "pooled");
      rows.insert(rows.end(), r.begin(), r.end());
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

using ojson = nlohmann::ordered_json;

ojson number_or_null(double v) { return std::isnan(v) ? ojson(nullptr) : ojson(v); }

double number_from(const ojson& v) { return v.is_null() ? kNaN : v.get<double>(); }

ojson confusion_json(const Eigen::MatrixXi& m) {
  ojson rows = ojson::array();
  for (Index i = 0; i < m.rows(); ++i) {
    ojson row = ojson::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::vector<long> per_class_counts(const Eigen::MatrixXi& m) {
  std::vector<long> out;
  for (Index i = 0; i < m.rows(); ++i) out.push_back(m.row(i).sum());
  return out;
}

ojson breakdown_json(const LossBreakdown& b) {
  return ojson{{"l_har", b.har},
               {"l_recon", b.reconstruction},
               {"l_kl", b.kl},
               {"l_edge_class", b.edge_class},
               {"l_d", b.discriminator},
               {"har_term", b.har_term},
               {"recon_term", b.reconstruction_term},
               {"kl_term", b.kl_term},
               {"edge_class_term", b.edge_class_term},
               {"d_term", b.discriminator_term},
               {"total", b.total}};
}

LossBreakdown breakdown_from(const ojson& j) {
  LossBreakdown b;
  b.har = j.at("l_har").get<double>();
  b.reconstruction = j.at("l_recon").get<double>();
  b.kl = j.at("l_kl").get<double>();
  b.edge_class = j.at("l_edge_class").get<double>();
  b.discriminator = j.at("l_d").get<double>();
  b.har_term = j.at("har_term").get<double>();
  b.reconstruction_term = j.at("recon_term").get<double>();
  b.kl_term = j.at("kl_term").get<double>();
  b.edge_class_term = j.at("edge_class_term").get<double>();
  b.discriminator_term = j.at("d_term").get<double>();
  b.total = j.at("total").get<double>();
  return b;
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string safe_file_part(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_';
  return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

}  // namespace

std::string dump_json(const nlohmann::ordered_json& doc) { return doc.dump(2) + "\n"; }

nlohmann::ordered_json metrics_json(const RunRecord& record) {
  const RunSummary s = record.summary();
  ojson doc;
  doc["schema_version"] = kMetricsSchemaVersion;
  doc["classes"] = record.classes;
  ojson folds = ojson::array();
  for (const auto& f : record.folds) {
    folds.push_back({{"name", f.name},
                     {"target_users", f.target_users},
                     {"source_users", f.source_users},
                     {"seed", f.seed},
                     {"accuracy", f.accuracy},
                     {"within_user_accuracy", number_or_null(f.within_user_accuracy)},
                     {"edge_class_accuracy", f.edge_class_accuracy},
                     {"train_windows", f.train_windows},
                     {"target_windows", f.target_windows},
                     {"holdout_windows", f.holdout_windows},
                     {"isolation_overlap", f.isolation_overlap},
                     {"per_class_counts", per_class_counts(f.confusion)},
                     {"confusion", confusion_json(f.confusion)}});
  }
  doc["folds"] = folds;
  doc["summary"] = {{"folds", record.folds.size()},
                    {"mean_accuracy", s.mean_accuracy},
                    {"std_accuracy", s.std_accuracy},
                    {"std_kind", "population"},
                    {"mean_within_user_accuracy", number_or_null(s.mean_within_user_accuracy)}};
  return doc;
}

nlohmann::ordered_json run_record_to_json(const RunRecord& record) {
  ojson doc;
  doc["schema_version"] = kMetricsSchemaVersion;
  doc["config"] = record.config;
  doc["classes"] = record.classes;
  ojson folds = ojson::array();
  for (const auto& f : record.folds) {
    ojson epochs = ojson::array();
    for (const auto& e : f.epochs)
      epochs.push_back({{"epoch", e.epoch},
                        {"phase", to_string(e.phase)},
                        {"losses", breakdown_json(e.losses)},
                        {"target_accuracy", number_or_null(e.target_accuracy)}});
    ojson attention = ojson::array();
    for (const auto& a : f.attention)
      attention.push_back({{"rank", a.rank},
                           {"edge", a.edge},
                           {"src", a.src},
                           {"dst", a.dst},
                           {"type", to_string(a.type)},
                           {"weight_pct", a.weight_pct}});
    folds.push_back({{"name", f.name},
                     {"target_users", f.target_users},
                     {"source_users", f.source_users},
                     {"seed", f.seed},
                     {"accuracy", f.accuracy},
                     {"within_user_accuracy", number_or_null(f.within_user_accuracy)},
                     {"edge_class_accuracy", f.edge_class_accuracy},
                     {"train_windows", f.train_windows},
                     {"target_windows", f.target_windows},
                     {"holdout_windows", f.holdout_windows},
                     {"isolation_overlap", f.isolation_overlap},
                     {"confusion", confusion_json(f.confusion)},
                     {"attention", attention},
                     {"epochs", epochs}});
  }
  doc["folds"] = folds;
  return doc;
}

RunRecord run_record_from_json(const nlohmann::ordered_json& doc) {
  try {
    if (doc.at("schema_version").get<int>() != kMetricsSchemaVersion)
      throw ProtocolError("unsupported run record schema version");
    RunRecord r;
    r.config = doc.at("config");
    r.classes = doc.at("classes").get<std::vector<std::string>>();
    for (const auto& jf : doc.at("folds")) {
      FoldRecord f;
      f.name = jf.at("name").get<std::string>();
      f.target_users = jf.at("target_users").get<std::vector<int>>();
      f.source_users = jf.at("source_users").get<std::vector<int>>();
      f.seed = jf.at("seed").get<std::uint64_t>();
      f.accuracy = jf.at("accuracy").get<double>();
      f.within_user_accuracy = number_from(jf.at("within_user_accuracy"));
      f.edge_class_accuracy = jf.at("edge_class_accuracy").get<double>();
      f.train_windows = jf.at("train_windows").get<Index>();
      f.target_windows = jf.at("target_windows").get<Index>();
      f.holdout_windows = jf.at("holdout_windows").get<Index>();
      f.isolation_overlap = jf.at("isolation_overlap").get<Index>();
      const auto& conf = jf.at("confusion");
      const Index a = static_cast<Index>(conf.size());
      f.confusion = Eigen::MatrixXi::Zero(a, a);
      for (Index i = 0; i < a; ++i)
        for (Index j = 0; j < a; ++j) f.confusion(i, j) = conf.at(i).at(j).get<int>();
      for (const auto& ja : jf.at("attention"))
        f.attention.push_back({ja.at("rank").get<Index>(), ja.at("edge").get<Index>(), ja.at("src").get<std::string>(),
                               ja.at("dst").get<std::string>(), parse_relation_type(ja.at("type").get<std::string>()),
                               ja.at("weight_pct").get<double>()});
      for (const auto& je : jf.at("epochs")) {
        EpochLog e;
        e.epoch = je.at("epoch").get<int>();
        e.phase = je.at("phase").get<std::string>() == "confusion" ? Phase::confusion : Phase::discrimination;
        e.losses = breakdown_from(je.at("losses"));
        e.target_accuracy = number_from(je.at("target_accuracy"));
        f.epochs.push_back(e);
      }
      r.folds.push_back(std::move(f));
    }
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed run record: ") + e.what());
  }
}

void write_report(const RunRecord& record, const std::filesystem::path& out_dir, std::size_t prefix_step) {
  if (record.folds.empty()) throw ProtocolError("no fold records to report");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create " + out_dir.string() + ": " + ec.message());

  write_text(out_dir / "metrics.json", dump_json(metrics_json(record)));
  write_text(out_dir / "run_record.json", dump_json(run_record_to_json(record)));

  for (const auto& f : record.folds) {
    std::ostringstream conf;
    conf << "true_class";
    for (const auto& c : record.classes) conf << ',' << csv_quote(c);
    conf << '\n';
    for (Index i = 0; i < f.confusion.rows(); ++i) {
      conf << csv_quote(record.classes.at(static_cast<std::size_t>(i)));
      for (Index j = 0; j < f.confusion.cols(); ++j) conf << ',' << f.confusion(i, j);
      conf << '\n';
    }
    write_text(out_dir / ("confusion_" + safe_file_part(f.name) + ".csv"), conf.str());
    write_attention_csv(out_dir / ("attention_" + safe_file_part(f.name) + ".csv"), f.attention);
  }

  std::ostringstream log;
  log << "fold,epoch,phase,l_har,l_recon,l_kl,l_edge_class,l_d,target_accuracy,total\n";
  for (const auto& f : record.folds)
    for (const auto& e : f.epochs)
      log << csv_quote(f.name) << ',' << e.epoch << ',' << to_string(e.phase) << ',' << fmt(e.losses.har) << ','
          << fmt(e.losses.reconstruction) << ',' << fmt(e.losses.kl) << ',' << fmt(e.losses.edge_class) << ','
          << fmt(e.losses.discriminator) << ',' << fmt(e.target_accuracy) << ',' << fmt(e.losses.total) << '\n';
  write_text(out_dir / "training_log.csv", log.str());

  std::ostringstream pearson;
  pearson << "scope,loss,prefix_end,n,r,p,status\n";
  for (const auto& row : pearson_analysis(record, prefix_step)) {
    pearson << csv_quote(row.scope) << ',' << row.loss << ',' << row.prefix_end << ',' << row.n << ',';
    if (row.r)
      pearson << fmt(*row.r) << ',' << fmt(*row.p) << ",ok\n";
    else
      pearson << ",,undefined\n";
  }
  write_text(out_dir / "pearson.csv", pearson.str());
}

}  // namespace anatgraph
