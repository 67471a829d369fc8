// Acceptance checks, one PASS/FAIL line each. `acceptance 3 7` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "anatgraph/acke.hpp"
#include "anatgraph/config.hpp"
#include "anatgraph/domain_adv.hpp"
#include "anatgraph/edge_vfe.hpp"
#include "anatgraph/experiments.hpp"
#include "anatgraph/gradcheck.hpp"
#include "anatgraph/model.hpp"
#include "anatgraph/optimizer.hpp"
#include "anatgraph/stats.hpp"

using namespace anatgraph;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

// ---- 1 --------------------------------------------------------------------------

Outcome gradient_suite() {
  const auto t0 = Clock::now();
  const auto cases = run_gradcheck_suite(100, 0);
  const double elapsed = seconds_since(t0);
  double worst = 0.0;
  std::string worst_name;
  bool ok = true;
  for (const auto& c : cases) {
    if (c.result.max_relative_error >= worst) {
      worst = c.result.max_relative_error;
      worst_name = c.name;
    }
    ok = ok && c.result.checked > 0 && c.result.max_relative_error < 1e-4;
  }
  return {ok && elapsed < 120.0,
          std::to_string(cases.size()) + " cases x 100 trials, worst " + fmt("%.2e", worst) + " (" + worst_name +
              "), " + fmt("%.1f s", elapsed)};
}

// ---- 2 --------------------------------------------------------------------------

ModelConfig small_model() {
  ModelConfig m;
  m.node.channels = 3;
  m.node.window = 32;
  m.node.conv1_channels = 4;
  m.node.conv2_channels = 6;
  m.node.kernel = 3;
  m.acke = {12, 12, 12};
  m.classifier_hidden = 10;
  m.discriminator_hidden = 10;
  return m;
}

bool bitwise_equal(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

Outcome grl_contract() {
  const SensorGraph graph = build_graph(SensorLayout::oppt(), RelationRules::defaults(DatasetId::oppt));
  const ModelConfig cfg = small_model();
  Rng data_rng(11);
  const Index batch = 6;
  const Tensor x({batch, 5, cfg.node.window, cfg.node.channels},
                 standard_normal(batch * 5 * cfg.node.window * cfg.node.channels, data_rng));
  const std::vector<Index> users{0, 1, 2, 0, 1, 2};

  bool ok = true;
  int compared = 0;
  for (double zeta : {0.5, 1.0, 2.0, 0.25}) {
    AnatGraphModel reversed(graph, cfg, 4, 3, 5);
    AnatGraphModel plain(graph, cfg, 4, 3, 5);
    Rng ra(3), rb(3);
    const ForwardResult fa = reversed.forward(x, Mode::train, ra);
    const ForwardResult fb = plain.forward(x, Mode::train, rb);

    const Tensor la = discriminator_loss(reversed.discriminator(), fa.embedding, users, Phase::confusion, zeta);
    const Tensor lb = cross_entropy(plain.discriminator().probabilities(fb.embedding), one_hot(users, 3));
    ok = ok && bitwise_equal(fa.embedding.data(), fb.embedding.data()) && bitwise_equal(la.data(), lb.data());
    const Tensor routed = grad_reverse(fa.embedding, zeta);
    ok = ok && bitwise_equal(routed.data(), fa.embedding.data());

    const ParameterCollector pa = reversed.parameters();
    const ParameterCollector pb = plain.parameters();
    for (auto p : pa.parameters()) p.tensor.clear_grad();
    for (auto p : pb.parameters()) p.tensor.clear_grad();
    la.backward();
    lb.backward();
    for (std::size_t i = 0; i < pa.parameters().size(); ++i) {
      const auto& a = pa.parameters()[i];
      const auto& b = pb.parameters()[i];
      const Vector ga = a.tensor.has_grad() ? a.tensor.grad() : Vector::Zero(a.tensor.size());
      const Vector gb = b.tensor.has_grad() ? b.tensor.grad() : Vector::Zero(b.tensor.size());
      // Powers of two scale without rounding, so equality is exact.
      const double factor = a.name.rfind("discriminator.", 0) == 0 ? 1.0 : -zeta;
      ok = ok && bitwise_equal(ga, (factor * gb).eval());
      ++compared;
    }
  }
  return {ok, std::to_string(compared) + " parameter tensors over zeta in {0.5,1,2,0.25}, bitwise"};
}

// ---- 3 --------------------------------------------------------------------------

Outcome attention_simplex() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> edges_dist(2, 40), latent_dist(1, 12);
  double worst_sum = 0.0;
  bool ordered = true;
  for (int pass = 0; pass < 1000; ++pass) {
    const Index e = edges_dist(rng), l = latent_dist(rng);
    EdgeAttention att(l, 0.01, rng);
    const double spread = 0.1 + 10.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const Tensor z({e, l}, spread * standard_normal(e * l, rng));
    const AttentionOutput out = attend(z, att);
    const Vector& a = out.alpha.data();
    const Vector& s = out.scores.data();
    worst_sum = std::max(worst_sum, std::abs(a.sum() - 1.0));
    for (Index i = 0; i < e; ++i) {
      if (!(a[i] > 0.0)) ordered = false;
      for (Index j = 0; j < e; ++j) {
        if (s[i] > s[j] && !(a[i] > a[j])) ordered = false;
        if (s[i] == s[j] && a[i] != a[j]) ordered = false;
      }
    }
  }
  return {worst_sum <= 1e-12 && ordered,
          "1000 passes, max |sum-1| " + fmt("%.1e", worst_sum) + (ordered ? ", order preserved" : ", ORDER BROKEN")};
}

// ---- 4 --------------------------------------------------------------------------

struct RandomGraph {
  SensorGraph graph;
  int multi_pairs = 0;
};

RandomGraph random_graph(int nodes, std::mt19937_64& rng) {
  std::vector<SensorPosition> pos;
  for (int i = 0; i < nodes; ++i) pos.push_back({"n" + std::to_string(i), "Node " + std::to_string(i)});
  const SensorLayout layout(DatasetId::custom, pos);
  std::uniform_int_distribution<int> type_dist(0, kRelationTypeCount - 1), node_dist(0, nodes - 1);
  RelationRules rules;
  std::set<std::tuple<int, int, int>> used;
  auto add = [&](int a, int b, int t) {
    if (a == b || !used.insert({t, std::min(a, b), std::max(a, b)}).second) return false;
    rules.pairs.push_back({"n" + std::to_string(a), "n" + std::to_string(b), relation_from_code(t)});
    return true;
  };
  for (int i = 1; i < nodes; ++i) add(std::uniform_int_distribution<int>(0, i - 1)(rng), i, type_dist(rng));
  // Overlapping relation on an existing pair.
  const auto first = rules.pairs.front();
  add(*layout.find(first.first), *layout.find(first.second), (code_of(first.type) + 1) % kRelationTypeCount);
  for (int k = std::uniform_int_distribution<int>(0, nodes)(rng); k > 0; --k)
    add(node_dist(rng), node_dist(rng), type_dist(rng));

  std::map<std::pair<int, int>, int> types_per_pair;
  for (const auto& [t, a, b] : used) ++types_per_pair[{a, b}];
  int multi = 0;
  for (const auto& [pair, n] : types_per_pair) multi += n > 1;
  return {build_graph(layout, rules), multi};
}

Outcome graph_conv_oracle() {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  int graphs = 0, multi = 0;
  for (int nodes = 2; nodes <= 6; ++nodes) {
    for (int rep = 0; rep < 40; ++rep, ++graphs) {
      const RandomGraph rg = random_graph(nodes, rng);
      const SensorGraph& g = rg.graph;
      multi += rg.multi_pairs > 0;
      const Index b = 3, f = 4, l = 2, out = 5;
      GraphConvLayer layer(f, l, out, rng);
      layer.bn.gamma.mutable_data() = 0.5 + standard_normal(out, rng).array().abs();
      layer.bn.beta.mutable_data() = standard_normal(out, rng);
      const Tensor h({b, g.node_count(), f}, standard_normal(b * g.node_count() * f, rng));
      const Tensor z({g.edge_count(), l}, standard_normal(g.edge_count() * l, rng));

      const RowMatrix w = layer.fc.weight.matrix();
      const Vector bias = layer.fc.bias.data();
      RowMatrix af(b * g.node_count(), out);
      for (Index bi = 0; bi < b; ++bi) {
        for (Index i = 0; i < g.node_count(); ++i) {
          Vector acc = Vector::Zero(out);
          int incoming = 0;
          for (Index e = 0; e < g.edge_count(); ++e) {
            if (g.edge(e).dst != i) continue;
            Vector input(f + l);
            for (Index k = 0; k < f; ++k) input[k] = h.at({bi, g.edge(e).src, k});
            for (Index k = 0; k < l; ++k) input[f + k] = z.at({e, k});
            acc += w.transpose() * input + bias;
            ++incoming;
          }
          af.row(bi * g.node_count() + i) = acc / incoming;
        }
      }
      RowMatrix expected = af;
      for (Index c = 0; c < out; ++c) {
        const double mu = af.col(c).mean();
        const double var = (af.col(c).array() - mu).square().mean();
        for (Index r = 0; r < af.rows(); ++r) {
          const double y = (af(r, c) - mu) / std::sqrt(var + layer.bn.eps) * layer.bn.gamma.data()[c] +
                           layer.bn.beta.data()[c];
          expected(r, c) = std::max(y, 0.0);
        }
      }
      const Tensor agg = layer.aggregate(h, z, g);
      const Tensor full = layer(h, z, g, Mode::train);
      for (Index k = 0; k < af.size(); ++k) {
        worst = std::max(worst, std::abs(agg.data()[k] - af.data()[k]));
        worst = std::max(worst, std::abs(full.data()[k] - expected.data()[k]));
      }
    }
  }
  return {worst < 1e-12 && multi == graphs,
          std::to_string(graphs) + " graphs of 2..6 nodes (" + std::to_string(multi) +
              " with overlapping relations), max diff " + fmt("%.1e", worst)};
}

// ---- 5 --------------------------------------------------------------------------

Outcome phase_schedule() {
  int checked = 0;
  bool ok = true;
  for (int m : {1, 2, 5}) {
    const PhaseSchedule sched{m, 0.5};
    std::set<int> discrimination;
    for (int k = 0; 2 * k * m < 10 * m; ++k)
      for (int e = 2 * k * m + 1; e <= 2 * k * m + m; ++e) discrimination.insert(e);
    for (int epoch = 1; epoch <= 10 * m; ++epoch, ++checked) {
      const Phase want = discrimination.count(epoch) ? Phase::discrimination : Phase::confusion;
      ok = ok && phase_of(epoch, sched) == want;
    }
  }
  return {ok, std::to_string(checked) + " epochs over M in {1,2,5}"};
}

// ---- 6 --------------------------------------------------------------------------

Outcome edge_label_task() {
  const auto t0 = Clock::now();
  const SensorGraph graph = build_graph(SensorLayout::oppt(), RelationRules::defaults(DatasetId::oppt));
  Rng rng(6);
  EdgeFeatureExtractor extractor(graph, EdgeInitConfig{}, EdgeVfeConfig{}, rng);
  ParameterCollector pc;
  extractor.collect(pc);
  OptimizerConfig oc;
  oc.learning_rate = 1e-2;
  Optimizer opt(pc.tensors(), oc);
  double acc = 0.0;
  int epoch = 0;
  for (epoch = 1; epoch <= 200; ++epoch) {
    opt.zero_grad();
    const EdgeFeatures out = extractor.forward(Mode::train, rng);
    cvae_loss(out.cvae, extractor.initial_features(), extractor.codes(), 1.0, 1.0).total.backward();
    opt.step();
    NoGradGuard guard;
    acc = edge_class_accuracy(extractor.forward(Mode::eval, rng).cvae, extractor.codes());
    if (acc >= 0.95) break;
  }
  const double elapsed = seconds_since(t0);
  return {acc >= 0.95 && elapsed < 60.0, fmt("edge-class accuracy %.3f after %.0f epochs, %.2f s", acc,
                                             std::min(epoch, 200), elapsed)};
}

// ---- 7 --------------------------------------------------------------------------

// Established once with seeds 1..5 and 30 epochs: full 0.3970, ablation 0.3690.
constexpr double kFrozenMargin = 0.0280;
constexpr double kAllowedRegression = 0.02;
constexpr int kLosoEpochs = 30;

RunConfig loso_config(std::uint64_t seed, bool ablation) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.train.epochs = kLosoEpochs;
  if (ablation) {
    cfg.loss.lambda_edge = 0.0;
    cfg.loss.zeta = 0.0;
    cfg.loss.kl_weight = 0.0;
    cfg.model.edge.uniform_attention = true;
  }
  cfg.validate();
  return cfg;
}

Outcome synthetic_loso() {
  const auto t0 = Clock::now();
  std::vector<double> full, erm, erm_within;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (bool ablation : {false, true}) {
      const RunConfig cfg = loso_config(seed, ablation);
      const RunRecord rec = run_loso(prepare_data(cfg), cfg);
      const RunSummary s = rec.summary();
      (ablation ? erm : full).push_back(s.mean_accuracy);
      if (ablation) erm_within.push_back(s.mean_within_user_accuracy);
    }
  }
  const double elapsed = seconds_since(t0);
  const double margin = mean_of(full) - mean_of(erm);
  const double shift = mean_of(erm_within) - mean_of(erm);
  const bool ok = margin >= kFrozenMargin - kAllowedRegression && shift >= 0.05 && elapsed < 900.0;
  return {ok, fmt("full %.4f vs ablation %.4f, margin %.4f (frozen %.4f)", mean_of(full), mean_of(erm), margin,
                  kFrozenMargin) +
                  fmt("; ablation within-user gap %.3f; %.0f s", shift, elapsed)};
}

// ---- 8 --------------------------------------------------------------------------

// Two-sided t tail by composite Simpson integration of the density.
double integrated_t_p(double t, double dof) {
  const double c = std::exp(std::lgamma((dof + 1) / 2) - std::lgamma(dof / 2)) / std::sqrt(dof * M_PI);
  auto pdf = [&](double u) { return c * std::pow(1.0 + u * u / dof, -(dof + 1) / 2); };
  const double a = std::abs(t);
  const int n = 20000;
  const double h = a / n;
  double s = pdf(0) + pdf(a);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
  return std::max(0.0, 1.0 - 2.0 * s * h / 3.0);
}

Outcome pearson_machinery() {
  std::vector<double> x, y;
  for (int i = 0; i < 25; ++i) {
    x.push_back(0.3 * i - 1.0);
    y.push_back(-2.5 * x.back() + 4.0);
  }
  const PearsonResult anti = pearson_test(x, y);
  bool ok = anti.r && std::abs(*anti.r + 1.0) < 1e-12 && anti.p && *anti.p < 1e-12;

  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 3 + trial % 40;
    const double coupling = std::uniform_real_distribution<double>(-1, 1)(rng);
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = normal(rng);
      b[i] = coupling * a[i] + normal(rng);
    }
    const PearsonResult res = pearson_test(a, b);
    const double r = *res.r;
    const double t = r * std::sqrt((n - 2) / (1 - r * r));
    worst = std::max(worst, std::abs(*res.p - integrated_t_p(t, n - 2)));
    ++compared;
  }
  ok = ok && worst < 1e-6;

  const std::vector<double> flat(10, 3.0), ramp{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  const PearsonResult undefined = pearson_test(flat, ramp);
  const PearsonResult undefined2 = pearson_test(ramp, flat);
  ok = ok && !undefined.defined() && !undefined.p && !undefined2.defined();
  return {ok, fmt("anti-correlated r=%.15f; %.0f p-values vs integrated t-CDF, max diff %.1e; constant series undefined",
                  anti.r.value_or(NAN), compared, worst)};
}

// ---- 9 and 10 ---------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') cur += c, ++i;
      else if (c == '"') quoted = false;
      else cur += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::vector<std::string>> rows;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) rows.push_back(split_csv(line));
  return rows;
}

RunConfig small_run_config() {
  RunConfig cfg;
  cfg.seed = 42;
  cfg.train.epochs = 6;
  cfg.train.phase_epochs = 2;
  cfg.validate();
  return cfg;
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / ("anatgraph_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

Outcome reproducibility(const fs::path& dir) {
  const RunConfig cfg = small_run_config();
  const PreparedData data = prepare_data(cfg);
  const RunRecord a = run_loso(data, cfg, 1);
  const RunRecord b = run_loso(prepare_data(cfg), cfg, 2);
  write_report(a, dir / "a", 2);
  write_report(b, dir / "b", 2);
  const std::string ma = slurp(dir / "a" / "metrics.json");
  const std::string mb = slurp(dir / "b" / "metrics.json");
  Index overlap = 0;
  for (const auto& f : a.folds) overlap += f.isolation_overlap;
  const bool ok = !ma.empty() && ma == mb && overlap == 0 && a.folds.size() == 4;
  return {ok, std::string(ma == mb ? "metrics.json byte-identical" : "metrics.json DIFFERS") + " (" +
                  std::to_string(ma.size()) + " bytes, serial vs 2 threads); isolation overlap " +
                  std::to_string(overlap)};
}

Outcome report_fidelity(const fs::path& dir) {
  const fs::path run = dir / "a";
  if (!fs::exists(run / "metrics.json")) return {false, "no report from the reproducibility run"};
  const nlohmann::json metrics = nlohmann::json::parse(slurp(run / "metrics.json"));
  const RunConfig cfg = small_run_config();
  const PreparedData data = prepare_data(cfg);
  bool ok = true;
  double worst_pct = 0.0;
  int folds = 0;
  for (const auto& fold : metrics.at("folds")) {
    const std::string name = fold.at("name");
    ++folds;
    double total = 0.0;
    const auto att = read_csv(run / ("attention_" + name + ".csv"));
    ok = ok && att.size() == 17 && att[0][3] == "weight_pct";  // 16 directed OPPT edges
    for (std::size_t r = 1; r < att.size(); ++r) total += std::stod(att[r][3]);
    worst_pct = std::max(worst_pct, std::abs(total - 100.0));

    // Row sums against the raw target windows, counted independently.
    std::vector<long> expected(cfg.data.synthetic.n_activities, 0);
    const std::vector<int> targets = fold.at("target_users");
    for (const auto& w : data.windows.windows)
      if (std::find(targets.begin(), targets.end(), w.user_id) != targets.end()) ++expected[w.activity];
    const auto conf = read_csv(run / ("confusion_" + name + ".csv"));
    ok = ok && conf.size() == expected.size() + 1;
    for (std::size_t r = 1; r < conf.size(); ++r) {
      long row = 0;
      for (std::size_t c = 1; c < conf[r].size(); ++c) row += std::stol(conf[r][c]);
      ok = ok && row == expected[r - 1] && row == fold.at("per_class_counts")[r - 1].get<long>();
    }
  }
  ok = ok && worst_pct <= 0.01;

  const auto log = read_csv(run / "training_log.csv");
  const std::vector<std::string> series{"l_har", "l_recon", "l_kl", "l_edge_class", "l_d", "target_accuracy"};
  std::vector<int> col;
  for (const auto& s : series) {
    const auto it = std::find(log[0].begin(), log[0].end(), s);
    ok = ok && it != log[0].end();
    col.push_back(static_cast<int>(it - log[0].begin()));
  }
  ok = ok && log.size() == static_cast<std::size_t>(folds * cfg.train.epochs + 1);
  for (std::size_t r = 1; ok && r < log.size(); ++r)
    for (int c : col) ok = ok && std::isfinite(std::stod(log[r][static_cast<std::size_t>(c)]));
  return {ok, fmt("%.0f folds; attention sums within %.1e of 100%%; confusion rows match class counts; ", folds,
                  worst_pct) +
                  std::to_string(log.size() - 1) + " log rows with 6 series"};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const fs::path dir = scratch_dir();

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"gradient suite", gradient_suite},
      {"GRL contract", grl_contract},
      {"attention simplex and order", attention_simplex},
      {"graph-conv oracle", graph_conv_oracle},
      {"phase schedule", phase_schedule},
      {"edge-label latent task", edge_label_task},
      {"synthetic LOSO benefit", synthetic_loso},
      {"Pearson machinery", pearson_machinery},
      {"reproducibility", [&] { return reproducibility(dir); }},
      {"report fidelity", [&] { return report_fidelity(dir); }},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    if (id == 10 && !only.empty() && !only.count(9)) reproducibility(dir);
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  fs::remove_all(dir);
  return failed == 0 ? 0 : 1;
}
