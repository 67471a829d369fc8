#include <chrono>

#include "anatgraph/gradcheck.hpp"
#include "anatgraph/model.hpp"

namespace anatgraph {

namespace {

Tensor random_leaf(const Shape& shape, Rng& rng, double scale = 1.0, double shift = 0.0) {
  Vector v = standard_normal(numel(shape), rng) * scale;
  v.array() += shift;
  return Tensor(shape, std::move(v), true);
}

/// sum(y * R) for a fixed random R, so every output coordinate matters.
Tensor project(const Tensor& y, const Vector& r) { return sum(mul(y, Tensor(y.shape(), r))); }

std::vector<Index> random_labels(Index n, Index classes, Rng& rng) {
  std::uniform_int_distribution<Index> pick(0, classes - 1);
  std::vector<Index> out(static_cast<std::size_t>(n));
  for (auto& l : out) l = pick(rng);
  return out;
}

using Builder = std::function<GradCheckResult(Rng&)>;

GradCheckResult unary(Rng& rng, const Shape& shape, const std::function<Tensor(const Tensor&)>& op,
                      double shift = 0.0) {
  Tensor x = random_leaf(shape, rng, 1.0, shift);
  const Vector r = standard_normal(numel(op(x.detach()).shape()), rng);
  return check_gradients([&] { return project(op(x), r); }, {x});
}

GradCheckResult binary(Rng& rng, const Shape& sa, const Shape& sb,
                       const std::function<Tensor(const Tensor&, const Tensor&)>& op) {
  Tensor a = random_leaf(sa, rng), b = random_leaf(sb, rng);
  const Vector r = standard_normal(numel(op(a.detach(), b.detach()).shape()), rng);
  return check_gradients([&] { return project(op(a, b), r); }, {a, b});
}

ModelConfig tiny_model_config() {
  ModelConfig c;
  c.node.channels = 2;
  c.node.window = 16;
  c.node.conv1_channels = 3;
  c.node.conv2_channels = 4;
  c.node.kernel = 3;
  c.edge.embed_dim = 3;
  c.edge.latent_dim = 3;
  c.edge.hidden = 5;
  c.acke = {6, 6, 6};
  c.classifier_hidden = 5;
  c.discriminator_hidden = 5;
  return c;
}

GradCheckResult composed_model(Rng& rng, Phase phase, Mode mode) {
  const SensorGraph graph = build_graph(SensorLayout::oppt(), RelationRules::defaults(DatasetId::oppt));
  const ModelConfig cfg = tiny_model_config();
  const std::uint64_t seed = rng();
  AnatGraphModel model(graph, cfg, 3, 2, seed);
  const Index b = 4;
  const Tensor x = Tensor({b, graph.node_count(), cfg.node.window, cfg.node.channels},
                          standard_normal(b * graph.node_count() * cfg.node.window * cfg.node.channels, rng));
  const auto acts = random_labels(b, 3, rng);
  const auto doms = random_labels(b, 2, rng);
  const LossWeights weights{0.7, 0.3, 0.5};
  if (mode == Mode::eval) {
    // Non-trivial running statistics for the eval-mode pass.
    Rng warm(seed);
    for (int i = 0; i < 3; ++i) model.forward(x, Mode::train, warm);
  }
  const std::uint64_t noise_seed = rng();
  auto forward = [&] {
    Rng noise(noise_seed);
    return model.forward(x, mode, noise);
  };
  auto loss = [&] { return total_loss(model.objective(forward(), acts, doms, phase, weights), weights).total; };
  // Oracle pieces: everything except L_D, and L_D as a plain function of all parameters.
  auto main_terms = [&] {
    const ObjectiveTerms t = model.objective(forward(), acts, doms, phase, LossWeights{0.7, 0.3, 0.0});
    return total_loss(t, weights).total;
  };
  auto plain_disc = [&] {
    const ForwardResult fwd = forward();
    return cross_entropy(model.discriminator().probabilities(fwd.embedding), one_hot(doms, 2));
  };
  GradCheckOptions opt;
  opt.max_coordinates = 4;
  opt.seed = rng();
  std::vector<Tensor> params;
  std::vector<double> main_scale, disc_scale;
  const double upstream = phase == Phase::discrimination ? 0.0 : -weights.zeta;
  const ParameterCollector collected = model.parameters();
  for (const auto& p : collected.parameters()) {
    params.push_back(p.tensor);
    main_scale.push_back(1.0);
    disc_scale.push_back(p.name.rfind("discriminator.", 0) == 0 ? 1.0 : upstream);
  }
  return check_gradients(loss, params, {NumericTerm{main_terms, main_scale}, NumericTerm{plain_disc, disc_scale}},
                         opt);
}

std::vector<std::pair<std::string, Builder>> cases() {
  std::vector<std::pair<std::string, Builder>> c;
  c.push_back({"add (broadcast)", [](Rng& r) { return binary(r, {3, 4}, {4}, [](auto& a, auto& b) { return add(a, b); }); }});
  c.push_back({"sub", [](Rng& r) { return binary(r, {3, 4}, {3, 4}, [](auto& a, auto& b) { return sub(a, b); }); }});
  c.push_back({"mul", [](Rng& r) { return binary(r, {2, 3, 4}, {2, 3, 4}, [](auto& a, auto& b) { return mul(a, b); }); }});
  c.push_back({"scale", [](Rng& r) { return unary(r, {5, 2}, [](auto& x) { return scale(x, -1.7); }); }});
  c.push_back({"exp", [](Rng& r) { return unary(r, {4, 3}, [](auto& x) { return exp(x); }); }});
  c.push_back({"scale_rows", [](Rng& r) { return binary(r, {5, 3}, {5}, [](auto& a, auto& b) { return scale_rows(a, b); }); }});
  c.push_back({"sum", [](Rng& r) { return unary(r, {3, 4}, [](auto& x) { return sum(x); }); }});
  c.push_back({"mean", [](Rng& r) { return unary(r, {3, 4}, [](auto& x) { return mean(x); }); }});
  c.push_back({"mean(axis)", [](Rng& r) { return unary(r, {2, 3, 4}, [](auto& x) { return mean(x, 1); }); }});
  c.push_back({"global_mean_pool", [](Rng& r) { return unary(r, {2, 5, 3}, [](auto& x) { return global_mean_pool(x); }); }});
  c.push_back({"matmul", [](Rng& r) { return binary(r, {3, 4}, {4, 2}, [](auto& a, auto& b) { return matmul(a, b); }); }});
  c.push_back({"linear", [](Rng& r) {
    Tensor x = random_leaf({2, 3, 4}, r), w = random_leaf({4, 5}, r), b = random_leaf({5}, r);
    const Vector p = standard_normal(2 * 3 * 5, r);
    return check_gradients([&] { return project(linear(x, w, b), p); }, {x, w, b});
  }});
  c.push_back({"relu", [](Rng& r) { return unary(r, {4, 5}, [](auto& x) { return relu(x); }); }});
  c.push_back({"leaky_relu", [](Rng& r) { return unary(r, {4, 5}, [](auto& x) { return leaky_relu(x, 0.01); }); }});
  c.push_back({"softmax", [](Rng& r) { return unary(r, {3, 5}, [](auto& x) { return softmax(x); }); }});
  c.push_back({"conv1d", [](Rng& r) {
    Tensor x = random_leaf({2, 3, 11}, r), k = random_leaf({4, 3, 3}, r), b = random_leaf({4}, r);
    const Vector p = standard_normal(2 * 4 * 9, r);
    return check_gradients([&] { return project(conv1d(x, k, b), p); }, {x, k, b});
  }});
  c.push_back({"conv1d (stride 2)", [](Rng& r) {
    Tensor x = random_leaf({3, 10}, r), k = random_leaf({2, 3, 4}, r);
    const Vector p = standard_normal(2 * 4, r);
    return check_gradients([&] { return project(conv1d(x, k, Tensor(), 2), p); }, {x, k});
  }});
  c.push_back({"maxpool1d", [](Rng& r) { return unary(r, {2, 3, 8}, [](auto& x) { return maxpool1d(x, 2); }); }});
  c.push_back({"batchnorm (train)", [](Rng& r) {
    Tensor x = random_leaf({6, 4}, r, 2.0, 0.5), g = random_leaf({4}, r, 0.3, 1.0), b = random_leaf({4}, r);
    BatchNormStats st = BatchNormStats::identity(4);
    const Vector p = standard_normal(24, r);
    return check_gradients([&] { return project(batchnorm(x, g, b, st, Mode::train, 1e-5, 0.1), p); }, {x, g, b});
  }});
  c.push_back({"batchnorm (eval)", [](Rng& r) {
    Tensor x = random_leaf({3, 4}, r), g = random_leaf({4}, r, 0.3, 1.0), b = random_leaf({4}, r);
    BatchNormStats st = BatchNormStats::identity(4);
    st.running_mean = standard_normal(4, r);
    st.running_var = standard_normal(4, r).cwiseAbs().array() + 0.5;
    const Vector p = standard_normal(12, r);
    return check_gradients([&] { return project(batchnorm(x, g, b, st, Mode::eval, 1e-5, 0.1), p); }, {x, g, b});
  }});
  c.push_back({"concat", [](Rng& r) {
    return binary(r, {2, 3, 2}, {2, 3, 4}, [](auto& a, auto& b) { return concat({a, b}, 2); });
  }});
  c.push_back({"permute", [](Rng& r) { return unary(r, {2, 3, 4}, [](auto& x) { return permute(x, {2, 0, 1}); }); }});
  c.push_back({"index_select", [](Rng& r) {
    return unary(r, {2, 4, 3}, [](auto& x) { return index_select(x, 1, {3, 0, 0, 2, 1}); });
  }});
  c.push_back({"segment_mean", [](Rng& r) {
    return unary(r, {2, 6, 3}, [](auto& x) { return segment_mean(x, 1, {0, 2, 1, 2, 0, 2}, 3); });
  }});
  c.push_back({"tile_leading", [](Rng& r) { return unary(r, {4, 3}, [](auto& x) { return tile_leading(x, 3); }); }});
  c.push_back({"embedding_lookup", [](Rng& r) {
    return unary(r, {3, 4}, [](auto& t) { return embedding_lookup(t, {2, 0, 2, 1}); });
  }});
  c.push_back({"reparameterize", [](Rng& r) {
    const Vector noise = standard_normal(12, r);
    return binary(r, {4, 3}, {4, 3}, [noise](auto& mu, auto& lv) { return reparameterize(mu, lv, noise); });
  }});
  c.push_back({"grad_reverse", [](Rng& r) {
    // identity forward, so the expected gradient is -zeta times the plain one
    Tensor x = random_leaf({3, 4}, r);
    const Vector p = standard_normal(12, r);
    const double zeta = 0.37;
    return check_gradients([&] { return project(grad_reverse(x, zeta), p); }, {x},
                           {NumericTerm{[&] { return project(x, p); }, {-zeta}}});
  }});
  c.push_back({"cross_entropy", [](Rng& r) {
    Tensor logits = random_leaf({5, 4}, r);
    const Tensor y = one_hot(random_labels(5, 4, r), 4);
    return check_gradients([&] { return cross_entropy(softmax(logits), y); }, {logits});
  }});
  c.push_back({"mse", [](Rng& r) {
    Tensor a = random_leaf({4, 3}, r), b = random_leaf({4, 3}, r);
    return check_gradients([&] { return mse(a, b); }, {a, b});
  }});
  c.push_back({"kl_standard_normal", [](Rng& r) {
    Tensor mu = random_leaf({4, 3}, r), lv = random_leaf({4, 3}, r, 0.5);
    return check_gradients([&] { return kl_standard_normal(mu, lv); }, {mu, lv});
  }});
  c.push_back({"model (discrimination, train)", [](Rng& r) { return composed_model(r, Phase::discrimination, Mode::train); }});
  c.push_back({"model (confusion, train)", [](Rng& r) { return composed_model(r, Phase::confusion, Mode::train); }});
  c.push_back({"model (confusion, eval)", [](Rng& r) { return composed_model(r, Phase::confusion, Mode::eval); }});
  return c;
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(int trials, std::uint64_t seed) {
  std::vector<GradCheckCase> out;
  std::uint64_t case_index = 0;
  for (const auto& [name, build] : cases()) {
    GradCheckCase gc;
    gc.name = name;
    const auto start = std::chrono::steady_clock::now();
    for (int t = 0; t < trials; ++t) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(case_index),
                        static_cast<std::uint32_t>(t)};
      Rng rng(seq);
      const GradCheckResult r = build(rng);
      gc.result.max_relative_error = std::max(gc.result.max_relative_error, r.max_relative_error);
      gc.result.max_absolute_error = std::max(gc.result.max_absolute_error, r.max_absolute_error);
      gc.result.checked += r.checked;
      gc.result.skipped_nonsmooth += r.skipped_nonsmooth;
    }
    gc.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.push_back(gc);
    ++case_index;
  }
  return out;
}

}  // namespace anatgraph
