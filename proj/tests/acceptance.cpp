/*
 * Copyright 2026 The ACS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

// Acceptance suite on the small reference task. Prints one PASS/FAIL
// line per criterion; exits non-zero when any criterion fails.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "acs/attacks.hpp"
#include "acs/config.hpp"
#include "acs/coreset.hpp"
#include "acs/evaluation.hpp"
#include "acs/models.hpp"
#include "acs/objectives.hpp"
#include "acs/ops.hpp"
#include "acs/rng.hpp"
#include "acs/training.hpp"
#include "solver_oracles.hpp"
#include "support.hpp"

using namespace acs;
using tensor::Tensor;
using testing::Gen;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

std::ostringstream verdicts;

void report(int id, const std::string& title, const Verdict& v, int& failures) {
  std::printf("criterion %d: %s  %s (%s)\n", id, v.pass ? "PASS" : "FAIL", title.c_str(), v.detail.c_str());
  std::fflush(stdout);
  verdicts << "criterion " << id << ": " << (v.pass ? "PASS" : "FAIL") << "  " << title << " (" << v.detail << ")\n";
  failures += v.pass ? 0 : 1;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// ---------------------------------------------------------------- runs

struct Reference {
  config::RunConfig cfg = config::RunConfig::defaults();
  data::Dataset train, eval;
  models::ModelSpec spec;

  Reference() : train(cfg.datasets().first), eval(cfg.datasets().second), spec(cfg.model_spec(train)) {}

  training::TrainConfig base(std::uint64_t seed) const {
    training::TrainConfig t = cfg.train_config();
    t.seed = seed;
    t.eval_every = 0;
    return t;
  }
};

struct RunStats {
  double clean = 0.0, robust = 0.0, total = 0.0;
  std::vector<double> subset_epochs, full_epochs;
  std::vector<double> theta;
  int rounds = 0, matching_wins = 0;
};

RunStats run(const Reference& ref, const training::TrainConfig& t, bool versus_random = false) {
  RunStats s;
  training::Hooks hooks;
  if (versus_random) {
    hooks.on_selection = [&](int epoch, const coreset::Selection& sel) {
      const std::size_t units = sel.features.units();
      auto rnd = coreset::solve_random(units, sel.k_units, derive_seed(t.seed, {99, static_cast<std::uint64_t>(epoch)}));
      for (double& g : rnd.gamma) g = static_cast<double>(units) / static_cast<double>(sel.k_units);
      ++s.rounds;
      s.matching_wins += sel.matching_error < coreset::matching_error(sel.features, rnd);
    };
  }
  const auto start = std::chrono::steady_clock::now();
  auto model = models::init(ref.spec, derive_seed(t.seed, {seed_tag::kInit}));
  const auto result = training::train(ref.train, std::move(model), t, &ref.eval, hooks);
  for (const auto& r : result.records) {
    s.total += r.cpu_time;
    if (r.phase == training::Phase::kSubset) s.subset_epochs.push_back(r.cpu_time);
    if (r.phase == training::Phase::kFull) s.full_epochs.push_back(r.cpu_time);
  }
  s.clean = result.records.back().clean_acc;
  s.robust = result.records.back().robust_acc.value_or(0.0);
  s.theta.assign(result.model.theta().begin(), result.model.theta().end());
  std::fprintf(stderr, "  %-10s %-9s f=%.1f kappa=%.1f seed=%llu  clean %.4f robust %.4f  %.1fs cpu (%.1fs wall)\n",
               training::mode_name(t.mode), coreset::solver_name(t.selection.solver), t.selection.fraction,
               t.kappa, static_cast<unsigned long long>(t.seed), s.clean, s.robust, s.total,
               std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return s;
}

struct Group {
  std::vector<RunStats> runs;
  double clean() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.clean);
    return mean(v);
  }
  double robust() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.robust);
    return mean(v);
  }
  double total() const {
    std::vector<double> v;
    for (const auto& r : runs) v.push_back(r.total);
    return mean(v);
  }
};

// ---------------------------------------------------------------- oracles

std::vector<double> vec(std::span<const double> s) { return {s.begin(), s.end()}; }

Tensor logits_at(const models::Model& m, std::span<const double> theta, std::span<const double> x) {
  return tensor::forward_values(m.graph(), theta, Tensor({x.size()}, vec(x)));
}

attacks::AttackSpec linf_pgd(double eps, double step, int iters, int restarts = 1) {
  attacks::AttackSpec a;
  a.epsilon = eps;
  a.step_size = step;
  a.iters = iters;
  a.restarts = restarts;
  a.random_init = true;
  return a;
}

Verdict gradient_identities() {
  double worst_adv = 0.0, worst_trades = 0.0, worst_split = 0.0;
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const auto m = testing::random_mlp(6, {10, 8}, 4, 500 + trial);
    Gen gen(trial + 1000);
    const auto x = gen.uniforms(6);
    const std::size_t y = gen.index(4);

    const auto adv = objectives::Objective::adversarial(linf_pgd(0.1, 0.025, 10));
    const auto xa = *objectives::phi(adv, m, x, y, trial).x_adv;
    const auto g = objectives::phi_grad_at(adv, m, x, y, xa);
    const auto fd = testing::central_diff(
        [&](std::span<const double> th) { return models::ce_loss(logits_at(m, th, xa).values(), y); }, vec(m.theta()));
    worst_adv = std::max(worst_adv, testing::rel_error(g, fd));

    const double lam = 1.0 / 6.0 + 0.05 * static_cast<double>(trial);
    const auto trades = objectives::Objective::trades(linf_pgd(0.1, 0.025, 10), lam);
    const auto xt = *objectives::phi(trades, m, x, y, trial).x_adv;
    const auto gt = objectives::phi_grad_at(trades, m, x, y, xt);
    const auto fdt = testing::central_diff(
        [&](std::span<const double> th) {
          const Tensor z = logits_at(m, th, x), w = logits_at(m, th, xt);
          return models::ce_loss(z.values(), y) + lam * models::ce_soft_loss(w.values(), z.values());
        },
        vec(m.theta()));
    worst_trades = std::max(worst_trades, testing::rel_error(gt, fdt));

    // the two-pass form against the chain rule through both logit vectors
    const auto clean = objectives::phi_grad_at(objectives::Objective::vanilla(), m, x, y, {});
    const Tensor z = m.logits(Tensor({6}, x)), w = m.logits(Tensor({6}, xt));
    std::vector<double> p(4), q(4);
    auto softmax = [](std::span<const double> v, std::vector<double>& out) {
      const double mx = *std::max_element(v.begin(), v.end());
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i) s += (out[i] = std::exp(v[i] - mx));
      for (double& o : out) o /= s;
    };
    softmax(z.values(), p);
    softmax(w.values(), q);
    double plogq = 0.0;
    for (std::size_t c = 0; c < 4; ++c) plogq += p[c] * std::log(q[c]);
    std::vector<double> chain(clean.size(), 0.0);
    for (std::size_t c = 0; c < 4; ++c) {
      auto rx = m.forward(Tensor({6}, x));
      const auto jx = tensor::grad_params(rx.tape, Tensor({4}, testing::one_hot(4, c)));
      auto ra = m.forward(Tensor({6}, xt));
      const auto ja = tensor::grad_params(ra.tape, Tensor({4}, testing::one_hot(4, c)));
      const double dw = q[c] - p[c];
      const double dz = -p[c] * std::log(q[c]) + p[c] * plogq;
      for (std::size_t i = 0; i < chain.size(); ++i) chain[i] += dw * ja[i] + dz * jx[i];
    }
    std::vector<double> split(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) split[i] = (gt[i] - clean[i]) / lam;
    worst_split = std::max(worst_split, testing::rel_error(split, chain));
  }
  return {worst_adv <= 1e-5 && worst_trades <= 1e-5 && worst_split <= 1e-9,
          fmt("adversarial fd %.2e, trades fd %.2e (<= 1e-5); decomposition %.2e (<= 1e-9)", worst_adv,
              worst_trades, worst_split)};
}

Verdict solver_oracles() {
  using namespace acs::testing;
  Gen gen(77);
  double worst_gap = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = gen.range(3, 8), dim = n + gen.range(0, 3), k = gen.range(1, n);
    const auto f = orthogonal_rows(gen, n, dim);
    const auto c = coreset::solve_gradmatch(f, k, 0.0);
    double best = 1e300;
    std::vector<std::size_t> cur;
    subsets(n, k, 0, cur, [&](const std::vector<std::size_t>& s) { best = std::min(best, orthogonal_residual(f, s)); });
    worst_gap = std::max(worst_gap, std::abs(coreset::matching_error(f, c) - best));
  }
  double worst_ratio = 1e300;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = gen.range(4, 12), k = gen.range(1, std::min<std::size_t>(4, n));
    const auto f = gaussian(gen, n, gen.range(2, 5));
    coreset::SolverTrace trace;
    coreset::solve_craig(f, k, &trace);
    double opt = 0.0;
    std::vector<std::size_t> cur;
    subsets(n, k, 0, cur, [&](const std::vector<std::size_t>& s) { opt = std::max(opt, facility(f, s)); });
    if (opt > 0) worst_ratio = std::min(worst_ratio, facility(f, trace.order) / opt);
  }
  const double bound = 1.0 - 1.0 / std::exp(1.0);
  return {worst_gap <= 1e-8 && worst_ratio >= bound - 1e-12,
          fmt("OMP residual gap %.2e (<= 1e-8); CRAIG worst ratio %.4f (>= %.4f)", worst_gap, worst_ratio, bound)};
}

double linf(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

Verdict attack_invariants(const models::Model& trained, const data::Dataset& eval) {
  std::vector<std::string> broken;
  // feasibility of every iterate on real data
  const std::size_t batch = 64;
  std::vector<std::size_t> idx(batch), labels(batch);
  std::vector<std::uint64_t> seeds(batch);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t b = 0; b < batch; ++b) labels[b] = eval.label(b), seeds[b] = b;
  const Tensor inputs = eval.gather(idx);
  std::size_t infeasible = 0, visits = 0;
  attacks::AttackOptions opts;
  opts.observer = [&](int, int, const Tensor& it) {
    ++visits;
    for (std::size_t b = 0; b < batch; ++b) {
      const auto r = it.row(b);
      if (linf(r, inputs.row(b)) > 0.1 + 1e-12) ++infeasible;
      for (double v : r) infeasible += v < 0.0 || v > 1.0;
    }
  };
  attacks::attack_batch(trained, inputs, {labels, nullptr}, linf_pgd(0.1, 0.0125, 50, 3), seeds, opts);
  if (infeasible > 0 || visits != 150) broken.push_back("feasibility");

  // epsilon 0 identity
  for (std::size_t b = 0; b < 16; ++b) {
    auto a = linf_pgd(0.0, 0.0, 10, 2);
    if (attacks::attack(trained, eval.row(b), eval.label(b), a, b) != vec(eval.row(b))) {
      broken.push_back("epsilon-0");
      break;
    }
  }

  // budget and restart monotonicity of the attained loss
  auto attained = [&](const attacks::AttackSpec& s) {
    return attacks::attack_batch(trained, inputs, {labels, nullptr}, s, seeds).loss;
  };
  const auto l1 = attained(linf_pgd(0.1, 0.0125, 1)), l10 = attained(linf_pgd(0.1, 0.0125, 10));
  const auto r1 = attained(linf_pgd(0.1, 0.0125, 5, 1)), r4 = attained(linf_pgd(0.1, 0.0125, 5, 4));
  for (std::size_t b = 0; b < batch; ++b) {
    if (l10[b] < l1[b] - 1e-12) { broken.push_back("iteration monotonicity"); break; }
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (r4[b] < r1[b]) { broken.push_back("restart monotonicity"); break; }
  }

  // robust accuracy: restarts and radius
  const double clean = evaluation::clean_accuracy(trained, eval);
  double prev = 1.0;
  for (int r : {1, 2, 4}) {
    const double acc = evaluation::robust_accuracy(trained, eval, linf_pgd(0.1, 0.0125, 10, r), 5);
    if (acc > prev) broken.push_back("robust accuracy vs restarts");
    prev = acc;
  }
  const double r8 = evaluation::robust_accuracy(trained, eval, evaluation::default_eval_attack(attacks::Norm::kLinf, 8.0 / 255, 1), 5);
  const double r4e = evaluation::robust_accuracy(trained, eval, evaluation::default_eval_attack(attacks::Norm::kLinf, 4.0 / 255, 1), 5);
  if (!(r8 <= r4e && r4e <= clean)) broken.push_back("robust accuracy vs epsilon");

  // uniformity of the linf start
  const double eps = 8.0 / 255.0;
  const std::vector<double> center(100, 0.5);
  std::vector<double> u;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    for (double v : attacks::random_init(center, attacks::Norm::kLinf, eps, s)) u.push_back((v - 0.5) / eps);
  }
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double f = (u[i] + 1.0) / 2.0;
    ks = std::max({ks, std::abs((i + 1) / n - f), std::abs(f - i / n)});
  }
  if (!(ks < 1.628 / std::sqrt(n))) broken.push_back("uniform start");

  std::string detail = fmt("%zu iterates checked, %zu infeasible; KS %.5f < %.5f; robust eps 4/255 %.4f, 8/255 %.4f, clean %.4f",
                           visits * batch, infeasible, ks, 1.628 / std::sqrt(n), r4e, r8, clean);
  for (const auto& b : broken) detail += "; broken: " + b;
  return {broken.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite on the reference task"};
  int seeds = 5;
  std::string out = "acceptance_results.txt";
  app.add_option("--seeds", seeds, "seeds per configuration")->check(CLI::Range(1, 100))->capture_default_str();
  app.add_option("--out", out, "file receiving the verdict lines")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  int failures = 0;
  const Reference ref;
  std::fprintf(stderr, "reference task: %zu train / %zu eval, %zu parameters, %d seeds\n", ref.train.size(),
               ref.eval.size(), models::parameter_count(ref.spec), seeds);

  using training::Mode;
  auto configure = [&](Mode mode, std::uint64_t seed, coreset::Solver solver, double fraction, double kappa) {
    auto t = ref.base(seed);
    t.mode = mode;
    t.selection.solver = solver;
    t.selection.fraction = fraction;
    t.kappa = kappa;
    return t;
  };

  std::map<std::string, Group> groups;
  auto group = [&](const std::string& name, Mode mode, coreset::Solver solver, double fraction, double kappa,
                   bool versus_random = false) -> Group& {
    Group& g = groups[name];
    if (g.runs.empty()) {
      std::fprintf(stderr, "%s\n", name.c_str());
      for (int s = 0; s < seeds; ++s) {
        g.runs.push_back(run(ref, configure(mode, s, solver, fraction, kappa), versus_random));
      }
    }
    return g;
  };
  using coreset::Solver;

  // 1
  {
    const Group& full = group("full", Mode::kFull, Solver::kGradMatch, 0.5, 0.5);
    const RunStats degenerate = run(ref, configure(Mode::kCoreset, 0, Solver::kGradMatch, 1.0, 0.0));
    const bool same = degenerate.theta == full.runs[0].theta;
    report(1, "degenerate coreset equals full training", {same, same ? "final parameters identical" : "final parameters differ"},
           failures);
  }

  // 2, 3
  {
    const Group& full = groups["full"];
    const Group& gm = group("gradmatch f=0.5", Mode::kCoreset, Solver::kGradMatch, 0.5, 0.5, true);
    const double ratio = gm.total() / full.total();
    std::vector<double> subset, whole;
    for (const auto& r : gm.runs) subset.insert(subset.end(), r.subset_epochs.begin(), r.subset_epochs.end());
    for (const auto& r : full.runs) whole.insert(whole.end(), r.full_epochs.begin(), r.full_epochs.end());
    const double epoch_ratio = mean(subset) / mean(whole);
    report(2, "coreset training is faster",
           {ratio <= 0.65 && epoch_ratio <= 0.6,
            fmt("total CPU time %.1fs vs %.1fs = %.3fx (<= 0.65); subset epoch %.3fs vs %.3fs = %.3fx (<= 0.6)", gm.total(),
                full.total(), ratio, mean(subset), mean(whole), epoch_ratio)},
           failures);
    const double dc = 100.0 * (gm.clean() - full.clean()), dr = 100.0 * (gm.robust() - full.robust());
    report(3, "coreset training retains accuracy",
           {std::abs(dc) <= 6.0 && std::abs(dr) <= 6.0,
            fmt("clean %.2f%% vs %.2f%% (%+.2f pp); robust %.2f%% vs %.2f%% (%+.2f pp); limit 6 pp", 100 * gm.clean(),
                100 * full.clean(), dc, 100 * gm.robust(), 100 * full.robust(), dr)},
           failures);
  }

  // 4
  {
    int better = 0, rounds = 0, wins = 0;
    std::string detail;
    for (double f : {0.5, 0.3, 0.1}) {
      const Group& gm = group(fmt("gradmatch f=%.1f", f), Mode::kCoreset, Solver::kGradMatch, f, 0.5, true);
      const Group& rnd = group(fmt("random f=%.1f", f), Mode::kCoreset, Solver::kRandom, f, 0.5);
      better += gm.robust() > rnd.robust();
      for (const auto& r : gm.runs) rounds += r.rounds, wins += r.matching_wins;
      detail += fmt("f=%.1f robust error %.2f%% vs random %.2f%%; ", f, 100 * (1 - gm.robust()), 100 * (1 - rnd.robust()));
    }
    const double share = rounds ? static_cast<double>(wins) / rounds : 0.0;
    detail += fmt("lower error at %d/3 fractions (>= 2); matching error below random in %d/%d rounds = %.1f%% (>= 90%%)",
                  better, wins, rounds, 100 * share);
    report(4, "gradient matching beats random selection", {better >= 2 && share >= 0.9, detail}, failures);
  }

  // 5, 6, 7
  report(5, "gradient identities", gradient_identities(), failures);
  report(6, "solver oracles", solver_oracles(), failures);
  {
    const auto& full = groups["full"].runs[0];
    const models::Model trained(ref.spec, full.theta);
    report(7, "attack invariants", attack_invariants(trained, ref.eval), failures);
  }

  // 8
  {
    const Group& gm = groups["gradmatch f=0.5"];
    const Group& hh = group("half-half f=0.5", Mode::kHalfHalf, Solver::kGradMatch, 0.5, 0.5);
    report(8, "half-half trades robustness for clean accuracy",
           {hh.clean() > gm.clean() && hh.robust() < gm.robust(),
            fmt("clean %.2f%% vs coreset %.2f%%; robust %.2f%% vs coreset %.2f%%", 100 * hh.clean(), 100 * gm.clean(),
                100 * hh.robust(), 100 * gm.robust())},
           failures);
  }

  // 9
  {
    std::vector<double> robust;
    std::string detail;
    for (double k : {0.3, 0.5, 0.7}) {
      const Group& g = group(k == 0.5 ? "gradmatch f=0.5" : fmt("gradmatch f=0.5 kappa=%.1f", k), Mode::kCoreset,
                             Solver::kGradMatch, 0.5, k, true);
      robust.push_back(g.robust());
      detail += fmt("kappa %.1f robust %.2f%%; ", k, 100 * g.robust());
    }
    const double spread = 100 * (*std::max_element(robust.begin(), robust.end()) - *std::min_element(robust.begin(), robust.end()));
    detail += fmt("spread %.2f pp (<= 4)", spread);
    report(9, "warm-start length barely matters", {spread <= 4.0, detail}, failures);
  }

  std::printf("acceptance: %d of 9 criteria failed\n", failures);
  verdicts << "acceptance: " << failures << " of 9 criteria failed\n";
  if (std::ofstream file(out); file) file << verdicts.str();
  return failures == 0 ? 0 : 1;
}
