/*
 * Copyright 2026 The ModalLens Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Acceptance run: one PASS/FAIL line per criterion, each with its tolerance
// and wall-clock limit. Exits non-zero when any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "modallens/attribution/pipeline.h"
#include "modallens/attribution/shapley.h"
#include "modallens/core/metrics.h"
#include "modallens/demo/planted.h"
#include "modallens/interactions/interactions.h"
#include "modallens/interactions/threshold_search.h"
#include "modallens/pipeline/stages.h"
#include "modallens/projection/tsne.h"
#include "modallens/service/http.h"
#include "modallens/service/service.h"
#include "modallens/templates/fpgrowth.h"
#include "tests/support/fixtures.h"
#include "tests/support/interaction_oracle.h"
#include "tests/support/itemset_oracle.h"
#include "tests/support/json_schema.h"
#include "tests/support/shapley_oracle.h"
#include "tests/support/tsne_corpus.h"
#include "tools/cli.h"

namespace modallens::acceptance {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Collects the first few failures of a check.
class Check {
 public:
  void Expect(bool ok, const std::string& what) {
    ++total_;
    if (ok) return;
    ++failed_;
    if (messages_.size() < 5) messages_.push_back(what);
  }
  bool ok() const { return failed_ == 0; }
  std::string Describe() const {
    std::string out = std::to_string(total_ - failed_) + "/" + std::to_string(total_) + " checks";
    for (const auto& m : messages_) out += "; " + m;
    return out;
  }

 private:
  std::size_t total_ = 0, failed_ = 0;
  std::vector<std::string> messages_;
};

struct Criterion {
  std::string name;
  std::string tolerance;
  double limit_s;
  std::function<void(Check&)> run;
};

std::string Num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

// ---- Shapley ----

void ShapleyCorrectness(Check& c) {
  using namespace attribution;
  using testing::VectorFn;
  std::mt19937_64 rng(2026);
  for (std::size_t trial = 0; trial < 100; ++trial) {
    const std::size_t m = 1 + trial % 10;
    const VectorFn f = testing::RandomGame(5000 + trial, m);
    const VectorFn g = testing::RandomGame(9000 + trial, m);
    auto xv = testing::RandomVector(rng, m);
    auto bv = testing::RandomVector(rng, m);
    const Instance x = testing::VectorInstance(xv);
    const auto units = MakeUnits(x, Granularity::kFeature);
    const auto bg = testing::VectorBackground(bv);
    const std::string tag = "trial " + std::to_string(trial) + " m=" + std::to_string(m);

    auto pf = testing::VectorProvider(f, "f");
    const auto rf = ExactShapley(pf, x, bg, units);
    // Local accuracy.
    c.Expect(std::abs(rf.Sum() - (f(xv) - f(bv))) <= 1e-9, tag + " local accuracy");
    // Linearity.
    auto pg = testing::VectorProvider(g, "g");
    const VectorFn combo = [&](const std::vector<double>& v) { return f(v) + 2.0 * g(v); };
    auto pc = testing::VectorProvider(combo, "f+2g");
    const auto rg = ExactShapley(pg, x, bg, units);
    const auto rc = ExactShapley(pc, x, bg, units);
    for (std::size_t i = 0; i < m; ++i) {
      c.Expect(std::abs(rc.values[i] - (rf.values[i] + 2.0 * rg.values[i])) <= 1e-9, tag + " linearity");
    }
    // Dummy: a player the game ignores gets zero.
    const std::size_t d = trial % m;
    const VectorFn ignore = [&, d](std::vector<double> v) {
      v[d] = 0.25;
      return f(v);
    };
    auto pd = testing::VectorProvider(ignore, "dummy");
    c.Expect(std::abs(ExactShapley(pd, x, bg, units).values[d]) <= 1e-12, tag + " dummy");
    // Symmetry: a game invariant under swapping players i and j, with equal inputs.
    if (m >= 2) {
      const std::size_t i = trial % m, j = (trial + 1) % m;
      auto xs = xv, bs = bv;
      xs[j] = xs[i];
      bs[j] = bs[i];
      const VectorFn sym = [&, i, j](const std::vector<double>& v) {
        auto w = v;
        std::swap(w[i], w[j]);
        return f(v) + f(w);
      };
      auto ps = testing::VectorProvider(sym, "sym");
      const Instance xsi = testing::VectorInstance(xs);
      const auto rs = ExactShapley(ps, xsi, testing::VectorBackground(bs), units);
      c.Expect(std::abs(rs.values[i] - rs.values[j]) <= 1e-9, tag + " symmetry");
    }
    // Independent permutation oracle where it is affordable.
    if (m <= 7) {
      const auto oracle = testing::PermutationShapley(f, xv, bv);
      for (std::size_t i = 0; i < m; ++i) {
        c.Expect(std::abs(oracle[i] - rf.values[i]) <= 1e-10, tag + " permutation oracle");
      }
    }
    // Kernel SHAP over every proper coalition (none at all when m = 1).
    {
      const std::size_t n = std::max<std::size_t>((std::size_t{1} << m) - 2, 1);
      const auto kernel = KernelShap(pf, x, bg, units, {n, trial, 3});
      for (std::size_t i = 0; i < m; ++i) {
        c.Expect(std::abs(kernel.values[i] - rf.values[i]) <= 1e-6, tag + " kernel vs exact");
      }
    }
  }
}

void LinearClosedForm(Check& c) {
  using namespace attribution;
  std::mt19937_64 rng(77);
  std::normal_distribution<double> n01;
  for (std::size_t trial = 0; trial < 50; ++trial) {
    const std::size_t m = 1 + trial % 12;
    std::vector<double> w(m), xv(m), mu(m);
    for (std::size_t i = 0; i < m; ++i) w[i] = n01(rng), xv[i] = n01(rng), mu[i] = n01(rng);
    const double bias = n01(rng);
    const Instance x = testing::VectorInstance(xv);
    const FeatureTriple weights = {Matrix(1, m, w), Matrix(1, 0), Matrix(1, 0)};
    const FeatureTriple means = {Matrix(1, m, mu), Matrix(1, 0), Matrix(1, 0)};
    const auto closed = LinearShap(weights, bias, x, means);
    auto provider = testing::VectorProvider(
        [&](const std::vector<double>& v) {
          double out = bias;
          for (std::size_t i = 0; i < m; ++i) out += w[i] * v[i];
          return out;
        },
        "linear");
    const auto exact =
        ExactShapley(provider, x, testing::VectorBackground(mu), MakeUnits(x, Granularity::kCell));
    for (std::size_t i = 0; i < m; ++i) {
      c.Expect(std::abs(closed.values[i] - exact.values[i]) <= 1e-9,
               "trial " + std::to_string(trial) + " unit " + std::to_string(i));
    }
    c.Expect(std::abs(closed.base_value - exact.base_value) <= 1e-9, "base value");
  }
}

// ---- interactions ----

interactions::ImportanceTriple Triple(double l, double a, double v, const std::string& id = "t") {
  interactions::ImportanceTriple t;
  t.instance_id = id;
  t.importance = {l, a, v};
  return t;
}

std::vector<interactions::ImportanceTriple> RandomTriples(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::uniform_real_distribution<double> scale(0.05, 3.0);
  std::vector<interactions::ImportanceTriple> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double s = scale(rng);
    out.push_back(Triple(s * n01(rng), s * n01(rng), s * n01(rng), "i" + std::to_string(i)));
  }
  return out;
}

void InteractionLabeling(Check& c) {
  using namespace interactions;
  const Thresholds th{0.05, 0.6, 0.2};
  const auto dom = LabelInteraction(Triple(0.8, 0.1, 0.1), th);
  c.Expect(dom.label == Label::kDominance && dom.dominant == Modality::kLanguage,
           "(0.8, 0.1, 0.1) -> dominance by language");
  c.Expect(LabelInteraction(Triple(0.5, -0.4, 0.1), th).label == Label::kConflict,
           "(0.5, -0.4, 0.1) -> conflict");
  c.Expect(LabelInteraction(Triple(0.4, 0.4, 0.2), th).label == Label::kComplement,
           "(0.4, 0.4, 0.2) -> complement");
  c.Expect(LabelInteraction(Triple(0.02, 0.9, 0.08), th).label == Label::kOthers,
           "(0.02, 0.9, 0.08) -> others");

  const auto triples = RandomTriples(31, 10000);
  const auto labels = LabelDataset(triples, th);
  std::vector<interactions::ImportanceTriple> scaled = triples;
  for (auto& t : scaled) {
    for (double& v : t.importance) v *= 123.0;
  }
  const auto scaled_labels = LabelDataset(scaled, th);
  std::size_t partition = 0;
  for (std::size_t i = 0; i < triples.size(); ++i) {
    const auto& t = triples[i];
    const auto& l = labels[i];
    partition += std::count(kLabels.begin(), kLabels.end(), l.label);
    c.Expect(LabelName(LabelInteraction(t, th).label) ==
                 testing::OracleLabel({t.importance[0], t.importance[1], t.importance[2]}, th.sig,
                                      th.dom, th.confl),
             "oracle agreement on " + t.instance_id);
    c.Expect(scaled_labels[i].label == l.label, "scale invariance on " + t.instance_id);
    if (l.label == Label::kDominance) {
      const double I = t.importance[Index(*l.dominant)];
      c.Expect(I * t.net() > 0 && std::abs(I) / t.l1() >= th.dom - 1e-12,
               "dominance soundness on " + t.instance_id);
    }
    if (l.label == Label::kConflict) {
      bool opposite = false;
      for (int a = 0; a < 3; ++a) {
        for (int b = a + 1; b < 3; ++b) opposite |= t.importance[a] * t.importance[b] < 0;
      }
      c.Expect(opposite && std::abs(t.net()) / t.l1() <= th.confl + 1e-12,
               "conflict soundness on " + t.instance_id);
    }
  }
  c.Expect(partition == triples.size(), "every triple gets exactly one label");
}

void ThresholdOptimizer(Check& c, double per_dataset_limit, std::string& detail) {
  using namespace interactions;
  // The grid, built independently: k * 0.05 for k = 1..19.
  std::vector<double> grid;
  for (int k = 1; k <= 19; ++k) grid.push_back(k * 0.05);
  double slowest = 0.0;
  for (std::uint64_t d = 0; d < 20; ++d) {
    const auto start = std::chrono::steady_clock::now();
    const auto triples = RandomTriples(400 + d, 60 + 10 * d);
    std::vector<testing::OracleTriple> oracle;
    for (const auto& t : triples) oracle.push_back({t.importance[0], t.importance[1], t.importance[2]});
    const auto result = OptimizeThresholds(triples, 0.05);
    const double at_best =
        testing::OracleObjective(oracle, result.best.sig, result.best.dom, result.best.confl);
    double best_seen = -1e300;
    for (double s : grid) {
      for (double dm : grid) {
        for (double cf : grid) best_seen = std::max(best_seen, testing::OracleObjective(oracle, s, dm, cf));
      }
    }
    c.Expect(best_seen <= at_best + 1e-12, "dataset " + std::to_string(d) + ": grid point beats " +
                                               Num(at_best) + " with " + Num(best_seen));
    c.Expect(std::abs(at_best - result.at_best.objective) <= 1e-12,
             "dataset " + std::to_string(d) + ": reported objective differs from oracle");
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    slowest = std::max(slowest, elapsed);
    c.Expect(elapsed < per_dataset_limit, "dataset " + std::to_string(d) + " took " + Num(elapsed) + " s");
  }
  detail = "slowest dataset " + Num(slowest) + " s";
}

void PlantedRecovery(Check& c, std::string& detail) {
  demo::PlantedOptions options;
  options.seed = 7;
  options.per_class = 150;
  auto corpus = demo::GeneratePlanted(options);
  c.Expect(corpus.dataset.size() == 600, "600 instances");
  attribution::AttributionConfig config;
  config.method = attribution::Method::kExact;
  config.zero_background = true;
  config.background_size = 0;
  config.time_step_pass = false;
  config.jobs = 4;
  const auto run = attribution::AttributeDataset(corpus.model, corpus.dataset, corpus.schema, config);
  c.Expect(run.complete(), "attribution complete");
  const auto result = pipeline::Analyze(corpus.dataset, run, {});
  std::size_t correct = 0;
  for (const auto& l : result.labels) correct += l.label == corpus.truth.at(l.instance_id);
  const double accuracy = double(correct) / double(result.labels.size());
  c.Expect(accuracy >= 0.95, "accuracy " + Num(accuracy));
  detail = "accuracy " + Num(accuracy) + " at " + result.thresholds.ToJson().dump();
}

// ---- templates ----

void FpGrowthEquivalence(Check& c) {
  using templates::FrequentItemset;
  std::mt19937_64 rng(4242);
  std::uniform_int_distribution<std::size_t> items(1, 12), count(1, 300);
  std::uniform_real_distribution<double> support(0.02, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto db = testing::RandomDb(rng, count(rng), items(rng));
    const std::string tag = "db " + std::to_string(trial);
    double levels[3] = {support(rng), support(rng), support(rng)};
    std::sort(levels, levels + 3);
    std::vector<std::vector<FrequentItemset>> mined;
    for (double s : levels) {
      auto fp = templates::FpGrowth(db, s);
      c.Expect(fp == templates::Apriori(db, s), tag + " differs from Apriori at " + Num(s));
      mined.push_back(std::move(fp));
    }
    // Anti-monotone: raising the support only removes itemsets (supports
    // unchanged), and every subset of a frequent itemset is frequent with at
    // least its support.
    for (std::size_t k = 0; k + 1 < 3; ++k) {
      std::map<templates::ItemList, std::size_t> lower;
      for (const auto& f : mined[k]) lower[f.items] = f.support;
      for (const auto& f : mined[k + 1]) {
        c.Expect(lower.count(f.items) && lower[f.items] == f.support, tag + " not nested");
      }
    }
    for (const auto& level : mined) {
      std::map<templates::ItemList, std::size_t> sup;
      for (const auto& f : level) sup[f.items] = f.support;
      for (const auto& f : level) {
        for (std::size_t drop = 0; f.items.size() > 1 && drop < f.items.size(); ++drop) {
          auto sub = f.items;
          sub.erase(sub.begin() + drop);
          c.Expect(sup.count(sub) && sup[sub] >= f.support, tag + " subset support");
        }
      }
    }
  }
}

// ---- projection ----

void TsneCriterion(Check& c, std::string& detail) {
  const Matrix points = testing::ClusteredCorpus(7, 300, 20);
  projection::TsneOptions options;
  options.seed = 3;
  const auto a = projection::TsneEmbed(points, options);
  const auto b = projection::TsneEmbed(points, options);
  c.Expect(a.x == b.x && a.y == b.y, "same seed is not bit-identical");
  c.Expect(a.kl_final < a.kl_after_exaggeration, "KL did not decrease after exaggeration");
  const double diameter = testing::Diameter(a);
  double worst = 0.0;
  for (std::size_t i = 0; i < 10; ++i) {
    worst = std::max(worst, std::hypot(a.x[i] - a.x[290 + i], a.y[i] - a.y[290 + i]));
  }
  c.Expect(worst <= 1e-3 * diameter, "duplicate gap " + Num(worst / diameter) + " of diameter");
  detail = "KL " + Num(a.kl_after_exaggeration) + " -> " + Num(a.kl_final) +
           ", worst duplicate gap " + Num(worst / diameter) + " of diameter";
}

// ---- metrics ----

void MetricsCriterion(Check& c) {
  const std::vector<double> labels = {-3.0, -1.6, -0.4, 0.0, 0.3, 1.2, 2.5, 3.0};
  const auto id = ComputeMetrics(labels, labels);
  c.Expect(id.mae == 0.0 && id.acc7 == 1.0 && id.acc2 == 1.0, "identity dataset");
  c.Expect(SentimentClass(1.4) == 1 && SentimentClass(1.5) == 2 && SentimentClass(-1.5) == -2,
           "rounding");
  const std::vector<double> one = {1.0}, one_four = {1.4};
  c.Expect(ComputeMetrics(one_four, one).acc7 == 1.0, "1.4 vs 1 counts as a 7-class hit");
  c.Expect(std::abs(ComputeMetrics(one_four, one).mae - 0.4) <= 1e-12, "1.4 vs 1 MAE");
  std::vector<double> scaled;
  for (double v : labels) scaled.push_back(2.5 * v + 0.7);
  c.Expect(std::abs(Pearson(scaled, labels) - 1.0) <= 1e-12, "Pearson on scaled labels");
}

// ---- end to end ----

void EndToEnd(Check& c, std::string& detail) {
  const fs::path root = fs::temp_directory_path() / "modallens_acceptance";
  const fs::path first = root / "first", second = root / "second";
  fs::remove_all(root);
  std::ostringstream out, err;
  const auto demo = [&](const fs::path& store) {
    out.str("");
    const int code = cli::Run({"--store", store.string(), "demo", "--seed", "7", "--no-serve"}, out, err);
    c.Expect(code == 0, "demo exit " + std::to_string(code) + ": " + err.str());
    const std::string text = out.str();
    const auto pos = text.find("store fingerprint: ");
    return pos == std::string::npos ? std::string() : text.substr(pos + 19, 16);
  };
  const std::string fp1 = demo(first);
  const std::string fp1_again = demo(first);
  const std::string fp2 = demo(second);
  c.Expect(!fp1.empty() && fp1 == fp1_again && fp1 == fp2,
           "store fingerprints " + fp1 + " / " + fp1_again + " / " + fp2);

  // Serve the store and validate every endpoint against the committed schemas.
  service::AnalysisService svc{Store(first)};
  service::ServeOptions options;
  options.port = 0;
  service::HttpServer server(svc, options);
  const int port = server.Bind();
  std::thread thread([&] { server.Listen(); });
  httplib::Client client("127.0.0.1", port);
  const fs::path schemas = fs::path(MODALLENS_SOURCE_DIR) / "docs" / "api" / "v1";
  std::size_t validated = 0;
  const auto validate = [&](const std::string& schema, const httplib::Result& r, int status) {
    if (!r) {
      c.Expect(false, "no response for " + schema);
      return;
    }
    c.Expect(r->status == status, schema + " status " + std::to_string(r->status));
    const auto errors = testing::SchemaValidator::FromFile(schemas / (schema + ".schema.json"))
                            .Validate(json::parse(r->body));
    c.Expect(errors.empty(), schema + ": " + (errors.empty() ? "" : errors.front()));
    ++validated;
  };
  validate("summary", client.Get("/summary"), 200);
  validate("meta", client.Get("/meta"), 200);
  validate("metrics", client.Get("/metrics"), 200);
  for (const char* label : {"dominance", "conflict", "complement", "others"}) {
    validate("groups_query",
             client.Post("/groups/query", json{{"label", label}}.dump(), "application/json"), 200);
    for (const char* sort : {"support", "importance", "error"}) {
      validate("templates", client.Get(std::string("/templates?group=") + label + "&sort=" + sort), 200);
    }
    validate("projection", client.Get(std::string("/projection?modality=vision&group=") + label), 200);
  }
  validate("templates", client.Get("/templates"), 200);
  for (const char* m : {"language", "audio", "vision"}) {
    for (const char* heat : {"error", "template-importance"}) {
      validate("projection", client.Get(std::string("/projection?modality=") + m + "&heat=" + heat), 200);
    }
  }
  const auto snapshot = svc.Current();
  for (std::size_t i = 0; i < snapshot->dataset.size(); i += 97) {
    validate("instance", client.Get("/instances/" + snapshot->dataset[i].id), 200);
  }
  validate("error", client.Get("/instances/none"), 404);
  validate("error", client.Get("/projection?modality=touch"), 400);
  validate("error", client.Post("/groups/query", R"({"label":"others","range":[5,1]})", "application/json"), 400);
  server.Stop();
  thread.join();
  detail = "store fingerprint " + fp1 + ", " + std::to_string(validated) + " responses validated";
  fs::remove_all(root);
}

}  // namespace
}  // namespace modallens::acceptance

int main() {
  using namespace modallens::acceptance;
  std::string tsne_detail, planted_detail, e2e_detail, eq1_detail;
  const std::vector<Criterion> criteria = {
      {"shapley-correctness", "axioms 1e-9, kernel vs exact 1e-6", 60, ShapleyCorrectness},
      {"linear-closed-form", "1e-9", 60, LinearClosedForm},
      {"interaction-labeling", "exact; 10000 random triples", 5, InteractionLabeling},
      {"threshold-search", "no strictly better grid point (1e-12); < 30 s per dataset", 20 * 30,
       [&](Check& c) { ThresholdOptimizer(c, 30.0, eq1_detail); }},
      {"planted-recovery", "accuracy >= 0.95", 60, [&](Check& c) { PlantedRecovery(c, planted_detail); }},
      {"fpgrowth-vs-apriori", "set-equal itemsets and supports", 30, FpGrowthEquivalence},
      {"tsne", "bit-identical; duplicate gap <= 1e-3 diameter", 60,
       [&](Check& c) { TsneCriterion(c, tsne_detail); }},
      {"metrics", "exact (1e-12)", 5, MetricsCriterion},
      {"end-to-end", "schema-valid responses; identical store fingerprints", 180,
       [&](Check& c) { EndToEnd(c, e2e_detail); }},
  };
  const std::map<std::string, const std::string*> details = {
      {"threshold-search", &eq1_detail},
      {"planted-recovery", &planted_detail},
      {"tsne", &tsne_detail},
      {"end-to-end", &e2e_detail}};
  bool all = true;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.Expect(false, std::string("threw: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed < criterion.limit_s;
    const bool pass = check.ok() && in_time;
    all = all && pass;
    std::string info = check.Describe();
    if (auto it = details.find(criterion.name); it != details.end() && !it->second->empty()) {
      info += "; " + *it->second;
    }
    if (!in_time) info += "; over time limit";
    std::printf("%s %-22s %7.2fs / %4.0fs  tol: %s  [%s]\n", pass ? "PASS" : "FAIL",
                criterion.name.c_str(), elapsed, criterion.limit_s, criterion.tolerance.c_str(),
                info.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
