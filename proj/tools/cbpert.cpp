// Copyright 2026 The cbpert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// cbpert command-line driver.
//
// Exit codes: 0 when every check passes, 1 when a bound, lemma or inequality
// check fails (or a numerical routine does not converge), 2 on usage errors
// and rejected inputs.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cbpert/cbpert.hpp"
#include "cbpert/harness.hpp"

namespace {

using cbpert::InvalidArgument;
using cbpert::json;

constexpr int kPass = 0;
constexpr int kFail = 1;
constexpr int kUsage = 2;

struct Globals {
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
  std::string matrix;
};

cbpert::SymmetricMatrix LoadMatrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open matrix file " + path);
  return cbpert::read_matrix(in);
}

void Emit(const Globals& g, const std::string& text) {
  if (g.out.empty() || g.out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(g.out, std::ios::binary);
  if (!os) throw InvalidArgument("cannot open output file " + g.out);
  os << text;
}

void EmitJson(const Globals& g, const json& j) { Emit(g, j.dump(2) + "\n"); }

void RequireJson(const Globals& g, const char* verb) {
  if (g.format != "json") {
    throw InvalidArgument(std::string(verb) + " supports --format json only");
  }
}

cbpert::SymmetricMatrix RequireMatrix(const Globals& g) {
  if (g.matrix.empty()) throw InvalidArgument("--matrix is required");
  return LoadMatrix(g.matrix);
}

cbpert::NoiseSpec NoiseFrom(const std::string& kind, double scale, std::uint64_t seed) {
  const auto k = cbpert::parse_noise_kind(kind);
  if (!k) throw InvalidArgument("unknown noise kind " + kind);
  if (!(scale >= 0)) throw InvalidArgument("noise scale must be >= 0");
  return {*k, scale, seed};
}

// --- eig -------------------------------------------------------------------

int RunEig(const Globals& g, bool vectors) {
  const auto d = cbpert::eigendecompose(RequireMatrix(g));
  if (g.format == "csv") {
    std::ostringstream os;
    os << "index,eigenvalue\n";
    for (int i = 1; i <= d.n(); ++i) os << i << ',' << cbpert::format_double(d.lambda(i)) << '\n';
    Emit(g, os.str());
    return kPass;
  }
  json j;
  std::vector<double> eigs(d.eigenvalues.data(), d.eigenvalues.data() + d.n());
  j["eigenvalues"] = eigs;
  std::vector<int> order;
  for (int i : d.singular_order) order.push_back(i + 1);
  j["singular_order"] = order;
  j["degenerate"] = d.degenerate;
  j["sweeps"] = d.sweeps;
  j["spectral_norm"] = d.spectral_norm();
  if (vectors) {
    json cols = json::array();
    for (int c = 0; c < d.n(); ++c) {
      std::vector<double> col(d.n());
      for (int r = 0; r < d.n(); ++r) col[r] = d.eigenvectors(r, c);
      cols.push_back(col);
    }
    j["eigenvectors"] = std::move(cols);
  }
  EmitJson(g, j);
  return kPass;
}

// --- bound -----------------------------------------------------------------

struct BoundArgs {
  int p = 1;
  std::string noise_matrix;
  std::string noise_kind = "gaussian_wigner";
  double noise_scale = 0.0;
  std::vector<std::string> bounds;
  std::vector<int> subset;
  int f_power = 1;
};

int RunBound(const Globals& g, const BoundArgs& args) {
  const auto a = RequireMatrix(g);
  const auto e = args.noise_matrix.empty()
                     ? cbpert::sample_noise(NoiseFrom(args.noise_kind, args.noise_scale, g.seed),
                                            a.n())
                     : LoadMatrix(args.noise_matrix);
  if (e.n() != a.n()) throw InvalidArgument("noise and matrix dimensions differ");

  cbpert::ExperimentConfig cfg;
  cfg.n = a.n();
  cfg.p = args.p;
  cfg.f_power = args.f_power;
  for (int i : args.subset) cfg.subset.push_back(i - 1);
  if (!args.bounds.empty()) {
    cfg.bounds.clear();
    for (const auto& name : args.bounds) {
      const auto b = cbpert::parse_bound_name(name);
      if (!b) throw InvalidArgument("unknown bound " + name);
      cfg.bounds.push_back(*b);
    }
  }
  if (cfg.p < 1 || cfg.p >= cfg.n) throw InvalidArgument("need 1 <= p < n");
  if (!cfg.subset.empty()) cbpert::normalize_index_set(cfg.subset, cfg.n);

  const auto da = cbpert::eigendecompose(a);
  const auto dp = cbpert::eigendecompose(a + e);
  const cbpert::GapProfile gaps(da);
  const auto stats = cbpert::compute_stats(da, e, cfg.p);
  const auto subset = cfg.EffectiveSubset();

  cbpert::TrialRecord rec;
  rec.stats = stats;
  rec.actual_proj = cbpert::actual_perturbation(da, dp, cfg.p, cbpert::Functional::kProjP);
  rec.actual_rankp = cbpert::actual_perturbation(da, dp, cfg.p, cbpert::Functional::kRankP);
  rec.actual_subset = cbpert::internal::FunctionalDifference(da, dp, subset, subset,
                                                             [](double) { return 1.0; });
  rec.actual_f = cbpert::actual_f_perturbation(da, dp, cfg.p, cbpert::Monomial{cfg.f_power});
  bool valid = true;
  for (auto b : cfg.bounds) {
    rec.bounds.push_back(cbpert::internal::EvaluateBound(b, stats, gaps, subset, cfg.f_power));
    const auto& r = rec.bounds.back();
    if (r.applicable && cbpert::violates(r.value, rec.ActualFor(r.name))) valid = false;
  }

  if (g.format == "csv") {
    std::ostringstream os;
    os << "bound,value,applicable,actual\n";
    for (const auto& r : rec.bounds) {
      os << cbpert::to_string(r.name) << ',' << cbpert::format_double(r.value) << ','
         << (r.applicable ? 1 : 0) << ',' << cbpert::format_double(rec.ActualFor(r.name)) << '\n';
    }
    Emit(g, os.str());
  } else {
    json j;
    j["stats"] = cbpert::to_json(stats);
    j["actual"] = {{"proj_p", cbpert::number_json(rec.actual_proj)},
                   {"rank_p", cbpert::number_json(rec.actual_rankp)},
                   {"proj_S", cbpert::number_json(rec.actual_subset)},
                   {"f_S", cbpert::number_json(rec.actual_f)}};
    json bounds = json::array();
    for (const auto& r : rec.bounds) bounds.push_back(cbpert::to_json(r));
    j["bounds"] = std::move(bounds);
    j["valid"] = valid;
    EmitJson(g, j);
  }
  if (!valid) std::cerr << "error: an applicable bound is below the actual perturbation\n";
  return valid ? kPass : kFail;
}

// --- experiment ------------------------------------------------------------

int RunExperiment(const Globals& g, const std::string& config_path, const std::string& csv_path) {
  std::ifstream in(config_path);
  if (!in) throw InvalidArgument("cannot open config " + config_path);
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  cbpert::ExperimentConfig cfg;
  try {
    cfg = cbpert::ExperimentConfig::FromJson(raw);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed config: ") + e.what());
  }
  const auto result = cbpert::run_experiment(cfg, g.seed);
  if (!csv_path.empty()) {
    std::ofstream os(csv_path, std::ios::binary);
    if (!os) throw InvalidArgument("cannot open " + csv_path);
    cbpert::write_csv(os, cfg, result.records);
  }
  if (g.format == "csv") {
    std::ostringstream os;
    cbpert::write_csv(os, cfg, result.records);
    Emit(g, os.str());
  } else {
    EmitJson(g, result.summary);
  }
  return kPass;
}

// --- verify-lemmas ---------------------------------------------------------

int RunVerifyLemmas(const Globals& g, const std::vector<int>& n_grid, int instances) {
  RequireJson(g, "verify-lemmas");
  const auto suite = cbpert::verify_lemmas(g.seed, n_grid, instances);
  for (const auto& line : suite.log) std::cerr << "regenerated: " << line << '\n';
  EmitJson(g, suite.to_json());
  return suite.pass() ? kPass : kFail;
}

// --- key-inequality --------------------------------------------------------

struct KeyArgs {
  int n = 20;
  int p = 0;
  int f_power = 1;
  double gap_ratio = 1.5;
  std::string noise_matrix;
};

int RunKeyInequality(const Globals& g, const KeyArgs& args) {
  RequireJson(g, "key-inequality");
  cbpert::KeyInequalityReport r;
  if (!g.matrix.empty()) {
    if (args.noise_matrix.empty()) throw InvalidArgument("--matrix needs --noise-matrix");
    if (args.p < 1) throw InvalidArgument("--matrix needs --p");
    r = cbpert::key_inequality_check(LoadMatrix(g.matrix), LoadMatrix(args.noise_matrix), args.p,
                                     args.f_power);
  } else {
    const auto inst = cbpert::make_gap_instance(g.seed, args.n, args.gap_ratio);
    r = cbpert::key_inequality_check(inst.a, inst.e, inst.p, args.f_power);
  }
  EmitJson(g, r.to_json());
  return r.pass() ? kPass : kFail;
}

// --- dp-lowrank ------------------------------------------------------------

struct DpArgs {
  int p = 1;
  int n = 0;
  std::vector<double> spectrum;
  std::string noise_kind = "gaussian_wigner";
  double noise_scale = 0.0;
  std::string release;
};

int RunDpLowrank(const Globals& g, const DpArgs& args) {
  RequireJson(g, "dp-lowrank");
  cbpert::SymmetricMatrix a;
  if (!g.matrix.empty()) {
    a = LoadMatrix(g.matrix);
  } else {
    if (args.spectrum.empty()) throw InvalidArgument("need --matrix or --spectrum");
    cbpert::ExperimentConfig cfg;
    cfg.n = args.n > 0 ? args.n : static_cast<int>(args.spectrum.size());
    cfg.spectrum.kind = cbpert::SpectrumSpec::Kind::kLowRank;
    cfg.spectrum.values = args.spectrum;
    a = cbpert::build_matrix(cfg, g.seed);
  }
  const auto noise = NoiseFrom(args.noise_kind, args.noise_scale,
                               cbpert::substream_seed(g.seed, 0));
  const auto res = cbpert::private_lowrank(a, args.p, noise);
  if (!args.release.empty()) {
    std::ofstream os(args.release, std::ios::binary);
    if (!os) throw InvalidArgument("cannot open " + args.release);
    cbpert::write_matrix(os, res.noisy_rank_p);
  }
  bool valid = true;
  json certs = json::array();
  for (const auto& c : res.certificates) {
    certs.push_back(cbpert::to_json(c));
    if (c.applicable && cbpert::violates(c.value, res.actual_error)) valid = false;
  }
  json j;
  j["n"] = a.n();
  j["p"] = args.p;
  j["noise"] = cbpert::to_json(noise);
  j["measured_noise_norm"] = cbpert::number_json(res.measured_noise_norm);
  j["actual_error"] = cbpert::number_json(res.actual_error);
  j["stats"] = cbpert::to_json(res.stats);
  j["certificates"] = std::move(certs);
  j["valid"] = valid;
  EmitJson(g, j);
  return valid ? kPass : kFail;
}

// --- wigner-stats ----------------------------------------------------------

struct WignerArgs {
  int n = 100;
  int trials = 20;
  int probes = 5;
  std::string kind = "gaussian_wigner";
  double scale = 1.0;
};

int RunWignerStats(const Globals& g, const WignerArgs& args) {
  RequireJson(g, "wigner-stats");
  if (args.n < 2 || args.probes < 2 || args.probes > args.n) {
    throw InvalidArgument("need n >= 2 and 2 <= probes <= n");
  }
  cbpert::Rng rng(cbpert::substream_seed(g.seed, cbpert::kBasisStream));
  const cbpert::Matrix q = cbpert::random_orthogonal(args.n, rng);
  std::vector<cbpert::Vector> probes;
  for (int i = 0; i < args.probes; ++i) probes.push_back(q.col(i));
  const auto w = cbpert::wigner_statistics(NoiseFrom(args.kind, args.scale, g.seed), args.n,
                                           args.trials, probes);
  const double log_n = std::log(static_cast<double>(args.n));
  int within = 0;
  for (double b : w.bilinear_max) within += b <= 10.0 * args.scale * log_n;
  json j;
  j["n"] = args.n;
  j["trials"] = args.trials;
  j["probes"] = args.probes;
  j["noise"] = cbpert::to_json(NoiseFrom(args.kind, args.scale, g.seed));
  j["norm_over_sqrt_n"] = w.norm_over_sqrt_n;
  j["median_norm_over_sqrt_n"] = cbpert::median(w.norm_over_sqrt_n);
  j["bilinear_max"] = w.bilinear_max;
  j["bilinear_within_10_log_n"] = static_cast<double>(within) / args.trials;
  EmitJson(g, j);
  return kPass;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Contour-bootstrap perturbation bounds for symmetric matrices"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Master seed for every random draw");
  app.add_option("--out", g.out, "Output file (default stdout)");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_option("--matrix", g.matrix, "Symmetric matrix file: n, then n rows");

  auto* eig = app.add_subcommand("eig", "Eigendecomposition of --matrix");
  bool vectors = false;
  eig->add_flag("--vectors", vectors, "Include eigenvectors (columns)");

  auto* bound = app.add_subcommand("bound", "Evaluate bounds for --matrix plus noise");
  BoundArgs bargs;
  bound->add_option("--p", bargs.p, "Number of leading eigenpairs")->required();
  bound->add_option("--noise-matrix", bargs.noise_matrix, "Noise matrix file");
  bound->add_option("--noise-kind", bargs.noise_kind, "Seeded noise kind");
  bound->add_option("--noise-scale", bargs.noise_scale, "Seeded noise scale");
  bound->add_option("--bounds", bargs.bounds, "Bound names (default all)")->delimiter(',');
  bound->add_option("--subset", bargs.subset, "1-based index set for davis_kahan_S")
      ->delimiter(',');
  bound->add_option("--f-power", bargs.f_power, "general_f uses z^k");

  auto* experiment = app.add_subcommand("experiment", "Run a JSON-configured experiment");
  std::string config_path, csv_path;
  experiment->add_option("--config", config_path, "Experiment config (JSON)")->required();
  experiment->add_option("--csv", csv_path, "Also write per-trial CSV here");

  auto* lemmas = app.add_subcommand("verify-lemmas", "Check the segment-integral lemmas");
  std::vector<int> n_grid{8, 16, 32};
  int instances = 10;
  lemmas->add_option("--n-grid", n_grid, "Matrix sizes (>= 7)")->delimiter(',');
  lemmas->add_option("--instances", instances, "Instances per lemma");

  auto* key = app.add_subcommand("key-inequality", "Check the resolvent-bootstrap chain");
  KeyArgs kargs;
  key->add_option("--n", kargs.n, "Size of the seeded instance");
  key->add_option("--p", kargs.p, "Leading block size (with --matrix)");
  key->add_option("--f-power", kargs.f_power, "f(z) = z^k");
  key->add_option("--gap-ratio", kargs.gap_ratio, "delta_p / (4 ||E||) for seeded instances");
  key->add_option("--noise-matrix", kargs.noise_matrix, "Noise matrix file (with --matrix)");

  auto* dp = app.add_subcommand("dp-lowrank", "Noisy rank-p release with certificates");
  DpArgs dargs;
  dp->add_option("--p", dargs.p, "Released rank")->required();
  dp->add_option("--n", dargs.n, "Dimension for --spectrum");
  dp->add_option("--spectrum", dargs.spectrum, "Nonzero eigenvalues")->delimiter(',');
  dp->add_option("--noise-kind", dargs.noise_kind, "Noise kind");
  dp->add_option("--noise-scale", dargs.noise_scale, "Noise scale");
  dp->add_option("--release", dargs.release, "Write the released matrix here");

  auto* wigner = app.add_subcommand("wigner-stats", "Wigner norm and bilinear-form statistics");
  WignerArgs wargs;
  wigner->add_option("--n", wargs.n, "Dimension");
  wigner->add_option("--trials", wargs.trials, "Number of trials");
  wigner->add_option("--probes", wargs.probes, "Number of orthonormal probe vectors");
  wigner->add_option("--kind", wargs.kind, "Noise kind");
  wigner->add_option("--scale", wargs.scale, "Entry scale");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kUsage;
  }

  try {
    if (*eig) return RunEig(g, vectors);
    if (*bound) return RunBound(g, bargs);
    if (*experiment) return RunExperiment(g, config_path, csv_path);
    if (*lemmas) return RunVerifyLemmas(g, n_grid, instances);
    if (*key) return RunKeyInequality(g, kargs);
    if (*dp) return RunDpLowrank(g, dargs);
    if (*wigner) return RunWignerStats(g, wargs);
  } catch (const cbpert::ValidityViolation& e) {
    std::cerr << "validity violation: " << e.what() << '\n' << e.diagnostic().dump(2) << '\n';
    return kFail;
  } catch (const cbpert::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << " (residual " << e.residual() << ")\n";
    return kFail;
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFail;
  }
  return kUsage;
}
