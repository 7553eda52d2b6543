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

// Acceptance run. Prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails.
//
// usage: acceptance <path-to-cbpert-cli> <configs-dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "cbpert/harness.hpp"

namespace {

using namespace cbpert;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

SymmetricMatrix RandomSpectrumMatrix(Rng& rng, int n, std::vector<double>* eigs_out = nullptr) {
  std::vector<double> eigs(n);
  for (double& v : eigs) v = 3.0 * rng.normal();
  std::sort(eigs.begin(), eigs.end(), std::greater<>());
  if (eigs_out) *eigs_out = eigs;
  return with_spectrum(eigs, random_orthogonal(n, rng));
}

// A uniformly chosen p whose gap is at least half the mean gap, so the
// contour never grazes an eigenvalue.
int PickP(Rng& rng, const std::vector<double>& eigs) {
  const int n = static_cast<int>(eigs.size());
  const double mean_gap = (eigs.front() - eigs.back()) / (n - 1);
  std::vector<int> ok;
  for (int p = 1; p < n; ++p) {
    if (eigs[p - 1] - eigs[p] >= 0.5 * mean_gap) ok.push_back(p);
  }
  return ok[static_cast<std::size_t>(rng.uniform() * ok.size())];
}

// 1. Contour integral against the direct spectral sum.
Outcome ContourOracle() {
  Rng rng(101);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int n = 5 + static_cast<int>(rng.uniform() * 36);
    std::vector<double> eigs;
    const SymmetricMatrix a = RandomSpectrumMatrix(rng, n, &eigs);
    const int p = PickP(rng, eigs);
    const SpectralDecomposition d = eigendecompose(a);
    const RectContour c = build_contour_main1(d, p);
    const Monomial f{i % 3};
    const Matrix got = contour_f_S(d, c, f).value.dense();
    const Matrix ref = f_S_direct(d, leading_set(p), f).dense();
    worst = std::max(worst, spectral_norm(SymmetricMatrix::Symmetrize(got - ref)));
  }
  return {worst <= 1e-7, "50 instances, max ||contour - direct|| = " + Fmt(worst)};
}

// 2. Eckart-Young residual and Weyl interlacing.
Outcome ClassicalIdentities() {
  Rng rng(202);
  double ey_err = 0.0, weyl_excess = -1.0;
  for (int i = 0; i < 200; ++i) {
    const int n = 5 + static_cast<int>(rng.uniform() * 26);
    const SymmetricMatrix a = RandomSpectrumMatrix(rng, n);
    const SpectralDecomposition d = eigendecompose(a);
    const int p = 1 + static_cast<int>(rng.uniform() * (n - 1));
    const double residual = spectral_norm(a - best_rank_p(d, p));
    ey_err = std::max(ey_err, std::abs(residual - d.sigma(p + 1)));
    const SymmetricMatrix e =
        sample_noise({NoiseKind::kGaussianWigner, 0.3 * rng.uniform(), rng.next()}, n);
    const Vector shift = eigenvalues(a + e) - d.eigenvalues;
    weyl_excess = std::max(weyl_excess, shift.cwiseAbs().maxCoeff() - spectral_norm(e));
  }
  const bool pass = ey_err <= 1e-8 && weyl_excess <= 1e-9;
  return {pass, "200 pairs, max EY error " + Fmt(ey_err) + ", max Weyl excess " +
                    Fmt(weyl_excess)};
}

// 3. Bound validity on gate-passing instances.
struct Family {
  std::string name;
  int checked = 0;
  int violations = 0;
  int attempts = 0;
};

Outcome BoundValidity() {
  std::vector<Family> fams = {{"davis_kahan_S"}, {"eig_main"},  {"lowrank_xbar"},
                              {"lowrank_E"},     {"general_f"}, {"eckart_young"}};
  const auto record = [](Family& fam, const BoundReport& r, double actual) {
    ++fam.attempts;
    if (!r.applicable) return;
    ++fam.checked;
    fam.violations += actual > r.value;
  };
  const auto need_more = [](const Family& fam) { return fam.checked < 200 && fam.attempts < 2000; };

  // Generic spectra: Davis-Kahan on a random subset, Eckart-Young.
  Rng rng(303);
  while (need_more(fams[0]) || need_more(fams[5])) {
    const int n = 6 + static_cast<int>(rng.uniform() * 35);
    const SymmetricMatrix a = RandomSpectrumMatrix(rng, n);
    const SymmetricMatrix e =
        sample_noise({NoiseKind::kGaussianWigner, 0.2 * rng.uniform(), rng.next()}, n);
    const SpectralDecomposition da = eigendecompose(a), dp = eigendecompose(a + e);
    const int p = 1 + static_cast<int>(rng.uniform() * (n - 1));
    const PerturbationStats s = compute_stats(da, e, p);
    IndexSet subset;
    for (int i = 0; i < n; ++i) {
      if (rng.uniform() < 0.3) subset.push_back(i);
    }
    if (subset.empty() || static_cast<int>(subset.size()) == n) subset = {0};
    const double actual_s =
        internal::FunctionalDifference(da, dp, subset, subset, [](double) { return 1.0; });
    record(fams[0], bound_davis_kahan(s, GapProfile(da), subset), actual_s);
    record(fams[5], bound_eckart_young(s), actual_perturbation(da, dp, p, Functional::kRankP));
  }

  for (std::uint64_t i = 0; need_more(fams[1]) || need_more(fams[4]); ++i) {
    const int n = 8 + static_cast<int>(i % 33);
    const Instance inst = make_eig_instance(substream_seed(304, i), n);
    const SpectralDecomposition da = eigendecompose(inst.a), dp = eigendecompose(inst.a + inst.e);
    const PerturbationStats s = compute_stats(da, inst.e, inst.p);
    record(fams[1], bound_eig_main(s), actual_perturbation(da, dp, inst.p, Functional::kProjP));
    const Monomial f{static_cast<int>(i % 2)};
    record(fams[4], bound_general_f(s, f), actual_f_perturbation(da, dp, inst.p, f));
  }

  for (std::uint64_t i = 0; need_more(fams[2]) || need_more(fams[3]); ++i) {
    const int n = 8 + static_cast<int>(i % 33);
    const Instance inst = make_split_instance(substream_seed(305, i), n, i % 4 == 0);
    const SpectralDecomposition da = eigendecompose(inst.a), dp = eigendecompose(inst.a + inst.e);
    const PerturbationStats s = compute_stats(da, inst.e, inst.p);
    const double actual = actual_perturbation(da, dp, inst.p, Functional::kRankP);
    record(fams[2], bound_lowrank_xbar(s), actual);
    record(fams[3], bound_lowrank_E(s), actual);
  }

  bool pass = true;
  std::ostringstream os;
  for (const Family& f : fams) {
    pass = pass && f.checked >= 200 && f.violations == 0;
    os << f.name << ' ' << (f.checked - f.violations) << '/' << f.checked << "; ";
  }
  return {pass, os.str()};
}

ExperimentConfig LoadConfig(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return ExperimentConfig::FromJson(json::parse(in));
}

double BoundValue(const ExperimentConfig& cfg, const TrialRecord& rec, BoundName b,
                  bool* applicable) {
  for (std::size_t i = 0; i < cfg.bounds.size(); ++i) {
    if (cfg.bounds[i] == b) {
      *applicable = rec.bounds[i].applicable;
      return rec.bounds[i].value;
    }
  }
  throw InvalidArgument("bound not in config");
}

// 4. Eigenspace bound against Davis-Kahan on a rank-3 spectrum.
Outcome EigenspaceRegime(const fs::path& configs) {
  const ExperimentConfig cfg = LoadConfig(configs / "eig_regime_n300.json");
  const ExperimentResult res = run_experiment(cfg, 2026);
  int wins = 0, applicable_count = 0;
  double eig_sum = 0.0, dk_sum = 0.0;
  for (const auto& rec : res.records) {
    bool ok_eig = false, ok_dk = false;
    const double eig = BoundValue(cfg, rec, BoundName::kEigMain, &ok_eig);
    const double dk = BoundValue(cfg, rec, BoundName::kDavisKahanP, &ok_dk);
    applicable_count += ok_eig;
    wins += ok_eig && eig < dk;
    eig_sum += eig;
    dk_sum += dk;
  }
  const double n = static_cast<double>(res.records.size());
  const double frac = wins / n;
  return {frac >= 0.9, "eig_main below davis_kahan_p in " + Fmt(100 * frac) +
                           "% of 50 trials (eig_main applicable in " +
                           Fmt(100 * applicable_count / n) + "%, mean eig_main " +
                           Fmt(eig_sum / n) + ", mean davis_kahan_p " + Fmt(dk_sum / n) +
                           "); every applicable bound valid"};
}

// 5. Low-rank certificate against Eckart-Young on a PSD spectrum.
Outcome LowRankRegime(const fs::path& configs) {
  const ExperimentConfig cfg = LoadConfig(configs / "psd_lowrank_regime.json");
  const ExperimentResult res = run_experiment(cfg, 2026);
  int wins = 0;
  double min_ratio = std::numeric_limits<double>::infinity();
  for (const auto& rec : res.records) {
    bool ok_le = false, ok_ey = false;
    const double le = BoundValue(cfg, rec, BoundName::kPsdLowrankE, &ok_le);
    const double ey = BoundValue(cfg, rec, BoundName::kEckartYoung, &ok_ey);
    wins += ok_le && le < ey;
    min_ratio = std::min(min_ratio, rec.stats.delta_p / rec.stats.noise_norm);
  }
  const double frac = wins / static_cast<double>(res.records.size());
  return {frac >= 0.9 && min_ratio >= 50.0,
          "psd_lowrank_E below eckart_young in " + Fmt(100 * frac) +
              "% of 50 trials, min delta_p/||E|| = " + Fmt(min_ratio)};
}

// 6. Wigner norm and bilinear forms.
Outcome WignerLemma() {
  const int n = 400;
  Rng rng(606);
  const Matrix q = random_orthogonal(n, rng);
  std::vector<Vector> probes;
  for (int i = 0; i < 5; ++i) probes.push_back(q.col(i));
  const WignerSummary w = wigner_statistics({NoiseKind::kGaussianWigner, 1.0, 607}, n, 20, probes);
  const double med = median(w.norm_over_sqrt_n);
  int within = 0;
  for (double b : w.bilinear_max) within += b <= 10.0 * std::log(n);
  const double frac = within / 20.0;
  return {med >= 1.9 && med <= 2.1 && frac >= 0.95,
          "median ||E||/sqrt(n) = " + Fmt(med) + ", 10 probe pairs within 10 ln n in " +
              Fmt(100 * frac) + "% of trials"};
}

// 7. Segment-integral lemma suite.
Outcome LemmaSuiteCriterion() {
  const LemmaSuite suite = verify_lemmas(707, {8, 16, 32}, 10);
  std::ostringstream os;
  for (const auto& [name, t] : suite.lemmas) {
    os << name << ' ' << (t.pass() ? "ok" : "FAIL") << " (margin " << Fmt(t.margin) << "); ";
  }
  bool margins = true;
  for (const auto& [name, t] : suite.lemmas) margins = margins && t.margin >= 0;
  return {suite.pass() && margins && suite.lemmas.size() == 8, os.str()};
}

// 8. Resolvent-bootstrap chain.
Outcome KeyInequality() {
  Rng rng(808);
  int ok = 0, total = 0;
  double worst_resolvent = 0.0, worst_ratio = 0.0;
  for (int i = 0; i < 30; ++i) {
    const int n = 10 + static_cast<int>(rng.uniform() * 31);
    const double ratio = i < 10 ? 1.0 : 1.0 + 2.0 * rng.uniform();
    const Instance inst = make_gap_instance(rng.next(), n, ratio);
    for (int power : {0, 1}) {
      const KeyInequalityReport r = key_inequality_check(inst.a, inst.e, inst.p, power);
      ++total;
      ok += r.max_resolvent <= 0.5 + 1e-9 && r.actual <= r.two_f1 && r.pass();
      worst_resolvent = std::max(worst_resolvent, r.max_resolvent);
      if (r.two_f1 > 0) worst_ratio = std::max(worst_ratio, r.actual / r.two_f1);
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) +
                           " checks, max resolvent product " + Fmt(worst_resolvent) +
                           ", max actual/(2 F1) " + Fmt(worst_ratio)};
}

// 9. Byte-identical CLI output on reruns.
std::string ReadAll(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome Determinism(const std::string& cli, const fs::path& configs) {
  if (cli.empty() || !fs::exists(cli)) return {false, "CLI binary not available"};
  const fs::path dir = fs::temp_directory_path() / "cbpert_acceptance";
  fs::create_directories(dir);
  {
    std::ofstream m(dir / "a.txt");
    write_matrix(m, with_spectrum({5, 3, 1, -1, -4}, [] {
                   Rng rng(909);
                   return random_orthogonal(5, rng);
                 }()));
  }
  const std::string matrix = (dir / "a.txt").string();
  const std::vector<std::string> commands = {
      "eig --matrix " + matrix,
      "bound --matrix " + matrix + " --p 2 --noise-scale 0.05 --seed 3",
      "experiment --config " + (configs / "small_all_bounds.json").string() + " --seed 5",
      "experiment --config " + (configs / "small_all_bounds.json").string() +
          " --seed 5 --format csv",
      "verify-lemmas --seed 3 --n-grid 8,12 --instances 2",
      "key-inequality --seed 13 --n 20",
      "dp-lowrank --spectrum 50,30,20 --n 30 --p 1 --noise-scale 0.05 --seed 6",
      "wigner-stats --n 60 --trials 3 --seed 4",
  };
  int identical = 0;
  std::string failures;
  for (std::size_t i = 0; i < commands.size(); ++i) {
    std::string outs[2];
    bool ran = true;
    for (int run = 0; run < 2; ++run) {
      const fs::path out = dir / ("out" + std::to_string(i) + "_" + std::to_string(run));
      const std::string cmd = "\"" + cli + "\" " + commands[i] + " --out \"" + out.string() +
                              "\" 2>/dev/null";
      ran = ran && std::system(cmd.c_str()) == 0;
      outs[run] = ReadAll(out);
    }
    if (ran && !outs[0].empty() && outs[0] == outs[1]) {
      ++identical;
    } else {
      failures += " [" + commands[i].substr(0, commands[i].find(' ')) + "]";
    }
  }
  fs::remove_all(dir);
  return {identical == static_cast<int>(commands.size()),
          std::to_string(identical) + "/" + std::to_string(commands.size()) +
              " commands byte-identical on rerun" + failures};
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  const fs::path configs = argc > 2 ? argv[2] : "configs";
  struct Criterion {
    int id;
    std::string title;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "contour oracle", ContourOracle},
      {2, "classical identities", ClassicalIdentities},
      {3, "bound validity", BoundValidity},
      {4, "eigenspace regime", [&] { return EigenspaceRegime(configs); }},
      {5, "low-rank regime", [&] { return LowRankRegime(configs); }},
      {6, "Wigner norms", WignerLemma},
      {7, "lemma suite", LemmaSuiteCriterion},
      {8, "key inequality", KeyInequality},
      {9, "determinism", [&] { return Determinism(cli, configs); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failed += !o.pass;
    std::cout << "criterion " << c.id << " (" << c.title << "): " << (o.pass ? "PASS" : "FAIL")
              << " [" << Fmt(secs) << " s] " << o.detail << std::endl;
  }
  std::cout << (9 - failed) << "/9 criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
