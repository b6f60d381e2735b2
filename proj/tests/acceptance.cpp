// Acceptance suite: one check per criterion, run as
//   qimd_acceptance [--criterion N]
// Each criterion prints a single [PASS]/[FAIL] line; the exit code is the
// number of failed criteria.

#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qimd/fock.hpp"
#include "qimd/fringe.hpp"
#include "qimd/monte_carlo.hpp"
#include "qimd/numeric.hpp"
#include "qimd/runner.hpp"
#include "qimd/sampling.hpp"
#include "qimd/scan.hpp"
#include "qimd/serialize.hpp"
#include "qimd/uncertainty.hpp"
#include "qimd/working_point.hpp"

namespace {

using namespace qimd;

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& message) {
        if (!ok) {
            pass = false;
            if (!detail.empty()) detail += "; ";
            detail += message;
        }
    }

    void note(const std::string& message) {
        if (!detail.empty()) detail += "; ";
        detail += message;
    }
};

std::string fmt(double v) { return format_double(v); }

FringeModel random_model(std::mt19937_64& rng, double contrast_min, double xi_max) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    FringeModel model;
    model.amplitude = std::exp(std::log(0.1) + uni(rng) * std::log(1e4 / 0.1));
    model.contrast = contrast_min + (1.0 - contrast_min) * uni(rng);
    model.noise_mean = model.amplitude * xi_max * uni(rng);
    model.eta = 0.05 + 0.9 * uni(rng);
    model.lambda_phi = uni(rng) < 0.5 ? 0.0 : 1.0;
    model.lambda_n = uni(rng) < 0.5 ? 0.0 : 1.0;
    return model;
}

// 1. Explicit propagation sums equal the closed form for M in {5, 8, 16}.
Outcome criterion1() {
    Outcome out;
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst = 0.0;
    int tuples = 0;
    for (int m : {5, 8, 16}) {
        const ScanPlan plan(m);
        for (int i = 0; i < 200; ++i) {
            const FringeModel model = random_model(rng, 0.05, 3.0);
            const double phase = 20.0 * uni(rng) - 10.0;
            const DistillationSum sum = distillation_uncertainty_sum(model, plan, phase);
            worst = std::max(worst, relative_diff(sum.error_sum, sum.closed_form));
            ++tuples;
        }
    }
    out.require(tuples >= 500, "need at least 500 tuples");
    out.require(worst <= 1e-10, "worst relative deviation " + fmt(worst));
    out.note("tuples=" + std::to_string(tuples) + " worst_rel=" + fmt(worst));
    return out;
}

// 2. The no-noise and perfect-contrast comparison tables match the general
//    forms to 1e-9; the spontaneous table converges at rate O(n0).
Outcome criterion2() {
    Outcome out;
    const ScanPlan plan(6);
    double worst12 = 0.0;
    int points = 0;
    const NoiseChannel no_noise{1.0, 0.0, PhotonStatistics::Poissonian};
    for (double n0 : {0.5, 1.0, 4.0, 20.0, 500.0}) {
        for (double t1 : {0.5, 0.2, 0.35, 0.65, 0.8}) {
            const MziSpec spec{n0, t1, 0.55};
            const TableValues tv = table_formula(spec, TableRegime::NoNoise, plan, no_noise);
            const FringeModel model = derive_fringe(spec, no_noise);
            worst12 = std::max(worst12,
                               relative_diff(tv.distillation, distillation_uncertainty(model, plan)));
            worst12 = std::max(
                worst12, relative_diff(tv.working_point, wp_uncertainty_closed(model, plan).variance));
            ++points;
        }
        for (double n0p : {0.25, 1.0, 3.0, 9.0}) {
            const NliSpec spec{n0, n0p};
            const TableValues tv = table_formula(spec, TableRegime::NoNoise, plan, no_noise);
            const FringeModel model = derive_fringe(spec, no_noise);
            worst12 = std::max(worst12,
                               relative_diff(tv.distillation, distillation_uncertainty(model, plan)));
            worst12 = std::max(
                worst12, relative_diff(tv.working_point, wp_uncertainty_closed(model, plan).variance));
            ++points;
        }
    }
    for (double n0 : {0.5, 5.0, 80.0}) {
        for (double eta : {0.3, 0.6, 0.9}) {
            for (double nn : {0.2, 1.0, 6.0}) {
                for (PhotonStatistics stats :
                     {PhotonStatistics::Poissonian, PhotonStatistics::Thermal}) {
                    const NoiseChannel noise{eta, nn / (1.0 - eta), stats};
                    const MziSpec mzi{n0, 0.5, 0.5};
                    const NliSpec nli{n0, n0};
                    for (const InterferometerSpec spec : {InterferometerSpec{mzi},
                                                          InterferometerSpec{nli}}) {
                        const TableValues tv =
                            table_formula(spec, TableRegime::PerfectContrast, plan, noise);
                        const FringeModel model = derive_fringe(spec, noise);
                        worst12 = std::max(worst12,
                                           relative_diff(tv.intrinsic, intrinsic_uncertainty(model)));
                        worst12 = std::max(worst12, relative_diff(tv.distillation,
                                                                  distillation_uncertainty(model, plan)));
                        worst12 =
                            std::max(worst12, relative_diff(tv.working_point,
                                                            wp_uncertainty_closed(model, plan).variance));
                        ++points;
                    }
                }
            }
        }
    }
    out.require(points >= 100, "grid too small");
    out.require(worst12 <= 1e-9, "exact-regime tables worst relative deviation " + fmt(worst12));

    double worst3_margin = 0.0;
    for (double n0 : {1e-2, 1e-3, 1e-4}) {
        for (double eta : {0.3, 0.5, 0.7, 0.9}) {
            const NoiseChannel noise{eta, n0, PhotonStatistics::Thermal};
            for (int kind = 0; kind < 2; ++kind) {
                const InterferometerSpec spec =
                    kind == 0 ? InterferometerSpec{MziSpec{n0, 0.5, 0.5}}
                              : InterferometerSpec{NliSpec{n0, n0}};
                const TableValues tv = table_formula(spec, TableRegime::Spontaneous, plan, noise);
                const FringeModel model = derive_fringe(spec, noise);
                const double err_n =
                    std::abs(tv.distillation / distillation_uncertainty(model, plan) - 1.0);
                const double err_wp =
                    std::abs(tv.working_point / wp_uncertainty_closed(model, plan).variance - 1.0);
                worst3_margin = std::max({worst3_margin, err_n / (10.0 * n0), err_wp / (10.0 * n0)});
            }
        }
    }
    out.require(worst3_margin <= 1.0,
                "spontaneous-table ratio error exceeds 10*n0 (margin " + fmt(worst3_margin) + ")");
    out.note("points=" + std::to_string(points) + " worst12=" + fmt(worst12) +
             " spontaneous_margin=" + fmt(worst3_margin));
    return out;
}

// 3. Closed working-point form reduces to 1/(4 M n_min (n_min+1)) without noise.
Outcome criterion3() {
    Outcome out;
    const NoiseChannel no_noise{1.0, 0.0, PhotonStatistics::Poissonian};
    double worst = 0.0;
    for (int m : {1, 4}) {
        for (int n0 = 1; n0 <= 10; ++n0) {
            for (int n0p = 1; n0p <= 10; ++n0p) {
                const FringeModel model = derive_fringe(
                    NliSpec{static_cast<double>(n0), static_cast<double>(n0p)}, no_noise);
                const double closed = wp_uncertainty_closed(model, m).variance;
                const double gains = balanced_wp(std::min(n0, n0p), m);
                worst = std::max(worst, relative_diff(closed, gains));
            }
        }
    }
    const FringeModel spot = derive_fringe(NliSpec{1.0, 2.0}, no_noise);
    const double spot_value = wp_uncertainty_closed(spot, 1).variance;
    out.require(worst <= 1e-9, "worst relative deviation " + fmt(worst));
    out.require(std::abs(spot_value - 0.125) <= 1e-12,
                "spot value n0=1,n0p=2,M=1 is " + fmt(spot_value));
    out.note("worst_rel=" + fmt(worst) + " spot=" + fmt(spot_value));
    return out;
}

// 4. Numerical working-point solver matches the closed form.
Outcome criterion4() {
    Outcome out;
    std::mt19937_64 rng(404);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double worst = 0.0;
    int boundary_cases = 0;
    for (int i = 0; i < 200; ++i) {
        FringeModel model = random_model(rng, 0.5, 2.0);
        if (i % 8 == 0) {  // boundary-infimum configurations
            model.contrast = 1.0;
            model.noise_mean = 0.0;
        }
        const int m = 1 + static_cast<int>(uni(rng) * 7.0);
        const WorkingPointResult numeric = minimize_phase_uncertainty(model, m);
        const double closed = wp_uncertainty_closed(model, m).variance;
        worst = std::max(worst, relative_diff(numeric.variance, closed));
        if (numeric.at_boundary) ++boundary_cases;
    }
    out.require(worst <= 1e-6, "worst relative deviation " + fmt(worst));
    out.require(boundary_cases >= 10, "too few boundary cases exercised");
    out.note("worst_rel=" + fmt(worst) + " boundary_cases=" + std::to_string(boundary_cases));
    return out;
}

// 5. MZI working-point advantage endpoints under the thermal noise rule
//    n_n = (1-eta) n0: the ratio map approaches 1/4 without noise and 1/2 in
//    the noise-dominated limit.
Outcome criterion5() {
    Outcome out;
    SweepGrid grid;
    grid.eta_axis = {0.01, 0.999};
    grid.n0_axis = {1000.0};
    grid.noise_stats = PhotonStatistics::Thermal;
    const auto cells = ratio_map(grid, InterferometerKind::Mzi, 1);
    const double clean = cells[1].ratio;   // eta = 0.999
    const double noisy = cells[0].ratio;   // eta = 0.01
    out.require(std::abs(clean / 0.25 - 1.0) <= 0.01,
                "ratio(eta=0.999,n0=1e3)=" + fmt(clean) + " not within 1% of 1/4");
    out.require(std::abs(noisy / 0.5 - 1.0) <= 0.02,
                "ratio(eta=0.01,n0=1e3)=" + fmt(noisy) + " not within 2% of 1/2");
    out.note("ratio_clean=" + fmt(clean) + " ratio_noisy=" + fmt(noisy));
    return out;
}

// 6. Shot-noise boundary of the equal-gain NLI: strictly decreasing in n0
//    and converging to eta = 1/3.
Outcome criterion6() {
    Outcome out;
    const std::vector<double> ladder{1e2, 1e3, 1e4, 1e6};
    // Goldens recorded from the first verified run of the root-finder.
    const std::vector<double> golden{0.35941579195769685, 0.3418280103634116,
                                     0.33604384969527706, 0.33360538772090303};
    std::vector<double> roots;
    for (double n0 : ladder) {
        const ShotNoiseBoundary b = shot_noise_boundary(n0, 1);
        if (!b.eta) {
            out.require(false, "no boundary found at n0=" + fmt(n0));
            return out;
        }
        out.require(std::abs(b.residual) < 1e-9,
                    "root residual " + fmt(b.residual) + " at n0=" + fmt(n0));
        roots.push_back(*b.eta);
    }
    for (std::size_t i = 1; i < roots.size(); ++i) {
        out.require(roots[i] < roots[i - 1], "eta* not strictly decreasing");
    }
    const double third = 1.0 / 3.0;
    out.require(std::abs(roots.back() - third) < std::abs(roots.front() - third) / 10.0,
                "convergence toward 1/3 too slow");
    if (!golden.empty()) {
        for (std::size_t i = 0; i < roots.size(); ++i) {
            out.require(std::abs(roots[i] - golden[i]) <= 1e-9,
                        "golden mismatch at n0=" + fmt(ladder[i]) + ": " + fmt(roots[i]));
        }
    }
    std::string listing;
    for (double r : roots) listing += (listing.empty() ? "" : ",") + fmt(r);
    out.note("eta*=" + listing);
    return out;
}

// 7. Fock-space oracle moments.
Outcome criterion7() {
    Outcome out;
    double worst_norm = 0.0;
    double worst_var = 0.0;
    double worst_mean = 0.0;
    for (double eta : {0.17, 0.5, 0.71}) {
        for (int m = 0; m <= 30; ++m) {
            for (int n = 0; n <= 30; ++n) {
                const FockDistribution d = bs_output_distribution(m, n, eta);
                worst_norm = std::max(worst_norm, std::abs(d.sum() - 1.0));
                const double var_ref = eta * (1.0 - eta) * (m + n + 2.0 * m * n);
                worst_var = std::max(worst_var, std::abs(d.variance() - var_ref) /
                                                    std::max(1.0, var_ref));
                const double mean_ref = eta * m + (1.0 - eta) * n;
                worst_mean =
                    std::max(worst_mean, std::abs(d.mean() - mean_ref) / std::max(1.0, mean_ref));
            }
        }
    }
    out.require(worst_norm <= 1e-12, "normalization deviation " + fmt(worst_norm));
    out.require(worst_var <= 1e-10, "variance deviation " + fmt(worst_var));
    out.require(worst_mean <= 1e-10, "mean deviation " + fmt(worst_mean));

    const FockDistribution hom = bs_output_distribution(1, 1, 0.5);
    out.require(std::abs(hom.probs[0] - 0.5) <= 1e-12 && std::abs(hom.probs[1]) <= 1e-12 &&
                    std::abs(hom.probs[2] - 0.5) <= 1e-12,
                "Hong-Ou-Mandel probabilities off");
    out.note("worst_norm=" + fmt(worst_norm) + " worst_var=" + fmt(worst_var));
    return out;
}

// 8. Monte-Carlo detected variance versus the closed form at
//    (mean_I, mean_noise, eta) = (4, 2, 0.5), 1e5 shots, all four statistics
//    combinations.
Outcome criterion8() {
    Outcome out;
    const PhotonStatistics kinds[2] = {PhotonStatistics::Poissonian, PhotonStatistics::Thermal};
    std::uint64_t seed = 8801;
    for (PhotonStatistics si : kinds) {
        for (PhotonStatistics sn : kinds) {
            SimulationModel sim;
            sim.mean_interferometer = [](double) { return 4.0; };
            sim.stats_interferometer = si;
            sim.mean_noise = 2.0;
            sim.stats_noise = sn;
            sim.eta = 0.5;
            const double np = 2.0, nn = 1.0;
            const double analytic = np * (1.0 + lambda_of(si) * np) +
                                    nn * (1.0 + lambda_of(sn) * nn) + 2.0 * np * nn;
            const MeasurementRecord record =
                simulate_detected_counts(sim, {0.0}, 100000, seed++);
            const EmpiricalEstimate est = make_estimate(record.counts[0]);
            const double z = (est.variance - analytic) / est.stderr_variance;
            out.require(std::abs(z) <= 3.0,
                        "variance z=" + fmt(z) + " for analytic " + fmt(analytic));
            out.note(to_string(si).substr(0, 1) + "/" + to_string(sn).substr(0, 1) + ": emp=" +
                     fmt(est.variance) + " ref=" + fmt(analytic) + " z=" + fmt(z));
        }
    }
    return out;
}

// 9. Monte-Carlo estimator variances within 5% of the error-propagation
//    predictions.
Outcome criterion9() {
    Outcome out;
    {
        const FringeModel model = derive_fringe(
            MziSpec{100.0, 0.5, 0.5}, NoiseChannel{1.0, 0.0, PhotonStatistics::Poissonian});
        McDistillationConfig config;
        config.shots = 100;
        config.trials = 10000;
        config.seed = 9001;
        config.true_phase = 0.7;
        const McEstimatorResult r = mc_distillation(model, ScanPlan(8), config);
        out.require(r.linearity_ok, "MZI distillation linearity gate failed");
        const double ratio = r.error.variance / r.predicted;
        out.require(std::abs(ratio - 1.0) <= 0.05, "MZI distillation ratio " + fmt(ratio));
        out.note("mzi_dist=" + fmt(ratio));
    }
    {
        const FringeModel model = derive_fringe(
            NliSpec{5.0, 5.0}, NoiseChannel{0.8, 5.0, PhotonStatistics::Thermal});
        McDistillationConfig config;
        config.shots = 1000;
        config.trials = 10000;
        config.seed = 9002;
        config.true_phase = 0.7;
        const McEstimatorResult r = mc_distillation(model, ScanPlan(8), config);
        out.require(r.linearity_ok, "NLI distillation linearity gate failed");
        const double ratio = r.error.variance / r.predicted;
        out.require(std::abs(ratio - 1.0) <= 0.05, "NLI distillation ratio " + fmt(ratio));
        out.note("nli_dist=" + fmt(ratio));
    }
    {
        FringeModel model{50.0, 1.0, 0.0, 1.0, 0.0, 0.0};
        McWorkingPointConfig config;
        config.probe_phase = std::numbers::pi / 2.0;
        config.shots = 100;
        config.trials = 10000;
        config.seed = 9003;
        const McEstimatorResult r = mc_working_point(model, config);
        out.require(r.conclusive(), "noiseless WP gates failed");
        const double ratio = r.error.variance / r.predicted;
        out.require(std::abs(ratio - 1.0) <= 0.05, "noiseless WP ratio " + fmt(ratio));
        out.note("wp_quad=" + fmt(ratio));
    }
    {
        const FringeModel model = derive_fringe(
            NliSpec{5.0, 5.0}, NoiseChannel{0.8, 5.0, PhotonStatistics::Thermal});
        const WorkingPointResult wp = minimize_phase_uncertainty(model, 1);
        McWorkingPointConfig config;
        config.probe_phase = wp.phase;
        config.shots = 400;
        config.trials = 10000;
        config.seed = 9004;
        const McEstimatorResult r = mc_working_point(model, config);
        out.require(r.conclusive(), "thermal WP gates failed");
        const double ratio = r.error.variance / r.predicted;
        out.require(std::abs(ratio - 1.0) <= 0.05, "thermal WP ratio " + fmt(ratio));
        out.note("wp_thermal=" + fmt(ratio));
    }
    return out;
}

// 10. CLI determinism: byte-identical mc output across runs and worker counts.
Outcome criterion10() {
    Outcome out;
    const char* bin = std::getenv("QIMD_BIN");
    if (bin == nullptr) {
        out.require(false, "QIMD_BIN not set");
        return out;
    }
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() /
                         ("qimd_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);

    const auto slurp = [](const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        return buffer.str();
    };
    const auto run = [&](const std::string& args) {
        const std::string cmd = std::string("\"") + bin + "\" " + args + " > /dev/null 2>&1";
        return std::system(cmd.c_str());
    };

    {
        std::ofstream cfg(dir / "estimator.json");
        cfg << R"({"command":"mc",
                   "interferometer":{"kind":"nli","n0":2,"n0p":2},
                   "noise":{"eta":0.8,"mean":2,"stats":"thermal"},
                   "scan":{"steps":5},
                   "mc":{"kind":"distillation","shots":100,"trials":300,"seed":424242}})";
    }
    const std::string base = "mc --config " + (dir / "estimator.json").string();
    int rc = run(base + " --out " + (dir / "a.json").string() + " --workers 1");
    out.require(rc == 0, "estimator run 1 failed");
    rc = run(base + " --out " + (dir / "b.json").string() + " --workers 1");
    out.require(rc == 0, "estimator run 2 failed");
    rc = run(base + " --out " + (dir / "c.json").string() + " --workers 4");
    out.require(rc == 0, "estimator run with 4 workers failed");
    const std::string a = slurp(dir / "a.json");
    out.require(!a.empty(), "estimator report empty");
    out.require(a == slurp(dir / "b.json"), "reports differ between identical runs");
    out.require(a == slurp(dir / "c.json"), "reports differ across worker counts");

    {
        std::ofstream cfg(dir / "variance.json");
        cfg << R"({"command":"mc",
                   "interferometer":{"kind":"mzi","n0":8},
                   "noise":{"eta":0.5,"mean":4,"stats":"poissonian"},
                   "scan":{"steps":3},
                   "mc":{"kind":"variance","shots":5000,"seed":77}})";
    }
    const std::string vbase = "mc --config " + (dir / "variance.json").string();
    rc = run(vbase + " --out " + (dir / "v1.json").string() + " --workers 1");
    out.require(rc == 0, "variance run 1 failed");
    rc = run(vbase + " --out " + (dir / "v2.json").string() + " --workers 4");
    out.require(rc == 0, "variance run 2 failed");
    out.require(slurp(dir / "v1.json") == slurp(dir / "v2.json"), "variance reports differ");
    const std::string rec1 = slurp(dir / "v1.record.csv");
    out.require(!rec1.empty(), "record CSV empty");
    out.require(rec1 == slurp(dir / "v2.record.csv"), "record CSVs differ across worker counts");

    std::error_code ec;
    fs::remove_all(dir, ec);
    out.note("byte-identical across 2 runs and workers {1,4}");
    return out;
}

struct Criterion {
    int index;
    const char* name;
    std::function<Outcome()> check;
    long long budget_ms;  // stated runtime bound; 0 = none
};

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;
    for (int i = 1; i < argc; ++i) {
        const std::string arg = argv[i];
        if (arg == "--criterion" && i + 1 < argc) selected = std::atoi(argv[++i]);
    }

    const std::vector<Criterion> criteria{
        {1, "closed-form identity suite (explicit sums vs closed form)", criterion1, 1000},
        {2, "comparison tables vs general forms", criterion2, 1000},
        {3, "gain-limited working point identity", criterion3, 0},
        {4, "numerical WP solver vs closed form", criterion4, 5000},
        {5, "MZI working-point advantage endpoints", criterion5, 0},
        {6, "shot-noise boundary convergence to 1/3", criterion6, 0},
        {7, "Fock oracle moments and Hong-Ou-Mandel", criterion7, 10000},
        {8, "Monte-Carlo detected variance vs closed form", criterion8, 30000},
        {9, "Monte-Carlo estimator variances vs propagation", criterion9, 120000},
        {10, "CLI mc determinism across runs and workers", criterion10, 0},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        if (selected != 0 && criterion.index != selected) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.check();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        if (criterion.budget_ms > 0 && ms > criterion.budget_ms) {
            outcome.pass = false;
            outcome.note("runtime budget " + std::to_string(criterion.budget_ms) + " ms exceeded");
        }
        std::printf("[%s] criterion %d: %s (%lld ms)%s%s\n", outcome.pass ? "PASS" : "FAIL",
                    criterion.index, criterion.name, static_cast<long long>(ms),
                    outcome.detail.empty() ? "" : " -- ", outcome.detail.c_str());
        if (!outcome.pass) ++failures;
    }
    return failures;
}
