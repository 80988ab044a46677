#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mfp/blackbox.hpp"
#include "mfp/ensemble.hpp"
#include "mfp/fingerprint.hpp"

namespace mfp {

struct VerificationResult {
    double p_plus = 0.0;
    double rho = 0.5;
    bool decision = false;  // true iff p_plus > rho, strictly
    Tensor raw_outputs;     // per-fingerprint suspect outputs, for audit
};

// Queries the suspect on all fingerprint inputs (batched), concatenates in
// fingerprint-index order and applies the strict-threshold rule.
VerificationResult verify(const FingerprintPair& pair, BlackBoxModel& suspect, double rho);

// R(rho): fraction of positive scores strictly above rho.
double robustness(const std::vector<double>& positive_scores, double rho);
// U(rho): fraction of negative scores at or below rho.
double uniqueness(const std::vector<double>& negative_scores, double rho);

inline constexpr int kGridPoints = 101;  // thresholds {0, 1/100, ..., 1}

// Mean of min{R,U} over the inclusive 101-point grid, computed by sorted
// prefix counting (the test suite checks it against a brute-force oracle).
double aruc(const std::vector<double>& positive_scores, const std::vector<double>& negative_scores);

struct SuspectScore {
    std::string id;
    bool positive = false;
    double p_plus = 0.0;  // mean over repetitions
};

struct RUReport {
    std::vector<double> grid;      // 101 thresholds
    std::vector<double> r_curve;   // mean over repetitions
    std::vector<double> u_curve;
    std::vector<double> min_curve;
    std::vector<double> rep_aruc;  // holdout ARUC per repetition
    double aruc_mean = 0.0;
    double aruc_ci95 = 0.0;  // 1.96 * sd / sqrt(reps); 0 for a single rep
    std::vector<SuspectScore> suspects;
    int repetitions = 0;
};

// Re-runs construction with a fresh derived seed per repetition and scores
// the holdout split; curves and per-suspect scores are averaged across
// repetitions. Monotonicity of R/U is asserted on every report.
RUReport run_benchmark(const ModelEnsemble& ensemble, const ConstructOptions& opt,
                       int repetitions, uint64_t seed);

// ru_curve.csv, suspects.csv and summary.txt under `dir`.
void write_report(const RUReport& report, const std::string& dir);

struct SweepPoint {
    double x = 0.0;  // N or ensemble fraction
    double mean_aruc = 0.0;
    std::vector<double> seed_aruc;
};

std::vector<SweepPoint> sweep_n(const ModelEnsemble& ensemble, const ConstructOptions& base,
                                const std::vector<int>& n_values, int seeds_per_point,
                                uint64_t seed);

std::vector<SweepPoint> sweep_ensemble(const ModelEnsemble& ensemble,
                                       const ConstructOptions& base,
                                       const std::vector<double>& fractions, int seeds_per_point,
                                       uint64_t seed);

void write_sweep(const std::vector<SweepPoint>& points, const std::string& x_name,
                 const std::string& path);

// Holdout p_plus scores for one constructed pair, in manifest order.
std::vector<SuspectScore> score_holdout(const FingerprintPair& pair,
                                        const ModelEnsemble& ensemble);

}  // namespace mfp
