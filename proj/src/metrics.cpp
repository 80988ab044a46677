#include "mfp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>

#include <omp.h>

#include "mfp/rng.hpp"

namespace fs = std::filesystem;

namespace mfp {

VerificationResult verify(const FingerprintPair& pair, BlackBoxModel& suspect, double rho) {
    require(rho > 0.0 && rho < 1.0, "verify: rho must be in (0,1), got ", rho);
    require(suspect.d_in() == pair.d_in && suspect.d_out() == pair.d_out,
            "verify: suspect dims [", suspect.d_in(), "->", suspect.d_out(),
            "] do not match pair [", pair.d_in, "->", pair.d_out, "]");
    VerificationResult res;
    res.rho = rho;
    res.raw_outputs = suspect.predict(pair.fingerprint.inputs());
    require(res.raw_outputs.rows() == pair.fingerprint.count(),
            "verify: suspect returned ", res.raw_outputs.rows(), " rows for ",
            pair.fingerprint.count(), " queries");
    res.p_plus = verifier_score(pair, res.raw_outputs).second;
    res.decision = res.p_plus > rho;
    return res;
}

double robustness(const std::vector<double>& positive_scores, double rho) {
    require(!positive_scores.empty(), "robustness: no positive scores");
    size_t hits = 0;
    for (double p : positive_scores) hits += p > rho ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(positive_scores.size());
}

double uniqueness(const std::vector<double>& negative_scores, double rho) {
    require(!negative_scores.empty(), "uniqueness: no negative scores");
    size_t hits = 0;
    for (double p : negative_scores) hits += p <= rho ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(negative_scores.size());
}

double aruc(const std::vector<double>& positive_scores,
            const std::vector<double>& negative_scores) {
    require(!positive_scores.empty() && !negative_scores.empty(), "aruc: empty score class");
    std::vector<double> pos = positive_scores, neg = negative_scores;
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    double total = 0.0;
    for (int k = 0; k < kGridPoints; ++k) {
        const double rho = static_cast<double>(k) / (kGridPoints - 1);
        // count pos > rho / neg <= rho via sorted prefix counts
        const auto above = pos.end() - std::upper_bound(pos.begin(), pos.end(), rho);
        const auto at_or_below = std::upper_bound(neg.begin(), neg.end(), rho) - neg.begin();
        const double r = static_cast<double>(above) / static_cast<double>(pos.size());
        const double u = static_cast<double>(at_or_below) / static_cast<double>(neg.size());
        total += std::min(r, u);
    }
    return total / kGridPoints;
}

std::vector<SuspectScore> score_holdout(const FingerprintPair& pair,
                                        const ModelEnsemble& ensemble) {
    std::vector<SuspectScore> out;
    for (const SuspectEntry* s : ensemble.holdout()) {
        LocalBlackBox box(s->model);
        Tensor outputs = box.predict(pair.fingerprint.inputs());
        out.push_back({s->id, s->positive, verifier_score(pair, outputs).second});
    }
    return out;
}

namespace {

void split_scores(const std::vector<SuspectScore>& scores, std::vector<double>* pos,
                  std::vector<double>* neg) {
    for (const auto& s : scores) (s.positive ? *pos : *neg).push_back(s.p_plus);
}

void check_monotone(const RUReport& rep) {
    for (size_t k = 1; k < rep.grid.size(); ++k) {
        require(rep.r_curve[k] <= rep.r_curve[k - 1] + 1e-12,
                "report invariant violated: R increased along the grid");
        require(rep.u_curve[k] + 1e-12 >= rep.u_curve[k - 1],
                "report invariant violated: U decreased along the grid");
    }
}

}  // namespace

RUReport run_benchmark(const ModelEnsemble& ensemble, const ConstructOptions& opt,
                       int repetitions, uint64_t seed) {
    require(repetitions >= 1, "run_benchmark: repetitions must be >= 1");
    ensemble.validate();
    // holdout members must be disjoint from the construction split
    for (const SuspectEntry* h : ensemble.holdout())
        require(!h->construction, "holdout member ", h->id, " also assigned to construction");

    Rng rng(seed);
    std::vector<uint64_t> rep_seeds;
    for (int r = 0; r < repetitions; ++r) rep_seeds.push_back(rng.derive(r).seed());

    std::vector<std::vector<SuspectScore>> rep_scores(repetitions);
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < repetitions; ++r) {
        try {
            FingerprintPair pair =
                construct_fingerprint(ensemble.construction_split(), opt, rep_seeds[r]);
            rep_scores[r] = score_holdout(pair, ensemble);
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);

    RUReport report;
    report.repetitions = repetitions;
    for (int k = 0; k < kGridPoints; ++k)
        report.grid.push_back(static_cast<double>(k) / (kGridPoints - 1));
    report.r_curve.assign(kGridPoints, 0.0);
    report.u_curve.assign(kGridPoints, 0.0);
    report.min_curve.assign(kGridPoints, 0.0);

    for (int r = 0; r < repetitions; ++r) {
        std::vector<double> pos, neg;
        split_scores(rep_scores[r], &pos, &neg);
        report.rep_aruc.push_back(aruc(pos, neg));
        for (int k = 0; k < kGridPoints; ++k) {
            report.r_curve[k] += robustness(pos, report.grid[k]) / repetitions;
            report.u_curve[k] += uniqueness(neg, report.grid[k]) / repetitions;
        }
    }
    for (int k = 0; k < kGridPoints; ++k)
        report.min_curve[k] = std::min(report.r_curve[k], report.u_curve[k]);

    double mean = 0.0;
    for (double a : report.rep_aruc) mean += a;
    mean /= repetitions;
    report.aruc_mean = mean;
    if (repetitions > 1) {
        double var = 0.0;
        for (double a : report.rep_aruc) var += (a - mean) * (a - mean);
        var /= (repetitions - 1);
        report.aruc_ci95 = 1.96 * std::sqrt(var) / std::sqrt(static_cast<double>(repetitions));
    }

    // per-suspect mean scores, in manifest order
    const auto holdout = ensemble.holdout();
    for (size_t i = 0; i < holdout.size(); ++i) {
        SuspectScore s{holdout[i]->id, holdout[i]->positive, 0.0};
        for (int r = 0; r < repetitions; ++r) s.p_plus += rep_scores[r][i].p_plus / repetitions;
        report.suspects.push_back(std::move(s));
    }

    check_monotone(report);
    return report;
}

void write_report(const RUReport& report, const std::string& dir) {
    fs::create_directories(dir);
    {
        std::ofstream os(fs::path(dir) / "ru_curve.csv");
        require(os.good(), "cannot write ru_curve.csv under '", dir, "'");
        os << "rho,R,U,min\n";
        for (size_t k = 0; k < report.grid.size(); ++k)
            os << fmt_g17(report.grid[k]) << "," << fmt_g17(report.r_curve[k]) << ","
               << fmt_g17(report.u_curve[k]) << "," << fmt_g17(report.min_curve[k]) << "\n";
    }
    {
        std::ofstream os(fs::path(dir) / "suspects.csv");
        require(os.good(), "cannot write suspects.csv under '", dir, "'");
        os << "suspect_id,label,p_plus\n";
        for (const auto& s : report.suspects)
            os << s.id << "," << (s.positive ? "+" : "-") << "," << fmt_g17(s.p_plus) << "\n";
    }
    {
        std::ofstream os(fs::path(dir) / "summary.txt");
        require(os.good(), "cannot write summary.txt under '", dir, "'");
        os << "repetitions " << report.repetitions << "\n";
        os << "aruc_mean " << fmt_g17(report.aruc_mean) << "\n";
        os << "aruc_ci95 " << fmt_g17(report.aruc_ci95) << "\n";
        os << "per_rep";
        for (double a : report.rep_aruc) os << " " << fmt_g17(a);
        os << "\n";
        os << "summary ARUC = " << report.aruc_mean << " +/- " << report.aruc_ci95 << " (95% CI, "
           << report.repetitions << " runs)\n";
    }
}

namespace {

SweepPoint sweep_point(const ModelEnsemble& ensemble, const ConstructOptions& opt,
                       double fraction, double x, int seeds_per_point, uint64_t seed) {
    SweepPoint pt;
    pt.x = x;
    pt.seed_aruc.assign(seeds_per_point, 0.0);
    std::exception_ptr first_error = nullptr;
#pragma omp parallel for schedule(dynamic)
    for (int r = 0; r < seeds_per_point; ++r) {
        try {
            const uint64_t rep_seed = Rng(seed).derive(r).seed();
            EnsembleSplitView view = fraction < 1.0
                                         ? ensemble.construction_split(fraction, rep_seed)
                                         : ensemble.construction_split();
            FingerprintPair pair = construct_fingerprint(view, opt, rep_seed);
            std::vector<double> pos, neg;
            split_scores(score_holdout(pair, ensemble), &pos, &neg);
            pt.seed_aruc[r] = aruc(pos, neg);
        } catch (...) {
#pragma omp critical
            if (!first_error) first_error = std::current_exception();
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    for (double a : pt.seed_aruc) pt.mean_aruc += a / seeds_per_point;
    return pt;
}

}  // namespace

std::vector<SweepPoint> sweep_n(const ModelEnsemble& ensemble, const ConstructOptions& base,
                                const std::vector<int>& n_values, int seeds_per_point,
                                uint64_t seed) {
    require(n_values.size() >= 2, "sweep_n: need at least two sweep points");
    require(seeds_per_point >= 1, "sweep_n: seeds_per_point must be >= 1");
    std::vector<SweepPoint> out;
    for (size_t i = 0; i < n_values.size(); ++i) {
        ConstructOptions opt = base;
        opt.n_examples = n_values[i];
        out.push_back(sweep_point(ensemble, opt, 1.0, n_values[i], seeds_per_point,
                                  Rng::mix(seed, 0x5130 + i)));
    }
    return out;
}

std::vector<SweepPoint> sweep_ensemble(const ModelEnsemble& ensemble,
                                       const ConstructOptions& base,
                                       const std::vector<double>& fractions, int seeds_per_point,
                                       uint64_t seed) {
    require(fractions.size() >= 2, "sweep_ensemble: need at least two sweep points");
    require(seeds_per_point >= 1, "sweep_ensemble: seeds_per_point must be >= 1");
    std::vector<SweepPoint> out;
    for (size_t i = 0; i < fractions.size(); ++i)
        out.push_back(sweep_point(ensemble, base, fractions[i], fractions[i], seeds_per_point,
                                  Rng::mix(seed, 0x5131 + i)));
    return out;
}

void write_sweep(const std::vector<SweepPoint>& points, const std::string& x_name,
                 const std::string& path) {
    std::ofstream os(path);
    require(os.good(), "cannot write sweep csv '", path, "'");
    os << x_name << ",mean_aruc,per_seed\n";
    for (const auto& p : points) {
        os << fmt_g17(p.x) << "," << fmt_g17(p.mean_aruc) << ",";
        for (size_t i = 0; i < p.seed_aruc.size(); ++i)
            os << (i ? ";" : "") << fmt_g17(p.seed_aruc[i]);
        os << "\n";
    }
}

}  // namespace mfp
