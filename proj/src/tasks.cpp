#include "mfp/tasks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mfp/rng.hpp"

namespace mfp {

const char* split_tag_name(SplitTag s) {
    switch (s) {
        case SplitTag::train: return "train";
        case SplitTag::public_domain: return "public_domain";
        case SplitTag::irrelevant: return "irrelevant";
    }
    return "?";
}

Dataset Dataset::take(int begin, int end) const {
    require(0 <= begin && begin <= end && end <= size(), "Dataset::take: bad range");
    Dataset out;
    out.split = split;
    out.features = Tensor::zeros({end - begin, features.cols()});
    for (int i = begin; i < end; ++i)
        for (int j = 0; j < features.cols(); ++j) out.features.at(i - begin, j) = features.at(i, j);
    if (!labels.empty()) {
        out.labels = Tensor::zeros({end - begin, labels.cols()});
        for (int i = begin; i < end; ++i)
            for (int j = 0; j < labels.cols(); ++j) out.labels.at(i - begin, j) = labels.at(i, j);
    }
    return out;
}

Dataset fit_portion(const Dataset& d) { return d.take(0, d.size() * 4 / 5); }
Dataset eval_portion(const Dataset& d) { return d.take(d.size() * 4 / 5, d.size()); }

namespace {

double clip1(double v) { return v < -1.0 ? -1.0 : (v > 1.0 ? 1.0 : v); }

// two sub-blobs per class; curved class boundaries make independently
// trained models extrapolate more idiosyncratically
constexpr int kBlobsPerClass = 2;

Dataset sample_blobs(const std::vector<Tensor>& means, double noise, int n, int d, Rng rng,
                     SplitTag tag) {
    const int classes = static_cast<int>(means.size()) / kBlobsPerClass;
    Dataset ds;
    ds.split = tag;
    ds.features = Tensor::zeros({n, d});
    ds.labels = Tensor::zeros({n, classes});
    for (int i = 0; i < n; ++i) {
        const int c = i % classes;
        const Tensor& mean = means[c * kBlobsPerClass +static_cast<int>(rng.below(kBlobsPerClass))];
        for (int j = 0; j < d; ++j)
            ds.features.at(i, j) = clip1(mean.data[j] + rng.normal(0.0, noise));
        ds.labels.at(i, c) = 1.0;
    }
    return ds;
}

std::vector<Tensor> draw_means(int classes, int d, Rng rng) {
    std::vector<Tensor> means;
    for (int c = 0; c < classes * kBlobsPerClass; ++c) {
        Tensor m = Tensor::zeros({d});
        for (double& v : m.data) v = rng.uniform(-0.55, 0.55);
        means.push_back(std::move(m));
    }
    return means;
}

}  // namespace

DatasetTriple make_classification(const ClassificationRecipe& r, uint64_t seed) {
    require(r.classes >= 2, "make_classification: need at least 2 classes");
    require(r.d_in >= 1, "make_classification: d_in must be positive");
    Rng root(seed);

    std::vector<Tensor> means = draw_means(r.classes, r.d_in, root.derive(100));
    std::vector<Tensor> shifted = means;
    const double per_coord = r.shift / std::sqrt(static_cast<double>(r.d_in));
    for (Tensor& m : shifted)
        for (double& v : m.data) v += per_coord;
    // different class geometry entirely for the irrelevant source
    std::vector<Tensor> other = draw_means(r.classes, r.d_in, root.derive(101));

    DatasetTriple t;
    t.train = sample_blobs(means, r.noise, r.n_train, r.d_in, root.derive(0), SplitTag::train);
    t.public_domain = sample_blobs(shifted, r.noise, r.n_public, r.d_in, root.derive(1),
                                   SplitTag::public_domain);
    t.irrelevant = sample_blobs(other, r.noise, r.n_irrelevant, r.d_in, root.derive(2),
                                SplitTag::irrelevant);
    return t;
}

namespace {

// smooth scalar field: linear term plus a few sinusoids of random direction
struct SmoothFn {
    Tensor linear;                       // [d]
    std::vector<Tensor> dirs;            // unit-ish directions
    std::vector<double> amp, freq, phase;

    static SmoothFn make(int d, uint64_t fn_seed) {
        SmoothFn f;
        Rng rng(fn_seed);
        f.linear = Tensor::zeros({d});
        for (double& v : f.linear.data) v = rng.normal();
        for (int k = 0; k < 3; ++k) {
            Tensor u = Tensor::zeros({d});
            double norm = 0.0;
            for (double& v : u.data) {
                v = rng.normal();
                norm += v * v;
            }
            norm = std::sqrt(norm);
            for (double& v : u.data) v /= norm;
            f.dirs.push_back(std::move(u));
            f.amp.push_back(rng.uniform(0.5, 1.5));
            f.freq.push_back(rng.uniform(0.5, 2.0));
            f.phase.push_back(rng.uniform(0.0, 6.283185307179586));
        }
        return f;
    }

    double operator()(const double* x, int d) const {
        double lin = 0.0;
        for (int j = 0; j < d; ++j) lin += linear.data[j] * x[j];
        double y = lin / std::sqrt(static_cast<double>(d));
        for (size_t k = 0; k < dirs.size(); ++k) {
            double proj = 0.0;
            for (int j = 0; j < d; ++j) proj += dirs[k].data[j] * x[j];
            y += amp[k] * std::sin(freq[k] * proj + phase[k]);
        }
        return y;
    }
};

Dataset sample_dose(const SmoothFn& fn, int n, int d, double shift, double dose_max, Rng rng,
                    SplitTag tag) {
    Dataset ds;
    ds.split = tag;
    ds.features = Tensor::zeros({n, d});
    ds.labels = Tensor::zeros({n, 1});
    const double mid = dose_max / 2.0;
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) ds.features.at(i, j) = clip1(rng.uniform(-1.0, 1.0) + shift);
        double y = mid + 0.37 * mid * fn(&ds.features.at(i, 0), d);
        ds.labels.at(i, 0) = std::min(std::max(y, 1e-3), dose_max);
    }
    return ds;
}

}  // namespace

DatasetTriple make_regression(const RegressionRecipe& r, uint64_t seed) {
    require(r.d_in >= 1, "make_regression: d_in must be positive");
    Rng root(seed);
    SmoothFn fn = SmoothFn::make(r.d_in, r.fn_seed);
    SmoothFn other = SmoothFn::make(r.d_in, Rng::mix(r.fn_seed, 0x5eed));

    DatasetTriple t;
    t.train = sample_dose(fn, r.n_train, r.d_in, 0.0, r.dose_max, root.derive(0), SplitTag::train);
    t.public_domain = sample_dose(fn, r.n_public, r.d_in, r.shift, r.dose_max, root.derive(1),
                                  SplitTag::public_domain);
    t.irrelevant = sample_dose(other, r.n_irrelevant, r.d_in, -r.shift, r.dose_max,
                               root.derive(2), SplitTag::irrelevant);
    return t;
}

namespace {

Dataset sample_mixture(const std::vector<std::pair<double, double>>& centers, double noise,
                       int n, Rng rng, SplitTag tag) {
    Dataset ds;
    ds.split = tag;
    ds.features = Tensor::zeros({n, 2});
    for (int i = 0; i < n; ++i) {
        const auto& c = centers[i % centers.size()];
        ds.features.at(i, 0) = clip1(c.first + rng.normal(0.0, noise));
        ds.features.at(i, 1) = clip1(c.second + rng.normal(0.0, noise));
    }
    return ds;
}

std::vector<std::pair<double, double>> ring_centers(int modes, double radius, double angle0) {
    std::vector<std::pair<double, double>> cs;
    for (int k = 0; k < modes; ++k) {
        double a = angle0 + 6.283185307179586 * k / modes;
        cs.push_back({radius * std::cos(a), radius * std::sin(a)});
    }
    return cs;
}

}  // namespace

DatasetTriple make_generative(const GenerativeRecipe& r, uint64_t seed) {
    require(r.modes >= 2, "make_generative: need at least 2 modes");
    Rng root(seed);

    auto train_centers = ring_centers(r.modes, r.radius, 0.0);
    // rotated variant of the same ring for the public-domain split
    auto public_centers = ring_centers(r.modes, r.radius, 3.141592653589793 / r.modes);
    std::vector<std::pair<double, double>> grid;
    for (double x : {-0.6, 0.0, 0.6})
        for (double y : {-0.6, 0.0, 0.6}) grid.push_back({x, y});

    DatasetTriple t;
    t.train = sample_mixture(train_centers, r.noise, r.n_train, root.derive(0), SplitTag::train);
    t.public_domain = sample_mixture(public_centers, r.noise, r.n_public, root.derive(1),
                                     SplitTag::public_domain);
    t.irrelevant = sample_mixture(grid, r.noise, r.n_irrelevant, root.derive(2),
                                  SplitTag::irrelevant);
    return t;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    out.push_back(cur);
    return out;
}

size_t find_column(const std::vector<std::string>& header, const std::string& name) {
    for (size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    fail("csv: no column named '", name, "'");
}

}  // namespace

Dataset load_csv(const std::string& path, const std::vector<std::string>& feature_cols,
                 const std::vector<std::string>& label_cols, CsvScaling* scaling_out) {
    std::ifstream is(path);
    require(is.good(), "cannot open csv file '", path, "'");

    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "csv '", path, "': empty file");
    std::vector<std::string> header = split_csv_line(line);

    std::vector<size_t> fidx, lidx;
    for (const auto& c : feature_cols) fidx.push_back(find_column(header, c));
    for (const auto& c : label_cols) lidx.push_back(find_column(header, c));

    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<std::string> cells = split_csv_line(line);
        require(cells.size() == header.size(), "csv '", path, "' row ", lineno, ": expected ",
                header.size(), " cells, got ", cells.size());
        std::vector<double> row;
        for (size_t idx : fidx) {
            require(!cells[idx].empty(), "csv '", path, "' row ", lineno, " column '",
                    header[idx], "': missing value");
            try {
                row.push_back(parse_f64(cells[idx]));
            } catch (const Error&) {
                fail("csv '", path, "' row ", lineno, " column '", header[idx],
                     "': not a number: '", cells[idx], "'");
            }
        }
        for (size_t idx : lidx) {
            require(!cells[idx].empty(), "csv '", path, "' row ", lineno, " column '",
                    header[idx], "': missing value");
            try {
                row.push_back(parse_f64(cells[idx]));
            } catch (const Error&) {
                fail("csv '", path, "' row ", lineno, " column '", header[idx],
                     "': not a number: '", cells[idx], "'");
            }
        }
        rows.push_back(std::move(row));
    }
    require(!rows.empty(), "csv '", path, "': no data rows");

    const int n = static_cast<int>(rows.size());
    const int df = static_cast<int>(fidx.size());
    const int dl = static_cast<int>(lidx.size());

    CsvScaling scaling;
    scaling.columns = feature_cols;
    scaling.lo.assign(df, 0.0);
    scaling.hi.assign(df, 0.0);
    for (int j = 0; j < df; ++j) {
        double lo = rows[0][j], hi = rows[0][j];
        for (int i = 1; i < n; ++i) {
            lo = std::min(lo, rows[i][j]);
            hi = std::max(hi, rows[i][j]);
        }
        scaling.lo[j] = lo;
        scaling.hi[j] = hi;
    }

    Dataset ds;
    ds.features = Tensor::zeros({n, df});
    if (dl > 0) ds.labels = Tensor::zeros({n, dl});
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < df; ++j) {
            const double lo = scaling.lo[j], hi = scaling.hi[j];
            // constant columns scale to 0 rather than erroring
            ds.features.at(i, j) = hi > lo ? (rows[i][j] - lo) / (hi - lo) * 2.0 - 1.0 : 0.0;
        }
        for (int j = 0; j < dl; ++j) ds.labels.at(i, j) = rows[i][df + j];
    }
    if (scaling_out) *scaling_out = scaling;
    return ds;
}

void save_scaling(const CsvScaling& s, const std::string& path) {
    std::ofstream os(path);
    require(os.good(), "cannot open '", path, "' for writing");
    os << "csvscaling 1\n";
    for (size_t i = 0; i < s.columns.size(); ++i)
        os << s.columns[i] << " " << fmt_g17(s.lo[i]) << " " << fmt_g17(s.hi[i]) << "\n";
}

CsvScaling load_scaling(const std::string& path) {
    std::ifstream is(path);
    require(is.good(), "cannot open scaling file '", path, "'");
    std::string magic;
    int version;
    require(static_cast<bool>(is >> magic >> version) && magic == "csvscaling" && version == 1,
            "bad scaling file '", path, "'");
    CsvScaling s;
    std::string col, lo, hi;
    while (is >> col >> lo >> hi) {
        s.columns.push_back(col);
        s.lo.push_back(parse_f64(lo));
        s.hi.push_back(parse_f64(hi));
    }
    return s;
}

}  // namespace mfp
