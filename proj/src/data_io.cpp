#include "iprior/data_io.hpp"

#include "iprior/parallel.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace iprior {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\"");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\"");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_cell(const std::string& cell, const std::string& source, std::size_t line, const std::string& column) {
    const char* begin = cell.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (cell.empty() || end != begin + cell.size() || errno == ERANGE || !std::isfinite(v)) {
        std::ostringstream msg;
        msg << source << ": line " << line << ", column '" << column << "': non-numeric cell '" << cell << "'";
        throw ValidationError(msg.str());
    }
    return v;
}

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

RawTable read_csv(std::istream& in, const std::string& source) {
    RawTable t;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        t.header = split_line(line);
        break;
    }
    if (t.header.empty()) throw ValidationError(source + ": empty file");
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != t.header.size()) {
            std::ostringstream msg;
            msg << source << ": line " << line_no << " has " << cells.size() << " cells, header has "
                << t.header.size();
            throw ValidationError(msg.str());
        }
        std::vector<double> row(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j) row[j] = parse_cell(cells[j], source, line_no, t.header[j]);
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty()) throw ValidationError(source + ": no data rows");
    return t;
}

std::size_t column_index(const RawTable& t, const std::string& name, const std::string& source) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    if (it == t.header.end()) throw ValidationError(source + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - t.header.begin());
}

void check_labels(const Vector& y, const RawTable& t, std::size_t col, const std::string& source) {
    for (Index i = 0; i < y.size(); ++i) {
        if (y(i) != 0.0 && y(i) != 1.0) {
            std::ostringstream msg;
            msg << source << ": row " << i + 1 << ", column '" << t.header[col] << "': label " << y(i)
                << " is not 0 or 1";
            throw ValidationError(msg.str());
        }
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    return in;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string short_number(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

}  // namespace

void Dataset::validate() const {
    if (x.rows() != y.size()) throw ValidationError("dataset has different numbers of covariate rows and responses");
    if (labels) {
        for (Index i = 0; i < y.size(); ++i) {
            if (y(i) != 0.0 && y(i) != 1.0) throw ValidationError("dataset labels must be 0 or 1");
        }
    }
    if (!has_split()) return;
    std::vector<int> seen(static_cast<std::size_t>(size()), 0);
    for (const auto* part : {&train, &test}) {
        for (const Index i : *part) {
            if (i < 0 || i >= size()) throw ValidationError("split index out of range");
            ++seen[static_cast<std::size_t>(i)];
        }
    }
    for (const int s : seen) {
        if (s != 1) throw ValidationError("train/test split must be disjoint and cover every row");
    }
}

Dataset parse_tabular(std::istream& in, const std::string& response, bool label_mode, const std::string& source) {
    const RawTable t = read_csv(in, source);
    const std::size_t rc = column_index(t, response, source);
    Dataset d;
    d.response = response;
    d.labels = label_mode;
    const auto n = static_cast<Index>(t.rows.size());
    const auto p = static_cast<Index>(t.header.size() - 1);
    d.x.resize(n, p);
    d.y.resize(n);
    for (std::size_t j = 0; j < t.header.size(); ++j) {
        if (j != rc) d.feature_names.push_back(t.header[j]);
    }
    for (Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        Index c = 0;
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j == rc) {
                d.y(i) = row[j];
            } else {
                d.x(i, c++) = row[j];
            }
        }
    }
    if (label_mode) check_labels(d.y, t, rc, source);
    return d;
}

Dataset load_tabular(const std::string& path, const std::string& response, bool label_mode) {
    auto in = open_input(path);
    return parse_tabular(in, response, label_mode, path);
}

void write_tabular(std::ostream& out, const Dataset& data) {
    for (std::size_t j = 0; j < data.feature_names.size(); ++j) out << data.feature_names[j] << ',';
    out << data.response << '\n';
    for (Index i = 0; i < data.size(); ++i) {
        for (Index j = 0; j < data.x.cols(); ++j) out << fmt(data.x(i, j)) << ',';
        out << fmt(data.y(i)) << '\n';
    }
}

Dataset parse_functional(std::istream& in, double spacing, const std::string& response, Index channels,
                         std::optional<Index> train_rows, const std::string& source) {
    if (channels < 2) throw ValidationError("functional covariates need at least 2 channels");
    const RawTable t = read_csv(in, source);
    if (static_cast<Index>(t.header.size()) < channels + 1) {
        std::ostringstream msg;
        msg << source << ": expected " << channels << " curve columns plus a response, found " << t.header.size()
            << " columns";
        throw ValidationError(msg.str());
    }
    const std::size_t rc = column_index(t, response, source);
    if (static_cast<Index>(rc) < channels) throw ValidationError(source + ": response column lies inside the curve");

    Dataset d;
    d.response = response;
    d.metric = Metric::sobolev(spacing);
    const auto n = static_cast<Index>(t.rows.size());
    d.x.resize(n, channels);
    d.y.resize(n);
    for (Index j = 0; j < channels; ++j) d.feature_names.push_back(t.header[static_cast<std::size_t>(j)]);
    for (Index i = 0; i < n; ++i) {
        const auto& row = t.rows[static_cast<std::size_t>(i)];
        for (Index j = 0; j < channels; ++j) d.x(i, j) = row[static_cast<std::size_t>(j)];
        d.y(i) = row[rc];
    }

    Index k = 0;
    if (train_rows) {
        k = *train_rows;
    } else if (n == 215) {
        k = 172;
    } else {
        std::ostringstream msg;
        msg << source << ": " << n << " rows; give the number of training rows explicitly";
        throw ValidationError(msg.str());
    }
    if (k < 1 || k >= n) throw ValidationError("training rows must leave at least one test row");
    for (Index i = 0; i < n; ++i) (i < k ? d.train : d.test).push_back(i);
    d.validate();
    return d;
}

Dataset load_functional(const std::string& path, double spacing, const std::string& response, Index channels,
                        std::optional<Index> train_rows) {
    auto in = open_input(path);
    return parse_functional(in, spacing, response, channels, train_rows, path);
}

std::vector<Index> degenerate_rows(const Dataset& data, double tolerance) {
    const Matrix f = data.metric.features(data.x);
    std::vector<Index> out;
    for (Index i = 0; i < f.rows(); ++i) {
        if (f.row(i).norm() <= tolerance * std::max(1.0, data.x.row(i).cwiseAbs().maxCoeff())) out.push_back(i);
    }
    return out;
}

Dataset subset(const Dataset& data, const std::vector<Index>& rows) {
    Dataset d;
    d.feature_names = data.feature_names;
    d.response = data.response;
    d.labels = data.labels;
    d.metric = data.metric;
    d.x.resize(static_cast<Index>(rows.size()), data.x.cols());
    d.y.resize(static_cast<Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        d.x.row(static_cast<Index>(k)) = data.x.row(rows[k]);
        d.y(static_cast<Index>(k)) = data.y(rows[k]);
    }
    return d;
}

// ---------------------------------------------------------------- classification

int classify(double fitted) { return fitted < 0.5 ? 0 : 1; }

double misclassification_percent(const Vector& predicted, const Vector& labels) {
    if (predicted.size() != labels.size() || predicted.size() == 0) {
        throw ValidationError("predictions and labels must be non-empty and equally long");
    }
    Index wrong = 0;
    for (Index i = 0; i < predicted.size(); ++i) {
        if (classify(predicted(i)) != static_cast<int>(labels(i))) ++wrong;
    }
    return 100.0 * static_cast<double>(wrong) / static_cast<double>(predicted.size());
}

std::vector<ClassifyRow> classify_eval(const Dataset& data, const ClassifyProtocol& protocol,
                                       const std::vector<Index>& sizes, int repeats, std::uint64_t seed, int threads) {
    data.validate();
    if (!data.labels) throw ValidationError("classification needs a dataset loaded in label mode");
    if (!protocol.kernel) throw ValidationError("classification protocol has no kernel");
    if (repeats < 1) throw ValidationError("classification needs at least one repeat");
    if (sizes.empty()) throw ValidationError("classification needs at least one subsample size");
    for (const Index m : sizes) {
        if (m < 2 || m >= data.size()) {
            std::ostringstream msg;
            msg << "subsample size " << m << " must be at least 2 and below the dataset size " << data.size();
            throw ValidationError(msg.str());
        }
    }
    protocol.config.validate();

    enum class Outcome { ok, degenerate, failed };
    struct Cell {
        Outcome outcome = Outcome::ok;
        double rate = 0.0;
    };
    const auto reps = static_cast<std::size_t>(repeats);
    std::vector<Cell> cells(sizes.size() * reps);

    parallel_for(cells.size(), resolve_threads(threads), [&](std::size_t task) {
        const std::size_t s = task / reps;
        const std::size_t r = task % reps;
        const Index m = sizes[s];
        std::vector<Index> perm;
        bool single_class = true;
        for (std::uint64_t attempt = 0; attempt < 2 && single_class; ++attempt) {
            perm.resize(static_cast<std::size_t>(data.size()));
            std::iota(perm.begin(), perm.end(), 0);
            std::mt19937_64 rng(derive_seed(seed, {s, r, attempt}));
            std::shuffle(perm.begin(), perm.end(), rng);
            const double first = data.y(perm[0]);
            single_class = std::all_of(perm.begin(), perm.begin() + m, [&](Index i) { return data.y(i) == first; });
        }
        Cell& cell = cells[task];
        if (single_class) {
            cell.outcome = Outcome::degenerate;
            return;
        }
        std::vector<Index> train(perm.begin(), perm.begin() + m);
        std::vector<Index> test(perm.begin() + m, perm.end());
        std::sort(train.begin(), train.end());
        std::sort(test.begin(), test.end());
        const Dataset tr = subset(data, train);
        const Dataset te = subset(data, test);
        try {
            FitConfig config = protocol.config;
            config.threads = 1;
            config.loss = CvLoss::misclassification;
            const ModelSkeleton skeleton{protocol.kernel(tr.x), ErrorModel::iid(1.0), tr.x, PriorMean::response_mean(),
                                         protocol.form};
            std::optional<IPriorModel> model;
            if (protocol.cv_select) {
                model = estimate(skeleton, tr.y, config).model;
            } else {
                model = fit_ml(skeleton, tr.y, config).model;
            }
            cell.rate = misclassification_percent(model->predict(te.x).mean, te.y);
        } catch (const NumericalError&) {
            cell.outcome = Outcome::failed;
        }
    });

    std::vector<ClassifyRow> out;
    for (std::size_t s = 0; s < sizes.size(); ++s) {
        ClassifyRow row;
        row.subsample = sizes[s];
        row.repeats = repeats;
        for (std::size_t r = 0; r < reps; ++r) {
            const Cell& c = cells[s * reps + r];
            if (c.outcome == Outcome::degenerate) {
                ++row.degenerate;
            } else if (c.outcome == Outcome::failed) {
                ++row.failed;
            } else {
                row.rates.push_back(c.rate);
            }
        }
        row.used = static_cast<int>(row.rates.size());
        if (row.used > 0) {
            const double mean = std::accumulate(row.rates.begin(), row.rates.end(), 0.0) / row.used;
            row.mean_rate = mean;
            if (row.used > 1) {
                double ss = 0.0;
                for (const double v : row.rates) ss += (v - mean) * (v - mean);
                row.std_error = std::sqrt(ss / (row.used - 1)) / std::sqrt(static_cast<double>(row.used));
            }
        } else {
            row.mean_rate = std::nan("");
            row.std_error = std::nan("");
        }
        out.push_back(std::move(row));
    }
    return out;
}

std::string classify_csv(const std::vector<ClassifyRow>& rows) {
    std::ostringstream out;
    out << "subsample,repeats,used,degenerate,failed,misclassification_percent,std_error\n";
    for (const auto& r : rows) {
        out << r.subsample << ',' << r.repeats << ',' << r.used << ',' << r.degenerate << ',' << r.failed << ','
            << fmt(r.mean_rate) << ',' << fmt(r.std_error) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------- Tecator benchmark

double rmse(const Vector& a, const Vector& b) {
    if (a.size() != b.size() || a.size() == 0) throw ValidationError("RMSE needs two equally long non-empty vectors");
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

std::vector<BenchmarkRow> tecator_benchmark(const Dataset& data, const BenchmarkOptions& options) {
    data.validate();
    if (data.train.empty() || data.test.empty()) throw ValidationError("benchmark needs a train/test split");
    const Dataset tr = subset(data, data.train);
    const Dataset te = subset(data, data.test);
    const Metric& metric = data.metric;
    std::vector<BenchmarkRow> rows;

    const auto run = [&](const std::string& name, const std::function<void(BenchmarkRow&)>& body) {
        BenchmarkRow row;
        row.method = name;
        try {
            body(row);
        } catch (const std::exception& e) {
            row.status = e.what();
            row.train_rmse = row.test_rmse = std::nan("");
        }
        rows.push_back(std::move(row));
    };
    const auto score = [&](BenchmarkRow& row, const IPriorModel& model) {
        row.train_rmse = rmse(model.fitted(), tr.y);
        row.test_rmse = rmse(model.predict(te.x).mean, te.y);
    };
    const auto describe = [](const LocalMaximum& m) {
        std::ostringstream s;
        s << "lambda=" << std::exp(m.log_lambda) << " psi=" << std::exp(m.log_psi);
        return s.str();
    };
    const auto iprior_row = [&](const Kernel& kernel, BenchmarkRow& row) {
        const ModelSkeleton skeleton{kernel, ErrorModel::iid(1.0), tr.x};
        const FitReport report = estimate(skeleton, tr.y, options.config);
        score(row, *report.model);
        row.detail = describe(report.chosen);
    };

    run("Global constant model", [&](BenchmarkRow& row) {
        const double c = tr.y.mean();
        row.train_rmse = rmse(Vector::Constant(tr.size(), c), tr.y);
        row.test_rmse = rmse(Vector::Constant(te.size(), c), te.y);
    });

    if (options.include_tikhonov) {
        for (const auto& [name, kernel] : {std::pair{std::string("Tikhonov regularization (linear)"),
                                                     Kernel::canonical(metric).centered(tr.x)},
                                           std::pair{std::string("Tikhonov regularization (FBM-1/2 kernel)"),
                                                     Kernel::fbm(0.5, metric).centered(tr.x)}}) {
            run(name, [&](BenchmarkRow& row) {
                const Matrix h = gram(kernel, tr.x).values;
                const Vector f0 = Vector::Constant(tr.size(), tr.y.mean());
                const GcvSelection g = gcv_select(h, ErrorModel::iid(1.0), options.tikhonov_grid, tr.y, f0, true, true);
                const TikhonovFit fit = tikhonov_fit(h, ErrorModel::iid(1.0), g.lambda, tr.y, f0);
                row.train_rmse = rmse(fit.fitted, tr.y);
                const Vector pred = Vector::Constant(te.size(), tr.y.mean()) + cross_gram(kernel, tr.x, te.x) * fit.weights;
                row.test_rmse = rmse(pred, te.y);
                std::ostringstream s;
                s << "lambda=" << g.lambda;
                row.detail = s.str();
            });
        }
    }

    run("I-prior (linear)", [&](BenchmarkRow& row) { iprior_row(Kernel::canonical(metric).centered(tr.x), row); });
    run("I-prior (FBM RKHS with gamma=0.5)",
        [&](BenchmarkRow& row) { iprior_row(Kernel::fbm(0.5, metric).centered(tr.x), row); });

    if (options.include_gamma) {
        run("I-prior (FBM RKHS with gamma=cv)", [&](BenchmarkRow& row) {
            const ModelSkeleton skeleton{Kernel::fbm(0.5, metric), ErrorModel::iid(1.0), tr.x};
            const HyperSelection sel = select_kernel_hyper(
                options.gamma_grid, [&](double g) { return Kernel::fbm(g, metric).centered(tr.x); }, skeleton, tr.y,
                options.config);
            score(row, *sel.report->model);
            std::ostringstream s;
            s << "gamma=" << sel.hyper << ' ' << describe(sel.report->chosen);
            row.detail = s.str();
            row.method = "I-prior (FBM RKHS with gamma=" + short_number(sel.hyper) + ")";
        });
    }

    if (options.include_sqexp) {
        run("I-prior (squared exponential RKHS, sigma=ml)", [&](BenchmarkRow& row) {
            const Matrix f = metric.features(tr.x);
            std::vector<double> d;
            for (Index i = 0; i < f.rows(); ++i) {
                for (Index j = i + 1; j < f.rows(); ++j) d.push_back((f.row(i) - f.row(j)).norm());
            }
            std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(d.size() / 2), d.end());
            const double scale = d[d.size() / 2];
            if (!(scale > 0.0)) throw NumericalError("training curves are all identical");
            SeConfig se;
            se.sigma_grid.clear();
            for (const double m : options.sigma_multipliers) se.sigma_grid.push_back(m * scale);
            se.inner = options.config;
            se.form = PriorCovariance::fisher;
            se.centered = true;
            // The metric is folded into the design through its feature map.
            const SeFit fit = se_gpr_fit(f, tr.y, ErrorModel::iid(1.0), PriorMean::response_mean(), se);
            if (fit.breakdown) throw NumericalError(fit.message);
            row.train_rmse = rmse(fit.model->fitted(), tr.y);
            row.test_rmse = rmse(fit.model->predict(metric.features(te.x)).mean, te.y);
            std::ostringstream s;
            s << "sigma=" << fit.sigma << ' ' << describe(fit.maximum);
            row.detail = s.str();
            row.method = "I-prior (squared exponential RKHS, sigma=" + short_number(fit.sigma) + ")";
        });
    }
    return rows;
}

std::string benchmark_csv(const std::vector<BenchmarkRow>& rows) {
    std::ostringstream out;
    out << "method,train_rmse,test_rmse,detail,status\n";
    const auto quote = [](const std::string& s) {
        std::string q = "\"";
        for (const char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
        return q + "\"";
    };
    for (const auto& r : rows) {
        out << quote(r.method) << ',' << fmt(r.train_rmse) << ',' << fmt(r.test_rmse) << ',' << quote(r.detail) << ','
            << quote(r.status) << '\n';
    }
    return out.str();
}

}  // namespace iprior
