#include "iprior/cli.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace iprior;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "iprior");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path scratch() {
    const fs::path d = fs::temp_directory_path() / "iprior_test_cli";
    fs::create_directories(d);
    return d;
}

std::vector<std::vector<double>> read_csv(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream s(line);
        std::string cell;
        while (std::getline(s, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

TEST_CASE("usage errors") {
    CHECK(cli({}).code == exit_validation);
    const Run r = cli({"simulate", "--bogus"});
    CHECK(r.code == exit_validation);
    CHECK(!r.err.empty());
    CHECK(cli({"--help"}).code == exit_ok);
}

TEST_CASE("invalid flag pairings are rejected before any work") {
    const fs::path d = scratch();
    {
        std::ofstream f(d / "tiny.csv");
        f << "x,y\n0,1\n1,2\n";
    }
    const Run r = cli({"fit", "--data", (d / "tiny.csv").string(), "--response", "y", "--model",
                       (d / "never.json").string(), "--kernel", "fbm", "--sigma", "0.1"});
    CHECK(r.code == exit_validation);
    CHECK(r.err.find("--sigma") != std::string::npos);
    CHECK(r.err.find("sqexp") != std::string::npos);
    CHECK(!fs::exists(d / "never.json"));

    CHECK(cli({"fit", "--data", (d / "tiny.csv").string(), "--response", "y", "--model", (d / "never.json").string(),
               "--kernel", "canonical", "--gamma", "0.3"})
              .code == exit_validation);
    CHECK(cli({"fit", "--data", (d / "tiny.csv").string(), "--response", "y", "--model", (d / "never.json").string(),
               "--errors", "iid", "--alpha", "0.3"})
              .code == exit_validation);
}

TEST_CASE("simulate is reproducible") {
    const fs::path d = scratch();
    const fs::path a = d / "a.csv", b = d / "b.csv";
    REQUIRE(cli({"simulate", "--n", "10", "--replicates", "1", "--seed", "7", "--out", a.string()}).code == exit_ok);
    REQUIRE(cli({"simulate", "--n", "10", "--replicates", "1", "--seed", "7", "--threads", "3", "--out", b.string()})
                .code == exit_ok);
    CHECK(slurp(a) == slurp(b));
    CHECK(!slurp(a).empty());
    CHECK(fs::exists(d / "a.manifest.json"));
    REQUIRE(cli({"simulate", "--n", "10", "--replicates", "1", "--seed", "8", "--out", b.string()}).code == exit_ok);
    CHECK(slurp(a) != slurp(b));
}

TEST_CASE("fit then predict interpolates with a large scale") {
    const fs::path d = scratch();
    const fs::path data = d / "train.csv", model = d / "model.json", pred = d / "pred.csv";
    std::vector<double> y;
    {
        std::ofstream f(data);
        f.precision(17);
        f << "x,y\n";
        for (int i = 0; i < 20; ++i) {
            const double x = i / 19.0;
            y.push_back(std::sin(5 * x) + 0.3 * std::cos(17 * x));
            f << x << ',' << y.back() << '\n';
        }
    }
    const std::string before = slurp(data);
    REQUIRE(cli({"fit", "--data", data.string(), "--response", "y", "--model", model.string(), "--kernel", "fbm",
                 "--lambda", "1e4", "--psi", "1"})
                .code == exit_ok);
    CHECK(fs::exists(model));
    CHECK(fs::exists(d / "model.report.json"));
    REQUIRE(cli({"predict", "--model", model.string(), "--data", data.string(), "--out", pred.string()}).code == exit_ok);
    CHECK(slurp(data) == before);
    const auto rows = read_csv(pred);
    REQUIRE(rows.size() == 20);
    double sd = 0, mean = 0;
    for (double v : y) mean += v / 20;
    for (double v : y) sd += (v - mean) * (v - mean) / 19;
    sd = std::sqrt(sd);
    for (int i = 0; i < 20; ++i) {
        CHECK(std::abs(rows[static_cast<std::size_t>(i)][0] - y[static_cast<std::size_t>(i)]) <= 1e-3 * sd);
        CHECK(rows[static_cast<std::size_t>(i)][1] >= 0);
    }
}

TEST_CASE("estimated fit, cv and classify run end to end") {
    const fs::path d = scratch();
    const fs::path data = d / "cls.csv";
    {
        std::ofstream f(data);
        f << "x1,x2,label\n";
        for (int i = 0; i < 60; ++i) {
            const int c = i % 2;
            f << (c ? 2.0 : -2.0) + std::sin(i * 1.3) << ',' << std::cos(i * 0.7) << ',' << c << '\n';
        }
    }
    CHECK(cli({"fit", "--data", data.string(), "--response", "label", "--model", (d / "m.json").string(), "--starts",
               "0:0,3:3", "--folds", "5", "--threads", "1"})
              .code == exit_ok);
    CHECK(cli({"cv", "--data", data.string(), "--response", "label", "--out", (d / "cv.csv").string(), "--starts",
               "0:0", "--folds", "5"})
              .code == exit_ok);
    const fs::path c1 = d / "c1.csv", c2 = d / "c2.csv";
    CHECK(cli({"classify", "--data", data.string(), "--response", "label", "--sizes", "20,30", "--repeats", "3",
               "--starts", "0:0", "--out", c1.string(), "--threads", "1"})
              .code == exit_ok);
    CHECK(cli({"classify", "--data", data.string(), "--response", "label", "--sizes", "20,30", "--repeats", "3",
               "--starts", "0:0", "--out", c2.string(), "--threads", "2"})
              .code == exit_ok);
    CHECK(slurp(c1) == slurp(c2));

    const Run missing = cli({"classify", "--data", (d / "absent.csv").string(), "--response", "label", "--sizes", "5"});
    CHECK(missing.code == exit_validation);
}

TEST_CASE("atomic writes") {
    const fs::path p = scratch() / "atomic.txt";
    write_file_atomic(p.string(), "one");
    write_file_atomic(p.string(), "two");
    CHECK(slurp(p) == "two");
    for (const auto& e : fs::directory_iterator(p.parent_path()))
        CHECK(e.path().filename().string().find(".tmp") == std::string::npos);
}

#ifdef IPRIOR_CLI_PATH
TEST_CASE("executable exit codes") {
    const std::string exe = IPRIOR_CLI_PATH;
    const auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(s);
    };
    CHECK(status(exe + " simulate --no-such-flag") == 1);
    CHECK(status(exe + " simulate --n 5 --replicates 1 --truths rough --estimators iprior --sds 0.1 --out " +
                  (scratch() / "exe.csv").string()) == 0);
}
#endif
