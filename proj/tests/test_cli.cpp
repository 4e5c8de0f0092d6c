#include "cli.hpp"
#include "mklpo/dataset.hpp"
#include "mklpo/model.hpp"

#include <doctest.h>

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

namespace fs = std::filesystem;
using namespace mklpo;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path workdir() {
    static const fs::path dir = [] {
        auto p = fs::temp_directory_path() / ("mklpo_cli_" + std::to_string(::getpid()));
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string path(const std::string &name) { return (workdir() / name).string(); }

std::string fixture(const std::string &name) { return std::string{MKLPO_SOURCE_DIR} + "/data/" + name; }

std::string slurp(const std::string &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write(const std::string &p, const std::string &text) { std::ofstream(p, std::ios::binary) << text; }

std::vector<std::string> lines(const std::string &text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("train on rings with the default bank") {
    REQUIRE(run({"synth", "--kind", "rings", "--n", "60", "--seed", "3", "--out", path("rings.svm")}).code == 0);
    const Run r = run({"train", "--data", path("rings.svm"), "--out", path("rings.json"), "--log", path("rings.log")});
    CHECK(r.code == 0);
    std::ifstream in(path("rings.json"));
    const Model m = load(in);
    CHECK(m.tau.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.kernel_specs.size() == 6);

    const auto log = lines(slurp(path("rings.log")));
    REQUIRE(log.size() >= 2);
    const auto first = nlohmann::json::parse(log.front());
    CHECK(first["iteration"] == 1);
    CHECK(first.contains("tau"));
    CHECK(nlohmann::json::parse(log.back())["event"] == "done");
}

TEST_CASE("single-class data is rejected") {
    write(path("one.svm"), "+1 1:0.5\n+1 1:0.7\n");
    const Run r = run({"train", "--data", path("one.svm"), "--measure", "auc", "--out", path("one.json")});
    CHECK(r.code == cli::data_error);
    CHECK(r.err.find("requires both classes") != std::string::npos);
    CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
}

TEST_CASE("training is deterministic") {
    const std::vector<std::string> args{"train", "--data", fixture("rings.svm"), "--measure", "mcc", "--seed", "4"};
    auto a = args, b = args;
    a.insert(a.end(), {"--out", path("a.json")});
    b.insert(b.end(), {"--out", path("b.json")});
    REQUIRE(run(a).code == 0);
    REQUIRE(run(b).code == 0);
    CHECK(slurp(path("a.json")) == slurp(path("b.json")));
}

TEST_CASE("predict and evaluate on separable data") {
    REQUIRE(run({"train", "--data", fixture("separable_1d.svm"), "--kernels", "linear", "--out", path("sep.json")}).code == 0);
    const Run p = run({"predict", "--model", path("sep.json"), "--data", fixture("separable_1d.svm")});
    REQUIRE(p.code == 0);
    const Dataset data = load_dataset(fixture("separable_1d.svm"), DataFormat::svm);
    const auto out = lines(p.out);
    REQUIRE(out.size() == data.sample_count());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::string decision = out[i].substr(out[i].find(' ') + 1);
        CHECK(decision == (data.labels()[i] == 1 ? "+1" : "-1"));
    }

    const Run e = run({"evaluate", "--model", path("sep.json"), "--data", fixture("separable_1d.svm")});
    REQUIRE(e.code == 0);
    CHECK(e.out == "err 1\nf1 1\nprbep 1\nmcc 1\nauc 1\n");

    const Run some = run({"evaluate", "--model", path("sep.json"), "--data", fixture("separable_1d.svm"), "--measures", "auc,mcc"});
    CHECK(some.out == "auc 1\nmcc 1\n");
}

TEST_CASE("zero-alpha model predicts +1 with chance AUC") {
    REQUIRE(run({"train", "--data", fixture("separable_1d.svm"), "--kernels", "linear", "--out", path("z.json")}).code == 0);
    auto doc = nlohmann::ordered_json::parse(slurp(path("z.json")));
    for (auto &a : doc["alpha"]) a = 0.0;
    write(path("zero.json"), doc.dump());
    const Run p = run({"predict", "--model", path("zero.json"), "--data", fixture("separable_1d.svm")});
    REQUIRE(p.code == 0);
    for (const auto &l : lines(p.out)) CHECK(l == "0 +1");
    const Run e = run({"evaluate", "--model", path("zero.json"), "--data", fixture("separable_1d.svm"), "--measures", "auc"});
    CHECK(e.out == "auc 0.5\n");
}

TEST_CASE("predict rejects a dimension mismatch") {
    REQUIRE(run({"train", "--data", fixture("separable_1d.svm"), "--kernels", "linear", "--out", path("d.json")}).code == 0);
    write(path("wide.svm"), "+1 1:1 2:1\n-1 2:3\n");
    const Run p = run({"predict", "--model", path("d.json"), "--data", path("wide.svm")});
    CHECK(p.code == cli::data_error);
    CHECK(p.err.find("dimension") != std::string::npos);
}

TEST_CASE("cv report on separable data") {
    const Run r = run({"cv", "--data", fixture("separable_1d.svm"), "--measure", "mcc", "--seed", "2", "--timing", "none"});
    REQUIRE(r.code == 0);
    std::istringstream in(r.out);
    const CsvTable t = read_csv_table(in, true);
    CHECK(t.header == std::vector<std::string>{"fold", "measure", "value", "seconds", "iterations"});
    REQUIRE(t.rows.size() == 10);
    std::vector<double> v;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(t.rows[i][0] == std::to_string(i));
        CHECK(t.rows[i][1] == "mcc");
        v.push_back(std::stod(t.rows[i][2]));
    }
    std::sort(v.begin(), v.end());
    CHECK(0.5 * (v[4] + v[5]) >= 0.9);
    CHECK(r.err.find("median mcc") != std::string::npos);
}

TEST_CASE("cv shape, default measures and determinism") {
    write(path("four.svm"), "+1 1:1\n+1 1:2\n-1 1:-1\n-1 1:-2\n");
    const Run r = run({"cv", "--data", path("four.svm"), "--folds", "2", "--measure", "err", "--timing", "none"});
    REQUIRE(r.code == 0);
    CHECK(lines(r.out).size() == 3);

    const Run all = run({"cv", "--data", path("four.svm"), "--folds", "2", "--out", path("cv.csv")});
    REQUIRE(all.code == 0);
    std::ifstream in(path("cv.csv"));
    CHECK(read_csv_table(in, true).rows.size() == 10);

    const std::vector<std::string> args{"cv", "--data", fixture("rings.svm"), "--measure", "f1,auc", "--folds", "3",
                                        "--seed", "9", "--timing", "none"};
    CHECK(run(args).out == run(args).out);

    const Run small = run({"cv", "--data", path("four.svm"), "--folds", "3"});
    CHECK(small.code == cli::data_error);
    CHECK(small.err.find("class too small") != std::string::npos);
}

TEST_CASE("single-kernel baseline flag") {
    const Run r = run({"train", "--data", fixture("rings.svm"), "--single-kernel", "0", "--out", path("lin.json")});
    REQUIRE(r.code == 0);
    std::ifstream in(path("lin.json"));
    const Model m = load(in);
    CHECK(m.kernel_specs.size() == 1);
    CHECK(m.kernel_specs[0].kind == KernelKind::linear);
    CHECK(run({"train", "--data", fixture("rings.svm"), "--single-kernel", "6", "--out", path("x.json")}).code ==
          cli::data_error);
}

TEST_CASE("usage and data errors map to exit codes") {
    CHECK(run({}).code == cli::usage_error);
    CHECK(run({"train", "--bogus"}).code == cli::usage_error);
    CHECK(run({"train", "--data", fixture("rings.svm")}).code == cli::usage_error);
    CHECK(run({"train", "--data", fixture("rings.svm"), "--format", "xml", "--out", path("q.json")}).code == cli::usage_error);
    CHECK(run({"train", "--data", fixture("rings.svm"), "--measure", "acc", "--out", path("q.json")}).code == cli::data_error);
    CHECK(run({"train", "--data", fixture("rings.svm"), "--c", "-1", "--out", path("q.json")}).code == cli::data_error);
    CHECK(run({"train", "--data", path("missing.svm"), "--out", path("q.json")}).code == cli::data_error);
    CHECK(run({"train", "--data", fixture("rings.svm"), "--kernels", "rbf:gamma=0", "--out", path("q.json")}).code ==
          cli::data_error);
    CHECK(run({"--help"}).code == 0);

    ::setenv("MKLPO_LOG", "loud", 1);
    CHECK(run({"synth", "--out", path("s.svm")}).code == cli::usage_error);
    ::setenv("MKLPO_LOG", "quiet", 1);
    const Run quiet = run({"train", "--data", fixture("separable_1d.svm"), "--out", path("q.json")});
    CHECK(quiet.code == 0);
    CHECK(quiet.err.empty());
    ::setenv("MKLPO_LOG", "trace", 1);
    const Run trace = run({"train", "--data", fixture("separable_1d.svm"), "--out", path("q.json")});
    CHECK(trace.err.find("iter 1 ") != std::string::npos);
    ::unsetenv("MKLPO_LOG");
}

TEST_CASE("csv input is accepted") {
    write(path("d.csv"), "1,0.5\n0,-0.5\n1,1.5\n0,-1.0\n");
    CHECK(run({"train", "--data", path("d.csv"), "--format", "csv", "--out", path("csv.json")}).code == 0);
}

TEST_CASE("synth output is reproducible") {
    const Run a = run({"synth", "--kind", "separable", "--n", "12", "--seed", "5"});
    const Run b = run({"synth", "--kind", "separable", "--n", "12", "--seed", "5"});
    CHECK(a.out == b.out);
    CHECK(lines(a.out).size() == 12);
    CHECK(slurp(fixture("rings.svm")) ==
          run({"synth", "--kind", "rings", "--n", "200", "--seed", "7"}).out);
}
