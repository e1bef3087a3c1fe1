#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>

#include "stockcnn/cli.hpp"
#include "stockcnn/synthetic.hpp"

using namespace stockcnn;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
    args.insert(args.begin(), "stockcnn");
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::size_t line_count(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Fresh scratch directory holding a small synthetic CSV.
struct Scratch {
    fs::path dir;
    fs::path csv;

    explicit Scratch(const std::string& name, std::size_t rows = 400) {
        dir = fs::temp_directory_path() / ("stockcnn_cli_" + name);
        fs::remove_all(dir);
        fs::create_directories(dir);
        csv = dir / "bars.csv";
        SyntheticSpec spec;
        spec.rows = rows;
        std::ofstream f(csv);
        write_ohlc_csv(f, generate_ohlc(spec));
    }
    ~Scratch() { fs::remove_all(dir); }

    std::string path(const std::string& leaf) const { return (dir / leaf).string(); }
};

}  // namespace

TEST_CASE("cli prepare: files, summary and class balance") {
    Scratch s("prepare");
    auto r = run_cli({"prepare", "--input", s.csv.string(), "--out-dir", s.path("prep"), "--window-len", "8"});
    REQUIRE(r.code == 0);
    CHECK(r.err.empty());
    CHECK(r.out.find("rows read:     400") != std::string::npos);
    CHECK(r.out.find("rows labeled:  385") != std::string::npos);
    for (auto leaf : {"train.samples", "test.samples", "norm_stats.csv", "summary.json"}) {
        CHECK(fs::exists(s.dir / "prep" / leaf));
    }

    auto train = load_samples(s.dir / "prep" / "train.samples");
    auto test = load_samples(s.dir / "prep" / "test.samples");
    std::size_t ones = 0;
    for (auto l : train.labels) ones += l;
    for (auto l : test.labels) ones += l;
    const double fraction = static_cast<double>(ones) / static_cast<double>(train.size() + test.size());
    std::ostringstream expect;
    expect << "class balance: " << fraction << " of windows labeled 1";
    CHECK(r.out.find(expect.str()) != std::string::npos);
    CHECK(train.size() == 269 - 8 + 1);
    CHECK(test.size() == 116 - 8 + 1);

    auto summary = slurp(s.dir / "prep" / "summary.json");
    CHECK(summary.find("\"rows_dropped\": 0") != std::string::npos);
    CHECK(summary.find("D0") == std::string::npos);
}

TEST_CASE("cli prepare: too few rows is a single-line error") {
    Scratch s("short", 10);
    auto r = run_cli({"prepare", "--input", s.csv.string(), "--out-dir", s.path("prep")});
    CHECK(r.code == 1);
    CHECK(r.out.empty());
    CHECK(r.err.rfind("error: data.too_few_rows: too few rows", 0) == 0);
    CHECK(line_count(r.err) == 1);
}

TEST_CASE("cli: usage errors and missing input") {
    auto r = run_cli({"train", "--max-epochs", "many"});
    CHECK(r.code == 2);
    CHECK(r.err.rfind("error: cli.usage:", 0) == 0);
    CHECK(line_count(r.err) == 1);

    CHECK(run_cli({}).code == 2);
    auto missing = run_cli({"prepare"});
    CHECK(missing.code == 1);
    CHECK(missing.err.rfind("error: cli.missing_input", 0) == 0);

    auto unreadable = run_cli({"prepare", "--input", "/nonexistent/bars.csv"});
    CHECK(unreadable.code == 1);
    CHECK(unreadable.err.rfind("error: data.unreadable", 0) == 0);
}

TEST_CASE("cli train: one epoch, artifacts and byte-identical reruns") {
    Scratch s("train");
    std::vector<std::string> base{"train", "--input", s.csv.string(), "--window-len", "8", "--batch-size", "64",
                                  "--max-epochs", "1"};
    auto a_args = base;
    a_args.insert(a_args.end(), {"--out-dir", s.path("a")});
    auto b_args = base;
    b_args.insert(b_args.end(), {"--out-dir", s.path("b")});

    auto a = run_cli(a_args);
    REQUIRE(a.code == 0);
    auto history = slurp(s.dir / "a" / "history.csv");
    CHECK(line_count(history) == 2);
    CHECK(history.rfind("epoch,train_loss,train_acc,val_loss,val_acc,test_loss,test_acc\n", 0) == 0);
    CHECK(fs::exists(s.dir / "a" / "model.ckpt"));
    auto metrics = slurp(s.dir / "a" / "metrics.csv");
    CHECK(metrics.find("\ntrain,") != std::string::npos);
    CHECK(metrics.find("\ntest,") != std::string::npos);
    CHECK(a.out.find("precision") != std::string::npos);

    REQUIRE(run_cli(b_args).code == 0);
    CHECK(slurp(s.dir / "b" / "history.csv") == history);
    CHECK(slurp(s.dir / "b" / "model.ckpt") == slurp(s.dir / "a" / "model.ckpt"));
    CHECK(slurp(s.dir / "b" / "metrics.csv") == metrics);
}

TEST_CASE("cli evaluate: two rows on a prepared directory, window mismatch refused") {
    Scratch s("evaluate");
    REQUIRE(run_cli({"train", "--input", s.csv.string(), "--window-len", "8", "--batch-size", "64",
                     "--max-epochs", "1", "--out-dir", s.path("run")})
                .code == 0);
    auto r = run_cli({"evaluate", "--input", s.path("run"), "--out-dir", s.path("run")});
    REQUIRE(r.code == 0);
    CHECK(line_count(r.out) == 3);
    CHECK(r.out.find("\ntrain,") != std::string::npos);
    CHECK(r.out.find("\ntest,") != std::string::npos);
    CHECK(slurp(s.dir / "run" / "evaluation.csv") == r.out);

    // The train row printed by evaluate matches the one written by train.
    auto metrics = slurp(s.dir / "run" / "metrics.csv");
    CHECK(metrics == r.out);

    auto single = run_cli({"evaluate", "--input", s.path("run/test.samples"), "--checkpoint",
                           s.path("run/model.ckpt"), "--out-dir", s.path("single")});
    REQUIRE(single.code == 0);
    CHECK(line_count(single.out) == 2);

    REQUIRE(run_cli({"prepare", "--input", s.csv.string(), "--window-len", "16", "--out-dir", s.path("wide")})
                .code == 0);
    auto bad = run_cli({"evaluate", "--input", s.path("wide"), "--checkpoint", s.path("run/model.ckpt"),
                        "--out-dir", s.path("wide")});
    CHECK(bad.code == 1);
    CHECK(bad.err.rfind("error: data.shape_mismatch:", 0) == 0);
    CHECK(bad.err.find("window_len") != std::string::npos);
}

TEST_CASE("cli config file: flag beats file beats default") {
    Scratch s("config");
    {
        std::ofstream cfg(s.dir / "run.conf");
        cfg << "# flat key = value\n"
            << "window-len = 8\n"
            << "batch-size = 64\n"
            << "max-epochs = 2\n"
            << "no-early-stopping = true\n";
    }
    auto from_file = run_cli({"train", "--config", s.path("run.conf"), "--input", s.csv.string(), "--out-dir",
                              s.path("file")});
    REQUIRE(from_file.code == 0);
    CHECK(line_count(slurp(s.dir / "file" / "history.csv")) == 3);

    auto flag = run_cli({"train", "--config", s.path("run.conf"), "--input", s.csv.string(), "--out-dir",
                         s.path("flag"), "--max-epochs", "1"});
    REQUIRE(flag.code == 0);
    CHECK(line_count(slurp(s.dir / "flag" / "history.csv")) == 2);

    {
        std::ofstream cfg(s.dir / "bad.conf");
        cfg << "learning-rate-typo = 3\n";
    }
    auto bad = run_cli({"train", "--config", s.path("bad.conf"), "--input", s.csv.string()});
    CHECK(bad.code == 2);
}

TEST_CASE("cli gradcheck: passes by default, corrupted backward fails") {
    auto ok = run_cli({"gradcheck"});
    CHECK(ok.code == 0);
    CHECK(line_count(ok.out) == 11);
    CHECK(ok.out.find("PASS") != std::string::npos);

    auto bad = run_cli({"gradcheck", "--seeds", "2", "--corrupt-backward"});
    CHECK(bad.code == 1);
    CHECK(bad.out.find("FAIL") != std::string::npos);
    CHECK(bad.err.rfind("error: gradcheck.failed:", 0) == 0);
}

TEST_CASE("cli synth: deterministic output") {
    Scratch s("synth", 1);
    REQUIRE(run_cli({"synth", "--rows", "300", "--seed", "5", "--output", s.path("a.csv")}).code == 0);
    REQUIRE(run_cli({"synth", "--rows", "300", "--seed", "5", "--output", s.path("b.csv")}).code == 0);
    CHECK(slurp(s.dir / "a.csv") == slurp(s.dir / "b.csv"));
    CHECK(load_ohlc_csv(s.dir / "a.csv").rows.size() == 300);
}
