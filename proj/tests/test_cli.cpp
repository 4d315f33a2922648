#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "mldf/dataset.hpp"
#include "mldf/io.hpp"
#include "mldf/metrics.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace {

// Exercises the installed binary end to end; the test runner points
// MLDF_CLI at the freshly built executable.
std::string cli_path() {
    const char* env = std::getenv("MLDF_CLI");
    REQUIRE_MESSAGE(env != nullptr, "MLDF_CLI must point at the mldf binary");
    return env;
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

RunResult run_cli(const fs::path& dir, const std::string& args) {
    const fs::path out_path = dir / "stdout.txt";
    const fs::path err_path = dir / "stderr.txt";
    const std::string cmd = "'" + cli_path() + "' " + args + " > '" + out_path.string() +
                            "' 2> '" + err_path.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult r;
    if (status != -1 && WIFEXITED(status)) r.code = WEXITSTATUS(status);
    r.out = mldf::read_file(out_path.string());
    r.err = mldf::read_file(err_path.string());
    return r;
}

std::size_t count_occurrences(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos;
         pos = text.find(needle, pos + needle.size()))
        ++n;
    return n;
}

void write_text(const fs::path& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
    REQUIRE(out.good());
}

// Small deterministic dataset shared by every case; 24 rows keep each
// train invocation well under a second.
fs::path write_dataset(const fs::path& dir, const std::string& name, std::uint64_t seed,
                       std::size_t rows = 24, std::size_t features = 3) {
    std::mt19937_64 rng(seed);
    const auto s = testutil::separable(rng, rows, features, 2);
    mldf::DatasetBundle bundle;
    bundle.features = s.X;
    bundle.labels = s.Y;
    for (std::size_t j = 0; j < features; ++j)
        bundle.feature_names.push_back("f" + std::to_string(j));
    bundle.label_names = {"alpha", "beta"};
    std::ostringstream text;
    mldf::to_csv(bundle, text);
    const fs::path path = dir / name;
    write_text(path, text.str());
    return path;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Fast hyperparameters appended to every train-like invocation.
const std::string kFast =
    " --max-layers 2 --folds 2 --trees-first 3 --trees-step 1 --trees-max 4"
    " --depth-first 2 --depth-step 1";

std::vector<std::vector<std::string>> parse_csv_cells(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(std::move(cells));
    }
    return rows;
}

void check_no_tmp_files(const fs::path& dir) {
    for (const auto& entry : fs::recursive_directory_iterator(dir))
        CHECK(entry.path().extension() != ".tmp");
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 1);

    CHECK(run_cli(dir, "").code == 2);
    CHECK(run_cli(dir, "frobnicate").code == 2);

    const auto bad_measure = run_cli(dir, "train --data " + q(data) + " --measure f1");
    CHECK(bad_measure.code == 2);
    CHECK(bad_measure.err.find("unknown measure name: f1") != std::string::npos);

    const auto bad_forest = run_cli(dir, "train --data " + q(data) + " --forests pine");
    CHECK(bad_forest.code == 2);
    CHECK(bad_forest.err.find("unknown forest kind") != std::string::npos);

    CHECK(run_cli(dir, "train").code == 2);           // --data missing
    CHECK(run_cli(dir, "predict --data " + q(data)).code == 2);  // --model-in missing

    const auto help = run_cli(dir, "--help");
    CHECK(help.code == 0);
    CHECK(help.out.find("train") != std::string::npos);
    CHECK(help.out.find("evaluate") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("unreadable or malformed data exits with code 3") {
    const auto dir = testutil::temp_dir("mldf-cli");

    const auto absent =
        run_cli(dir, "train --data " + q(dir / "absent.csv") + kFast);
    CHECK(absent.code == 3);
    CHECK(absent.err.find("cannot open") != std::string::npos);

    write_text(dir / "empty.csv", "");
    CHECK(run_cli(dir, "train --data " + q(dir / "empty.csv") + kFast).code == 3);

    write_text(dir / "bad.csv", "f0,alpha:label\nnot-a-number,1\n");
    CHECK(run_cli(dir, "train --data " + q(dir / "bad.csv") + kFast).code == 3);

    fs::remove_all(dir);
}

TEST_CASE("train writes a model and a report and logs each layer") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 2);
    const auto model = dir / "model.json";
    const auto report = dir / "report.json";

    const auto r = run_cli(dir, "train --data " + q(data) + kFast + " --seed 5 --model-out " +
                                     q(model) + " --report " + q(report));
    CHECK(r.code == 0);
    CHECK(r.out.find("dataset d: 24 rows, 3 features, 2 labels") != std::string::npos);
    CHECK(r.out.find("layer 1: trees=3 depth=2") != std::string::npos);
    CHECK(r.out.find("kept layers 1..") != std::string::npos);
    REQUIRE(fs::exists(model));
    REQUIRE(fs::exists(report));

    const std::string rep = mldf::read_file(report.string());
    CHECK(rep.find("\"command\": \"train\"") != std::string::npos);
    CHECK(rep.find("\"final-layer\"") != std::string::npos);
    CHECK(rep.find("\"best-measure\"") != std::string::npos);
    CHECK(rep.find("\"wall-seconds\"") != std::string::npos);

    check_no_tmp_files(dir);
    fs::remove_all(dir);
}

TEST_CASE("the same seed reproduces the model file byte for byte") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 3);

    const std::string base = "train --data " + q(data) + kFast;
    CHECK(run_cli(dir, base + " --seed 11 --model-out " + q(dir / "a.json")).code == 0);
    CHECK(run_cli(dir, base + " --seed 11 --model-out " + q(dir / "b.json")).code == 0);
    CHECK(run_cli(dir, base + " --seed 12 --model-out " + q(dir / "c.json")).code == 0);

    const std::string a = mldf::read_file((dir / "a.json").string());
    const std::string b = mldf::read_file((dir / "b.json").string());
    const std::string c = mldf::read_file((dir / "c.json").string());
    CHECK(a == b);
    CHECK(a != c);

    fs::remove_all(dir);
}

TEST_CASE("train with a split prints held-out measures") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 4, 30);

    const auto r = run_cli(dir, "train --data " + q(data) + kFast +
                                     " --seed 7 --split 0.5 --report " + q(dir / "r.json"));
    CHECK(r.code == 0);
    CHECK(r.out.find("held-out measures (15 rows):") != std::string::npos);
    for (mldf::MeasureKind m : mldf::all_measures())
        CHECK(r.out.find(std::string("  ") + mldf::measure_name(m) + ":") !=
              std::string::npos);
    const std::string rep = mldf::read_file((dir / "r.json").string());
    CHECK(rep.find("\"test-measures\"") != std::string::npos);
    CHECK(rep.find("\"test-rows\": 15") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("evaluate on a saved model prints exactly six measures") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 5);
    const auto model = dir / "model.json";
    REQUIRE(run_cli(dir, "train --data " + q(data) + kFast + " --seed 5 --model-out " +
                             q(model))
                .code == 0);

    const auto r = run_cli(dir, "evaluate --model-in " + q(model) + " --data " + q(data) +
                                     " --report " + q(dir / "er.json"));
    CHECK(r.code == 0);
    std::size_t entries = 0;
    for (mldf::MeasureKind m : mldf::all_measures()) {
        const std::string line = std::string("  ") + mldf::measure_name(m) + ": ";
        entries += count_occurrences(r.out, line);
    }
    CHECK(entries == 6);

    const std::string rep = mldf::read_file((dir / "er.json").string());
    CHECK(rep.find("\"command\": \"evaluate\"") != std::string::npos);
    for (mldf::MeasureKind m : mldf::all_measures())
        CHECK(rep.find("\"" + std::string(mldf::measure_name(m)) + "\"") !=
              std::string::npos);

    // feature-width mismatch is a data error
    const auto wide = write_dataset(dir, "wide.csv", 5, 24, 5);
    const auto mism = run_cli(dir, "evaluate --model-in " + q(model) + " --data " + q(wide));
    CHECK(mism.code == 3);
    CHECK(mism.err.find("features") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("evaluate protocol mode repeats over consecutive seeds") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 6, 30);

    const auto r = run_cli(dir, "evaluate --data " + q(data) + kFast +
                                     " --seed 3 --split 0.5 --repeat 2 --report " +
                                     q(dir / "pr.json"));
    CHECK(r.code == 0);
    CHECK(r.out.find("seed 3 (L=") != std::string::npos);
    CHECK(r.out.find("seed 4 (L=") != std::string::npos);
    CHECK(r.out.find("summary over 2 runs:") != std::string::npos);
    CHECK(r.out.find("+/-") != std::string::npos);

    const std::string rep = mldf::read_file((dir / "pr.json").string());
    CHECK(rep.find("\"per-seed\"") != std::string::npos);
    CHECK(rep.find("\"mean\"") != std::string::npos);
    CHECK(rep.find("\"std\"") != std::string::npos);
    CHECK(rep.find("\"repeat\": 2") != std::string::npos);

    CHECK(run_cli(dir, "evaluate --data " + q(data) + kFast + " --repeat 0").code == 2);

    fs::remove_all(dir);
}

TEST_CASE("predict writes scores and binarized scores that agree") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 7);
    const auto model = dir / "model.json";
    REQUIRE(run_cli(dir, "train --data " + q(data) + kFast + " --seed 9 --model-out " +
                             q(model))
                .code == 0);

    const auto scores_path = dir / "scores.csv";
    const auto binary_path = dir / "binary.csv";
    const auto r = run_cli(dir, "predict --model-in " + q(model) + " --data " + q(data) +
                                     " --scores-out " + q(scores_path) + " --binary-out " +
                                     q(binary_path));
    CHECK(r.code == 0);

    const auto scores = parse_csv_cells(mldf::read_file(scores_path.string()));
    const auto binary = parse_csv_cells(mldf::read_file(binary_path.string()));
    REQUIRE(scores.size() == 25);  // header + 24 rows
    REQUIRE(binary.size() == 25);
    CHECK(scores[0] == std::vector<std::string>{"alpha", "beta"});
    CHECK(binary[0] == std::vector<std::string>{"alpha", "beta"});
    for (std::size_t i = 1; i < scores.size(); ++i) {
        REQUIRE(scores[i].size() == 2);
        for (std::size_t j = 0; j < 2; ++j) {
            const double v = std::stod(scores[i][j]);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
            CHECK(binary[i][j] == (v > 0.5 ? "1" : "0"));
        }
    }

    // without output paths the scores go to stdout
    const auto piped = run_cli(dir, "predict --model-in " + q(model) + " --data " + q(data));
    CHECK(piped.code == 0);
    CHECK(count_occurrences(piped.out, "\n") == 25);
    CHECK(piped.out.rfind("alpha,beta\n", 0) == 0);

    check_no_tmp_files(dir);
    fs::remove_all(dir);
}

TEST_CASE("config file values apply unless a flag overrides them") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 8);

    write_text(dir / "cfg.json",
               "{\"seed\": 21, \"max-layers\": 2, \"folds\": 2, \"trees-first\": 3,\n"
               " \"trees-step\": 1, \"trees-max\": 4, \"depth-first\": 2, \"depth-step\": 1}\n");

    // config alone matches the equivalent flag spelling
    CHECK(run_cli(dir, "train --data " + q(data) + " --config " + q(dir / "cfg.json") +
                           " --model-out " + q(dir / "a.json"))
              .code == 0);
    CHECK(run_cli(dir, "train --data " + q(data) + kFast + " --seed 21 --model-out " +
                           q(dir / "b.json"))
              .code == 0);
    CHECK(mldf::read_file((dir / "a.json").string()) ==
          mldf::read_file((dir / "b.json").string()));

    // an explicit flag beats the config value
    CHECK(run_cli(dir, "train --data " + q(data) + " --config " + q(dir / "cfg.json") +
                           " --seed 22 --model-out " + q(dir / "c.json"))
              .code == 0);
    CHECK(run_cli(dir, "train --data " + q(data) + kFast + " --seed 22 --model-out " +
                           q(dir / "d.json"))
              .code == 0);
    CHECK(mldf::read_file((dir / "c.json").string()) ==
          mldf::read_file((dir / "d.json").string()));
    CHECK(mldf::read_file((dir / "a.json").string()) !=
          mldf::read_file((dir / "c.json").string()));

    // unknown keys warn but do not fail
    write_text(dir / "extra.json", "{\"seed\": 21, \"verbosity\": 3}");
    const auto warn = run_cli(dir, "train --data " + q(data) + kFast + " --config " +
                                       q(dir / "extra.json"));
    CHECK(warn.code == 0);
    CHECK(warn.err.find("ignoring unknown config key 'verbosity'") != std::string::npos);

    // malformed config is a usage error
    write_text(dir / "broken.json", "{seed:");
    CHECK(run_cli(dir, "train --data " + q(data) + " --config " + q(dir / "broken.json"))
              .code == 2);
    write_text(dir / "list.json", "[1,2]");
    CHECK(run_cli(dir, "train --data " + q(data) + " --config " + q(dir / "list.json"))
              .code == 2);

    fs::remove_all(dir);
}

TEST_CASE("a tampered model version is refused at exit code 3") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 9);
    const auto model = dir / "model.json";
    REQUIRE(run_cli(dir, "train --data " + q(data) + kFast + " --model-out " + q(model))
                .code == 0);

    std::string text = mldf::read_file(model.string());
    const auto pos = text.find("\"version\":1");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 11, "\"version\":9");
    write_text(model, text);

    const auto r = run_cli(dir, "evaluate --model-in " + q(model) + " --data " + q(data));
    CHECK(r.code == 3);
    CHECK(r.err.find("unsupported model version") != std::string::npos);

    fs::remove_all(dir);
}

TEST_CASE("probe emits one delta row per label") {
    const auto dir = testutil::temp_dir("mldf-cli");
    const auto data = write_dataset(dir, "d.csv", 10);

    const auto r = run_cli(dir, "probe --data " + q(data) + kFast + " --out " +
                                     q(dir / "deltas.csv"));
    CHECK(r.code == 0);
    const auto cells = parse_csv_cells(mldf::read_file((dir / "deltas.csv").string()));
    REQUIRE(cells.size() == 3);  // header + one row per label
    CHECK(cells[0] == std::vector<std::string>{"deleted", "alpha", "beta"});
    CHECK(cells[1][0] == "alpha");
    CHECK(cells[2][0] == "beta");
    REQUIRE(cells[1].size() == 3);
    for (std::size_t i = 1; i < cells.size(); ++i)
        for (std::size_t j = 1; j < cells[i].size(); ++j)
            (void)std::stod(cells[i][j]);  // numeric payload

    // stdout fallback produces the same shape
    const auto piped = run_cli(dir, "probe --data " + q(data) + kFast);
    CHECK(piped.code == 0);
    CHECK(piped.out.rfind("deleted,alpha,beta\n", 0) == 0);
    CHECK(count_occurrences(piped.out, "\n") == 3);

    fs::remove_all(dir);
}
