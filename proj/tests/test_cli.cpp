#include <doctest.h>

#include <sstream>

#include "fairfis/cli.hpp"
#include "fairfis/dataset.hpp"
#include "fairfis/fairness.hpp"
#include "fairfis/tree.hpp"
#include "test_util.hpp"

using namespace fairfis;
using fairfis::testing::TempDir;
using fairfis::testing::read_text;
using fairfis::testing::write_text;

namespace {

struct CliResult {
    int code;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

const std::string depth1_csv =
    "f0,f1,z,y\n"
    "0,9,1,1\n0,9,1,1\n0,9,0,1\n1,9,1,0\n1,9,0,0\n1,9,0,0\n";

}  // namespace

TEST_CASE("simulate then train runs the whole pipeline deterministically") {
    TempDir dir("cli_pipeline");
    auto sim = run_cli({"--seed", "3", "simulate", "--scenario", "linear", "--n", "200", "--p", "8",
                        "--out", dir.file("d.csv")});
    CAPTURE(sim.err);
    REQUIRE(sim.code == 0);
    CHECK(read_text(dir.file("d.csv.spec.json")).find("\"scenario\": \"linear\"") != std::string::npos);

    std::vector<std::string> train_args = {"--seed", "5",       "train",
                                           "--data", dir.file("d.csv"), "--target",
                                           "y",      "--protected",     "z",
                                           "--model", "tree",           "--out",
                                           dir.file("model.json")};
    auto train = run_cli(train_args);
    CAPTURE(train.err);
    REQUIRE(train.code == 0);
    CHECK(train.out.find("accuracy=") != std::string::npos);
    CHECK(train.out.find("fairness=") != std::string::npos);

    std::string first = read_text(dir.file("model.json"));
    auto again = run_cli(train_args);
    REQUIRE(again.code == 0);
    CHECK(read_text(dir.file("model.json")) == first);  // byte-identical rerun
}

TEST_CASE("eqop with a regression task is a usage error") {
    TempDir dir("cli_eqop");
    write_text(dir.file("d.csv"), depth1_csv);
    auto r = run_cli({"train", "--data", dir.file("d.csv"), "--target", "y", "--protected", "z",
                      "--task", "regression", "--metric", "eqop", "--out", dir.file("m.json")});
    CHECK(r.code == 2);
    CHECK(r.err.find("EQOP requires classification") != std::string::npos);
}

TEST_CASE("usage and data errors map to exit codes 2 and 1") {
    TempDir dir("cli_codes");
    CHECK(run_cli({"train", "--definitely-not-a-flag"}).code == 2);
    CHECK(run_cli({}).code == 2);

    auto missing = run_cli({"train", "--data", dir.file("nope.csv"), "--target", "y", "--protected",
                            "z", "--out", dir.file("m.json")});
    CHECK(missing.code == 1);
    CHECK(missing.err.find("nope.csv") != std::string::npos);

    CHECK(run_cli({"--help"}).code == 0);
}

TEST_CASE("importance emits the depth-1 fixture scores in csv and json") {
    TempDir dir("cli_imp");
    write_text(dir.file("d.csv"), depth1_csv);
    REQUIRE(run_cli({"train", "--data", dir.file("d.csv"), "--target", "y", "--protected", "z",
                     "--out", dir.file("m.json")})
                .code == 0);

    auto imp = run_cli({"importance", "--model", dir.file("m.json"), "--data", dir.file("d.csv"),
                        "--target", "y", "--protected", "z", "--out", dir.file("s.csv"), "--svg",
                        dir.file("s.svg")});
    CAPTURE(imp.err);
    REQUIRE(imp.code == 0);
    std::string csv = read_text(dir.file("s.csv"));
    CHECK(csv.find("feature,fis,fairfis") == 0);
    CHECK(csv.find("f0,1,-1\n") != std::string::npos);  // all weight on the split feature
    CHECK(csv.find("f1,0,0\n") != std::string::npos);
    CHECK(read_text(dir.file("s.svg")).find("<svg") == 0);

    auto js = run_cli({"importance", "--model", dir.file("m.json"), "--data", dir.file("d.csv"),
                       "--target", "y", "--protected", "z", "--format", "json", "--out",
                       dir.file("s.json")});
    REQUIRE(js.code == 0);
    std::string json_text = read_text(dir.file("s.json"));
    CHECK(json_text.find("\"fairfis\": [\n    -1.0,\n    0.0\n  ]") != std::string::npos);
    CHECK(json_text.find("\"raw_fairfis\"") != std::string::npos);
}

TEST_CASE("importance handles an all-leaf model and p mismatch") {
    TempDir dir("cli_leaf");
    write_text(dir.file("d.csv"), "f0,z,y\n1,0,1\n1,1,0\n1,0,1\n1,1,0\n");
    REQUIRE(run_cli({"train", "--data", dir.file("d.csv"), "--target", "y", "--protected", "z",
                     "--out", dir.file("m.json")})
                .code == 0);
    auto imp = run_cli({"importance", "--model", dir.file("m.json"), "--data", dir.file("d.csv"),
                        "--target", "y", "--protected", "z", "--out", dir.file("s.csv")});
    REQUIRE(imp.code == 0);
    CHECK(read_text(dir.file("s.csv")).find("f0,0,0\n") != std::string::npos);

    write_text(dir.file("wide.csv"), depth1_csv);
    auto mismatch = run_cli({"importance", "--model", dir.file("m.json"), "--data",
                             dir.file("wide.csv"), "--target", "y", "--protected", "z", "--out",
                             dir.file("s2.csv")});
    CHECK(mismatch.code == 1);

    write_text(dir.file("bad.json"), "{not json");
    auto corrupt = run_cli({"importance", "--model", dir.file("bad.json"), "--data",
                            dir.file("d.csv"), "--target", "y", "--protected", "z", "--out",
                            dir.file("s3.csv")});
    CHECK(corrupt.code == 1);
    CHECK(corrupt.err.find("corrupted model file") != std::string::npos);
}

TEST_CASE("surrogate command matches a direct tree when the black box is y itself") {
    TempDir dir("cli_sur");
    write_text(dir.file("d.csv"), depth1_csv);
    write_text(dir.file("preds.txt"), "1\n1\n1\n0\n0\n0\n");

    auto sur = run_cli({"surrogate", "--data", dir.file("d.csv"), "--target", "y", "--protected",
                        "z", "--predictions", dir.file("preds.txt"), "--out", dir.file("rep.json"),
                        "--scores", dir.file("sur.csv")});
    CAPTURE(sur.err);
    REQUIRE(sur.code == 0);
    CHECK(sur.out.find("fidelity=1\n") != std::string::npos);

    REQUIRE(run_cli({"train", "--data", dir.file("d.csv"), "--target", "y", "--protected", "z",
                     "--out", dir.file("m.json")})
                .code == 0);
    REQUIRE(run_cli({"importance", "--model", dir.file("m.json"), "--data", dir.file("d.csv"),
                     "--target", "y", "--protected", "z", "--out", dir.file("direct.csv")})
                .code == 0);
    CHECK(read_text(dir.file("sur.csv")) == read_text(dir.file("direct.csv")));

    write_text(dir.file("short.txt"), "1\n1\n1\n0\n0\n");
    auto bad = run_cli({"surrogate", "--data", dir.file("d.csv"), "--target", "y", "--protected",
                        "z", "--predictions", dir.file("short.txt"), "--out", dir.file("r2.json")});
    CHECK(bad.code == 1);
    CHECK(bad.err.find("length mismatch") != std::string::npos);
}

TEST_CASE("replicate writes the summary csv schema") {
    TempDir dir("cli_rep");
    auto rep = run_cli({"--seed", "9", "replicate", "--scenario", "linear", "--n", "120", "--p", "8",
                        "--reps", "2", "--threads", "2", "--out", dir.file("summary.csv")});
    CAPTURE(rep.err);
    REQUIRE(rep.code == 0);
    std::string csv = read_text(dir.file("summary.csv"));
    CHECK(csv.find("feature,group,mean_fis,sd_fis,mean_fairfis,sd_fairfis") == 0);
    CHECK(csv.find("x1,G1,") != std::string::npos);
    CHECK(csv.find("x8,G4,") != std::string::npos);
    CHECK(rep.out.find("G1: mean_fis=") != std::string::npos);

    auto rerun = run_cli({"--seed", "9", "replicate", "--scenario", "linear", "--n", "120", "--p",
                          "8", "--reps", "2", "--threads", "1", "--out", dir.file("summary2.csv")});
    REQUIRE(rerun.code == 0);
    CHECK(read_text(dir.file("summary2.csv")) == csv);
}
