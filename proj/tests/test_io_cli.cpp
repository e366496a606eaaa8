#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "cluslasso/cli.hpp"
#include "cluslasso/io.hpp"
#include "support/oracles.hpp"

using namespace cluslasso;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("cluslasso_test_" + tag + "_" +
                                            std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
}

std::string design_csv_with_duplicates() {
    // columns 0 and 1 identical, column 2 independent
    std::string csv = "a,b,c\n";
    Rng rng(3);
    for (int i = 0; i < 12; ++i) {
        const double u = rng.normal();
        const double v = rng.normal();
        csv += fmt_double(u) + "," + fmt_double(u) + "," + fmt_double(v) + "\n";
    }
    return csv;
}

}  // namespace

TEST_CASE("csv reading") {
    TempDir tmp("csv");
    SECTION("header detection") {
        write_text(tmp.file("t.csv"), "x1,x2\n1.0,2.0\n3.0,4.5\n");
        const CsvTable table = read_csv(tmp.file("t.csv"));
        REQUIRE(table.header == std::vector<std::string>{"x1", "x2"});
        REQUIRE(table.values(1, 1) == 4.5);
    }
    SECTION("no header") {
        write_text(tmp.file("t.csv"), "1,2\n3,4\n");
        const CsvTable table = read_csv(tmp.file("t.csv"));
        REQUIRE(table.header.empty());
        REQUIRE(table.values.rows() == 2);
    }
    SECTION("malformed cell reports line and column") {
        write_text(tmp.file("t.csv"), "1,2\n3,oops\n");
        try {
            read_csv(tmp.file("t.csv"));
            FAIL("expected a csv error");
        } catch (const CsvError& e) {
            REQUIRE(e.line == 2);
            REQUIRE(e.column == 2);
        }
    }
    SECTION("ragged rows are rejected") {
        write_text(tmp.file("t.csv"), "1,2\n3\n");
        REQUIRE_THROWS_AS(read_csv(tmp.file("t.csv")), CsvError);
    }
    SECTION("response must be one column") {
        write_text(tmp.file("t.csv"), "1,2\n3,4\n");
        REQUIRE_THROWS_AS(read_response_csv(tmp.file("t.csv")), CsvError);
    }
}

TEST_CASE("partition serialization round trips") {
    const Partition part = Partition::of({{0, 2}, {1}, {3, 4}}, 5);
    const std::string text = partition_to_text(part);
    REQUIRE(partition_from_text(text, 5) == part);
    const nlohmann::json doc = partition_to_json(part);
    REQUIRE(doc.at("schema") == "cluslasso.partition/1");
    REQUIRE(partition_from_json(doc, 5) == part);

    TempDir tmp("part");
    write_text(tmp.file("p.txt"), text);
    REQUIRE(load_partition(tmp.file("p.txt"), 5) == part);
    write_text(tmp.file("p.json"), doc.dump());
    REQUIRE(load_partition(tmp.file("p.json"), 5) == part);
}

TEST_CASE("document writer emits a schema line and nesting") {
    DocWriter doc("cluslasso.test/1");
    doc.field("alpha", 1.5);
    doc.begin("inner");
    doc.field("flag", true);
    doc.end();
    doc.field_list("items", std::vector<int>{1, 2, 3});
    const std::string text = doc.str();
    REQUIRE(text.rfind("schema: cluslasso.test/1\n", 0) == 0);
    REQUIRE(text.find("inner:\n  flag: true\n") != std::string::npos);
    REQUIRE(text.find("items: 1,2,3\n") != std::string::npos);
}

TEST_CASE("svg rendering produces a well-formed document") {
    PlotSeries series{"curve", {0, 1, 2}, {0.0, 0.5, 1.0}};
    const std::string svg = svg_plot({series}, "x", "y");
    REQUIRE(svg.find("<svg") == 0);
    REQUIRE(svg.find("polyline") != std::string::npos);
    REQUIRE(svg.find("</svg>") != std::string::npos);
}

TEST_CASE("cluster command") {
    TempDir tmp("cluster");
    write_text(tmp.file("design.csv"), design_csv_with_duplicates());

    SECTION("duplicated columns form one group") {
        const int code = cli::run({"cluster", tmp.file("design.csv"), "--tau", "0.5", "--out",
                                   tmp.file("out")});
        REQUIRE(code == 0);
        const Partition part = load_partition(tmp.file("out") + "/partition.txt", 3);
        REQUIRE(part == Partition::of({{0, 1}, {2}}, 3));
        REQUIRE(fs::exists(tmp.file("out") + "/partition.json"));
        REQUIRE(fs::exists(tmp.file("out") + "/config_snapshot.txt"));
    }
    SECTION("auto mode records the full trace") {
        const int code = cli::run({"cluster", tmp.file("design.csv"), "--out", tmp.file("auto")});
        REQUIRE(code == 0);
        const CsvTable trace = read_csv(tmp.file("auto") + "/trace.csv");
        REQUIRE(trace.values.rows() == 3);  // b = 0 plus p - 1 merges
        REQUIRE(trace.values(0, 0) == 0.0);
    }
    SECTION("correlation method emits linkage heights") {
        const int code = cli::run({"cluster", tmp.file("design.csv"), "--method", "corr", "--out",
                                   tmp.file("corr")});
        REQUIRE(code == 0);
        const CsvTable trace = read_csv(tmp.file("corr") + "/trace.csv");
        REQUIRE(trace.values.rows() == 2);  // heights h_1, h_2
    }
    SECTION("malformed input exits with the input-error code") {
        write_text(tmp.file("bad.csv"), "1,2\nx,4\n");
        REQUIRE(cli::run({"cluster", tmp.file("bad.csv"), "--out", tmp.file("bad_out")}) == 2);
    }
    SECTION("single-column designs are rejected") {
        write_text(tmp.file("one.csv"), "1\n2\n3\n");
        REQUIRE(cli::run({"cluster", tmp.file("one.csv"), "--out", tmp.file("one_out")}) == 2);
    }
}

TEST_CASE("fit command") {
    TempDir tmp("fit");
    Rng rng(7);
    Eigen::MatrixXd m = oracles::random_matrix(20, 4, rng);
    const double n = 20.0;
    for (int j = 0; j < 4; ++j) m.col(j) /= std::sqrt(m.col(j).squaredNorm() / n);
    Eigen::VectorXd y = m.col(0) * 1.5;
    for (int i = 0; i < 20; ++i) y(i) += 0.2 * rng.normal();
    std::string design = "";
    std::string response = "";
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 4; ++j) design += (j ? "," : "") + fmt_double(m(i, j));
        design += "\n";
        response += fmt_double(y(i)) + "\n";
    }
    write_text(tmp.file("x.csv"), design);
    write_text(tmp.file("y.csv"), response);
    const std::string singles = "0\n1\n2\n3\n";
    write_text(tmp.file("singles.txt"), singles);

    SECTION("huge penalty selects nothing") {
        const int code = cli::run({"fit", tmp.file("x.csv"), tmp.file("y.csv"), "--method",
                                   "lasso", "--lambda", "1e9", "--out", tmp.file("null")});
        REQUIRE(code == 0);
        const std::string selection = read_file(tmp.file("null") + "/selection.txt");
        REQUIRE(selection.find("n_selected_variables: 0\n") != std::string::npos);
    }
    SECTION("crl with singleton partition matches the lasso") {
        REQUIRE(cli::run({"fit", tmp.file("x.csv"), tmp.file("y.csv"), "--method", "lasso",
                          "--lambda", "0.2", "--out", tmp.file("lasso")}) == 0);
        REQUIRE(cli::run({"fit", tmp.file("x.csv"), tmp.file("y.csv"), "--method", "crl",
                          "--partition", tmp.file("singles.txt"), "--lambda", "0.2", "--out",
                          tmp.file("crl")}) == 0);
        const CsvTable a = read_csv(tmp.file("lasso") + "/coefficients.csv");
        const CsvTable b = read_csv(tmp.file("crl") + "/coefficients.csv");
        for (int j = 0; j < 4; ++j)
            REQUIRE(a.values(j, 2) == Catch::Approx(b.values(j, 1)).margin(1e-10));
    }
    SECTION("cgl selection covers whole groups") {
        write_text(tmp.file("pairs.txt"), "0,1\n2,3\n");
        REQUIRE(cli::run({"fit", tmp.file("x.csv"), tmp.file("y.csv"), "--method", "cgl",
                          "--partition", tmp.file("pairs.txt"), "--lambda", "0.1", "--out",
                          tmp.file("cgl")}) == 0);
        const std::string selection = read_file(tmp.file("cgl") + "/selection.txt");
        const bool both_or_none = selection.find("selected_variables: 0,1\n") != std::string::npos ||
                                  selection.find("selected_variables: 0,1,2,3\n") != std::string::npos ||
                                  selection.find("selected_variables: \n") != std::string::npos ||
                                  selection.find("selected_variables: 2,3\n") != std::string::npos;
        REQUIRE(both_or_none);
    }
    SECTION("cv mode writes the curve and both penalty choices") {
        REQUIRE(cli::run({"fit", tmp.file("x.csv"), tmp.file("y.csv"), "--method", "lasso",
                          "--lambda", "cv", "--cv-folds", "4", "--seed", "9", "--n-lambda", "20",
                          "--out", tmp.file("cv")}) == 0);
        const CsvTable curve = read_csv(tmp.file("cv") + "/cv_curve.csv");
        REQUIRE(curve.values.rows() == 20);
        const std::string selection = read_file(tmp.file("cv") + "/selection.txt");
        REQUIRE(selection.find("lambda_min: ") != std::string::npos);
        REQUIRE(selection.find("lambda_1se: ") != std::string::npos);
    }
    SECTION("dimension mismatch exits with the input-error code") {
        write_text(tmp.file("short.csv"), "1.0\n2.0\n");
        REQUIRE(cli::run({"fit", tmp.file("x.csv"), tmp.file("short.csv"), "--method", "lasso",
                          "--lambda", "0.1", "--out", tmp.file("mismatch")}) == 2);
    }
}

TEST_CASE("simulate command") {
    TempDir tmp("simulate");
    nlohmann::json scenario;
    scenario["name"] = "toy";
    scenario["n"] = 20;
    scenario["p"] = 6;
    scenario["noise_sigma"] = 0.5;
    scenario["seed"] = 3;
    scenario["sigma_spec"] = {{"kind", "block"}, {"num_blocks", 3}, {"block_size", 2}, {"rho", 0.85}};
    std::vector<double> beta(6, 0.0);
    beta[0] = 1.0;
    beta[2] = -0.8;
    scenario["beta_spec"] = {{"config", "custom"}, {"values", beta}};
    write_text(tmp.file("toy.json"), scenario.dump());

    const std::vector<std::string> args{"simulate", "--scenario", tmp.file("toy.json"),
                                        "--methods", "crl,lasso", "--runs", "3", "--n-lambda",
                                        "15", "--cv-folds", "4", "--out", tmp.file("out")};
    SECTION("deterministic outputs byte for byte") {
        REQUIRE(cli::run(args) == 0);
        const std::string first_table = read_file(tmp.file("out") + "/mse_table.csv");
        const std::string first_curve = read_file(tmp.file("out") + "/screening_crl.csv");
        const std::string first_snapshot = read_file(tmp.file("out") + "/config_snapshot.txt");
        REQUIRE(cli::run(args) == 0);
        REQUIRE(read_file(tmp.file("out") + "/mse_table.csv") == first_table);
        REQUIRE(read_file(tmp.file("out") + "/screening_crl.csv") == first_curve);
        REQUIRE(read_file(tmp.file("out") + "/config_snapshot.txt") == first_snapshot);
    }
    SECTION("single run reports zero dispersion") {
        std::vector<std::string> one = args;
        one[6] = "1";
        one.back() = tmp.file("one");
        REQUIRE(cli::run(one) == 0);
        const CsvTable table = read_csv(tmp.file("one") + "/mse_table.csv");
        REQUIRE(table.values(0, 2) == 0.0);  // sd column
    }
    SECTION("unknown scenarios exit with the input-error code") {
        REQUIRE(cli::run({"simulate", "--scenario", "nope", "--out", tmp.file("bad")}) == 2);
    }
    SECTION("rerunning from the snapshot reproduces the outputs") {
        REQUIRE(cli::run(args) == 0);
        const std::string table = read_file(tmp.file("out") + "/mse_table.csv");
        REQUIRE(cli::run({"simulate", "--config", tmp.file("out") + "/config_snapshot.txt",
                          "--out", tmp.file("replay")}) == 0);
        REQUIRE(read_file(tmp.file("replay") + "/mse_table.csv") == table);
    }
    SECTION("environment seed is used only without an explicit seed") {
        ::setenv("CLUSLASSO_SEED", "77", 1);
        std::vector<std::string> plain = args;
        plain.back() = tmp.file("env");
        REQUIRE(cli::run(plain) == 0);
        const std::string snapshot = read_file(tmp.file("env") + "/config_snapshot.txt");
        REQUIRE(snapshot.find("\"seed_source\": \"env\"") != std::string::npos);
        REQUIRE(snapshot.find("\"seed\": 77") != std::string::npos);

        std::vector<std::string> flagged = args;
        flagged.back() = tmp.file("flagged");
        flagged.push_back("--seed");
        flagged.push_back("5");
        REQUIRE(cli::run(flagged) == 0);
        const std::string snap2 = read_file(tmp.file("flagged") + "/config_snapshot.txt");
        REQUIRE(snap2.find("\"seed_source\": \"flag\"") != std::string::npos);
        REQUIRE(snap2.find("\"seed\": 5") != std::string::npos);
        ::unsetenv("CLUSLASSO_SEED");
    }
}

TEST_CASE("diagnose command") {
    TempDir tmp("diagnose");
    // block-orthogonal design: three groups with disjoint row support
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(12, 6);
    Rng rng(11);
    for (int g = 0; g < 3; ++g)
        for (int j = 0; j < 2; ++j)
            for (int i = 0; i < 4; ++i) m(4 * g + i, 2 * g + j) = rng.normal();
    std::string design;
    for (int i = 0; i < 12; ++i) {
        for (int j = 0; j < 6; ++j) design += (j ? "," : "") + fmt_double(m(i, j));
        design += "\n";
    }
    write_text(tmp.file("x.csv"), design);
    write_text(tmp.file("p.txt"), "0,1\n2,3\n4,5\n");

    const int code = cli::run({"diagnose", tmp.file("x.csv"), "--partition", tmp.file("p.txt"),
                               "--active-groups", "0,1", "--out", tmp.file("out")});
    REQUIRE(code == 0);
    const std::string report = read_file(tmp.file("out") + "/compat_report.txt");
    REQUIRE(report.rfind("schema: cluslasso.compat_report/1\n", 0) == 0);
    REQUIRE(report.find("rho: 0\n") != std::string::npos);
    REQUIRE(report.find("incoherence_between_ok: true") != std::string::npos);

    SECTION("singular within-group blocks are flagged") {
        Eigen::MatrixXd dup = m;
        dup.col(1) = dup.col(0);
        std::string dup_csv;
        for (int i = 0; i < 12; ++i) {
            for (int j = 0; j < 6; ++j) dup_csv += (j ? "," : "") + fmt_double(dup(i, j));
            dup_csv += "\n";
        }
        write_text(tmp.file("dup.csv"), dup_csv);
        REQUIRE(cli::run({"diagnose", tmp.file("dup.csv"), "--partition", tmp.file("p.txt"),
                          "--active-groups", "0", "--out", tmp.file("dup_out")}) == 0);
        const std::string dup_report = read_file(tmp.file("dup_out") + "/compat_report.txt");
        REQUIRE(dup_report.find("pseudo_inverse_used: true") != std::string::npos);
    }
}
