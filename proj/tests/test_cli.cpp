#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace {

struct Run {
    int code = -1;
    std::string out;
};

Run cli(const std::string& args) {
    static int counter = 0;
    const std::string path = "cli_out_" + std::to_string(counter++) + ".txt";
    const std::string cmd = std::string(BOUNDKIT_CLI) + " " + args + " > " + path + " 2>/dev/null";
    const int st = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    std::ifstream in(path);
    std::stringstream s;
    s << in.rdbuf();
    r.out = s.str();
    return r;
}

std::string sample(const std::string& name) { return std::string(BOUNDKIT_SAMPLES) + "/" + name; }

nlohmann::json parsed(const Run& r) { return nlohmann::json::parse(r.out); }

}  // namespace

TEST(CliEigs, ZeroPotentialIsEmpty) {
    const auto r = cli("eigs " + sample("zero.json"));
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(parsed(r)["eigenvalues"].empty());
}

TEST(CliEigs, SquareHasOnePlusEntry) {
    const auto r = cli("eigs " + sample("square.json") + " --floor 1e-6 --tol 1e-12");
    ASSERT_EQ(r.code, 0);
    const auto j = parsed(r)["eigenvalues"];
    ASSERT_EQ(j.size(), 1u);
    EXPECT_EQ(j[0]["sign"], "+");
    EXPECT_NEAR(j[0]["E"].get<double>(), 0.15396079635180626, 1e-9);
}

TEST(CliEigs, BadFileExitsTwo) {
    EXPECT_EQ(cli("eigs " + sample("bad.json")).code, 2);
    EXPECT_EQ(cli("eigs " + sample("missing.json")).code, 2);
    EXPECT_EQ(cli("eigs " + sample("square.json") + " --domain sideways").code, 2);
}

TEST(CliEigs, ConfigFileAndSeed) {
    const auto a = cli("eigs " + sample("square.json") + " --config " + sample("eigs_config.json"));
    const auto b = cli("eigs " + sample("square.json") + " --floor 1e-6 --tol 1e-11 --seed none");
    ASSERT_EQ(a.code, 0);
    EXPECT_EQ(a.out, b.out);
    EXPECT_EQ(cli("eigs " + sample("square.json") + " --seed 42").code, 2);
}

TEST(CliDecompose, ZeroAllPass) {
    const auto r = cli("decompose " + sample("zero.json") + " --floor 1e-4");
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(parsed(r)["all_pass"].get<bool>());
}

TEST(CliDecompose, DipolePairReplayAndCorruption) {
    const auto r = cli("decompose " + sample("dipole_pair.json") + " --floor 1e-4 --out cli_pair.json");
    ASSERT_EQ(r.code, 0);
    EXPECT_TRUE(parsed(r)["all_pass"].get<bool>());
    auto d = nlohmann::json::parse(std::ifstream("cli_pair.json"));
    EXPECT_GT(d["families"].size(), 1u);
    EXPECT_EQ(cli("decompose " + sample("dipole_pair.json") + " --replay cli_pair.json").code, 0);
    for (auto& v : d["W"]["v"]) v = v.get<double>() * 1e3;
    std::ofstream("cli_pair_bad.json") << d.dump();
    EXPECT_EQ(cli("decompose " + sample("dipole_pair.json") + " --replay cli_pair_bad.json").code, 4);
}

TEST(CliDecompose, IsDeterministic) {
    ASSERT_EQ(cli("decompose " + sample("dipole.json") + " --floor 1e-4 --out cli_d1.json").code, 0);
    ASSERT_EQ(cli("decompose " + sample("dipole.json") + " --floor 1e-4 --out cli_d2.json").code, 0);
    std::stringstream a, b;
    a << std::ifstream("cli_d1.json").rdbuf();
    b << std::ifstream("cli_d2.json").rdbuf();
    EXPECT_EQ(a.str(), b.str());
}

TEST(CliIlt, Cases) {
    const auto z = cli("ilt " + sample("zero.json") + " --floor 1e-4");
    ASSERT_EQ(z.code, 0);
    EXPECT_EQ(parsed(z)["lhs"], 0.0);
    EXPECT_EQ(parsed(z)["ratio"], 0.0);
    const auto s = cli("ilt " + sample("square.json") + " --p 0.5 --floor 1e-6");
    ASSERT_EQ(s.code, 0);
    EXPECT_TRUE(parsed(s)["ratio"].is_number());
    EXPECT_EQ(cli("ilt " + sample("dipole.json") + " --variant a").code, 2);
}

TEST(CliSparse, Cases) {
    const auto one = cli("sparse " + sample("targets1.json") + " --out cli_sparse.json");
    ASSERT_EQ(one.code, 0);
    EXPECT_TRUE(parsed(one)["pass"].get<bool>());
    EXPECT_EQ(nlohmann::json::parse(std::ifstream("cli_sparse.json"))["kind"], "sparse");
    const auto empty = cli("sparse " + sample("targets_empty.json"));
    ASSERT_EQ(empty.code, 0);
    EXPECT_EQ(parsed(empty)["potential"]["kind"], "zero");
    EXPECT_EQ(cli("sparse " + sample("targets_undecreasing.json")).code, 2);
}

TEST(CliScatter, Cases) {
    const auto z = cli("scatter " + sample("w_zero.json"));
    ASSERT_EQ(z.code, 0);
    EXPECT_EQ(parsed(z)["residual"], 0.0);
    const auto h = cli("scatter " + sample("w_hump.json") + " --kmax 50 --nk 200 --csv cli_scatter.csv --workers 2");
    ASSERT_EQ(h.code, 0);
    EXPECT_LE(parsed(h)["residual"].get<double>(), 1e-3);
    std::ifstream csv("cli_scatter.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "k,abs_r,log_one_minus_r2");
    EXPECT_EQ(cli("scatter " + sample("w_nosupport.json")).code, 2);
}

TEST(CliPrufer, Cases) {
    const std::string free_d = sample("free_decomposition.json");
    const auto f = cli("prufer " + free_d + " --kgrid 0.5,2");
    ASSERT_EQ(f.code, 0);
    std::stringstream in(f.out);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "k,index,n,kk,length,error,bound");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        std::stringstream ls(line);
        std::string cell;
        for (int i = 0; i < 6; ++i) std::getline(ls, cell, ',');
        EXPECT_NEAR(std::stod(cell), 0.0, 1e-9);
    }
    EXPECT_EQ(rows, 10);
    ASSERT_EQ(cli("decompose " + sample("square.json") + " --floor 1e-4 --out cli_square.json").code, 0);
    const auto b = cli("prufer cli_square.json --kgrid 0.5,1,3 --workers 2");
    ASSERT_EQ(b.code, 0);
    std::stringstream bin(b.out);
    std::getline(bin, line);
    while (std::getline(bin, line)) {
        std::stringstream ls(line);
        std::string cell;
        std::vector<double> v;
        while (std::getline(ls, cell, ',')) v.push_back(std::stod(cell));
        ASSERT_EQ(v.size(), 7u);
        EXPECT_LE(std::abs(v[5]), v[6] + 1e-8);
    }
    EXPECT_EQ(cli("prufer " + free_d + " --kgrid 0,1").code, 2);
    EXPECT_EQ(cli("prufer " + free_d + " --kgrid -1").code, 2);
}
