#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

namespace {

const std::string kCli = LAPCERT_CLI_PATH;

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

std::atomic<int> g_out_counter{0};

RunResult run(const std::string& args) {
    const std::string out_path = "/tmp/lapcert_cli_out_" + std::to_string(getpid()) + "_" +
                                 std::to_string(g_out_counter.fetch_add(1));
    const std::string cmd = kCli + " " + args + " > " + out_path + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_path);
    std::stringstream buf;
    buf << in.rdbuf();
    res.output = buf.str();
    std::remove(out_path.c_str());
    return res;
}

std::string temp_dir() {
    char tmpl[] = "/tmp/lapcert_cli_XXXXXX";
    const char* dir = mkdtemp(tmpl);
    REQUIRE(dir != nullptr);
    return dir;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

double report_value(const std::string& report, const std::string& key) {
    std::istringstream in(report);
    std::string line;
    while (std::getline(in, line)) {
        if (line.rfind(key + " ", 0) == 0) return std::stod(line.substr(key.size() + 1));
    }
    FAIL("key not found in report: ", key);
    return 0.0;
}

}  // namespace

TEST_CASE("help exits 0 and documents the flags") {
    CHECK(run("--help").exit_code == 0);
    for (const std::string& sub : {"sparsify", "estimate", "cut-ci", "eig-ci", "refine", "coverage"}) {
        const RunResult r = run(sub + " --help");
        CHECK(r.exit_code == 0);
        CHECK(r.output.find("--help") != std::string::npos);
    }
    const RunResult est_help = run("estimate --help");
    for (const std::string& flag :
         {"--sample", "--graph", "--functional", "--alpha", "--b-outer", "--b-inner", "--seed", "--tau", "--y"})
        CHECK(est_help.output.find(flag) != std::string::npos);
}

TEST_CASE("unknown flags are rejected with exit 1") {
    CHECK(run("sparsify --does-not-exist 1").exit_code == 1);
    CHECK(run("frobnicate").exit_code == 1);
    CHECK(run("").exit_code == 1);  // a subcommand is required
}

TEST_CASE("sparsify: fraction rule, determinism, diagnostics") {
    const std::string dir = temp_dir();
    {
        std::ostringstream g;
        for (int i = 0; i < 1000; ++i) g << i << " " << (i + 1) << " 1.0\n";
        write_file(dir + "/chain.txt", g.str());
    }
    const RunResult r1 =
        run("sparsify --graph " + dir + "/chain.txt --scheme ew --fraction 0.1 --seed 3 --out " + dir + "/s1.txt");
    CHECK(r1.exit_code == 0);
    CHECK(r1.output.find("N 100\n") != std::string::npos);
    CHECK(r1.output.find("unique_edges") != std::string::npos);
    CHECK(r1.output.find("max_scale") != std::string::npos);

    const RunResult r2 =
        run("sparsify --graph " + dir + "/chain.txt --scheme ew --fraction 0.1 --seed 3 --out " + dir + "/s2.txt");
    CHECK(r2.exit_code == 0);
    CHECK(read_file(dir + "/s1.txt") == read_file(dir + "/s2.txt"));  // byte-identical

    // er on a tree reports uniform probabilities
    const RunResult r3 =
        run("sparsify --graph " + dir + "/chain.txt --scheme er --n-samples 50 --seed 1 --out " + dir + "/s3.txt");
    CHECK(r3.exit_code == 0);
    const double mn = report_value(r3.output, "prob_min");
    const double mx = report_value(r3.output, "prob_max");
    CHECK(mn == doctest::Approx(0.001).epsilon(1e-6));
    CHECK(mx == doctest::Approx(0.001).epsilon(1e-6));
}

TEST_CASE("estimate: degenerate sample, defaults, fro/fro2 identity") {
    const std::string dir = temp_dir();
    write_file(dir + "/edge.txt", "0 1 1.0\n");
    REQUIRE(run("sparsify --graph " + dir + "/edge.txt --scheme ew --n-samples 10 --seed 2 --out " + dir +
                "/s.txt")
                .exit_code == 0);

    const RunResult est = run("estimate --sample " + dir + "/s.txt --graph " + dir + "/edge.txt --seed 4");
    CHECK(est.exit_code == 0);
    CHECK(report_value(est.output, "q_hat") == doctest::Approx(0.0));
    CHECK(report_value(est.output, "B_outer") == doctest::Approx(50));
    CHECK(report_value(est.output, "B_inner") == doctest::Approx(30));
    CHECK(report_value(est.output, "alpha") == doctest::Approx(0.05));

    // a bigger graph: fro report equals sqrt of the fro2 report
    {
        std::ostringstream g;
        for (int i = 0; i < 30; ++i)
            for (int j = i + 1; j < 30; ++j)
                if ((i * 31 + j * 17) % 5 == 0) g << i << " " << j << " 1.0\n";
        write_file(dir + "/g.txt", g.str());
    }
    REQUIRE(run("sparsify --graph " + dir + "/g.txt --scheme ew --fraction 0.5 --seed 5 --out " + dir +
                "/gs.txt")
                .exit_code == 0);
    const RunResult fro =
        run("estimate --sample " + dir + "/gs.txt --graph " + dir + "/g.txt --functional fro --seed 8");
    const RunResult fro2 =
        run("estimate --sample " + dir + "/gs.txt --graph " + dir + "/g.txt --functional fro2 --seed 8");
    REQUIRE(fro.exit_code == 0);
    REQUIRE(fro2.exit_code == 0);
    CHECK(report_value(fro.output, "q_hat") ==
          doctest::Approx(std::sqrt(report_value(fro2.output, "q_hat"))).epsilon(1e-14));

    // reg without --y is a usage error
    CHECK(run("estimate --sample " + dir + "/gs.txt --graph " + dir + "/g.txt --functional reg --tau 0.1 "
              "--seed 1")
              .exit_code == 1);

    // CSV output file
    const RunResult csv = run("estimate --sample " + dir + "/gs.txt --graph " + dir +
                              "/g.txt --functional fro --seed 8 --out " + dir + "/est.csv");
    CHECK(csv.exit_code == 0);
    const std::string body = read_file(dir + "/est.csv");
    CHECK(body.rfind("q_hat,mu_hat,sigma_hat,alpha,B_outer,B_inner,seed,functional\n", 0) == 0);
}

TEST_CASE("cut-ci: zero cut row, centered intervals, bad cut exits 1") {
    const std::string dir = temp_dir();
    {
        std::ostringstream g;
        for (int i = 0; i < 12; ++i) g << i << " " << (i + 1) % 12 << " 1.0\n";
        write_file(dir + "/ring.txt", g.str());
    }
    REQUIRE(run("sparsify --graph " + dir + "/ring.txt --scheme ew --n-samples 30 --seed 9 --out " + dir +
                "/rs.txt")
                .exit_code == 0);
    write_file(dir + "/cuts.txt", "000000000000\n0 1 2\n110000000000\n");
    const RunResult r = run("cut-ci --sample " + dir + "/rs.txt --graph " + dir + "/ring.txt --cuts " + dir +
                            "/cuts.txt --alpha 0.1 --b 40 --seed 6 --out " + dir + "/cis.csv");
    CHECK(r.exit_code == 0);
    const std::string csv = read_file(dir + "/cis.csv");
    std::istringstream lines(csv);
    std::string line;
    std::getline(lines, line);
    CHECK(line == "kind,cut_id,c_hat,sigma_hat,lo,hi,q_hat");
    int cut_rows = 0;
    bool saw_zero_row = false, saw_cmax = false, saw_cmin = false;
    while (std::getline(lines, line)) {
        if (line.rfind("cut,", 0) == 0) {
            ++cut_rows;
            std::istringstream cols(line);
            std::string tok;
            std::getline(cols, tok, ',');  // kind
            std::getline(cols, tok, ',');  // id
            std::getline(cols, tok, ',');
            const double c_hat = std::stod(tok);
            std::getline(cols, tok, ',');  // sigma
            std::getline(cols, tok, ',');
            const double lo = std::stod(tok);
            std::getline(cols, tok, ',');
            const double hi = std::stod(tok);
            CHECK(lo <= c_hat + 1e-12);
            CHECK(hi >= c_hat - 1e-12);
            if (c_hat == 0.0 && lo == 0.0 && hi == 0.0) saw_zero_row = true;
        }
        if (line.rfind("cmax,", 0) == 0) saw_cmax = true;
        if (line.rfind("cmin,", 0) == 0) saw_cmin = true;
    }
    CHECK(cut_rows == 3);
    CHECK(saw_zero_row);  // the all-zeros cut row
    CHECK(saw_cmax);
    CHECK(saw_cmin);

    write_file(dir + "/bad_cuts.txt", "000000000000\n0101\n");
    const RunResult bad = run("cut-ci --sample " + dir + "/rs.txt --graph " + dir + "/ring.txt --cuts " + dir +
                              "/bad_cuts.txt --seed 6");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("line 2") != std::string::npos);
}

TEST_CASE("eig-ci: first row pinned at zero, alpha monotonicity, r < 2 exits 1") {
    const std::string dir = temp_dir();
    {
        std::ostringstream g;
        for (int i = 0; i < 10; ++i)
            for (int j = i + 1; j < 10; ++j) g << i << " " << j << " 1.0\n";
        write_file(dir + "/k10.txt", g.str());
    }
    REQUIRE(run("sparsify --graph " + dir + "/k10.txt --scheme ew --n-samples 40 --seed 3 --out " + dir +
                "/ks.txt")
                .exit_code == 0);

    auto parse_rows = [&](const std::string& csv) {
        std::vector<std::vector<std::string>> rows;
        std::istringstream lines(csv);
        std::string line;
        std::getline(lines, line);  // header
        while (std::getline(lines, line)) {
            std::vector<std::string> cols;
            std::istringstream cs(line);
            std::string tok;
            while (std::getline(cs, tok, ',')) cols.push_back(tok);
            rows.push_back(cols);
        }
        return rows;
    };

    const RunResult a = run("eig-ci --sample " + dir + "/ks.txt --graph " + dir +
                            "/k10.txt --r 4 --alpha 0.10 --b 40 --seed 6 --out " + dir + "/eig10.csv");
    REQUIRE(a.exit_code == 0);
    const auto rows10 = parse_rows(read_file(dir + "/eig10.csv"));
    REQUIRE(rows10.size() == 4);
    CHECK(rows10[0][0] == "1");
    CHECK(std::stod(rows10[0][2]) == 0.0);
    CHECK(std::stod(rows10[0][3]) == 0.0);

    const RunResult b = run("eig-ci --sample " + dir + "/ks.txt --graph " + dir +
                            "/k10.txt --r 4 --alpha 0.05 --b 40 --seed 6 --out " + dir + "/eig05.csv");
    REQUIRE(b.exit_code == 0);
    const auto rows05 = parse_rows(read_file(dir + "/eig05.csv"));
    for (std::size_t j = 1; j < 4; ++j) {
        const double w10 = std::stod(rows10[j][3]) - std::stod(rows10[j][2]);
        const double w05 = std::stod(rows05[j][3]) - std::stod(rows05[j][2]);
        CHECK(w05 >= w10 - 1e-12);  // intervals widen as alpha decreases
    }

    CHECK(run("eig-ci --sample " + dir + "/ks.txt --graph " + dir + "/k10.txt --r 1 --seed 6").exit_code == 1);
}

TEST_CASE("refine: threshold already met and sqrt grid scaling") {
    const std::string dir = temp_dir();
    write_file(dir + "/edge.txt", "0 1 1.0\n");
    REQUIRE(run("sparsify --graph " + dir + "/edge.txt --scheme ew --n-samples 100 --seed 2 --out " + dir +
                "/s.txt")
                .exit_code == 0);
    const RunResult r = run("refine --sample " + dir + "/s.txt --graph " + dir +
                            "/edge.txt --functional fro --threshold 0.25 --seed 5 --grid 400");
    CHECK(r.exit_code == 0);
    CHECK(report_value(r.output, "q_hat_n0") == doctest::Approx(0.0));
    CHECK(report_value(r.output, "n1") == doctest::Approx(100));
    CHECK(r.output.find("no refinement needed") != std::string::npos);

    // non-degenerate: grid value at 4 N0 is half the N0 estimate
    {
        std::ostringstream g;
        for (int i = 0; i < 20; ++i)
            for (int j = i + 1; j < 20; ++j)
                if ((i + 3 * j) % 4 == 0) g << i << " " << j << " 1.0\n";
        write_file(dir + "/g.txt", g.str());
    }
    REQUIRE(run("sparsify --graph " + dir + "/g.txt --scheme ew --fraction 0.5 --seed 5 --out " + dir +
                "/gs.txt")
                .exit_code == 0);
    const RunResult r2 = run("refine --sample " + dir + "/gs.txt --graph " + dir +
                             "/g.txt --functional fro --threshold 0.01 --seed 5 --grid 400");
    CHECK(r2.exit_code == 0);
    const double q0 = report_value(r2.output, "q_hat_n0");
    const double n0 = report_value(r2.output, "n0");
    CHECK(n0 > 0);
    std::istringstream lines(r2.output);
    std::string line;
    double grid_val = -1.0;
    while (std::getline(lines, line)) {
        std::istringstream ls(line);
        std::string key;
        ls >> key;
        if (key == "q_hat_at") {
            double n;
            ls >> n >> grid_val;
            CHECK(n == doctest::Approx(400));
        }
    }
    CHECK(grid_val == doctest::Approx(q0 * std::sqrt(n0 / 400.0)).epsilon(1e-12));
}

TEST_CASE("coverage subcommand: determinism and trivial coverage") {
    const std::string dir = temp_dir();
    write_file(dir + "/cov.cfg",
               "graph = path\n"
               "n = 2\n"
               "scheme = ew\n"
               "n_samples = 5\n"
               "functionals = fro\n"
               "levels = 0.90\n"
               "trials = 20\n"
               "b_outer = 10\n"
               "b_inner = 5\n"
               "seed = 3\n");
    const RunResult a = run("coverage --config " + dir + "/cov.cfg --out " + dir + "/a.csv --threads 1");
    const RunResult b = run("coverage --config " + dir + "/cov.cfg --out " + dir + "/b.csv --threads 4");
    CHECK(a.exit_code == 0);
    CHECK(b.exit_code == 0);
    CHECK(read_file(dir + "/a.csv") == read_file(dir + "/b.csv"));
    CHECK(read_file(dir + "/a.csv").find("fro,0.9") != std::string::npos);
    CHECK(read_file(dir + "/a.csv").find(",1,") != std::string::npos);  // coverage 1

    write_file(dir + "/bad.cfg", "mystery_key = 1\n");
    const RunResult bad = run("coverage --config " + dir + "/bad.cfg");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("mystery_key") != std::string::npos);

    CHECK(run("coverage --config " + dir + "/nonexistent.cfg").exit_code == 1);
}

TEST_CASE("computation failures exit 2") {
    const std::string dir = temp_dir();
    std::ostringstream g;
    for (int i = 0; i + 1 < 50; ++i)
        g << i << " " << (i + 1) << " " << (1.0 + (i % 7) / 7.0) << "\n";
    write_file(dir + "/chain.txt", g.str());
    // an unreachable CG tolerance forces a solver failure
    const RunResult r = run("sparsify --graph " + dir + "/chain.txt --scheme er --tol 1e-300 --n-samples 5 "
                            "--seed 1 --out " + dir + "/s.txt");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error:") != std::string::npos);
}
