#include "catch_amalgamated.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

int run(const std::string& args) {
    const std::string cmd =
        std::string(CLIFF_LHMP_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

int run_capture(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(CLIFF_LHMP_BIN) + " " + args + " >" +
                            log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::string first_line(const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    return line;
}

/// Scratch directory with a deterministic corridor dataset: walkers move
/// along +x at ~1.2 m/s with light lateral noise, sampled at 2.5 Hz.
struct Workspace {
    fs::path dir;
    fs::path data;

    Workspace() {
        dir = fs::temp_directory_path() /
              ("cliff_cli_" + std::to_string(std::random_device{}()));
        fs::create_directories(dir);
        data = dir / "corridor.csv";
        std::ofstream out(data);
        out << "person_id,time_s,x_m,y_m\n";
        std::mt19937 gen(42);
        std::normal_distribution<double> noise(0.0, 0.02);
        char buf[128];
        for (int person = 0; person < 25; ++person) {
            const double y0 = 1.0 + 0.08 * person;
            for (int i = 0; i < 60; ++i) {
                const double t = 0.4 * i;
                std::snprintf(buf, sizeof(buf), "%d,%.3f,%.6f,%.6f\n", person,
                              t, 1.2 * t + noise(gen), y0 + noise(gen));
                out << buf;
            }
        }
    }
    ~Workspace() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    std::string path(const char* name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("help exits cleanly") {
    CHECK(run("--help") == 0);
    CHECK(run("predict --help") == 0);
}

TEST_CASE("usage errors exit with code 2") {
    Workspace ws;
    CHECK(run("") == 2);                 // missing subcommand
    CHECK(run("frobnicate") == 2);       // unknown subcommand
    CHECK(run("build-map --input /nonexistent.csv --output " +
              ws.path("m.json")) == 2);  // unreadable input
    CHECK(run("build-map --input " + ws.data.string() + " --output " +
              ws.path("m.json") + " --resolution 0") == 2);
    CHECK(run("build-map --input " + ws.data.string() + " --output " +
              ws.path("m.json") + " --adapter tsv") == 2);
    CHECK(run("predict --input " + ws.data.string() + " --output " +
              ws.path("p.csv")) == 2);   // --map is required
    CHECK(run("evaluate --input " + ws.data.string() + " --output " +
              ws.path("e.csv")) == 2);   // needs --map or --cvm-only
}

TEST_CASE("pipeline runs end to end") {
    Workspace ws;
    const std::string map = ws.path("map.json");
    REQUIRE(run_capture("build-map --input " + ws.data.string() +
                            " --output " + map,
                        ws.dir / "build.log") == 0);
    const std::string build_log = slurp(ws.dir / "build.log");
    CHECK(build_log.find("cells:") != std::string::npos);
    CHECK(slurp(map).find("\"cliff-map\"") != std::string::npos);

    const std::string preds = ws.path("preds.csv");
    REQUIRE(run("predict --input " + ws.data.string() + " --map " + map +
                " --output " + preds + " --horizon 12 --k 5") == 0);
    CHECK(first_line(preds) ==
          "traj_id,rollout,step,time_s,x_m,y_m,rho,theta,complete");

    const std::string metrics = ws.path("metrics.csv");
    REQUIRE(run("evaluate --input " + ws.data.string() + " --map " + map +
                " --output " + metrics + " --horizon 8 --k 3") == 0);
    CHECK(first_line(metrics) ==
          "method,horizon_s,n,ade_mean,ade_std,fde_mean,fde_std,topk_ade,"
          "topk_fde,completion_ratio");
    const std::string body = slurp(metrics);
    CHECK(body.find("cliff-lhmp,") != std::string::npos);
    CHECK(body.find("cvm,") != std::string::npos);

    const std::string svg = ws.path("scene.svg");
    REQUIRE(run("render --map " + map + " --input " + ws.data.string() +
                " --predictions " + preds + " --output " + svg) == 0);
    const std::string scene = slurp(svg);
    CHECK(scene.find("<svg") != std::string::npos);
    CHECK(scene.find("class=\"arrow\"") != std::string::npos);
    CHECK(scene.find("class=\"prediction\"") != std::string::npos);
    CHECK(scene.find("class=\"ground-truth\"") != std::string::npos);
}

TEST_CASE("same seed reproduces outputs byte for byte") {
    Workspace ws;
    const std::string map = ws.path("map.json");
    REQUIRE(run("build-map --input " + ws.data.string() + " --output " + map) ==
            0);
    const std::string common = "predict --input " + ws.data.string() +
                               " --map " + map + " --horizon 8 --k 4 --seed 7";
    REQUIRE(run(common + " --output " + ws.path("a.csv")) == 0);
    REQUIRE(run(common + " --output " + ws.path("b.csv")) == 0);
    CHECK(slurp(ws.dir / "a.csv") == slurp(ws.dir / "b.csv"));

    REQUIRE(run("predict --input " + ws.data.string() + " --map " + map +
                " --horizon 8 --k 4 --seed 8 --output " + ws.path("c.csv")) ==
            0);
    CHECK(slurp(ws.dir / "a.csv") != slurp(ws.dir / "c.csv"));
}

TEST_CASE("seed falls back to the environment variable") {
    Workspace ws;
    const std::string map = ws.path("map.json");
    REQUIRE(run("build-map --input " + ws.data.string() + " --output " + map) ==
            0);
    const std::string predict_args = "predict --input " + ws.data.string() +
                                     " --map " + map +
                                     " --horizon 8 --k 2 --output ";
    REQUIRE(run(predict_args + ws.path("flagged.csv") + " --seed 11") == 0);
    const std::string env_cmd = "CLIFF_LHMP_SEED=11 " +
                                std::string(CLIFF_LHMP_BIN) + " " +
                                predict_args + ws.path("env.csv") +
                                " >/dev/null 2>&1";
    const int status = std::system(env_cmd.c_str());
    REQUIRE(status != -1);
    REQUIRE(WEXITSTATUS(status) == 0);
    CHECK(slurp(ws.dir / "flagged.csv") == slurp(ws.dir / "env.csv"));
}

TEST_CASE("worker count does not change the map") {
    Workspace ws;
    REQUIRE(run("build-map --input " + ws.data.string() + " --output " +
                ws.path("w1.json") + " --workers 1") == 0);
    REQUIRE(run("build-map --input " + ws.data.string() + " --output " +
                ws.path("w4.json") + " --workers 4") == 0);
    CHECK(slurp(ws.dir / "w1.json") == slurp(ws.dir / "w4.json"));
}

TEST_CASE("datasets with no usable trajectories exit with code 1") {
    Workspace ws;
    const fs::path still = ws.dir / "still.csv";
    {
        std::ofstream out(still);
        out << "person_id,time_s,x_m,y_m\n";
        for (int i = 0; i < 60; ++i) {
            out << "1," << 0.4 * i << ",0.5,0.5\n";  // below min mean speed
        }
    }
    const fs::path map = ws.dir / "map.json";
    REQUIRE(run("build-map --input " + ws.data.string() + " --output " +
                map.string()) == 0);
    const int code = run_capture("predict --input " + still.string() +
                                     " --map " + map.string() + " --output " +
                                     ws.path("p.csv"),
                                 ws.dir / "predict.log");
    CHECK(code == 1);
    CHECK(slurp(ws.dir / "predict.log").find("no eligible trajectories") !=
          std::string::npos);
}

TEST_CASE("malformed input data exits with code 2") {
    Workspace ws;
    const fs::path bad = ws.dir / "bad.csv";
    {
        std::ofstream out(bad);
        out << "person_id,time_s,x_m,y_m\n";
        out << "1,0.0,oops,2.0\n";
    }
    const int code = run_capture("build-map --input " + bad.string() +
                                     " --output " + ws.path("m.json"),
                                 ws.dir / "bad.log");
    CHECK(code == 2);
    CHECK(slurp(ws.dir / "bad.log").find("bad.csv:2") != std::string::npos);
}

TEST_CASE("sweep writes one metrics file per value") {
    Workspace ws;
    const std::string map = ws.path("map.json");
    REQUIRE(run("build-map --input " + ws.data.string() + " --output " + map) ==
            0);
    REQUIRE(run("evaluate --input " + ws.data.string() + " --map " + map +
                " --horizon 4 --k 2 --dt 0.4 --sweep beta 1,2" + " --output " +
                ws.path("sweep.csv")) == 0);
    CHECK(fs::exists(ws.dir / "sweep_beta_1.csv"));
    CHECK(fs::exists(ws.dir / "sweep_beta_2.csv"));
    CHECK(first_line(ws.dir / "sweep_beta_1.csv").rfind("method,", 0) == 0);

    CHECK(run("evaluate --input " + ws.data.string() + " --map " + map +
              " --sweep beta 1,zap --output " + ws.path("s.csv")) == 2);
    CHECK(run("evaluate --input " + ws.data.string() + " --map " + map +
              " --sweep beta 99 --output " + ws.path("s.csv")) == 2);
}

TEST_CASE("cvm-only evaluation needs no map") {
    Workspace ws;
    REQUIRE(run("evaluate --input " + ws.data.string() +
                " --cvm-only --horizon 8 --output " + ws.path("cvm.csv")) ==
            0);
    const std::string body = slurp(ws.dir / "cvm.csv");
    CHECK(body.find("cvm,") != std::string::npos);
    CHECK(body.find("cliff-lhmp,") == std::string::npos);
}

TEST_CASE("options can come from a config file") {
    Workspace ws;
    const fs::path cfg = ws.dir / "run.ini";
    {
        std::ofstream out(cfg);
        out << "[predict]\n";
        out << "horizon=8\n";
        out << "k=2\n";
        out << "seed=5\n";
    }
    const std::string map = ws.path("map.json");
    REQUIRE(run("build-map --input " + ws.data.string() + " --output " + map) ==
            0);
    REQUIRE(run("--config " + cfg.string() + " predict --input " +
                ws.data.string() + " --map " + map + " --output " +
                ws.path("from_cfg.csv")) == 0);
    REQUIRE(run("predict --input " + ws.data.string() + " --map " + map +
                " --horizon 8 --k 2 --seed 5 --output " +
                ws.path("from_flags.csv")) == 0);
    CHECK(slurp(ws.dir / "from_cfg.csv") == slurp(ws.dir / "from_flags.csv"));
}
