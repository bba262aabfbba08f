#include "doctest.h"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const fs::path kWork = fs::temp_directory_path() / "adc_test_cli";

struct Result {
    int code;
    std::string err;
};

Result run(const std::string& args) {
    const fs::path err = kWork / "stderr.txt";
    const std::string cmd = std::string(ADCINV_EXE) + " " + args + " 2> " + err.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

fs::path config(const std::string& name, const std::string& body) {
    fs::create_directories(kWork);
    const fs::path p = kWork / name;
    std::ofstream(p) << body;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

} // namespace

TEST_CASE("mesh-gen writes mesh, vtk, results and manifest") {
    const auto cfg = config("mg.json", R"({"phantom": {"resolution": 4}})");
    const auto out = kWork / "mg";
    REQUIRE(run("mesh-gen --config " + cfg.string() + " --out " + out.string()).code == 0);
    CHECK(fs::exists(out / "mesh.adcmesh"));
    CHECK(fs::exists(out / "fields" / "mesh.vtk"));
    CHECK(slurp(out / "results.csv") == "vertices,tets,boundary_facets,volume\n125,384,192,64000\n");
    const auto m = nlohmann::json::parse(slurp(out / "manifest.json"));
    CHECK(m.at("command") == "mesh-gen");
    CHECK(m.at("config_hash").get<std::string>().size() == 16);
    CHECK(m.contains("version"));
    CHECK_FALSE(m.contains("timestamp"));
}

TEST_CASE("config errors exit with code 2 and name the key") {
    auto r = run("invert --config " +
                 config("miss.json", R"({"observations": "x.json", "steps": 4, "reg": {"alpha": 0, "gamma": 0}})")
                     .string() +
                 " --out " + (kWork / "e").string());
    // the manifest path is checked first
    CHECK(r.code == 2);
    r = run("mesh-gen --config " + config("unk.json", R"({"phantom": {"resolution": 4, "colour": 1}})").string() +
            " --out " + (kWork / "e").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("phantom.colour") != std::string::npos);
    r = run("mesh-gen --config " + config("noreso.json", R"({"phantom": {}})").string() + " --out " +
            (kWork / "e").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("phantom.resolution") != std::string::npos);
    r = run("mesh-gen --config " + config("type.json", R"({"phantom": {"resolution": "four"}})").string() +
            " --out " + (kWork / "e").string());
    CHECK(r.code == 2);
    r = run("mesh-gen --config " + config("bad.json", "{").string());
    CHECK(r.code == 2);
    CHECK(run("frobnicate").code == 2);
}

TEST_CASE("synth then invert recovers the coefficients and reports the missing key path") {
    const auto syn = config("syn.json", R"({"phantom": {"resolution": 8, "variant": "two_domain"},
        "dt_gen": 2.4, "observations": 10, "noise_amp": 0.0})");
    REQUIRE(run("synth --config " + syn.string() + " --out " + (kWork / "syn").string() + " --seed 3").code == 0);
    CHECK(fs::exists(kWork / "syn" / "observations.json"));

    auto r = run("invert --config " +
                 config("inv_missing.json", R"({"observations": "syn/observations.json", "steps": 10,
                     "reg": {"alpha": 1e-6, "gamma": 0}})")
                     .string() +
                 " --out " + (kWork / "inv_missing").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("reg.beta") != std::string::npos);

    const auto inv = config("inv.json", R"({"observations": "syn/observations.json", "steps": 10,
        "reg": {"alpha": 1e-6, "beta": 1e-4, "gamma": 0}, "truth": {}})");
    REQUIRE(run("invert --config " + inv.string() + " --out " + (kWork / "inv").string()).code == 0);
    std::istringstream csv(slurp(kWork / "inv" / "results.csv"));
    std::string header, row;
    std::getline(csv, header);
    std::getline(csv, row);
    CHECK(header == "alpha,beta,gamma,k,noise_amp,iterations,converged,D1_rel,D2_rel,D3_rel,g_rel,J");
    const auto cells = split(row);
    REQUIRE(cells.size() == 12);
    CHECK(cells[7].empty());
    CHECK(std::abs(std::stod(cells[8])) < 0.05);
    CHECK(std::abs(std::stod(cells[9])) < 0.05);
    CHECK(fs::exists(kWork / "inv" / "fields" / "reconstruction.vtk"));
}

TEST_CASE("sweep over the table grid gives 24 rows and reruns reproduce the outputs") {
    const auto cfg = config("sweep.json", R"({"phantom": {"resolution": 4},
        "grid": {"alpha": [1e-6, 1e-4], "beta": [1.0, 10.0], "gamma": [0.0, 0.01, 1.0], "k": [24, 48]},
        "optimizer": {"max_iterations": 5}, "seed": 4})");
    REQUIRE(run("sweep --config " + cfg.string() + " --out " + (kWork / "sw1").string() + " --workers 2").code == 0);
    REQUIRE(run("sweep --config " + cfg.string() + " --out " + (kWork / "sw2").string()).code == 0);
    const std::string a = slurp(kWork / "sw1" / "results.csv");
    CHECK(std::count(a.begin(), a.end(), '\n') == 25);
    CHECK(a == slurp(kWork / "sw2" / "results.csv"));
    CHECK(slurp(kWork / "sw1" / "manifest.json") == slurp(kWork / "sw2" / "manifest.json"));
}

TEST_CASE("forward run reports mass and writes the state series") {
    const auto cfg = config("fw.json", R"({"phantom": {"resolution": 4}, "dt": 0.24, "steps": 10,
        "boundary": {"type": "manufactured"}, "lumped_mass": true})");
    REQUIRE(run("forward --config " + cfg.string() + " --out " + (kWork / "fw").string()).code == 0);
    CHECK(fs::exists(kWork / "fw" / "states" / "u_series.json"));
    const std::string csv = slurp(kWork / "fw" / "results.csv");
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 12);
}

TEST_CASE("numerical failure exits with code 3") {
    const auto cfg = config("fw_cg.json", R"({"phantom": {"resolution": 4}, "dt": 0.24, "steps": 2,
        "boundary": {"type": "manufactured"}, "solver": "cg", "cg_tolerance": 1e-300})");
    CHECK(run("forward --config " + cfg.string() + " --out " + (kWork / "fw_cg").string()).code == 3);
}

TEST_CASE("image-side subcommands") {
    fs::create_directories(kWork / "img");
    auto grid = [&](const std::string& name, double value, bool mask = false) {
        std::ofstream f(kWork / "img" / name);
        f << "ADCVOX 1\n12 12 12\n3.7 0 0 -1.1\n0 3.7 0 -1.3\n0 0 3.7 -1.7\n0 0 0 1\n";
        for (int i = 0; i < 12 * 12 * 12; ++i) f << (mask ? (i % 3 == 0 ? 1.0 : 0.0) : value + 0.001 * (i % 17)) << "\n";
    };
    grid("s0.adcvox", 1.0);
    grid("st.adcvox", 1.3);
    grid("t1.adcvox", 1200.0);
    grid("csf.adcvox", 0.0, true);
    grid("l1.adcvox", 1.5e-3);
    grid("l2.adcvox", 0.8e-3);
    grid("l3.adcvox", 0.5e-3);

    auto cfg = config("img/conc.json", R"({"baseline": "s0.adcvox", "signal": "st.adcvox", "t1_map": "t1.adcvox",
        "csf_mask": "csf.adcvox",
        "mprage": {"flip_angle_deg": 8, "t_a": 900, "t_b": 5.1, "tr": 2000, "m": 200, "r1": 3.2}})");
    REQUIRE(run("concentration --config " + cfg.string() + " --out " + (kWork / "conc").string()).code == 0);
    CHECK(fs::exists(kWork / "conc" / "concentration.adcvox"));

    cfg = config("img/conc_nor1.json", R"({"baseline": "s0.adcvox", "signal": "st.adcvox", "t1_map": "t1.adcvox",
        "mprage": {"flip_angle_deg": 8, "t_a": 900, "t_b": 5.1, "tr": 2000, "m": 200}})");
    auto r = run("concentration --config " + cfg.string() + " --out " + (kWork / "conc2").string());
    CHECK(r.code == 2);
    CHECK(r.err.find("mprage.r1") != std::string::npos);

    cfg = config("img/dti.json", R"({"eigenvalues": ["l1.adcvox", "l2.adcvox", "l3.adcvox"],
        "regions": {"grey": "csf.adcvox"}})");
    REQUIRE(run("dti --config " + cfg.string() + " --out " + (kWork / "dti").string()).code == 0);
    CHECK(slurp(kWork / "dti" / "results.csv").find("grey,576,") != std::string::npos);

    for (const std::string method : {"raw", "gs", "cp"}) {
        cfg = config("img/pre_" + method + ".json", R"({"phantom": {"resolution": 4}, "signal": "st.adcvox",
            "method": ")" + method + R"(", "csf_mask": "csf.adcvox"})");
        if (method != "cp")
            cfg = config("img/pre_" + method + ".json", R"({"phantom": {"resolution": 4}, "signal": "st.adcvox",
            "method": ")" + method + R"("})");
        REQUIRE(run("preprocess --config " + cfg.string() + " --out " + (kWork / ("pre_" + method)).string()).code == 0);
        CHECK(fs::exists(kWork / ("pre_" + method) / "fields" / "sampled.vtk"));
    }
}
