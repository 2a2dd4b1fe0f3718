#include <doctest.h>

#include "mudscope/frames.hpp"
#include "mudscope/mud.hpp"
#include "mudscope/synth.hpp"

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace mudscope;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path scratch(const std::string& name) {
    fs::path p = fs::temp_directory_path() / ("mudscope-cli-" + std::to_string(::getpid())) / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

Run run(const std::string& args) {
    const fs::path dir = scratch("io");
    const std::string cmd = std::string(MUDSCOPE_CLI_PATH) + " " + args + " >" + (dir / "out").string() + " 2>" +
                            (dir / "err").string();
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(dir / "out");
    r.err = slurp(dir / "err");
    return r;
}

const synth::SynthOptions kSo;
const std::string kMac = kSo.device_mac.to_string();
const std::string kGw = kSo.gateway_mac.to_string();
const std::string kZones = std::string(MUDSCOPE_DATA_DIR) + "/zones";

void write(const fs::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

} // namespace

TEST_CASE("generate: Blipcare pcap gives four ACEs") {
    const fs::path dir = scratch("gen");
    synth::blipcare_trace(kSo).write(dir / "blipcare.pcap");
    const Run r = run("generate --pcap " + (dir / "blipcare.pcap").string() + " --mac " + kMac + " --gateway " + kGw +
                      " --out " + dir.string());
    REQUIRE(r.code == 0);
    std::string name = kMac;
    std::replace(name.begin(), name.end(), ':', '-');
    const auto parsed = parse_mud(slurp(dir / (name + ".json")));
    REQUIRE(parsed.ok());
    CHECK(parsed.profile->ace_count() == 4);
    CHECK(fs::exists(dir / (name + ".report.json")));
    CHECK(fs::exists(dir / (name + ".flows.csv")));

    // Same inputs, same bytes.
    const std::string first = slurp(dir / (name + ".json"));
    REQUIRE(run("generate --pcap " + (dir / "blipcare.pcap").string() + " --mac " + kMac + " --gateway " + kGw +
                " --out " + dir.string())
                .code == 0);
    CHECK(slurp(dir / (name + ".json")) == first);
}

TEST_CASE("generate: empty pcap warns and succeeds") {
    const fs::path dir = scratch("empty");
    TraceBuilder().write(dir / "empty.pcap");
    const Run r = run("generate --pcap " + (dir / "empty.pcap").string() + " --mac " + kMac + " --out " + dir.string());
    CHECK(r.code == 0);
    CHECK(r.err.find("warning") != std::string::npos);
}

TEST_CASE("generate: missing file is an I/O error") {
    const Run r = run("generate --pcap /nonexistent/x.pcap --mac " + kMac);
    CHECK(r.code == 2);
    CHECK_FALSE(r.err.empty());
}

TEST_CASE("bad flags are a syntax error") {
    CHECK(run("generate --mac " + kMac).code == 1);
    CHECK(run("generate --pcap x.pcap --mac nonsense").code != 0);
}

TEST_CASE("verify: a clean profile is safe in the DMZ") {
    const fs::path dir = scratch("verify-ok");
    write(dir / "blip.json", emit_mud_json(synth::blipcare_profile()));
    const Run r = run("verify --mud " + (dir / "blip.json").string() + " --zones " + kZones + "/dmz.json");
    CHECK(r.code == 0);
    CHECK(r.out.find("safe: DMZ") != std::string::npos);

    const Run all = run("verify --mud " + (dir / "blip.json").string() + " --zones " + kZones + " --json");
    CHECK(all.code == 0);
    CHECK_NOTHROW((void)nlohmann::json::parse(all.out));
}

TEST_CASE("verify: duplicated ICMP ACE is reported with its witness") {
    const fs::path dir = scratch("verify-dup");
    MudProfile p = synth::catalog()[1].profile; // tplink-plug pings the gateway
    bool duplicated = false;
    for (const auto& a : std::vector<MudAce>(p.from_device))
        if (a.ip_proto == ipproto::icmp && !duplicated) {
            MudAce copy = a;
            copy.name = "dup-icmp";
            p.from_device.push_back(copy);
            duplicated = true;
        }
    REQUIRE(duplicated);
    write(dir / "dup.json", emit_mud_json(p));
    const Run r = run("verify --mud " + (dir / "dup.json").string());
    CHECK(r.code == 3);
    CHECK(r.out.find("dup-icmp") != std::string::npos);
    CHECK(r.out.find("from-ipv4-tplink-plug") != std::string::npos);
}

TEST_CASE("verify: unsupported action is a syntax error") {
    const fs::path dir = scratch("verify-log");
    std::string json = emit_mud_json(synth::blipcare_profile());
    json.replace(json.find("\"accept\""), 8, "\"log\"");
    write(dir / "log.json", json);
    const Run r = run("verify --mud " + (dir / "log.json").string());
    CHECK(r.code == 1);
    CHECK(r.err.find("unsupported action") != std::string::npos);
    CHECK(run("verify --mud /nonexistent/m.json").code == 2);
}

TEST_CASE("identify: five labeled traces give a diagonal matrix") {
    const fs::path dir = scratch("identify");
    REQUIRE(run("synth --out " + dir.string() + " --epochs 8").code == 0);
    const std::vector<std::string> keep{"blipcare-bp", "tplink-plug", "hue-bulb", "withings-scale", "awair-air"};
    for (const auto& e : fs::directory_iterator(dir / "library"))
        if (std::find(keep.begin(), keep.end(), e.path().stem().string()) == keep.end()) {
            fs::remove(e.path());
            fs::remove(dir / "traces" / (e.path().stem().string() + ".pcap"));
        }
    const fs::path out = dir / "out";
    const Run r = run("identify --pcap " + (dir / "traces").string() + " --mud-dir " + (dir / "library").string() +
                      " --out " + out.string());
    CHECK(r.code == 0);
    const std::string csv = slurp(out / "confusion.csv");
    std::istringstream rows(csv);
    std::string header;
    std::getline(rows, header);
    CHECK(header == "actual,awair-air,blipcare-bp,hue-bulb,tplink-plug,withings-scale,none,multiple");
    std::string line;
    int row = 0;
    while (std::getline(rows, line)) {
        std::istringstream cells(line);
        std::string cell;
        std::getline(cells, cell, ',');
        for (int col = 0; col < 7; ++col) {
            std::getline(cells, cell, ',');
            CHECK(cell == (col == row ? "1" : "0"));
        }
        ++row;
    }
    CHECK(row == 5);
    CHECK(fs::exists(out / "epochs.jsonl"));

    SUBCASE("without the true profile nobody wins") {
        fs::remove(dir / "library" / "hue-bulb.json");
        const Run u = run("identify --pcap " + (dir / "traces" / "hue-bulb.pcap").string() + " --mud-dir " +
                          (dir / "library").string() + " --out " + out.string());
        CHECK(u.code == 4);
        CHECK(slurp(out / "confusion.csv").find("hue-bulb,0,0,0,0,1,0") != std::string::npos);
    }
}

TEST_CASE("identify and diff: a scan shows up as deviation") {
    const fs::path dir = scratch("scan");
    const auto cat = synth::catalog();
    fs::create_directories(dir / "library");
    for (const auto& e : cat) write(dir / "library" / (e.name + ".json"), emit_mud_json(e.profile));
    synth::SynthOptions so = kSo;
    so.epochs = 4;
    auto t = synth::conformant_trace(cat[0].profile, so);
    synth::inject_scan(t, so, 50, so.start + 3 * so.epoch_seconds + 10);
    t.write(dir / "scanned.pcap");

    const Run r = run("identify --pcap " + (dir / "scanned.pcap").string() + " --mud-dir " +
                      (dir / "library").string() + " --mac " + kMac + " --gateway " + kGw + " --json --out " +
                      (dir / "out").string());
    std::string last;
    std::istringstream lines(r.out);
    for (std::string l; std::getline(lines, l);)
        if (!l.empty()) last = l;
    const auto j = nlohmann::json::parse(last);
    REQUIRE(j.contains("state"));
    CHECK((j["state"] == 3 || j["state"] == 4));
    CHECK(fs::exists(dir / "out" / "scanned.diff.json"));

    const Run d = run("diff --pcap " + (dir / "scanned.pcap").string() + " --mud " +
                      (dir / "library" / "blipcare-bp.json").string() + " --mac " + kMac + " --gateway " + kGw);
    CHECK(d.code == 0);
    CHECK(d.out.find("45.33.0.1") != std::string::npos);
    CHECK(d.out.find("tech.carematix.com") == std::string::npos);

    const Run dj = run("diff --pcap " + (dir / "scanned.pcap").string() + " --mud " +
                       (dir / "library" / "blipcare-bp.json").string() + " --mac " + kMac + " --json");
    REQUIRE(dj.code == 0);
    CHECK_NOTHROW((void)nlohmann::json::parse(dj.out));
}
