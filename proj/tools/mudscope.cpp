#include "mudscope/compliance.hpp"
#include "mudscope/flow_tracker.hpp"
#include "mudscope/metagraph.hpp"
#include "mudscope/mud.hpp"
#include "mudscope/mud_gen.hpp"
#include "mudscope/pcap.hpp"
#include "mudscope/runtime.hpp"
#include "mudscope/synth.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using namespace mudscope;

namespace {

enum Exit : int { kOk = 0, kSyntax = 1, kIo = 2, kFindings = 3, kNoConvergence = 4 };

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string pcap;
    std::string mac;
    std::string gateway;
    std::string mud;
    std::string mud_dir;
    std::string zones = std::string(MUDSCOPE_DATA_DIR) + "/zones";
    std::string out;
    std::string thresholds;
    std::vector<std::string> subnets;
    double epoch_mins = 15;
    double convergence_mins = 180;
    double compact_after_mins = 0;
    int wildcard_threshold = 5;
    int epochs = 12;
    bool compact = false;
    bool json = false;
};

std::vector<Subnet> subnets_of(const Config& c) {
    if (c.subnets.empty()) return default_local_subnets();
    std::vector<Subnet> out;
    for (const auto& s : c.subnets) {
        auto p = Subnet::parse(s);
        if (!p) throw std::invalid_argument("bad subnet '" + s + "'");
        out.push_back(*p);
    }
    return out;
}

MacAddress mac_arg(const std::string& text, const char* what) {
    auto m = MacAddress::parse(text);
    if (!m) throw std::invalid_argument(std::string("bad ") + what + " MAC '" + text + "'");
    return *m;
}

Trace load_trace(const std::string& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path);
    try {
        return read_trace(path);
    } catch (const PcapError& e) {
        throw IoError(path + ": " + e.what());
    }
}

bool is_group(const MacAddress& m) { return m.bytes[0] & 1; }

/// The MAC that carries traffic for non-local addresses.
std::optional<MacAddress> infer_gateway(const std::vector<PacketEvent>& events, const std::vector<Subnet>& nets) {
    auto local = [&](Ipv4 ip) {
        return ip.has_local_significance() || ip.is_multicast() || ip.is_broadcast() ||
               std::any_of(nets.begin(), nets.end(), [&](const Subnet& s) { return s.contains(ip); });
    };
    std::map<MacAddress, std::size_t> votes;
    for (const auto& e : events) {
        if (!local(e.src_ip)) ++votes[e.src_mac];
        if (!local(e.dst_ip)) ++votes[e.dst_mac];
    }
    if (votes.empty()) return std::nullopt;
    return std::max_element(votes.begin(), votes.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
}

std::optional<MacAddress> infer_device(const std::vector<PacketEvent>& events, const MacAddress& gateway) {
    std::map<MacAddress, std::size_t> votes;
    for (const auto& e : events)
        if (e.src_mac != gateway && !is_group(e.src_mac)) ++votes[e.src_mac];
    if (votes.empty()) return std::nullopt;
    return std::max_element(votes.begin(), votes.end(), [](auto& a, auto& b) { return a.second < b.second; })->first;
}

MacAddress gateway_for(const Config& c, const std::vector<PacketEvent>& events, const std::vector<Subnet>& nets) {
    if (!c.gateway.empty()) return mac_arg(c.gateway, "gateway");
    if (auto g = infer_gateway(events, nets)) return *g;
    return MacAddress{};
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
}

Thresholds thresholds_of(const Config& c) {
    Thresholds t;
    if (!c.thresholds.empty()) {
        auto parsed = Thresholds::parse(c.thresholds);
        if (!parsed) throw std::invalid_argument("--thresholds expects three values in [0,1]: internet,local,static");
        t = *parsed;
    }
    t.epoch_seconds = c.epoch_mins * 60;
    t.convergence_seconds = c.convergence_mins * 60;
    if (c.compact_after_mins > 0) t.compaction_after_seconds = c.compact_after_mins * 60;
    return t;
}

std::vector<KnownMud> load_library(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("no such directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<KnownMud> lib;
    for (const auto& f : files) {
        auto r = parse_mud_file(f.string());
        if (!r.ok()) {
            for (const auto& d : r.errors) std::cerr << f.string() << ": " << d.path << ": " << d.message << '\n';
            throw std::domain_error("invalid MUD profile " + f.string());
        }
        lib.push_back(make_known(f.stem().string(), *r.profile));
    }
    return lib;
}

MudProfile load_mud(const std::string& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path);
    auto r = parse_mud_file(path);
    if (!r.ok()) {
        for (const auto& d : r.errors) std::cerr << "syntax error: " << d.path << ": " << d.message << '\n';
        throw std::domain_error("invalid MUD profile " + path);
    }
    return *r.profile;
}

int cmd_generate(const Config& c) {
    const auto nets = subnets_of(c);
    Trace trace = load_trace(c.pcap);
    const MacAddress dev = mac_arg(c.mac, "device");
    const MacAddress gw = gateway_for(c, trace.events, nets);
    TrackResult tr = track_device(trace.events, dev, gw, nets);

    GenOptions gopts;
    gopts.wildcard_endpoint_threshold = c.wildcard_threshold;
    std::string name = dev.to_string();
    std::replace(name.begin(), name.end(), ':', '-');
    ProfileMeta meta;
    meta.mud_url = "https://mud.example.com/" + name + ".json";
    meta.systeminfo = name;
    meta.trace_end = tr.last_timestamp;
    GenResult g = translate(tr.flows, tr.dns, gopts, meta);
    if (tr.device_packets == 0) std::cerr << "warning: no packets for " << dev.to_string() << "; profile is empty\n";
    for (const auto& w : g.warnings) std::cerr << "warning: " << w << '\n';

    const fs::path dir = c.out.empty() ? fs::path(".") : fs::path(c.out);
    write_file(dir / (name + ".json"), emit_mud_json(g.profile));
    write_file(dir / (name + ".report.json"), emit_flow_report(g.profile) + "\n");
    std::ostringstream csv;
    write_flow_csv(csv, tr.flows);
    write_file(dir / (name + ".flows.csv"), csv.str());

    if (c.json) {
        std::cout << emit_mud_json(g.profile);
    } else {
        std::cout << "device " << dev.to_string() << ": " << tr.device_packets << " packets, " << tr.flows.size()
                  << " flows, " << g.profile.ace_count() << " ACEs\n";
        std::cout << "wrote " << (dir / (name + ".json")).string() << '\n';
    }
    return kOk;
}

int cmd_verify(const Config& c) {
    const MudProfile profile = load_mud(c.mud);
    bool findings = false;
    nlohmann::ordered_json doc;

    ScopeReport scope = validate_address_scope(profile);
    findings = findings || !scope.violations.empty();

    const ConditionalMetagraph g = from_mud(profile);
    const auto t0 = std::chrono::steady_clock::now();
    const auto red = find_redundancies(g);
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    const RedundancySummary sum = summarize(g, red, ms);
    findings = findings || !red.empty();

    std::vector<ZonePolicy> zones;
    if (!c.zones.empty()) {
        if (!fs::exists(c.zones)) throw IoError("no such zone path: " + c.zones);
        try {
            zones = fs::is_directory(c.zones) ? load_zones(c.zones) : std::vector<ZonePolicy>{load_zone(c.zones)};
        } catch (const ZoneError& e) {
            throw std::domain_error(e.what());
        }
    }
    std::vector<ComplianceReport> reports;
    for (const auto& z : zones) reports.push_back(check_zone(profile, z));
    const auto safe = safe_zones(profile, zones);

    if (c.json) {
        auto list = [](const std::vector<ScopeFinding>& fs) {
            auto a = nlohmann::ordered_json::array();
            for (const auto& f : fs) a.push_back({{"ace", f.ace_name}, {"address", f.address}, {"reason", f.reason}});
            return a;
        };
        doc["syntax"] = "ok";
        doc["scope_violations"] = list(scope.violations);
        doc["scope_warnings"] = list(scope.warnings);
        doc["rules"] = sum.rule_count;
        doc["redundant"] = sum.redundant_count;
        doc["redundancies"] = nlohmann::ordered_json::parse(redundancy_json(g, red));
        auto zs = nlohmann::ordered_json::array();
        for (const auto& r : reports) zs.push_back(nlohmann::ordered_json::parse(report_json(r)));
        doc["zones"] = std::move(zs);
        doc["safe"] = safe.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(safe.front());
        std::cout << doc.dump(2) << '\n';
    } else {
        std::cout << "syntax: ok (" << profile.ace_count() << " ACEs)\n";
        for (const auto& v : scope.violations)
            std::cout << "scope violation: " << v.ace_name << " " << v.address << " (" << v.reason << ")\n";
        for (const auto& w : scope.warnings)
            std::cout << "scope warning: " << w.ace_name << " " << w.address << " (" << w.reason << ")\n";
        std::cout << "redundancy: " << sum.redundant_count << " of " << sum.rule_count << " rules redundant\n";
        for (const auto& f : red) {
            std::cout << "  " << (f.category == RedundancyFinding::Category::Redundant ? "redundant" : "ambiguous")
                      << ": " << f.ace_name << " covered by";
            for (auto e : f.witness.edges) std::cout << ' ' << g.edges()[e].label;
            std::cout << (f.witness_dominant ? " (dominant)" : "") << '\n';
        }
        for (const auto& r : reports) std::cout << format_report_row(r) << '\n';
        std::cout << "safe: " << (safe.empty() ? "none" : safe.front()) << '\n';
    }
    return findings ? kFindings : kOk;
}

std::vector<fs::path> trace_files(const std::string& path) {
    if (!fs::exists(path)) throw IoError("no such file: " + path);
    if (!fs::is_directory(path)) return {path};
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(path))
        if (e.path().extension() == ".pcap") out.push_back(e.path());
    std::sort(out.begin(), out.end());
    return out;
}

int cmd_identify(const Config& c) {
    const auto nets = subnets_of(c);
    const auto library = load_library(c.mud_dir);
    std::vector<std::string> names;
    for (const auto& m : library) names.push_back(m.name);

    IdentifyOptions opts;
    opts.thresholds = thresholds_of(c);
    opts.compact = c.compact;

    std::vector<std::pair<std::string, std::vector<std::string>>> outcomes;
    std::ostringstream reports;
    bool all_converged = true;
    for (const auto& file : trace_files(c.pcap)) {
        const std::string label = file.stem().string();
        Trace trace = load_trace(file.string());
        const MacAddress gw = gateway_for(c, trace.events, nets);
        std::optional<MacAddress> dev = c.mac.empty() ? infer_device(trace.events, gw) : mac_arg(c.mac, "device");
        if (!dev) {
            std::cerr << "warning: " << file.string() << ": no device traffic\n";
            outcomes.push_back({label, {}});
            all_converged = false;
            continue;
        }
        IdentifyResult r = identify_device(trace.events, *dev, gw, nets, library, opts, label);
        for (const auto& e : r.epochs) {
            reports << epoch_report_json(e) << '\n';
            if (c.json) {
                std::cout << epoch_report_json(e) << '\n';
                continue;
            }
            std::cout << label << " epoch " << e.epoch << ": branches=" << e.branches << " winners=[";
            for (std::size_t i = 0; i < e.winners.size(); ++i) std::cout << (i ? "," : "") << e.winners[i];
            std::cout << "] state=" << (e.state ? std::to_string(*e.state) : "undetermined")
                      << (e.channel_disagreement ? " (channels disagree)" : "") << '\n';
        }
        const auto& st = r.final_state;
        const double elapsed = r.epochs.empty() ? 0 : r.epochs.back().end_time - r.epochs.front().end_time +
                                                          opts.thresholds.epoch_seconds;
        const bool converged = st.converged() && elapsed > 0;
        all_converged = all_converged && converged;
        outcomes.push_back({label, st.winners});

        if (!st.reference.empty() && st.state && *st.state >= 3) {
            auto it = std::find_if(library.begin(), library.end(),
                                   [&](const KnownMud& m) { return m.name == st.reference.front(); });
            if (it != library.end()) {
                KnownMud ref = *it;
                if (st.compacted) ref = make_known(ref.name, compact_endpoints(ref.profile));
                ProfileTree d = diff(r.tree, ref);
                if (!c.json) std::cout << label << " deviates from " << ref.name << ":\n" << d.render_text();
                if (!c.out.empty()) write_file(fs::path(c.out) / (label + ".diff.json"), d.to_json() + "\n");
            }
        }
    }
    std::ostringstream csv;
    write_confusion_csv(csv, names, outcomes);
    if (!c.json) std::cout << csv.str();
    if (!c.out.empty()) {
        write_file(fs::path(c.out) / "epochs.jsonl", reports.str());
        write_file(fs::path(c.out) / "confusion.csv", csv.str());
    }
    return all_converged ? kOk : kNoConvergence;
}

int cmd_diff(const Config& c) {
    const auto nets = subnets_of(c);
    const MudProfile profile = load_mud(c.mud);
    Trace trace = load_trace(c.pcap);
    const MacAddress gw = gateway_for(c, trace.events, nets);
    std::optional<MacAddress> dev = c.mac.empty() ? infer_device(trace.events, gw) : mac_arg(c.mac, "device");
    std::vector<KnownMud> lib{make_known(profile.systeminfo.empty() ? "mud" : profile.systeminfo, profile)};
    IdentifyOptions opts;
    opts.thresholds = thresholds_of(c);
    opts.compact = c.compact;
    ProfileTree tree(opts.branch_cap, dev ? dev->to_string() : "device");
    IdentifyResult r;
    if (dev) r = identify_device(trace.events, *dev, gw, nets, lib, opts, dev->to_string());
    KnownMud ref = lib.front();
    if (c.compact) ref = make_known(ref.name, compact_endpoints(ref.profile));
    ProfileTree d = diff(dev ? r.tree : tree, ref);
    std::cout << (c.json ? d.to_json() + "\n" : d.render_text());
    if (!c.out.empty()) write_file(c.out, d.to_json() + "\n");
    return kOk;
}

int cmd_synth(const Config& c) {
    const fs::path dir = c.out.empty() ? fs::path("synth") : fs::path(c.out);
    synth::SynthOptions opts;
    opts.epochs = c.epochs;
    opts.epoch_seconds = c.epoch_mins * 60;
    std::uint32_t seed = 1;
    for (const auto& e : synth::catalog()) {
        write_file(dir / "library" / (e.name + ".json"), emit_mud_json(e.profile));
        opts.seed = seed++;
        fs::create_directories(dir / "traces");
        synth::conformant_trace(e.profile, opts).write(dir / "traces" / (e.name + ".pcap"));
        std::cout << e.name << '\n';
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MUD profile generation, verification and run-time identification"};
    app.require_subcommand(1);
    Config c;

    auto* gen = app.add_subcommand("generate", "Generate a MUD profile from a device's pcap");
    gen->add_option("--pcap", c.pcap, "Input pcap")->required();
    gen->add_option("--mac", c.mac, "Device MAC")->required();
    gen->add_option("--gateway", c.gateway, "Gateway MAC (inferred when omitted)");
    gen->add_option("--subnet", c.subnets, "Local subnet (repeatable, defaults to RFC1918)");
    gen->add_option("--wildcard-threshold", c.wildcard_threshold, "Distinct unnamed IPs before wildcarding");
    gen->add_option("--out", c.out, "Output directory");
    gen->add_flag("--json", c.json, "Print the profile JSON");

    auto* ver = app.add_subcommand("verify", "Check syntax, redundancy and zone compliance of a MUD file");
    ver->add_option("--mud", c.mud, "MUD profile")->required();
    ver->add_option("--zones", c.zones, "Zone file or directory");
    ver->add_flag("--json", c.json, "JSON report");

    auto* idf = app.add_subcommand("identify", "Identify devices in pcaps against a MUD library");
    idf->add_option("--pcap", c.pcap, "pcap file or directory of labeled pcaps")->required();
    idf->add_option("--mud-dir", c.mud_dir, "Directory of known MUD profiles")->required();
    idf->add_option("--mac", c.mac, "Device MAC (inferred when omitted)");
    idf->add_option("--gateway", c.gateway, "Gateway MAC (inferred when omitted)");
    idf->add_option("--subnet", c.subnets, "Local subnet (repeatable)");
    idf->add_option("--epoch-mins", c.epoch_mins, "Epoch length in minutes");
    idf->add_option("--convergence-mins", c.convergence_mins, "Time allowed to settle on one winner");
    idf->add_option("--compact-after-mins", c.compact_after_mins, "Compact endpoints after this long unconverged");
    idf->add_option("--thresholds", c.thresholds, "internet,local,static similarity thresholds");
    idf->add_flag("--compact", c.compact, "Compact endpoints to registrable domains from the start");
    idf->add_option("--out", c.out, "Directory for epoch reports, diffs and confusion matrix");
    idf->add_flag("--json", c.json, "JSON lines output");

    auto* dif = app.add_subcommand("diff", "Show run-time behavior not admitted by a MUD profile");
    dif->add_option("--pcap", c.pcap, "Input pcap")->required();
    dif->add_option("--mud", c.mud, "MUD profile")->required();
    dif->add_option("--mac", c.mac, "Device MAC (inferred when omitted)");
    dif->add_option("--gateway", c.gateway, "Gateway MAC (inferred when omitted)");
    dif->add_option("--subnet", c.subnets, "Local subnet (repeatable)");
    dif->add_flag("--compact", c.compact, "Compact endpoints first");
    dif->add_option("--out", c.out, "Write the diff tree as JSON");
    dif->add_flag("--json", c.json, "JSON output");

    auto* syn = app.add_subcommand("synth", "Write the built-in device library and conformant traces");
    syn->add_option("--out", c.out, "Output directory");
    syn->add_option("--epochs", c.epochs, "Epochs per trace");
    syn->add_option("--epoch-mins", c.epoch_mins, "Epoch length in minutes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kSyntax;
    }

    try {
        if (*gen) return cmd_generate(c);
        if (*ver) return cmd_verify(c);
        if (*idf) return cmd_identify(c);
        if (*dif) return cmd_diff(c);
        if (*syn) return cmd_synth(c);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSyntax;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kSyntax;
    }
    return kOk;
}
