// Command-line front end: trace inspection, simulation runs, profile
// comparison and attack-injection demos for the RoT CFI simulator.
//
// Exit codes: 0 success, 2 usage or input error, 3 run ended with a CFI
// violation (lets scripts assert detection).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rotcfi/decode.hpp"
#include "rotcfi/profile.hpp"
#include "rotcfi/report.hpp"
#include "rotcfi/sim.hpp"
#include "rotcfi/synth.hpp"
#include "rotcfi/trace.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitViolation = 3;

struct CommonOptions {
    std::string trace_path;
    std::string profile = "irq";
    std::size_t queue_depth = 1;
    std::uint32_t bus_width = 64;
    std::uint32_t transfer_cost = 0;
    bool averaged = false;
    bool halt_on_violation = false;
    std::string format = "text";
};

void add_sim_flags(CLI::App* cmd, CommonOptions& opt, bool with_profile = true) {
    cmd->add_option("--trace", opt.trace_path, "trace file path")->required();
    if (with_profile)
        cmd->add_option("--profile", opt.profile, "irq|polling|optimized or a profile file");
    cmd->add_option("--queue-depth", opt.queue_depth, "CFI queue depth")->check(CLI::PositiveNumber);
    cmd->add_option("--bus-width", opt.bus_width, "interconnect width in bits")
        ->check(CLI::IsMember({32, 64, 128}));
    cmd->add_option("--transfer-cost", opt.transfer_cost, "cycles per transfer beat");
    cmd->add_flag("--averaged", opt.averaged, "charge the per-variant average latency per event");
    cmd->add_flag("--halt-on-violation", opt.halt_on_violation, "stop the run at the first violation");
    cmd->add_option("--format", opt.format, "text|json")->check(CLI::IsMember({"text", "json"}));
}

std::string profile_dir_from_env() {
    const char* dir = std::getenv("ROT_CFI_SIM_PROFILE_DIR");
    return dir == nullptr ? std::string{} : std::string{dir};
}

std::vector<rotcfi::TraceRecord> load_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file '" + path + "'");
    return rotcfi::parse_trace(in);
}

rotcfi::SimConfig make_config(const CommonOptions& opt) {
    rotcfi::SimConfig cfg;
    cfg.profile = rotcfi::resolve_profile(opt.profile, profile_dir_from_env());
    cfg.queue_depth = opt.queue_depth;
    cfg.bus_width_bits = opt.bus_width;
    cfg.transfer_cost_per_beat = opt.transfer_cost;
    cfg.averaged_latency = opt.averaged;
    cfg.halt_on_violation = opt.halt_on_violation;
    cfg.validate();
    return cfg;
}

int cmd_simulate(const CommonOptions& opt) {
    const auto trace = load_trace(opt.trace_path);
    const rotcfi::SimConfig cfg = make_config(opt);
    const rotcfi::SimReport report = rotcfi::run(trace, cfg);
    if (opt.format == "json")
        std::cout << rotcfi::report_to_json(report, cfg, opt.trace_path).dump(2) << '\n';
    else
        rotcfi::emit_text_report(report, cfg, std::cout, opt.trace_path);
    return report.violations.empty() ? kExitOk : kExitViolation;
}

int cmd_compare(const CommonOptions& opt, std::vector<std::size_t> depths,
                std::vector<std::string> profile_names) {
    const auto trace = load_trace(opt.trace_path);
    if (depths.empty()) depths = {1, 8};
    if (profile_names.empty()) profile_names = {"optimized", "polling", "irq"};

    std::vector<std::pair<std::string, rotcfi::SimConfig>> configs;
    for (const auto& name : profile_names) {
        for (const std::size_t depth : depths) {
            CommonOptions one = opt;
            one.profile = name;
            one.queue_depth = depth;
            rotcfi::SimConfig cfg = make_config(one);
            configs.emplace_back(cfg.profile.name + "/d" + std::to_string(depth), cfg);
        }
    }
    const auto entries = rotcfi::compare_profiles(trace, configs);
    if (opt.format == "json")
        std::cout << rotcfi::compare_to_json(entries, opt.trace_path).dump(2) << '\n';
    else
        rotcfi::emit_compare_text(entries, std::cout, opt.trace_path);
    for (const auto& e : entries)
        if (!e.report.violations.empty()) return kExitViolation;
    return kExitOk;
}

int cmd_classify(const CommonOptions& opt) {
    const auto trace = load_trace(opt.trace_path);
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto log = rotcfi::make_commit_log(trace[i]);
        if (!log) continue;
        ++total;
        std::cout << '#' << i << " cycle=" << trace[i].cycle << " pc=" << rotcfi::detail::hex_addr(log->pc)
                  << " kind=" << rotcfi::to_string(log->kind)
                  << " next=" << rotcfi::detail::hex_addr(log->next_addr)
                  << " target=" << rotcfi::detail::hex_addr(log->target_addr) << '\n';
    }
    std::cout << "total " << total << '\n';
    return kExitOk;
}

int cmd_attack(const CommonOptions& opt, std::uint64_t corrupt_return_at) {
    auto trace = load_trace(opt.trace_path);
    std::uint64_t seen = 0;
    std::size_t corrupted_index = trace.size();
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto log = rotcfi::make_commit_log(trace[i]);
        if (!log || log->kind != rotcfi::ControlFlowKind::Return) continue;
        if (seen++ == corrupt_return_at) {
            trace[i].npc ^= 0x10;  // divert the observed return target
            corrupted_index = i;
            break;
        }
    }
    if (corrupted_index == trace.size())
        throw std::runtime_error("trace has only " + std::to_string(seen) +
                                 " returns, cannot corrupt return " + std::to_string(corrupt_return_at));

    const rotcfi::SimConfig cfg = make_config(opt);
    const rotcfi::SimReport report = rotcfi::run(trace, cfg);
    if (opt.format == "json") {
        nlohmann::json j = rotcfi::report_to_json(report, cfg, opt.trace_path);
        j["corrupted_record_index"] = corrupted_index;
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << "corrupted return " << corrupt_return_at << " at record " << corrupted_index << '\n';
        rotcfi::emit_text_report(report, cfg, std::cout, opt.trace_path);
    }
    if (report.violations.empty()) {
        std::cerr << "attack was not detected\n";
        return 1;
    }
    return kExitViolation;
}

int cmd_profiles(const std::string& format) {
    const auto all = rotcfi::profiles::builtin();
    if (format == "json") {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& p : all) {
            const auto cell = [](const rotcfi::CostCell& c) {
                return nlohmann::json{{"instructions", c.instructions}, {"cycles", c.cycles}};
            };
            const auto op = [&](const rotcfi::OpBreakdown& b) {
                return nlohmann::json{
                    {"irq", {{"logic", cell(b.irq_logic)}, {"mem_rot", cell(b.irq_mem_rot)}, {"mem_soc", cell(b.irq_mem_soc)}}},
                    {"cfi", {{"logic", cell(b.cfi_logic)}, {"mem_rot", cell(b.cfi_mem_rot)}, {"mem_soc", cell(b.cfi_mem_soc)}}},
                    {"total_cycles", b.total_cycles()}};
            };
            j.push_back({{"name", p.name},
                         {"call", op(p.call)},
                         {"return", op(p.ret)},
                         {"call_cycles", p.call_cycles()},
                         {"return_cycles", p.return_cycles()},
                         {"average_latency", p.average_latency()},
                         {"rot_mem_cycles_per_access", p.rot_mem_cycles_per_access},
                         {"soc_mem_cycles_per_access", p.soc_mem_cycles_per_access},
                         {"irq_wakeup_cycles", p.irq_wakeup_cycles}});
        }
        std::cout << j.dump(2) << '\n';
        return kExitOk;
    }
    for (const auto& p : all) {
        std::cout << p.name << ":\n"
                  << "  call cycles:   " << p.call_cycles() << "  (irq " << p.call.irq_logic.cycles << '+'
                  << p.call.irq_mem_rot.cycles << '+' << p.call.irq_mem_soc.cycles << ", cfi "
                  << p.call.cfi_logic.cycles << '+' << p.call.cfi_mem_rot.cycles << '+'
                  << p.call.cfi_mem_soc.cycles << ")\n"
                  << "  return cycles: " << p.return_cycles() << "  (irq " << p.ret.irq_logic.cycles << '+'
                  << p.ret.irq_mem_rot.cycles << '+' << p.ret.irq_mem_soc.cycles << ", cfi "
                  << p.ret.cfi_logic.cycles << '+' << p.ret.cfi_mem_rot.cycles << '+'
                  << p.ret.cfi_mem_soc.cycles << ")\n"
                  << "  average:       " << p.average_latency() << '\n'
                  << "  unit costs:    rot-mem " << p.rot_mem_cycles_per_access << ", soc-mem "
                  << p.soc_mem_cycles_per_access << ", irq wake-up " << p.irq_wakeup_cycles << '\n';
        const auto derived = rotcfi::derive_profile_totals(p);
        std::cout << "  irq entry/exit overhead (derived): " << derived.irq_entry_exit_overhead << '\n';
    }
    return kExitOk;
}

int cmd_gen(const std::string& pattern, unsigned depth, unsigned width, std::uint64_t n,
            std::uint64_t gap, std::uint64_t seed, const std::string& output) {
    std::vector<rotcfi::TraceRecord> trace;
    if (pattern == "balanced")
        trace = rotcfi::synth::balanced_trace(depth, width, seed);
    else if (pattern == "burst")
        trace = rotcfi::synth::burst_trace(n);
    else if (pattern == "gap")
        trace = rotcfi::synth::gap_trace(n, gap);
    else
        throw std::runtime_error("unknown pattern '" + pattern + "'");

    if (output.empty()) {
        rotcfi::serialize_trace(trace, std::cout);
    } else {
        std::ofstream out(output);
        if (!out) throw std::runtime_error("cannot open output file '" + output + "'");
        rotcfi::serialize_trace(trace, out);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Trace-driven simulator of RoT-enforced control-flow integrity"};
    app.require_subcommand(1);

    CommonOptions opt;

    auto* simulate = app.add_subcommand("simulate", "replay a trace under one configuration");
    add_sim_flags(simulate, opt);

    auto* compare = app.add_subcommand("compare", "sweep profiles and queue depths over one trace");
    std::vector<std::size_t> compare_depths;
    std::vector<std::string> compare_profiles;
    compare->add_option("--trace", opt.trace_path, "trace file path")->required();
    compare->add_option("--queue-depth", compare_depths, "queue depths to sweep (default 1 8)");
    compare->add_option("--profile", compare_profiles, "profiles to sweep (default all built-ins)");
    compare->add_option("--bus-width", opt.bus_width, "interconnect width in bits")
        ->check(CLI::IsMember({32, 64, 128}));
    compare->add_option("--transfer-cost", opt.transfer_cost, "cycles per transfer beat");
    compare->add_flag("--averaged", opt.averaged, "charge the per-variant average latency per event");
    compare->add_option("--format", opt.format, "text|json")->check(CLI::IsMember({"text", "json"}));

    auto* classify = app.add_subcommand("classify", "dump the control-flow events of a trace");
    classify->add_option("--trace", opt.trace_path, "trace file path")->required();

    auto* attack = app.add_subcommand("attack", "corrupt one return target and assert detection");
    std::uint64_t corrupt_return_at = 0;
    add_sim_flags(attack, opt);
    attack->add_option("--corrupt-return-at", corrupt_return_at, "index of the return to corrupt")
        ->required();

    auto* profiles_cmd = app.add_subcommand("profiles", "print the built-in firmware cost tables");
    std::string profiles_format = "text";
    profiles_cmd->add_option("--format", profiles_format, "text|json")
        ->check(CLI::IsMember({"text", "json"}));

    auto* gen = app.add_subcommand("gen", "emit a synthetic trace");
    std::string gen_pattern;
    unsigned gen_depth = 2, gen_width = 2;
    std::uint64_t gen_n = 10, gen_gap = 1000, gen_seed = 0;
    std::string gen_output;
    gen->add_option("pattern", gen_pattern, "balanced|burst|gap")->required();
    gen->add_option("--depth", gen_depth, "balanced: nesting depth");
    gen->add_option("--width", gen_width, "balanced: calls per level");
    gen->add_option("--n", gen_n, "burst: event count; gap: pair count");
    gen->add_option("--gap", gen_gap, "gap: cycles between control-flow events");
    gen->add_option("--seed", gen_seed, "seed for randomized generators");
    gen->add_option("--output", gen_output, "write to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(opt);
        if (compare->parsed()) return cmd_compare(opt, compare_depths, compare_profiles);
        if (classify->parsed()) return cmd_classify(opt);
        if (attack->parsed()) return cmd_attack(opt, corrupt_return_at);
        if (profiles_cmd->parsed()) return cmd_profiles(profiles_format);
        if (gen->parsed())
            return cmd_gen(gen_pattern, gen_depth, gen_width, gen_n, gen_gap, gen_seed, gen_output);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
