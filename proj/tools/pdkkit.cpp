// pdkkit command-line front end.
// Exit status: 0 success, 1 diagnostics, 2 usage error.

#include <bit>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pdkkit/pdkkit.hpp"

#ifndef PDKKIT_DEFAULT_CORPUS
#define PDKKIT_DEFAULT_CORPUS "corpus"
#endif

namespace fs = std::filesystem;
using namespace pdkkit;

namespace {

struct Usage : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Usage("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Usage("cannot write " + path);
    out << text;
}

/// Opcode map from PDKKIT_MAPS, if one exists for this variant and set.
std::optional<OpcodeMap> map_override(Variant v, const ExtensionSet& x) {
    const char* dir = std::getenv("PDKKIT_MAPS");
    if (!dir || !*dir) return std::nullopt;
    std::stringstream ss(dir);
    for (std::string d; std::getline(ss, d, ':');)
        if (!d.empty())
            if (auto m = find_map_override(d, v, x)) return m;
    return std::nullopt;
}

// Usage-class errors: bad names, impossible machine shapes, missing inputs.
bool is_usage(ErrorKind k) {
    return k == ErrorKind::NotAVariant || k == ErrorKind::UnknownExtension || k == ErrorKind::InvalidExtensionSet ||
           k == ErrorKind::TooManyCores || k == ErrorKind::ImageVariantMismatch;
}

int cmd_asm(const std::string& in, const std::string& arch, const std::string& ext, const std::string& out) {
    AssembleOptions o;
    if (!arch.empty()) o.arch = variant_spec(arch).name;
    if (!ext.empty()) o.extensions = ExtensionSet::parse(ext);
    auto src = slurp(in);
    auto img = assemble(src, o);
    if (auto m = map_override(img.variant, img.extensions)) {
        o.map = &*m;
        img = assemble(src, o);
    }
    emit(out, write_image(img));
    return 0;
}

int cmd_disasm(const std::string& in, const std::string& out) {
    auto img = read_image(slurp(in));
    auto m = map_override(img.variant, img.extensions);
    emit(out, disassemble(img, m ? &*m : nullptr));
    return 0;
}

struct RunArgs {
    std::string image;
    unsigned cores = 1;
    std::optional<std::uint32_t> data_size;
    std::vector<std::uint64_t> irq_at;
    std::uint64_t max_cycles = 1000000;
    std::string trace = "none";
    std::string output = "0x08:8";
    bool wrap = false;
};

std::pair<std::uint32_t, std::uint32_t> parse_range(const std::string& s) {
    auto colon = s.find(':');
    try {
        std::uint32_t a = std::stoul(s.substr(0, colon), nullptr, 0);
        std::uint32_t n = colon == std::string::npos ? 1 : std::stoul(s.substr(colon + 1), nullptr, 0);
        return {a, n};
    } catch (const std::exception&) {
        throw Usage("bad output range " + s + " (expected ADDR:LEN)");
    }
}

int cmd_run(const RunArgs& a) {
    if (!std::is_sorted(a.irq_at.begin(), a.irq_at.end())) throw Usage("--irq-at cycles must be ascending");
    auto img = read_image(slurp(a.image));
    auto m_over = map_override(img.variant, img.extensions);
    MachineConfig cfg;
    cfg.cores = a.cores;
    cfg.data_size = a.data_size;
    cfg.wrap_data = a.wrap;
    cfg.trace = a.trace != "none";
    cfg.map = m_over ? &*m_over : nullptr;
    auto [out_addr, out_len] = parse_range(a.output);
    Machine m = load(img, cfg);
    for (auto c : a.irq_at) m.raise_interrupt(c);

    std::uint64_t violations = 0;
    RunResult r{HaltReason::Budget, 0, ""};
    for (;;) {
        if (m.halted()) {
            r = {HaltReason::Halted, m.cycle(), m.fault() ? *m.fault() : "all cores stopped"};
            if (m.fault()) r.reason = HaltReason::Fault;
            break;
        }
        if (m.cycle() >= a.max_cycles) {
            r = {HaltReason::Budget, m.cycle(), "cycle budget exhausted"};
            break;
        }
        m.step();
        if (std::popcount(static_cast<unsigned>(m.io(io_reg::occupancy))) > 1) ++violations;
    }

    if (a.trace == "text") std::cout << m.trace_text();
    else if (a.trace == "jsonl") std::cout << m.trace_jsonl();
    std::cout << "halt: " << to_string(r.reason) << " (" << r.detail << ")\n";
    std::cout << "cycles: " << r.cycle << "\n";
    std::cout << "occupancy violations: " << violations << "\n";
    std::cout << "output " << detail::hex(out_addr) << ":";
    for (std::uint32_t i = 0; i < out_len; ++i) std::cout << ' ' << detail::hex(m.data(out_addr + i));
    std::cout << "\n";
    return r.reason == HaltReason::Fault ? 1 : 0;
}

int cmd_gap_report(const std::string& arch, const std::string& ext, const std::string& fmt) {
    auto v = variant_spec(arch);
    auto x = ExtensionSet::parse(ext);
    auto over = map_override(v.name, x);
    const OpcodeMap& map = over ? *over : shared_map(v, x);
    auto rep = gap_analysis(map);
    if (fmt == "json") std::cout << to_json(rep).dump(2) << "\n";
    else std::cout << to_text(rep);
    return 0;
}

int cmd_map(const std::string& arch, const std::string& ext, const std::string& out) {
    auto v = variant_spec(arch);
    auto x = ExtensionSet::parse(ext);
    auto over = map_override(v.name, x);
    emit(out, to_json(over ? *over : shared_map(v, x)).dump(2) + "\n");
    return 0;
}

int cmd_size_compare(const std::string& corpus_dir, const std::string& configs, const std::string& fmt) {
    if (!fs::is_directory(corpus_dir)) throw Usage("corpus directory not found: " + corpus_dir);
    auto corpus = load_corpus(corpus_dir);
    if (corpus.empty()) throw Usage("no .pdkasm programs in " + corpus_dir);
    std::vector<CorpusConfig> cfgs;
    if (!configs.empty()) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(slurp(configs));
        } catch (const nlohmann::json::parse_error& e) {
            throw Usage(configs + ": " + e.what());
        }
        cfgs = configs_from_json(j);
    } else if (fs::exists(fs::path(corpus_dir) / "configs.json")) {
        cfgs = configs_from_json(nlohmann::json::parse(slurp((fs::path(corpus_dir) / "configs.json").string())));
    } else {
        cfgs = default_configs();
    }
    auto sc = size_compare(corpus, cfgs);
    if (fmt == "json") std::cout << sc.json().dump(2) << "\n";
    else std::cout << sc.csv();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"pdkkit: Padauk-style ISA toolkit"};
    app.require_subcommand(1);

    std::string in, out, arch, ext, fmt = "text";

    auto* as = app.add_subcommand("asm", "assemble a .pdkasm file into an image");
    as->add_option("input", in, "source file")->required();
    as->add_option("--arch", arch, "variant when the source has no .arch");
    as->add_option("--ext", ext, "extensions, comma separated");
    as->add_option("-o,--output", out, "image file (default stdout)");

    auto* dis = app.add_subcommand("disasm", "disassemble an image");
    dis->add_option("image", in, "image file")->required();
    dis->add_option("-o,--output", out, "output file (default stdout)");

    RunArgs ra;
    std::uint32_t dsize = 0;
    auto* run = app.add_subcommand("run", "run an image on the simulator");
    run->add_option("image", ra.image, "image file")->required();
    run->add_option("--cores", ra.cores, "hardware threads")->check(CLI::PositiveNumber);
    run->add_option("--data-size", dsize, "data memory bytes");
    run->add_option("--irq-at", ra.irq_at, "interrupt request cycles, ascending");
    run->add_option("--max-cycles", ra.max_cycles, "cycle budget");
    run->add_option("--trace", ra.trace, "trace format")->check(CLI::IsMember({"none", "text", "jsonl"}));
    run->add_option("--output", ra.output, "data bytes to print, ADDR:LEN");
    run->add_flag("--wrap-data", ra.wrap, "wrap out-of-range data addresses instead of faulting");

    auto* gap = app.add_subcommand("gap-report", "list unallocated opcode runs");
    gap->add_option("--arch", arch, "variant")->required();
    gap->add_option("--ext", ext, "extensions, comma separated");
    gap->add_option("--format", fmt, "text or json")->check(CLI::IsMember({"text", "json"}));

    auto* mp = app.add_subcommand("map", "print an opcode map as JSON");
    mp->add_option("--arch", arch, "variant")->required();
    mp->add_option("--ext", ext, "extensions, comma separated");
    mp->add_option("-o,--output", out, "output file (default stdout)");

    std::string corpus = PDKKIT_DEFAULT_CORPUS, configs, sfmt = "csv";
    auto* sc = app.add_subcommand("size-compare", "code size of the corpus under extension configs");
    sc->add_option("--corpus", corpus, "directory of .pdkasm templates");
    sc->add_option("--configs", configs, "configs JSON (default: corpus/configs.json, else built in)");
    sc->add_option("--format", sfmt, "csv or json")->check(CLI::IsMember({"csv", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (*as) return cmd_asm(in, arch, ext, out);
        if (*dis) return cmd_disasm(in, out);
        if (*run) {
            if (dsize) ra.data_size = dsize;
            return cmd_run(ra);
        }
        if (*gap) return cmd_gap_report(arch, ext, fmt);
        if (*mp) return cmd_map(arch, ext, out);
        if (*sc) return cmd_size_compare(corpus, configs, sfmt);
    } catch (const Usage& e) {
        std::cerr << "pdkkit: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "pdkkit: " << to_string(e.kind()) << ": " << e.what() << "\n";
        return is_usage(e.kind()) ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "pdkkit: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
