// Command-line front end: sectprops, mapcheck, modal and compare.

#include <quadplate/cli_io.hpp>

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

namespace {

using namespace quadplate;

struct CommonFlags {
    std::string case_spec;
    std::string scheme;
    int gauss = 0;
    int modes = 0;
    std::string format;
    std::string out = "-";
    unsigned threads = 1;
    std::uint64_t seed = 1;
    bool shapes = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--case", f.case_spec, "built-in case name, 'random' or JSON case file")->required();
    cmd->add_option("--scheme", f.scheme, "bilinear, serendipity8 or pascal6");
    cmd->add_option("--gauss", f.gauss, "Gauss order per direction (1..6)");
    cmd->add_option("--modes", f.modes, "number of modes");
    cmd->add_option("--format", f.format, "csv, json or plot");
    cmd->add_option("--out", f.out, "output file, '-' for stdout");
    cmd->add_option("--threads", f.threads, "element assembly threads, 0 = all cores");
    cmd->add_option("--seed", f.seed, "seed for the built-in 'random' quadrilateral");
}

io::RunOptions run_options(const CommonFlags& f) {
    io::RunOptions o;
    if (!f.scheme.empty()) o.scheme = parse_scheme(f.scheme);
    if (f.gauss != 0) o.gauss = f.gauss;
    if (f.modes != 0) o.modes = f.modes;
    o.threads = f.threads;
    o.shapes = f.shapes;
    return o;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Quadrilateral thin-plate element: geometry checks and free vibration"};
    app.require_subcommand(1);

    CommonFlags f;
    std::string second_scheme = "bilinear";
    std::string first_scheme = "pascal6";

    auto* sect = app.add_subcommand("sectprops", "area and second moments of a single quadrilateral");
    add_common(sect, f);
    auto* map = app.add_subcommand("mapcheck", "poles, conditioning and shape-function residuals");
    add_common(map, f);
    auto* modal = app.add_subcommand("modal", "natural frequencies of every mesh in the case");
    add_common(modal, f);
    modal->add_flag("--shapes", f.shapes, "sample mode shapes for plot output");
    auto* cmp = app.add_subcommand("compare", "modal run under two schemes");
    add_common(cmp, f);
    cmp->add_option("--first", first_scheme, "first scheme");
    cmp->add_option("--second", second_scheme, "second scheme");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const io::CaseFile c = f.case_spec == "random" ? io::random_quad_case(f.seed) : io::load_case(f.case_spec);
        io::RunOptions opt = run_options(f);
        io::Report r;
        std::string default_format = "csv";
        if (sect->parsed()) {
            r = io::run_sectprops(c, opt);
        } else if (map->parsed()) {
            r = io::run_mapcheck(c, opt);
            default_format = "json";
        } else if (modal->parsed()) {
            if (f.format == "plot") opt.shapes = true;
            r = io::run_modal(c, opt);
        } else {
            r = io::compare(c, parse_scheme(first_scheme), parse_scheme(second_scheme), opt);
        }
        for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
        io::emit(r, io::parse_format(f.format.empty() ? default_format : f.format), f.out);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
    } catch (const NonConvergenceError& e) {
        std::cerr << "numerical error: " << e.what() << " (last residual " << e.last_residual() << ")\n";
        return 3;
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
