// glwb_cli -- runs the benchmark reproduction cells (fair-fee calibrations,
// Deltas, mortality-stress reruns) and writes a results.csv report.
//
//   glwb_cli --reproduce test1 --configs A,B --methods hpde --out runs/
//   glwb_cli --manifest manifest.json --workers 4 --format text
//
// Exit codes: 0 success (including an empty manifest), 2 malformed
// manifest/arguments, 1 runtime failure.
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "glwb/reproduce.hpp"

namespace {

using nlohmann::json;

struct Job {
    std::string reproduce;
    std::vector<glwb::ConfigLevel> configs;
    std::vector<glwb::Method> methods;
};

struct Options {
    std::string manifest;
    std::vector<std::string> reproduce;
    std::string configs = "A";
    std::string methods = "hpde";
    std::string out_dir = ".";
    std::string format = "csv";
    std::string mortality_csv;
    std::uint64_t seed = 42;
    int workers = 1;
    bool no_timing = false;
};

[[noreturn]] void bad_config(const std::string& what) {
    std::cerr << "glwb_cli: " << what << "\n";
    std::exit(2);
}

std::vector<std::string> split_csv(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

glwb::ConfigLevel parse_config(const std::string& s) {
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'D')
        return glwb::ConfigLevel(s[0] - 'A');
    bad_config("unknown configuration level '" + s + "' (expected A..D)");
}

glwb::Method parse_method(const std::string& s) {
    if (s == "hmc") return glwb::Method::HybridMc;
    if (s == "smc") return glwb::Method::StandardMc;
    if (s == "hpde") return glwb::Method::HybridPde;
    if (s == "apde") return glwb::Method::AdiPde;
    bad_config("unknown method '" + s + "' (expected hmc|smc|hpde|apde)");
}

void check_reproduce_id(const std::string& id) {
    const auto& ids = glwb::reproduce_ids();
    if (std::find(ids.begin(), ids.end(), id) == ids.end()) {
        std::string all;
        for (const auto& x : ids) all += (all.empty() ? "" : "|") + x;
        bad_config("unknown reproduce id '" + id + "' (expected " + all + ")");
    }
}

std::vector<Job> jobs_from_manifest(const std::string& path, Options& opt) {
    std::ifstream in(path);
    if (!in) bad_config("cannot open manifest '" + path + "'");
    json m;
    try {
        in >> m;
    } catch (const std::exception& e) {
        bad_config("manifest '" + path + "' is not valid JSON: " + e.what());
    }
    if (!m.is_object()) bad_config("manifest root must be a JSON object");

    try {
        if (m.contains("seed")) opt.seed = m.at("seed").get<std::uint64_t>();
        if (m.contains("mortality_csv"))
            opt.mortality_csv = m.at("mortality_csv").get<std::string>();

        std::vector<Job> jobs;
        if (!m.contains("jobs")) return jobs;
        if (!m.at("jobs").is_array())
            bad_config("manifest field 'jobs' must be an array");
        for (const auto& j : m.at("jobs")) {
            Job job;
            job.reproduce = j.at("reproduce").get<std::string>();
            check_reproduce_id(job.reproduce);
            for (const auto& c : j.value("configs", json::array({"A"})))
                job.configs.push_back(parse_config(c.get<std::string>()));
            for (const auto& mm : j.value("methods", json::array({"hpde"})))
                job.methods.push_back(parse_method(mm.get<std::string>()));
            jobs.push_back(std::move(job));
        }
        return jobs;
    } catch (const json::exception& e) {
        bad_config("manifest '" + path + "' is malformed: " + std::string(e.what()));
    }
}

std::string format_row(const glwb::RunResult& r, bool no_timing) {
    const bool heston =
        std::holds_alternative<glwb::HestonParams>(r.spec.model);
    char buf[256];
    std::string ci = r.ci_bp >= 0.0 ? (std::snprintf(buf, sizeof buf, "%.4f",
                                                     r.ci_bp),
                                       std::string(buf))
                                    : std::string();
    std::string delta;
    if (r.spec.fixed_fee_bp >= 0.0) {
        std::snprintf(buf, sizeof buf, "%.6f", r.delta);
        delta = buf;
    }
    std::snprintf(buf, sizeof buf, "%s,%s,%s,%s,%.3f,%d,%.4f,%s,%s,%.3f",
                  r.spec.cell.c_str(), glwb::method_name(r.spec.method).c_str(),
                  glwb::config_name(r.spec.config).c_str(),
                  heston ? "heston" : "bshw", r.spec.rho, r.spec.ratchet_every,
                  r.fee_bp, ci.c_str(), delta.c_str(),
                  no_timing ? 0.0 : r.seconds);
    return buf;
}

} // namespace

int main(int argc, char** argv) {
    Options opt;
    CLI::App app{"GLWB rider pricing: benchmark reproduction runner"};
    app.add_option("--manifest", opt.manifest, "JSON manifest of jobs to run");
    app.add_option("--reproduce", opt.reproduce,
                   "reproduce id(s): test1 test2 test2b test3 test4 dyn1..dyn4")
        ->delimiter(',');
    app.add_option("--configs", opt.configs, "configuration levels, e.g. A,B");
    app.add_option("--methods", opt.methods,
                   "pricing methods: hmc,smc,hpde,apde");
    app.add_option("--out", opt.out_dir, "output directory for results.csv");
    app.add_option("--seed", opt.seed, "base random seed");
    app.add_option("--workers", opt.workers, "number of worker threads");
    app.add_option("--format", opt.format, "stdout report format: csv|text");
    app.add_option("--mortality", opt.mortality_csv,
                   "mortality table CSV (age,qx); default: built-in DAV 2004R");
    app.add_flag("--no-timing", opt.no_timing,
                 "write 0 in the seconds column (byte-stable reports)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    if (opt.format != "csv" && opt.format != "text")
        bad_config("unknown format '" + opt.format + "' (expected csv|text)");
    if (opt.workers < 1) bad_config("--workers must be >= 1");

    std::vector<Job> jobs;
    if (!opt.manifest.empty())
        jobs = jobs_from_manifest(opt.manifest, opt);
    for (const auto& id : opt.reproduce) {
        check_reproduce_id(id);
        Job job;
        job.reproduce = id;
        for (const auto& c : split_csv(opt.configs))
            job.configs.push_back(parse_config(c));
        for (const auto& m : split_csv(opt.methods))
            job.methods.push_back(parse_method(m));
        if (job.configs.empty() || job.methods.empty())
            bad_config("--configs/--methods must be non-empty");
        jobs.push_back(std::move(job));
    }

    std::vector<glwb::RunSpec> cells;
    for (const auto& j : jobs) {
        auto v = glwb::reproduce_cells(j.reproduce, j.configs, j.methods);
        cells.insert(cells.end(), v.begin(), v.end());
    }
    std::stable_sort(cells.begin(), cells.end(),
                     [](const glwb::RunSpec& a, const glwb::RunSpec& b) {
                         return a.cell < b.cell;
                     });
    cells.erase(std::unique(cells.begin(), cells.end(),
                            [](const glwb::RunSpec& a, const glwb::RunSpec& b) {
                                return a.cell == b.cell;
                            }),
                cells.end());

    glwb::MortalityTable table = opt.mortality_csv.empty()
                                     ? glwb::dav2004r_65()
                                     : glwb::MortalityTable::from_csv(
                                           opt.mortality_csv);

    std::vector<glwb::RunResult> results(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    auto worker = [&]() {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= cells.size() || failed.load()) break;
            try {
                results[i] = glwb::run_cell(cells[i], table, opt.seed);
            } catch (const std::exception& e) {
                std::cerr << "glwb_cli: cell '" << cells[i].cell
                          << "' failed: " << e.what() << "\n";
                failed.store(true);
            }
        }
    };
    {
        std::vector<std::thread> pool;
        int nw = std::min<std::size_t>(std::size_t(opt.workers), cells.size());
        for (int w = 0; w < std::max(1, nw); ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failed.load()) return 1;

    static const char* header =
        "cell,method,config,model,rho,ratchet,fee_bp,ci_bp,delta,seconds";
    std::vector<std::string> rows;
    for (const auto& r : results) rows.push_back(format_row(r, opt.no_timing));

    std::filesystem::create_directories(opt.out_dir);
    const std::string csv_path =
        (std::filesystem::path(opt.out_dir) / "results.csv").string();
    {
        std::ofstream out(csv_path);
        if (!out) {
            std::cerr << "glwb_cli: cannot write '" << csv_path << "'\n";
            return 1;
        }
        out << header << "\n";
        for (const auto& row : rows) out << row << "\n";
    }

    if (opt.format == "csv") {
        std::cout << header << "\n";
        for (const auto& row : rows) std::cout << row << "\n";
    } else {
        std::printf("%-44s %-5s %-3s %-7s %6s %3s %10s %9s %9s %8s\n", "cell",
                    "meth", "cfg", "model", "rho", "rat", "fee_bp", "ci_bp",
                    "delta", "sec");
        for (const auto& r : results) {
            const bool heston =
                std::holds_alternative<glwb::HestonParams>(r.spec.model);
            std::printf("%-44s %-5s %-3s %-7s %6.2f %3d %10.4f ",
                        r.spec.cell.c_str(),
                        glwb::method_name(r.spec.method).c_str(),
                        glwb::config_name(r.spec.config).c_str(),
                        heston ? "heston" : "bshw", r.spec.rho,
                        r.spec.ratchet_every, r.fee_bp);
            if (r.ci_bp >= 0.0)
                std::printf("%9.4f ", r.ci_bp);
            else
                std::printf("%9s ", "");
            if (r.spec.fixed_fee_bp >= 0.0)
                std::printf("%9.6f ", r.delta);
            else
                std::printf("%9s ", "");
            std::printf("%8.3f\n", opt.no_timing ? 0.0 : r.seconds);
        }
    }
    return 0;
}
