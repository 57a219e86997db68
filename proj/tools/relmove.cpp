#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "relmove/archive.hpp"
#include "relmove/export.hpp"
#include "relmove/http.hpp"
#include "relmove/ingest.hpp"
#include "relmove/service.hpp"
#include "relmove/synthgen.hpp"

namespace {

using namespace relmove;

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitDataQuality = 2;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted.store(true); }

Dataset load_dataset(const std::string& path, const std::string& species_config) {
    if (!std::filesystem::exists(path)) throw Error("io_error", "no such file '" + path + "'");
    if (std::filesystem::path(path).extension() == ".csv") {
        std::ifstream in(path);
        if (!in) throw Error("io_error", "cannot open '" + path + "'");
        const SpeciesConfig species = species_config.empty() ? SpeciesConfig{} : SpeciesConfig::load(species_config);
        return ingest_csv(in, species).dataset;
    }
    Dataset data = load_archive(path);
    if (!species_config.empty()) {
        const auto species = SpeciesConfig::load(species_config);
        for (auto& [name, sp] : data.species_registry) sp.role = species.role_of(name);
        for (auto& [id, track] : data.tracks) track.species = data.species_registry.at(track.species.name);
    }
    return data;
}

nlohmann::ordered_json report_json(const IngestReport& r) {
    nlohmann::ordered_json j;
    j["rows_read"] = r.rows_read;
    j["rows_malformed"] = r.rows_malformed;
    j["fixes_dropped_jitter"] = r.fixes_dropped_jitter;
    j["fixes_dropped_speed"] = r.fixes_dropped_speed;
    j["gap_histogram"] = nlohmann::ordered_json::object();
    for (const auto& [id, hist] : r.per_animal_gap_histogram) {
        auto& h = j["gap_histogram"][id.str()];
        h = nlohmann::ordered_json::object();
        for (const auto& [len, n] : hist) h[std::to_string(len)] = n;
    }
    j["row_errors"] = nlohmann::ordered_json::array();
    for (const auto& e : r.row_errors) j["row_errors"].push_back({{"line", e.line}, {"message", e.message}});
    return j;
}

struct IngestArgs {
    std::string csv, out, species_config;
    double max_speed = kDefaultMaxSpeed;
    bool strict = false;
};

int cmd_ingest(const IngestArgs& a) {
    std::ifstream in(a.csv);
    if (!in) throw Error("io_error", "cannot open '" + a.csv + "'");
    const SpeciesConfig species = a.species_config.empty() ? SpeciesConfig{} : SpeciesConfig::load(a.species_config);
    IngestOptions options;
    options.max_speed = a.max_speed;
    auto result = ingest_csv(in, species, options);
    std::cout << report_json(result.report).dump(2) << '\n';
    if (a.strict && result.report.rows_malformed > 0) {
        std::cerr << "error: " << result.report.rows_malformed << " malformed row(s) under --strict\n";
        return kExitDataQuality;
    }
    save_archive(result.dataset, a.out);
    std::cerr << "wrote " << result.dataset.tracks.size() << " tracks x " << result.dataset.grid.slot_count
              << " slots to " << a.out << '\n';
    return kExitOk;
}

struct ExportArgs {
    std::string data, what, out, species_config;
    std::optional<std::int64_t> from, to;
    std::string i, j, species;
    std::vector<std::string> animals;
    std::optional<double> threshold;
    std::int64_t min_len = 12;
    std::int64_t max_dip = 3;
};

int cmd_export(const ExportArgs& a) {
    const Dataset data = load_dataset(a.data, a.species_config);
    const auto last = static_cast<std::int64_t>(data.grid.slot_count) - 1;
    const TimeWindow window = TimeWindow::checked(a.from.value_or(0), a.to.value_or(last), data.grid);

    std::ostringstream csv;
    std::size_t rows = 0;
    auto need = [](const std::string& v, const char* flag) {
        if (v.empty()) throw Error("missing_parameter", std::string(flag) + " is required for this export");
        return AnimalId(v);
    };
    if (a.what == "matrix") {
        std::optional<std::vector<AnimalId>> filter;
        if (!a.species.empty()) {
            filter.emplace();
            for (const auto& [id, t] : data.tracks) {
                if (t.species.name == a.species) filter->push_back(id);
            }
        }
        rows = export_matrix(csv, data, window, filter);
    } else if (a.what == "pair") {
        rows = export_pair(csv, data, need(a.i, "--i"), need(a.j, "--j"), window);
    } else if (a.what == "episodes") {
        EpisodeParams p;
        p.threshold = a.threshold.value_or(std::max(0.0, data.arena.M - 1000.0));
        if (a.min_len < 1 || a.max_dip < 0) throw Error("bad_parameter", "--min-len >= 1 and --max-dip >= 0 required");
        p.min_len = static_cast<std::size_t>(a.min_len);
        p.max_dip = static_cast<std::size_t>(a.max_dip);
        rows = export_episodes(csv, data, need(a.i, "--i"), need(a.j, "--j"), p, window);
    } else if (a.what == "travel") {
        std::vector<AnimalId> ids;
        for (const auto& s : a.animals) ids.emplace_back(s);
        if (ids.empty()) ids = data.animals();
        rows = export_travel(csv, data, ids, window);
    }
    std::ofstream out(a.out);
    if (!out) throw Error("io_error", "cannot write '" + a.out + "'");
    out << csv.str();
    std::cerr << "wrote " << rows << " row(s) to " << a.out << '\n';
    return kExitOk;
}

struct SynthArgs {
    std::string config, out, truth;
    bool paper_shape = false;
    std::optional<std::uint64_t> seed;
};

int cmd_synth(const SynthArgs& a) {
    SynthConfig cfg;
    if (a.paper_shape) {
        cfg = default_paper_shape();
    } else {
        std::ifstream in(a.config);
        if (!in) throw Error("io_error", "cannot open config '" + a.config + "'");
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error("invalid_config", std::string("config: ") + e.what());
        }
        cfg = synth_config_from_json(j);
    }
    if (a.seed) cfg.seed = *a.seed;
    const auto result = generate(cfg);
    std::string truth_path = a.truth;
    if (truth_path.empty()) {
        std::filesystem::path p(a.out);
        truth_path = (p.parent_path() / p.stem()).string() + ".truth.json";
    }
    {
        std::ofstream out(a.out, std::ios::binary);
        if (!out) throw Error("io_error", "cannot write '" + a.out + "'");
        out << result.csv;
    }
    {
        std::ofstream out(truth_path, std::ios::binary);
        if (!out) throw Error("io_error", "cannot write '" + truth_path + "'");
        out << to_json(result.truth, cfg).dump(2) << '\n';
    }
    std::cerr << "wrote " << cfg.animal_ids().size() << " animals x " << cfg.slot_count() << " slots to " << a.out
              << " (ground truth " << truth_path << ")\n";
    return kExitOk;
}

struct ServeArgs {
    std::string data, bind = "127.0.0.1:8080", views_store = "views.json", species_config;
};

int cmd_serve(const ServeArgs& a) {
    const Dataset data = load_dataset(a.data, a.species_config);
    ViewStore views(a.views_store);
    const Api api(data, views);
    HttpServer server(api);

    const auto colon = a.bind.rfind(':');
    if (colon == std::string::npos) throw Error("io_error", "--bind must be host:port");
    const std::string host = a.bind.substr(0, colon);
    int port = 0;
    try {
        port = std::stoi(a.bind.substr(colon + 1));
    } catch (const std::exception&) {
        throw Error("io_error", "bad port in --bind '" + a.bind + "'");
    }
    const int bound = server.bind(host, port);
    if (bound < 0) throw Error("io_error", "cannot bind " + a.bind);
    std::cerr << "serving " << data.tracks.size() << " animals on http://" << host << ':' << bound << '\n';

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    std::thread watcher([&] {
        while (!g_interrupted.load()) std::this_thread::sleep_for(std::chrono::milliseconds(50));
        server.stop();
    });
    server.listen();
    g_interrupted.store(true);
    watcher.join();
    std::cerr << "shut down\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"relmove: relatedness analytics for multi-animal GPS tracks"};
    app.require_subcommand(1);

    IngestArgs ia;
    auto* ingest = app.add_subcommand("ingest", "Ingest collar CSV into a dataset archive (JSON)");
    ingest->add_option("--csv", ia.csv, "CSV with header animal_id,species,timestamp,lat,lon")->required();
    ingest->add_option("--out", ia.out, "Archive path to write")->required();
    ingest->add_option("--species-config", ia.species_config, R"(JSON {"species": {"lion": "predator", ...}})");
    ingest->add_option("--max-speed", ia.max_speed, "Screening speed limit in m/s")->capture_default_str();
    ingest->add_flag("--strict", ia.strict, "Exit 2 without writing if any row is malformed");

    ExportArgs ea;
    auto* exp = app.add_subcommand("export", "Export an analytic as CSV");
    exp->footer(
        "Columns (distances and relatedness in meters, 6 decimals, empty = undefined):\n"
        "  matrix:   animal_i,animal_j,mean_relatedness_m,coverage,intensity\n"
        "            mean over defined slots, coverage = defined/R in [0,1], intensity = mean/M\n"
        "  pair:     slot,time,relatedness_m,provenance   (one row per slot, P = M - d)\n"
        "            provenance: both_measured | some_interpolated | undefined\n"
        "  episodes: animal_i,animal_j,start_slot,end_slot,start_time,end_time,length_slots,mean_relatedness_m\n"
        "  travel:   animal,start_slot,end_slot,path_length_m,displacement_m\n"
        "Times are ISO-8601 UTC; slots index the 2-hour global grid.");
    exp->add_option("--data", ea.data, "Dataset archive (or CSV)")->required();
    exp->add_option("--what", ea.what, "matrix | pair | episodes | travel")
        ->required()
        ->check(CLI::IsMember({"matrix", "pair", "episodes", "travel"}));
    exp->add_option("--out", ea.out, "CSV path to write")->required();
    exp->add_option("--from", ea.from, "First slot (default 0)");
    exp->add_option("--to", ea.to, "Last slot, inclusive (default last)");
    exp->add_option("--i", ea.i, "First animal (pair, episodes)");
    exp->add_option("--j", ea.j, "Second animal (pair, episodes)");
    exp->add_option("--animal", ea.animals, "Animal(s) for travel (default all)");
    exp->add_option("--species", ea.species, "Restrict matrix to one species");
    exp->add_option("--threshold", ea.threshold, "Episode threshold in meters (default M - 1000)");
    exp->add_option("--min-len", ea.min_len, "Minimum episode length in slots")->capture_default_str();
    exp->add_option("--max-dip", ea.max_dip, "Longest tolerated dip in slots")->capture_default_str();
    exp->add_option("--species-config", ea.species_config, "Species role config");

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with planted ground truth");
    auto* shape = synth->add_flag("--paper-shape", sa.paper_shape, "5 lions, 10 wildebeest, 10 zebras, 30 months");
    auto* cfg = synth->add_option("--config", sa.config, "Synth config JSON");
    shape->excludes(cfg);
    synth->add_option("--seed", sa.seed, "RNG seed (overrides config)");
    synth->add_option("--out", sa.out, "CSV path to write")->required();
    synth->add_option("--truth", sa.truth, "Ground-truth JSON path (default <out>.truth.json)");

    ServeArgs va;
    auto* serve = app.add_subcommand("serve", "Serve the HTTP JSON API");
    serve->add_option("--data", va.data, "Dataset archive (or CSV)")->required();
    serve->add_option("--bind", va.bind, "host:port")->capture_default_str();
    serve->add_option("--views-store", va.views_store, "JSON file for saved views")->capture_default_str();
    serve->add_option("--species-config", va.species_config, "Species role config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitIo;
    }

    try {
        if (*ingest) return cmd_ingest(ia);
        if (*exp) return cmd_export(ea);
        if (*synth) {
            if (!sa.paper_shape && sa.config.empty()) throw Error("invalid_config", "need --paper-shape or --config");
            return cmd_synth(sa);
        }
        if (*serve) return cmd_serve(va);
    } catch (const Error& e) {
        std::cerr << "error [" << e.code() << "]: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    }
    return kExitOk;
}
