// parkctl: run the parking service, manage its registry over HTTP, and play
// simulator scenarios against it.
//
// Exit codes: 0 ok, 1 domain failure (4xx, failed assertion), 2 usage or I/O.

#include <CLI11.hpp>
#include <httplib.h>

#include "parking/api/http_server.hpp"
#include "parking/api/requests.hpp"
#include "parking/api/service.hpp"
#include "parking/link/device_hub.hpp"
#include "parking/link/tcp.hpp"
#include "parking/sim/simulator.hpp"
#include "parking/store/store.hpp"

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <thread>

namespace {

using parking::json;

constexpr int kOk = 0;
constexpr int kDomain = 1;
constexpr int kUsage = 2;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

struct Failure {
    int code;
    std::string message;
};

// --- HTTP client side --------------------------------------------------------

class Api {
public:
    explicit Api(const std::string& addr) : http_("http://" + addr) {
        http_.set_connection_timeout(std::chrono::seconds{5});
        http_.set_read_timeout(std::chrono::seconds{10});
    }

    /// Returns the parsed body of a 2xx response; throws Failure otherwise.
    json call(const std::string& method, const std::string& path, const json* body = nullptr,
              const std::string& token = {}) {
        httplib::Headers headers;
        if (!token.empty()) headers.emplace("Authorization", "Bearer " + token);
        httplib::Result r;
        const std::string payload = body ? body->dump() : std::string();
        if (method == "GET") {
            r = http_.Get(path, headers);
        } else if (method == "POST") {
            r = http_.Post(path, headers, payload, "application/json");
        } else if (method == "PUT") {
            r = http_.Put(path, headers, payload, "application/json");
        } else {
            r = http_.Delete(path, headers);
        }
        if (!r) throw Failure{kUsage, "cannot reach server: " + httplib::to_string(r.error())};
        last_status_ = r->status;
        json j = r->body.empty() ? json() : json::parse(r->body, nullptr, false);
        if (r->status >= 200 && r->status < 300) return j;
        std::string msg = "HTTP " + std::to_string(r->status);
        if (j.is_object() && j.contains("error")) {
            msg += ": " + j["error"].get<std::string>();
            if (j.contains("detail")) msg += " (" + j["detail"].get<std::string>() + ")";
        }
        throw Failure{r->status >= 500 ? kUsage : kDomain, msg};
    }

    int last_status() const { return last_status_; }

private:
    httplib::Client http_;
    int last_status_ = 0;
};

void print_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& r : rows) {
        width.resize(std::max(width.size(), r.size()));
        for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], r[i].size());
    }
    for (const auto& r : rows) {
        std::string line;
        for (std::size_t i = 0; i < r.size(); ++i) {
            line += r[i];
            if (i + 1 < r.size()) line += std::string(width[i] - r[i].size() + 2, ' ');
        }
        std::cout << line << '\n';
    }
}

std::string str(const json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); }

// --- serve -------------------------------------------------------------------

struct ServeOptions {
    std::string data_dir;
    std::string http = "127.0.0.1:8080";
    std::string device = "127.0.0.1:7070";
    int ttl_min = 30;
    int heartbeat_s = 5;
    bool allow_walk_in = false;
    bool no_sync = false;
};

int serve(const ServeOptions& o) {
    parking::store::StoreOptions so;
    so.engine.reservation_ttl = std::chrono::minutes{o.ttl_min};
    so.engine.allow_walk_in = o.allow_walk_in;
    so.sync = !o.no_sync;

    std::unique_ptr<parking::store::Store> store;
    try {
        store = parking::store::Store::open(o.data_dir, so);
    } catch (const parking::store::CorruptLog& e) {
        std::cerr << "parkctl: corrupt event log in " << o.data_dir << ": first bad seq "
                  << e.first_bad_seq() << " at byte " << e.offset() << "\n";
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "parkctl: cannot open data dir " << o.data_dir << ": " << e.what() << "\n";
        return kUsage;
    }
    if (store->recovered_torn_tail()) {
        std::cerr << "parkctl: dropped a torn record at the end of the event log\n";
    }

    parking::SystemClock clock;
    parking::api::ParkingService service(std::move(store), clock);
    parking::link::DeviceHub hub(std::chrono::seconds{o.heartbeat_s});
    parking::link::LinkServer link(service, hub);
    parking::api::HttpServer http(service, hub);

    try {
        const auto [dhost, dport] = parking::link::split_host_port(o.device);
        const auto [hhost, hport] = parking::link::split_host_port(o.http);
        const auto dbound = link.listen(dhost, dport);
        const auto hbound = http.listen(hhost, hport);
        http.set_device_link_addr(dhost + ":" + std::to_string(dbound));
        link.start();
        http.start();
        std::cout << "http on " << hhost << ":" << hbound << ", device link on " << dhost << ":"
                  << dbound << ", data in " << o.data_dir << std::endl;
    } catch (const std::exception& e) {
        std::cerr << "parkctl: " << e.what() << "\n";
        return kUsage;
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds{100});

    http.stop();
    link.stop();
    std::cout << "stopped" << std::endl;
    return kOk;
}

// --- registry commands -------------------------------------------------------

struct SpaceAdd {
    std::string name;
    std::int64_t capacity = 0;
    double lat = 0;
    double lon = 0;
    std::optional<std::int64_t> rate;
    std::int64_t unit_min = 60;
    std::int64_t free_min = 0;
    std::string currency = "UGX";
    std::string admin_name;
    std::string admin_contact;
    bool if_not_exists = false;
};

int space_add(Api& api, const SpaceAdd& a, bool as_json) {
    if (a.if_not_exists) {
        for (const auto& s : api.call("GET", "/spaces")) {
            if (s.at("name") == a.name) {
                if (as_json) {
                    std::cout << json{{"space_id", s.at("space_id")}, {"created", false}}.dump() << "\n";
                } else {
                    std::cout << str(s.at("space_id")) << " (exists)\n";
                }
                return kOk;
            }
        }
    }
    json body{{"name", a.name},
              {"capacity", a.capacity},
              {"location", {{"lat", a.lat}, {"lon", a.lon}}},
              {"admin", {{"name", a.admin_name}, {"contact", a.admin_contact}}},
              {"currency", a.currency}};
    if (a.rate) {
        body["tariff"] = {{"rate_per_unit", *a.rate},
                          {"billing_unit_minutes", a.unit_min},
                          {"free_minutes", a.free_min}};
    } else {
        body["tariff"] = {{"free", true}};
    }
    const json r = api.call("POST", "/spaces", &body);
    if (as_json) {
        std::cout << json{{"space_id", r["space"]["space_id"]},
                          {"device_token", r["device_token"]},
                          {"created", true}}
                         .dump()
                  << "\n";
    } else {
        std::cout << str(r["space"]["space_id"]) << "\n"
                  << "device token: " << str(r["device_token"]) << "\n";
    }
    return kOk;
}

int space_ls(Api& api, bool as_json) {
    const json spaces = api.call("GET", "/spaces");
    if (as_json) {
        std::cout << spaces.dump() << "\n";
        return kOk;
    }
    std::vector<std::vector<std::string>> rows{
        {"ID", "NAME", "CAPACITY", "VACANT", "RESERVED", "OCCUPIED", "EDGE"}};
    for (const auto& s : spaces) {
        rows.push_back({str(s["space_id"]), str(s["name"]), s["capacity"].dump(), s["vacant"].dump(),
                        s["reserved"].dump(), s["occupied"].dump(), str(s["edge"]["liveness"])});
    }
    print_table(rows);
    return kOk;
}

int space_show(Api& api, const std::string& id, bool as_json) {
    const json s = api.call("GET", "/spaces/" + id);
    if (as_json) {
        std::cout << s.dump() << "\n";
        return kOk;
    }
    std::cout << str(s["space_id"]) << "  " << str(s["name"]) << "  (" << s["vacant"] << " vacant, "
              << s["reserved"] << " reserved, " << s["occupied"] << " occupied)\n";
    std::vector<std::vector<std::string>> rows{{"SLOT", "STATE", "COLOR"}};
    for (const auto& slot : s["slots"]) {
        rows.push_back({slot["slot_no"].dump(), str(slot["state"]), str(slot["color"])});
    }
    print_table(rows);
    return kOk;
}

struct MotoristAdd {
    std::string full_name;
    std::string national_id;
    std::string uid;
    std::string nationality;
    std::string contact;
    bool if_not_exists = false;
};

int motorist_add(Api& api, const MotoristAdd& m, bool as_json) {
    json body{{"full_name", m.full_name},
              {"national_id", m.national_id},
              {"rfid_uid", m.uid},
              {"nationality", m.nationality},
              {"contact", m.contact}};
    json r;
    try {
        r = api.call("POST", "/motorists", &body);
    } catch (const Failure& f) {
        if (m.if_not_exists && api.last_status() == 409) {
            if (as_json) {
                std::cout << json{{"created", false}}.dump() << "\n";
            } else {
                std::cout << "already registered\n";
            }
            return kOk;
        }
        throw;
    }
    if (as_json) {
        std::cout << json{{"motorist_id", r["motorist"]["motorist_id"]},
                          {"access_token", r["access_token"]},
                          {"created", true}}
                         .dump()
                  << "\n";
    } else {
        std::cout << str(r["motorist"]["motorist_id"]) << "\n"
                  << "access token: " << str(r["access_token"]) << "\n";
    }
    return kOk;
}

int card_bind(Api& api, const std::string& motorist, const std::string& uid, const std::string& token,
              bool as_json) {
    json body{{"rfid_uid", uid}};
    const json r = api.call("PUT", "/motorists/" + motorist + "/card", &body, token);
    if (as_json) {
        std::cout << r.dump() << "\n";
    } else {
        std::cout << str(r["motorist_id"]) << " card " << str(r["rfid_uid"]) << "\n";
    }
    return kOk;
}

// --- sim ---------------------------------------------------------------------

int sim_run(const std::string& script_path, const std::string& against, const std::string& device,
            const std::string& trace_path) {
    parking::sim::ScenarioScript script;
    try {
        script = parking::sim::load_script(script_path);
    } catch (const parking::sim::ScriptError& e) {
        std::cerr << "parkctl: " << e.what() << "\n";
        return kUsage;
    }

    parking::sim::SimulationTrace trace;
    try {
        if (against.empty()) {
            trace = parking::sim::run_scenario(script);
        } else {
            parking::sim::RemoteCloud cloud(
                against, device.empty() ? std::nullopt : std::optional<std::string>(device));
            trace = parking::sim::run_scenario(script, cloud);
        }
    } catch (const std::exception& e) {
        std::cerr << "parkctl: " << e.what() << "\n";
        return kUsage;
    }

    if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        out << trace.to_jsonl();
        if (!out) {
            std::cerr << "parkctl: cannot write " << trace_path << "\n";
            return kUsage;
        }
    }
    std::cout << trace.assertions - trace.failures << "/" << trace.assertions
              << " assertions passed, " << trace.events.size() << " trace events\n";
    if (!trace.passed()) {
        std::cerr << "first failure: " << trace.first_failure->dump() << "\n";
        return kDomain;
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Smart parking service and tools"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all");

    std::string server = "127.0.0.1:8080";
    bool as_json = false;
    auto add_client_opts = [&](CLI::App* cmd) {
        cmd->add_option("--server", server, "HTTP address of the service")
            ->envname("PARKING_SERVER")
            ->capture_default_str();
        cmd->add_flag("--json", as_json, "Machine-readable output");
    };

    ServeOptions so;
    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API and the device link");
    serve_cmd->add_option("--data-dir", so.data_dir, "Data directory")
        ->envname("PARKING_DATA_DIR")
        ->required();
    serve_cmd->add_option("--http", so.http, "HTTP listen address")
        ->envname("PARKING_HTTP")
        ->capture_default_str();
    serve_cmd->add_option("--device", so.device, "Device-link listen address")
        ->envname("PARKING_DEVICE")
        ->capture_default_str();
    serve_cmd->add_option("--ttl-min", so.ttl_min, "Reservation TTL in minutes")
        ->envname("PARKING_TTL_MIN")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    serve_cmd->add_option("--heartbeat-s", so.heartbeat_s, "Edge heartbeat interval in seconds")
        ->envname("PARKING_HEARTBEAT_S")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    serve_cmd->add_flag("--allow-walk-in", so.allow_walk_in,
                        "Let registered cards without a reservation take a vacant slot");
    serve_cmd->add_flag("--no-sync", so.no_sync, "Skip fdatasync after each event");

    auto* space_cmd = app.add_subcommand("space", "Parking spaces");
    space_cmd->require_subcommand(1);
    SpaceAdd sa;
    auto* space_add_cmd = space_cmd->add_subcommand("add", "Register a parking space");
    add_client_opts(space_add_cmd);
    space_add_cmd->add_option("--name", sa.name)->required();
    space_add_cmd->add_option("--capacity", sa.capacity)->required();
    space_add_cmd->add_option("--lat", sa.lat)->required();
    space_add_cmd->add_option("--lon", sa.lon)->required();
    space_add_cmd->add_option("--rate", sa.rate, "Charge per billing unit (minor units); omit for free");
    space_add_cmd->add_option("--unit-min", sa.unit_min, "Billing unit in minutes")->capture_default_str();
    space_add_cmd->add_option("--free-min", sa.free_min, "Free minutes before billing")->capture_default_str();
    space_add_cmd->add_option("--currency", sa.currency)->capture_default_str();
    space_add_cmd->add_option("--admin-name", sa.admin_name);
    space_add_cmd->add_option("--admin-contact", sa.admin_contact);
    space_add_cmd->add_flag("--if-not-exists", sa.if_not_exists, "Succeed if a space with this name exists");
    auto* space_ls_cmd = space_cmd->add_subcommand("ls", "List spaces");
    add_client_opts(space_ls_cmd);
    std::string space_id;
    auto* space_show_cmd = space_cmd->add_subcommand("show", "Show a space slot by slot");
    add_client_opts(space_show_cmd);
    space_show_cmd->add_option("id", space_id)->required();

    auto* motorist_cmd = app.add_subcommand("motorist", "Motorists");
    motorist_cmd->require_subcommand(1);
    MotoristAdd ma;
    auto* motorist_add_cmd = motorist_cmd->add_subcommand("add", "Register a motorist");
    add_client_opts(motorist_add_cmd);
    motorist_add_cmd->add_option("--name", ma.full_name)->required();
    motorist_add_cmd->add_option("--national-id", ma.national_id)->required();
    motorist_add_cmd->add_option("--uid", ma.uid, "RFID card UID (hex)")->required();
    motorist_add_cmd->add_option("--nationality", ma.nationality);
    motorist_add_cmd->add_option("--contact", ma.contact);
    motorist_add_cmd->add_flag("--if-not-exists", ma.if_not_exists,
                               "Succeed if the card or national id is already registered");

    auto* card_cmd = app.add_subcommand("card", "RFID cards");
    card_cmd->require_subcommand(1);
    std::string bind_motorist, bind_uid, bind_token;
    auto* card_bind_cmd = card_cmd->add_subcommand("bind", "Bind a new card to a motorist");
    add_client_opts(card_bind_cmd);
    card_bind_cmd->add_option("--motorist", bind_motorist)->required();
    card_bind_cmd->add_option("--uid", bind_uid)->required();
    card_bind_cmd->add_option("--token", bind_token, "The motorist's access token")
        ->envname("PARKING_TOKEN")
        ->required();

    auto* sim_cmd = app.add_subcommand("sim", "Edge simulator");
    sim_cmd->require_subcommand(1);
    std::string script_path, against, device, trace_path;
    auto* sim_run_cmd = sim_cmd->add_subcommand("run", "Run a scenario script");
    sim_run_cmd->add_option("script", script_path, "Scenario JSON")->required();
    sim_run_cmd->add_option("--against", against,
                            "HTTP address of a running service (default: in-process cloud)");
    sim_run_cmd->add_option("--device", device, "Device-link address (default: from GET /info)");
    sim_run_cmd->add_option("--trace", trace_path, "Write the JSONL trace here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*serve_cmd) return serve(so);
        if (*sim_run_cmd) return sim_run(script_path, against, device, trace_path);
        Api api(server);
        if (*space_add_cmd) return space_add(api, sa, as_json);
        if (*space_ls_cmd) return space_ls(api, as_json);
        if (*space_show_cmd) return space_show(api, space_id, as_json);
        if (*motorist_add_cmd) return motorist_add(api, ma, as_json);
        if (*card_bind_cmd) return card_bind(api, bind_motorist, bind_uid, bind_token, as_json);
    } catch (const Failure& f) {
        std::cerr << "parkctl: " << f.message << "\n";
        return f.code;
    }
    return kUsage;
}
