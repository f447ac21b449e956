#include <atomic>
#include <chrono>
#include <csignal>
#include <filesystem>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mscout/errors.hpp"
#include "mscout/registry.hpp"
#include "mscout/service.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop = true; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"serve a model registry over HTTP"};
    std::string registry_path;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t async_threshold = 0;
    bool create = false;
    std::uint64_t partition_size = 500;
    std::uint32_t bins = 32;
    bool save_on_exit = true;

    app.add_option("--registry", registry_path, "registry file")->required();
    app.add_option("--host", host, "bind address");
    app.add_option("--port", port, "port, 0 picks a free one");
    app.add_option("--async-threshold", async_threshold,
                   "partition count above which registration returns 202");
    app.add_flag("--create", create, "create the registry if absent");
    app.add_option("--partition-size", partition_size, "rows per partition for --create");
    app.add_option("--bins", bins, "bins per numeric feature for --create");
    app.add_flag("!--no-save", save_on_exit, "skip writing the registry on shutdown");
    CLI11_PARSE(app, argc, argv);

    try {
        mscout::Registry registry = [&]() {
            if (create && !std::filesystem::exists(registry_path)) {
                mscout::RegistryParams params;
                params.partition_size_m = partition_size;
                params.bins_per_numeric_feature = bins;
                return mscout::Registry(params);
            }
            return mscout::Registry::load(registry_path);
        }();

        mscout::ServiceOptions options;
        options.host = host;
        options.port = port;
        options.async_threshold_partitions = async_threshold;
        mscout::Service service(registry, options);
        const int bound = service.start();
        std::cout << "serving " << registry.size() << " models on " << host << ":"
                  << bound << "\n"
                  << std::flush;

        std::signal(SIGINT, handle_signal);
        std::signal(SIGTERM, handle_signal);
        while (!g_stop.load()) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100));
        }
        service.stop();
        if (save_on_exit) registry.save(registry_path);
        return 0;
    } catch (const mscout::CorruptionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
