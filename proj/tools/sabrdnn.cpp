#include <cstdio>

#include "commands.hpp"
#include "sabrdnn/error.hpp"
#include "sabrdnn/manifest.hpp"

using namespace sabrdnn;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return cli::kUsage;
        case ErrorKind::Io: return cli::kIo;
        case ErrorKind::Format:
        case ErrorKind::InvalidParameter:
        case ErrorKind::Domain: return cli::kData;
        case ErrorKind::Numerical: return cli::kNumerical;
    }
    return cli::kUnexpected;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Shifted-SABR Monte Carlo, neural surrogate and calibration toolkit", "sabrdnn"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "TOML file with option values");
    app.require_subcommand(1);
    cli::register_commands(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : cli::kUsage;
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return cli::kUnexpected;
    }
    return cli::kOk;
}
