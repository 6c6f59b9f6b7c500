#include <doctest.h>

#include <cstdlib>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "nalpha/synth/generator.hpp"
#include "support.hpp"

using namespace nalpha;

namespace {

const std::filesystem::path kCli = NALPHA_CLI_PATH;
const std::filesystem::path kFixture = std::filesystem::path(NALPHA_FIXTURE_DIR) / "fixture.toml";

// Exit status of the CLI with stdout captured to `out` and stderr discarded.
int cli(const std::string& args, const std::filesystem::path& out) {
    const std::string cmd = kCli.string() + " " + args + " > " + out.string() + " 2>/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string data_config(const std::filesystem::path& data) {
    std::string s = "seed = 3\n[data]\n";
    for (const char* f : {"reports", "embeddings", "market", "chars", "factors", "calendar", "numerics", "earnings"}) {
        const std::string ext = std::string(f) == "embeddings" ? ".bin" : ".csv";
        s += std::string(f) + " = \"" + (data / (std::string(f) + ext)).string() + "\"\n";
    }
    s += "[forecast]\nburn_in_months = 12\ngrid = \"1,100\"\n";
    s += "[portfolio]\nlookbacks = [3]\nprimary_lookback = 3\n";
    s += "[event_study]\nhorizon = 21\nbins = 2\n";
    return s;
}

}  // namespace

TEST_CASE("usage and configuration errors exit with 1") {
    testing::TempDir dir("cli-err");
    const auto out = dir / "stdout.txt";
    CHECK(cli("", out) == 1);
    CHECK(cli("frobnicate", out) == 1);
    CHECK(cli("ingest", out) == 1);
    CHECK(cli("ingest --config " + (dir / "missing.toml").string(), out) == 1);

    testing::write_text(dir / "bad.toml", "seed = 1\ncolour = 2\n[synth]\n");
    CHECK(cli("ingest --config " + (dir / "bad.toml").string(), out) == 1);
    testing::write_text(dir / "broken.toml", "seed = [\n");
    CHECK(cli("ingest --config " + (dir / "broken.toml").string(), out) == 1);
    testing::write_text(dir / "nodata.toml", "seed = 1\n");
    CHECK(cli("ingest --config " + (dir / "nodata.toml").string(), out) == 1);
}

TEST_CASE("synth then the stage subcommands") {
    testing::TempDir dir("cli-stages");
    const auto out = dir / "stdout.txt";
    auto spec = testing::small_spec(11);
    spec.n_firms = 40;
    spec.n_months = 18;
    spec.burn_in_months = 12;
    testing::write_text(dir / "spec.json", synth::spec_to_json(spec).dump());
    REQUIRE(cli("synth --spec " + (dir / "spec.json").string() + " --out " + (dir / "data").string(), out) == 0);
    CHECK(nlohmann::json::parse(testing::read_text(out))["reports"].get<std::size_t>() > 0);

    testing::write_text(dir / "cfg.toml", data_config(dir / "data"));
    const std::string cfg = " --config " + (dir / "cfg.toml").string();

    REQUIRE(cli("ingest" + cfg, out) == 0);
    const auto ing = nlohmann::json::parse(testing::read_text(out));
    CHECK(ing["firms"] == 40);
    CHECK(ing["rejects"] == 0);

    REQUIRE(cli("forecast" + cfg + " --out " + (dir / "fc.csv").string(), out) == 0);
    CHECK(nlohmann::json::parse(testing::read_text(out))["audit_violations"] == 0);
    CHECK(cli("forecast" + cfg + " --policy psychic --out " + (dir / "x.csv").string(), out) == 1);

    const std::string fc = " --signal " + (dir / "fc.csv").string();
    REQUIRE(cli("backtest" + cfg + fc + " --lb 3 --out " + (dir / "bt.json").string() + " --series " +
                    (dir / "series.csv").string(),
                out) == 0);
    const auto bt = nlohmann::json::parse(testing::read_text(dir / "bt.json"));
    CHECK(bt.contains("H-L"));
    CHECK(bt["deciles"].size() == 10);
    CHECK(std::filesystem::exists(dir / "series.csv"));

    CHECK(cli("eventstudy" + cfg + fc + " --horizon 21 --bins 2 --out " + (dir / "curves.csv").string(), out) == 0);
    CHECK(std::filesystem::exists(dir / "curves.csv"));
    CHECK(cli("signals" + cfg + " --out " + (dir / "signals.csv").string(), out) == 0);
    CHECK(std::filesystem::exists(dir / "signals.csv"));
    CHECK(cli("shapley" + cfg + " --lb 3 --mode guess --out " + (dir / "s.json").string(), out) == 1);
}

TEST_CASE("run writes a manifest") {
    testing::TempDir dir("cli-run");
    const auto out = dir / "stdout.txt";
    REQUIRE(cli("run --config " + kFixture.string() + " --seed 7 --out " + (dir / "run").string(), out) == 0);
    const auto manifest = nlohmann::json::parse(testing::read_text(dir / "run" / "manifest.json"));
    CHECK(manifest["status"] == "ok");
    CHECK(nlohmann::json::parse(testing::read_text(out))["artifacts"].size() == 9);
}
