#include "fdkin/commands.hpp"
#include "fdkin/config.hpp"
#include "fdkin/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace fdkin;

TEST_CASE("defaults and overrides")
{
    const auto c = parse_config_text("kernel.family = rutherford\nkernel.p = 1.3  # comment\n\nT = 5\n");
    CHECK(c.kernel.family == "rutherford");
    CHECK(c.kernel.p == 1.3);
    CHECK(c.T == 5.0);
    CHECK(c.grid.n == 16);
    const auto q = build_quadrature(c, build_kernel(c.kernel));
    CHECK(q.kind == SphereRuleKind::jacobi_adapted);
}

TEST_CASE("config errors name the problem")
{
    auto message = [](const std::string& text) {
        try {
            parse_config_text(text, "x.cfg");
        } catch (const ConfigError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("grid.n = 16\nbogus = 1\n").find("x.cfg:2") != std::string::npos);
    CHECK(message("grid.n = sixteen\n").find("grid.n") != std::string::npos);
    CHECK(message("T = 1\nT = 2\n").find("T") != std::string::npos);
    CHECK_FALSE(message("kernel.family = inverse_power\nkernel.alpha = 3.5\n").empty());
    CHECK_FALSE(message("kernel.family = rutherford\nquad.kind = lebedev_like\n").empty());
    CHECK_FALSE(message("scheme = rk4\n").empty());
}

TEST_CASE("missing file is an I/O error")
{
    CHECK_THROWS_AS(parse_config_file("/nonexistent/fdkin.cfg"), IoError);
}

TEST_CASE("kernel command writes its report")
{
    const auto dir = std::filesystem::temp_directory_path() / "fdkin_test_kernel";
    std::filesystem::create_directories(dir);
    const auto c = parse_config_text("kernel.family = rutherford\nkernel.p = 1.25\noutput.prefix = k\n");
    const Json j = execute("kernel", c, dir.string());
    CHECK(std::filesystem::exists(dir / "k_kernel.json"));
    CHECK(j.contains("cp_series"));
    CHECK_THROWS_AS(execute("nope", c, dir.string()), ConfigError);
    std::filesystem::remove_all(dir);
}
