#include <cmath>
#include <functional>
#include <sstream>

#include "doctest.h"
#include "qmem/csv.hpp"
#include "qmem/errors.hpp"
#include "qmem/least_squares.hpp"

using namespace qmem;
using doctest::Approx;

namespace
{

Errc code_of(const std::function<void()> &fn)
{
    try {
        fn();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("no qmem::Error thrown");
    return Errc::invalid_argument;
}

} // namespace

TEST_SUITE("support")
{
    TEST_CASE("csv round trip keeps every bit")
    {
        std::ostringstream out;
        csv::write_header(out, {"a", "b"});
        const double values[] = {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23};
        for (double v : values)
            out << csv::format_number(v) << ',' << csv::format_number(-v) << '\n';
        std::istringstream in(out.str());
        const csv::Table t = csv::read(in, std::vector<std::string>{"a", "b"});
        REQUIRE(t.rows.size() == 4);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(t.rows[i][0] == values[i]);
            CHECK(t.rows[i][1] == -values[i]);
        }
    }

    TEST_CASE("csv errors name the line")
    {
        std::istringstream wrong_header("x,y\n1,2\n");
        CHECK(code_of([&] { csv::read(wrong_header, std::vector<std::string>{"a", "b"}); }) == Errc::format_error);

        std::istringstream bad_number("a,b\n1,2\n3,oops\n");
        try {
            csv::read(bad_number, std::vector<std::string>{"a", "b"});
            FAIL("expected a format error");
        } catch (const Error &e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }

        std::istringstream short_row("a,b\n1\n");
        CHECK(code_of([&] { csv::read(short_row, std::vector<std::string>{"a", "b"}); }) == Errc::format_error);
        std::istringstream crlf("a,b\r\n1,2\r\n");
        CHECK(code_of([&] { csv::read(crlf, std::vector<std::string>{"a", "b"}); }) == Errc::format_error);
        std::istringstream empty("");
        CHECK(code_of([&] { csv::read(empty, std::vector<std::string>{"a", "b"}); }) == Errc::format_error);
        std::istringstream comma_decimal("a,b\n\"1,5\",2\n");
        CHECK(code_of([&] { csv::read(comma_decimal, std::vector<std::string>{"a", "b"}); }) == Errc::format_error);
    }

    TEST_CASE("least squares recovers an exponential exactly")
    {
        const int m = 40;
        lsq::ResidualFn fn = [&](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
            for (int i = 0; i < m; ++i) {
                const double t = 0.1 * i;
                r[i] = p[0] * std::exp(-p[1] * t) - 2.0 * std::exp(-0.7 * t);
            }
        };
        Eigen::VectorXd x0(2);
        x0 << 1.0, 0.3;
        const lsq::Result res = lsq::minimize(fn, m, x0);
        CHECK(res.params[0] == Approx(2.0).epsilon(1e-10));
        CHECK(res.params[1] == Approx(0.7).epsilon(1e-10));
        CHECK(res.residual_norm < 1e-10);
    }

    TEST_CASE("numeric jacobian matches the analytic one")
    {
        lsq::ResidualFn fn = [](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
            r[0] = p[0] * p[1];
            r[1] = std::sin(p[0]);
            r[2] = p[1] * p[1];
        };
        Eigen::VectorXd x(2);
        x << 0.4, 1.7;
        const Eigen::MatrixXd J = lsq::numeric_jacobian(fn, x, 3);
        CHECK(J(0, 0) == Approx(1.7).epsilon(1e-7));
        CHECK(J(0, 1) == Approx(0.4).epsilon(1e-7));
        CHECK(J(1, 0) == Approx(std::cos(0.4)).epsilon(1e-7));
        CHECK(std::abs(J(1, 1)) < 1e-9);
        CHECK(J(2, 1) == Approx(3.4).epsilon(1e-7));
    }

    TEST_CASE("unidentifiable parameters are reported")
    {
        // Only the sum p0 + p1 enters.
        lsq::ResidualFn fn = [](const Eigen::VectorXd &p, Eigen::VectorXd &r) {
            for (int i = 0; i < 5; ++i)
                r[i] = (p[0] + p[1]) * i - 3.0 * i;
        };
        Eigen::VectorXd x0(2);
        x0 << 1.0, 1.0;
        CHECK(code_of([&] { lsq::minimize(fn, 5, x0); }) == Errc::degenerate_jacobian);
    }

    TEST_CASE("error codes have stable names")
    {
        CHECK(to_string(Errc::step_too_large) == "StepTooLarge");
        CHECK(to_string(Errc::no_peak_found) == "NoPeakFound");
    }
}
