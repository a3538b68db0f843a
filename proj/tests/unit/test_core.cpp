#include <cmath>

#include "doctest.h"
#include "qmem/core.hpp"

using namespace qmem;
using doctest::Approx;

TEST_SUITE("core")
{
    TEST_CASE("thermal occupation vanishes at zero temperature")
    {
        CHECK(thermal_occupation(Frequency(100e6), Temperature(0.0)) == 0.0);
    }

    TEST_CASE("thermal occupation is 1/(e-1) when hbar w equals k_B T")
    {
        const Frequency f(100e6);
        const Temperature T(constants::hbar * f.angular() / constants::k_B);
        CHECK(thermal_occupation(f, T) == Approx(1.0 / (std::exp(1.0) - 1.0)).epsilon(1e-13));
        CHECK(thermal_occupation(f, T) == Approx(0.58198).epsilon(1e-5));
    }

    TEST_CASE("thermal occupation at 97.2 MHz and 10 mK matches a 40-digit evaluation")
    {
        // mpmath, 40 significant digits, same constants.
        const double oracle = 1.682418702937247433787534566637073818817;
        CHECK(thermal_occupation(Frequency(97.2e6), Temperature(0.01)) == Approx(oracle).epsilon(1e-13));
    }

    TEST_CASE("decoherence time in the quantum limit is Q over omega")
    {
        const double tau = thermal_decoherence_time(1e6, Frequency(1e9), Temperature(0.0));
        CHECK(tau == Approx(1e6 / (2.0 * M_PI * 1e9)).epsilon(1e-14));
        CHECK(tau == Approx(1.59e-4).epsilon(3e-3));
    }

    TEST_CASE("decoherence time at 10 mK sits between the two asymptotes")
    {
        const double Q = 6.8e5;
        const Frequency f(97.2e6);
        const Temperature T(0.01);
        const double tau = thermal_decoherence_time(Q, f, T);
        const double quantum = Q / f.angular();
        const double classical = constants::hbar * Q / (constants::k_B * T.kelvin());
        // tau = (Q/w)(1 - e^-x) with x = hbar w / k_B T, so it sits under both
        // asymptotes and above the classical one's first-order correction.
        const double x = constants::hbar * f.angular() / (constants::k_B * T.kelvin());
        CHECK(tau < quantum);
        CHECK(tau < classical);
        CHECK(tau > classical * (1.0 - 0.5 * x));
        CHECK(tau == Approx(4.150842080733017e-4).epsilon(1e-12));
        CHECK(tau > 1e-4);
        CHECK(tau < 1e-3);
    }

    TEST_CASE("decoherence time approaches Q over omega continuously as T goes to zero")
    {
        const double Q = 1e5;
        const Frequency f(97.2e6);
        const double limit = Q / f.angular();
        double prev = 0.0;
        for (double T : {1e-2, 3e-3, 1e-3, 3e-4}) {
            const double tau = thermal_decoherence_time(Q, f, Temperature(T));
            CHECK(tau >= prev);
            prev = tau;
        }
        CHECK(prev == Approx(limit).epsilon(1e-6));
    }

    TEST_CASE("classical limit reduces to hbar Q over k_B T")
    {
        const double Q = 1e5;
        const Frequency f(1e6);
        const Temperature T(300.0);
        CHECK(thermal_decoherence_time(Q, f, T) ==
              Approx(constants::hbar * Q / (constants::k_B * 300.0)).epsilon(1e-3));
    }

    TEST_CASE("occupation increases with T and decreases with f")
    {
        double prev = -1.0;
        for (double T = 1e-3; T < 10.0; T *= 1.7) {
            const double n = thermal_occupation(Frequency(97.2e6), Temperature(T));
            CHECK(n > prev);
            prev = n;
        }
        prev = INFINITY;
        for (double f = 1e6; f < 1e10; f *= 2.3) {
            const double n = thermal_occupation(Frequency(f), Temperature(0.05));
            CHECK(n < prev);
            prev = n;
        }
    }

    TEST_CASE("decoherence time is non-increasing in T")
    {
        double prev = INFINITY;
        for (double T = 0.0; T < 5.0; T = T * 1.5 + 1e-3) {
            const double tau = thermal_decoherence_time(6.8e5, Frequency(97.2e6), Temperature(T));
            CHECK(tau <= prev);
            prev = tau;
        }
    }

    TEST_CASE("angular round trip is exact")
    {
        for (double hz : {1.0, 97.2e6, 1.13e9, 3.3e-2, 5.0e9}) {
            const Frequency f(hz);
            CHECK(Frequency::from_angular(f.angular()).hz() == hz);
        }
    }

    TEST_CASE("invalid quantities are rejected")
    {
        CHECK_THROWS_AS(Frequency(0.0), Error);
        CHECK_THROWS_AS(Frequency(-1.0), Error);
        CHECK_THROWS_AS(Temperature(-1e-3), Error);
        FrequencyTrace bad{{1.0, 2.0, 2.0}, {0.0, 0.0, 0.0}};
        CHECK_THROWS_AS(bad.validate(), Error);
        FrequencyTrace mismatched{{1.0, 2.0}, {0.0}};
        CHECK_THROWS_AS(mismatched.validate(), Error);
        TimeTrace back{{0.0, -1.0}, {1.0, 1.0}};
        CHECK_THROWS_AS(back.validate(), Error);
    }
}
