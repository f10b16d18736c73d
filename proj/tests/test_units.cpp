#include <gtest/gtest.h>

#include "qdsps/units.hpp"

using namespace qdsps::units;

TEST(Units, EnergyRoundTrip) {
  for (double e : {0.0, 0.0263, 1.0, 8.0, 19.163}) EXPECT_NEAR(rad_ps_to_mev(mev_to_rad_ps(e)), e, 1e-14 * (1 + e));
  EXPECT_NEAR(uev_to_rad_ps(1000.0), mev_to_rad_ps(1.0), 1e-15);
  EXPECT_NEAR(rad_ps_to_uev(uev_to_rad_ps(5.3)), 5.3, 1e-12);
}

TEST(Units, OneMilliElectronVolt) {
  // 1 meV / hbar with hbar = 0.6582119569 meV ps.
  EXPECT_NEAR(mev_to_rad_ps(1.0), 1.0 / 0.6582119569, 1e-15);
}

TEST(Units, RatesAndCyclicFrequencies) {
  EXPECT_DOUBLE_EQ(rate_ghz_to_ps(1.0), 1e-3);
  EXPECT_DOUBLE_EQ(rate_ps_to_ghz(0.1), 100.0);
  EXPECT_NEAR(cyclic_ghz_to_rad_ps(1.0), 2.0 * pi * 1e-3, 1e-18);
  EXPECT_NEAR(rad_ps_to_cyclic_ghz(cyclic_ghz_to_rad_ps(3.7)), 3.7, 1e-12);
}

TEST(Units, ThermalEnergy) { EXPECT_NEAR(thermal_energy(4.0), 0.34469332, 1e-12); }
