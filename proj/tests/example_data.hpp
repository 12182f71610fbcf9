#pragma once

#include "iqcd/statespace.hpp"

// Shared fixture: the uncertain plant of the worked example.
inline iqcd::UncertainPlant example_plant() {
    iqcd::Mat a(4, 4);
    a << -0.97, 2.2, 2.36, 3.45,
         -0.21, -0.8, 5.2, -0.35,
         -2.56, -4.97, -0.75, -9.75,
         -3.64, 0.2, 9.68, -0.64;
    iqcd::Mat bw(4, 1);
    bw << -0.62, -0.7, -1.42, 0.0;
    iqcd::Mat bd(4, 1);
    bd << -0.1, -0.32, -0.84, 0.0;
    iqcd::Mat cz(1, 4);
    cz << 0.0, -0.36, 0.36, -0.57;
    iqcd::Mat dzw(1, 1);
    dzw << -1.14;
    iqcd::Mat dzd(1, 1);
    dzd << -1.76;
    iqcd::Mat ce(2, 4);
    ce << 1.5, -0.11, 0.0, 0.93,
          0.1, 0.0, 0.0, 0.0;
    return iqcd::UncertainPlant(a, bw, bd, cz, dzw, dzd, ce);
}

inline iqcd::Interval example_interval() { return iqcd::Interval(-0.6, 5.0); }
