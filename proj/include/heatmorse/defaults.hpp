#pragma once

// Every tunable default in one place. Runs embed the resolved values in their
// records, so changing a number here changes the record, not just the output.

namespace heatmorse::defaults {

// Grids for C^r norms: torus points per axis = factor * (max|k|_inf + 1);
// sphere sample count = factor * (j_max + 1)^2.
inline constexpr int kTorusGridFactor = 4;
inline constexpr int kSphereSampleFactor = 50;

// Critical-point census.
inline constexpr double kGradTol = 1e-10;   // Newton acceptance, relative to max |coeff|
inline constexpr double kMergeTol = 1e-6;   // geodesic dedup radius
inline constexpr double kDegTol = 1e-8;     // times the Hessian entry scale
inline constexpr double kBorderlineFactor = 10.0;
inline constexpr int kMaxNewtonIter = 100;
inline constexpr double kTorusSeedFactor = 6.0;    // seeds per axis = ceil(f * (max|k|+1))
inline constexpr double kSphereSeedFactor = 200.0; // seeds = f * (j_max+1)^2

// Heat flow truncation.
inline constexpr double kTMin = 1.0;
inline constexpr double kSphereConstant = 1.0;  // C_n in the harmonic C^r estimate
inline constexpr int kTruncationCap = 64;
inline constexpr double kTruncationTol = 1e-10;

// Experiments.
inline constexpr int kCoarseSteps = 64;
inline constexpr double kCoarseTStart = 0.01;
inline constexpr double kTMax = 10.0;
inline constexpr double kRefineTol = 1e-3;
inline constexpr double kDecayTLo = 3.0;
inline constexpr double kDecayTHi = 10.0;
inline constexpr int kDecaySamples = 32;
inline constexpr double kResidualFloor = 1e-14;
inline constexpr int kMinDecaySamples = 4;
inline constexpr double kRandomDecay = 1.0;
inline constexpr int kRandomJMax = 2;
inline constexpr double kTProbe = 5.0;
inline constexpr int kPerturbationJMax = 3;

inline constexpr const char* kToolVersion = "heatmorse 0.1.0";

}  // namespace heatmorse::defaults
