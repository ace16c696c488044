#pragma once

#include <string>
#include <vector>

#include "roba/so3.h"

namespace roba {

struct AlignOptions {
  // Weiszfeld weight floor, radians.
  double weight_floor = 1e-9;
  // Stop once an update moves the estimate by less than this, radians.
  double step_tolerance = 1e-10;
  int max_iterations = 100;
};

// Residuals Q_j = R_j^T R_j^gt, the per-camera gauge offsets. Throws
// Error(kInvalidArgument) on unequal lengths or empty input.
std::vector<Rotation> AlignmentResiduals(const std::vector<Rotation>& estimates,
                                         const std::vector<Rotation>& gt);

// Projection of the arithmetic mean of the rotation matrices onto SO(3).
Rotation ChordalMean(const std::vector<Rotation>& rotations);

// Geodesic L1 median of the rotations (Weiszfeld, chordal-mean start).
Rotation GeodesicMedian(const std::vector<Rotation>& rotations,
                        const AlignOptions& options = {});
// Geodesic L2 mean of the rotations (tangent-space averaging).
Rotation GeodesicMean(const std::vector<Rotation>& rotations,
                      const AlignOptions& options = {});

// Right-multiplier R_L minimizing sum_j d(R_j R_L, R_j^gt), i.e. the L1
// median of the residuals.
Rotation AlignL1(const std::vector<Rotation>& estimates,
                 const std::vector<Rotation>& gt,
                 const AlignOptions& options = {});
// Same under squared distances.
Rotation AlignL2(const std::vector<Rotation>& estimates,
                 const std::vector<Rotation>& gt,
                 const AlignOptions& options = {});

// Per-camera errors d(R_j R_L, R_j^gt) in degrees.
std::vector<double> AlignedErrors(const std::vector<Rotation>& estimates,
                                  const std::vector<Rotation>& gt,
                                  const Rotation& alignment);

// Mean and median angular errors in degrees after L1 and L2 alignment.
struct ErrorReport {
  double mn1 = 0.0;
  double md1 = 0.0;
  double mn2 = 0.0;
  double md2 = 0.0;
  std::vector<double> errors_l1;
  std::vector<double> errors_l2;
};

ErrorReport ComputeErrorReport(const std::vector<Rotation>& estimates,
                               const std::vector<Rotation>& gt);

// Mean error after L1 alignment only, degrees.
double MeanL1Error(const std::vector<Rotation>& estimates,
                   const std::vector<Rotation>& gt);

inline constexpr const char* kReportCsvHeader = "mn1,md1,mn2,md2";

std::string ReportToJson(const ErrorReport& report);
// Header line plus one data row.
std::string ReportToCsv(const ErrorReport& report);

}  // namespace roba
