#include "roba/eval.h"

#include <cstdio>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "json.hpp"
#include "roba/error.h"
#include "roba/stats.h"
#include "roba/units.h"

namespace roba {
namespace {

// Iterated tangent-space averaging at the current estimate. Weights are
// 1 / max(d_j, floor) when l1 is set, uniform otherwise.
Rotation TangentAverage(const std::vector<Rotation>& rotations, bool l1,
                        const AlignOptions& options) {
  if (rotations.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "cannot average zero rotations");
  }
  if (rotations.size() == 1) return rotations.front();
  Rotation estimate = ChordalMean(rotations);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Rotation inverse = estimate.Inverse();
    RotationVector sum = RotationVector::Zero();
    double weight_sum = 0.0;
    for (const Rotation& q : rotations) {
      const RotationVector v = LogMap(inverse * q);
      const double w = l1 ? 1.0 / std::max(v.norm(), options.weight_floor) : 1.0;
      sum += w * v;
      weight_sum += w;
    }
    const RotationVector step = sum / weight_sum;
    estimate = estimate * ExpMap(step);
    if (step.norm() < options.step_tolerance) break;
  }
  return estimate;
}

}  // namespace

std::vector<Rotation> AlignmentResiduals(const std::vector<Rotation>& estimates,
                                         const std::vector<Rotation>& gt) {
  if (estimates.size() != gt.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "estimate and ground-truth lists differ in length");
  }
  if (estimates.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "rotation lists are empty");
  }
  std::vector<Rotation> residuals;
  residuals.reserve(gt.size());
  for (size_t j = 0; j < gt.size(); ++j) {
    residuals.push_back(estimates[j].Inverse() * gt[j]);
  }
  return residuals;
}

Rotation ChordalMean(const std::vector<Rotation>& rotations) {
  Mat3 sum = Mat3::Zero();
  for (const Rotation& r : rotations) sum += r.matrix();
  const Eigen::JacobiSVD<Mat3> svd(sum, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Eigen::Vector3d d(1.0, 1.0, (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  return Rotation::FromMatrix(u * d.asDiagonal() * v.transpose());
}

Rotation GeodesicMedian(const std::vector<Rotation>& rotations,
                        const AlignOptions& options) {
  return TangentAverage(rotations, /*l1=*/true, options);
}

Rotation GeodesicMean(const std::vector<Rotation>& rotations,
                      const AlignOptions& options) {
  return TangentAverage(rotations, /*l1=*/false, options);
}

Rotation AlignL1(const std::vector<Rotation>& estimates,
                 const std::vector<Rotation>& gt, const AlignOptions& options) {
  return GeodesicMedian(AlignmentResiduals(estimates, gt), options);
}

Rotation AlignL2(const std::vector<Rotation>& estimates,
                 const std::vector<Rotation>& gt, const AlignOptions& options) {
  return GeodesicMean(AlignmentResiduals(estimates, gt), options);
}

std::vector<double> AlignedErrors(const std::vector<Rotation>& estimates,
                                  const std::vector<Rotation>& gt,
                                  const Rotation& alignment) {
  if (estimates.size() != gt.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "estimate and ground-truth lists differ in length");
  }
  std::vector<double> errors;
  errors.reserve(gt.size());
  for (size_t j = 0; j < gt.size(); ++j) {
    errors.push_back(RadToDeg(GeodesicDistance(estimates[j] * alignment, gt[j])));
  }
  return errors;
}

ErrorReport ComputeErrorReport(const std::vector<Rotation>& estimates,
                               const std::vector<Rotation>& gt) {
  ErrorReport report;
  report.errors_l1 = AlignedErrors(estimates, gt, AlignL1(estimates, gt));
  report.errors_l2 = AlignedErrors(estimates, gt, AlignL2(estimates, gt));
  report.mn1 = Mean(report.errors_l1);
  report.md1 = Median(report.errors_l1);
  report.mn2 = Mean(report.errors_l2);
  report.md2 = Median(report.errors_l2);
  return report;
}

double MeanL1Error(const std::vector<Rotation>& estimates,
                   const std::vector<Rotation>& gt) {
  return Mean(AlignedErrors(estimates, gt, AlignL1(estimates, gt)));
}

std::string ReportToJson(const ErrorReport& report) {
  nlohmann::json doc;
  doc["mn1"] = report.mn1;
  doc["md1"] = report.md1;
  doc["mn2"] = report.mn2;
  doc["md2"] = report.md2;
  doc["errors_l1"] = report.errors_l1;
  doc["errors_l2"] = report.errors_l2;
  doc["units"] = "deg";
  return doc.dump(2) + "\n";
}

std::string ReportToCsv(const ErrorReport& report) {
  char row[160];
  std::snprintf(row, sizeof(row), "%.17g,%.17g,%.17g,%.17g\n", report.mn1,
                report.md1, report.mn2, report.md2);
  return std::string(kReportCsvHeader) + "\n" + row;
}

}  // namespace roba
