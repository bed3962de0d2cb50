#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pdg/ccs_dataset.hpp"

namespace pdg {

struct ReducedState2 {
  double s1 = 0.0;  // S / v, s
  double s2 = 0.0;  // H / w, s
};

ReducedState2 reduce2(const ReducedGuidanceState& s);  // UndefinedReduction if v or w <= 0

using Feature5 = Eigen::Matrix<double, 5, 1>;

// [s1, s2, s1^2, s2^2, s1 s2]
Feature5 featurize(const ReducedState2& s);

struct ConicCoefficients {
  double A = 0, B = 0, C = 0, D = 0, E = 0, F = 0;
  double operator()(double s1, double s2) const {
    return A * s1 * s1 + B * s1 * s2 + C * s2 * s2 + D * s1 + E * s2 + F;
  }
};

struct CanonicalConic {
  double h = 0, k = 0, theta = 0, M1 = 0, M2 = 0, lambda = 0;
  double Abar = 0, Bbar = 0, Cbar = 0;
};

struct Level2Shift {
  double dh = 0, dk = 0, dtheta = 0;
  double norm() const { return std::sqrt(dh * dh + dk * dk + dtheta * dtheta); }
};

struct ConicBoundary {
  CanonicalConic canonical;
  Level2Shift delta;
  double sign = 1.0;  // multiplies the raw conic so that g > 0 means controllable
  double eta = 0.01;
};

struct SvmSample {
  Feature5 Z;
  int d = 1;
};

struct SvmOptions {
  double tol = 1e-6;
  long max_iter = 20000000;
};

struct Level1Model {
  Feature5 c = Feature5::Zero();  // raw feature space
  double b = 0.0;
  double gamma = 1.0;
  Feature5 w_std = Feature5::Zero();  // standardized space
  double b_std = 0.0;
  Feature5 mean = Feature5::Zero(), sd = Feature5::Ones();
  Eigen::VectorXd alpha;
  std::vector<int> support;
  Eigen::VectorXd slack;
  long iterations = 0;

  double decision(const Feature5& Z) const { return c.dot(Z) + b; }
  double decision_std(const Feature5& Z) const;
};

// Soft-margin SVM in the explicit feature space, dual SMO with a linear
// kernel on z-scored features. Throws DegenerateLabels, NonConvergence.
Level1Model fit_level1(const std::vector<SvmSample>& data, double gamma, const SvmOptions& opts = {});

struct SvmKkt {
  double dual_feasibility = 0;    // bound and equality violation
  double complementarity = 0;     // worst margin condition given alpha
  double primal_feasibility = 0;  // worst d f >= 1 - slack violation
};
SvmKkt level1_kkt(const Level1Model& m, const std::vector<SvmSample>& data);

struct GammaCvResult {
  std::vector<double> gammas;
  std::vector<double> balanced_accuracy;
  std::size_t chosen = 0;
  Level1Model model;
};
GammaCvResult fit_level1_cv(const std::vector<SvmSample>& data, const std::vector<double>& gammas,
                            int folds = 5, const SvmOptions& opts = {});

ConicCoefficients to_general_conic(const Level1Model& m);
CanonicalConic canonicalize(const ConicCoefficients& q);
// Inverse map; reproduces the source conic scaled by -1/lambda.
ConicCoefficients from_canonical(const CanonicalConic& c);

// Decision function of the perturbed canonical conic.
template <class T>
T eval_g_impl(const T& h, const T& k, const T& cth, const T& sth, const T& M1, const T& M2,
              const T& sign, const T& s1, const T& s2) {
  const T x = s1 - h;
  const T y = s2 - k;
  const T X = cth * x + sth * y;
  const T Y = cth * y - sth * x;
  return sign * (M1 * X * X + M2 * Y * Y - T(1));
}

// Principal coefficients of (Abar, Bbar, Cbar) rotated by theta.
void principal_coeffs(const CanonicalConic& c, double theta, double& M1, double& M2);

double eval_g(const ConicBoundary& b, const ReducedState2& s);
double eval_g(const ConicBoundary& b, const Level2Shift& delta, const ReducedState2& s);

// Boundary built from a Level-1 model with no shift; sign binds g > 0 to the
// Level-1 controllable side.
ConicBoundary boundary_from_level1(const Level1Model& m, double eta);

struct Level2Options {
  double eta = 0.01;
  int grid = 41;           // points per axis
  double theta_span = std::numbers::pi / 2;
  double tol = 1e-6;
};

struct Level2Report {
  ConicBoundary boundary;
  int grid_feasible = 0;
  double max_neg_g = 0;          // max g over d = -1 samples after the fit
  double shrinkage = 0;          // fraction of +1 samples with g <= 0
  int level1_misclassified = 0;  // samples misclassified at delta = 0 (both classes)
  int level1_false_controllable = 0;
};

Level2Report fit_level2(const ConicBoundary& boundary0, const std::vector<ReducedState2>& s,
                        const std::vector<int>& d, const Level2Options& opts = {});

// Polyline of the zero set, swept by angle about the (shifted) center.
struct PolylinePoint {
  int segment = 0;
  double s1 = 0, s2 = 0;
};
std::vector<PolylinePoint> boundary_polyline(const ConicBoundary& b, int n = 720);
void write_polyline_csv(const std::vector<std::pair<std::string, ConicBoundary>>& curves,
                        const std::string& path, int n = 720);

void save_boundary(const ConicBoundary& b, const Level1Model& m, const std::string& path);
struct BoundaryFile {
  ConicBoundary boundary;
  Level1Model level1;
};
BoundaryFile load_boundary(const std::string& path);

}  // namespace pdg
