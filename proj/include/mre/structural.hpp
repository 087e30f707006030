#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mre/linalg.hpp"

namespace mre {

/// Prismatic rectangular beam. Derived section quantities are computed on
/// demand so they can never drift from the primary fields.
struct BeamProperties {
  double length = 10.0;             // m
  double width = 0.4;               // m
  double height = 0.5;              // m
  double youngs_modulus = 2.0e11;   // Pa
  double poisson_ratio = 0.3;
  double density = 7800.0;          // kg/m^3
  double shear_correction = 5.0 / 6.0;
  double damping_w = 0.0;           // N s/m^2, on transverse DOFs
  double damping_beta = 0.0;        // N m s/rad per m, on rotation DOFs

  double area() const { return width * height; }
  double inertia() const { return width * height * height * height / 12.0; }
  double shear_modulus() const { return youngs_modulus / (2.0 * (1.0 + poisson_ratio)); }

  void validate() const;
};

enum class BoundaryKind { SimplySupported, SimplySupportedRotarySpring };

struct BoundarySpec {
  BoundaryKind kind = BoundaryKind::SimplySupported;
  double rotary_stiffness = 0.0;  // N m/rad, right end, spring variant only

  static BoundarySpec simply_supported() { return {}; }
  static BoundarySpec rotary_spring(double k_theta) {
    return {BoundaryKind::SimplySupportedRotarySpring, k_theta};
  }
};

enum class DofKind { Translation, Rotation };

struct DofInfo {
  double x = 0.0;  // node coordinate, m
  DofKind kind = DofKind::Translation;
};

/// Assembled, constrained structural matrices. Support DOFs are eliminated,
/// so every matrix is n_dof x n_dof over free DOFs only.
struct FEModel {
  MatrixXd mass;
  MatrixXd damping;
  MatrixXd stiffness;
  std::vector<DofInfo> dofs;
  int element_count = 0;

  Eigen::Index n_dof() const { return mass.rows(); }

  /// Free DOF closest to coordinate x of the given kind, if one lies within tol.
  std::optional<Eigen::Index> find_dof(double x, DofKind kind, double tol) const;

  /// Smallest spacing between distinct node coordinates (element length for beams).
  double node_spacing() const;
};

struct ShearBuildingSpec {
  int n_stories = 0;
  std::vector<double> story_mass;       // kg, one per story (ground story first)
  std::vector<double> story_stiffness;  // N/m, spring below each story
  std::optional<int> damage_story;      // 1-based story index
  double damage_fraction = 0.0;         // fraction of that story's stiffness removed
  double story_height = 3.0;            // m, only used for DOF coordinates

  static ShearBuildingSpec uniform(int n, double mass, double stiffness);
  void validate() const;
};

enum class TimoshenkoElement {
  /// Two-node linear w and beta, one-point shear integration.
  LinearReduced,
  /// Two-node element with interpolation from the static Timoshenko
  /// solution: exact stiffness and the matching consistent mass.
  ExactStiffness,
};

FEModel assemble_euler_bernoulli(const BeamProperties& props, int n_elements,
                                 const BoundarySpec& bc = {});

FEModel assemble_timoshenko(const BeamProperties& props, int n_elements,
                            const BoundarySpec& bc = {},
                            TimoshenkoElement element = TimoshenkoElement::ExactStiffness);

FEModel assemble_shear_building(const ShearBuildingSpec& spec);

struct RayleighCoefficients {
  double alpha = 0.0;  // 1/s, mass proportional
  double beta = 0.0;   // s, stiffness proportional

  double ratio_at(double omega) const { return 0.5 * (alpha / omega + beta * omega); }
};

/// Solves zeta = (alpha/omega + beta*omega)/2 at the two target modes.
RayleighCoefficients rayleigh_coefficients(double zeta_i, double omega_i, double zeta_j,
                                           double omega_j);

struct RayleighTargets {
  double zeta_i, omega_i, zeta_j, omega_j;
};

MatrixXd build_rayleigh_damping(const MatrixXd& mass, const MatrixXd& stiffness,
                                const RayleighTargets& targets);

/// Classical damping with prescribed ratios on every mode of (M, K):
/// C = M Phi diag(2 zeta_i omega_i) Phi^T M. Modes past the end of `ratios`
/// reuse its last entry.
MatrixXd build_modal_damping(const MatrixXd& mass, const MatrixXd& stiffness,
                             std::span<const double> ratios);

/// Damping ratio of mode `mode` (0-based) as seen through diag(Phi^T C Phi).
double modal_damping_ratio(const FEModel& model, int mode);

/// c_w giving the Euler-Bernoulli model of this beam a first-mode damping
/// ratio of `target_ratio` (with c_beta = 0).
double calibrate_damping_w(const BeamProperties& props, int n_elements, double target_ratio);

}  // namespace mre
