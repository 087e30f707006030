#include "mre/structural.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "mre/error.hpp"

namespace mre {

namespace {

using Matrix4 = Eigen::Matrix4d;

void check_positive(double value, const char* name) {
  require(std::isfinite(value) && value > 0.0, ErrorKind::InvalidInput,
          std::string(name) + " must be positive");
}

// Beam assembly on node-major DOFs (w_j, r_j), j = 0..n, with the two end
// translations removed afterwards.
struct BeamAssembler {
  int n_elements;
  double element_length;
  MatrixXd mass, damping, stiffness;

  BeamAssembler(int n, double length)
      : n_elements(n),
        element_length(length / n),
        mass(MatrixXd::Zero(2 * (n + 1), 2 * (n + 1))),
        damping(MatrixXd::Zero(2 * (n + 1), 2 * (n + 1))),
        stiffness(MatrixXd::Zero(2 * (n + 1), 2 * (n + 1))) {}

  void scatter(int element, const Matrix4& me, const Matrix4& ke) {
    const int base = 2 * element;
    mass.block<4, 4>(base, base) += me;
    stiffness.block<4, 4>(base, base) += ke;
  }

  void lump_damping(double c_w, double c_beta) {
    for (int e = 0; e < n_elements; ++e) {
      for (int end = 0; end < 2; ++end) {
        const int node = e + end;
        damping(2 * node, 2 * node) += 0.5 * c_w * element_length;
        damping(2 * node + 1, 2 * node + 1) += 0.5 * c_beta * element_length;
      }
    }
  }

  FEModel finish(const BoundarySpec& bc) {
    const int n_full = 2 * (n_elements + 1);
    if (bc.kind == BoundaryKind::SimplySupportedRotarySpring) {
      stiffness(n_full - 1, n_full - 1) += bc.rotary_stiffness;
    }
    std::vector<int> keep;
    FEModel model;
    for (int i = 0; i < n_full; ++i) {
      const int node = i / 2;
      const bool translation = i % 2 == 0;
      if (translation && (node == 0 || node == n_elements)) continue;
      keep.push_back(i);
      model.dofs.push_back({node * element_length,
                            translation ? DofKind::Translation : DofKind::Rotation});
    }
    const Eigen::Index n = static_cast<Eigen::Index>(keep.size());
    model.mass.resize(n, n);
    model.damping.resize(n, n);
    model.stiffness.resize(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index c = 0; c < n; ++c) {
        model.mass(r, c) = mass(keep[r], keep[c]);
        model.damping(r, c) = damping(keep[r], keep[c]);
        model.stiffness(r, c) = stiffness(keep[r], keep[c]);
      }
    }
    model.element_count = n_elements;
    require(model.stiffness.llt().info() == Eigen::Success, ErrorKind::AssemblyFailure,
            "constrained stiffness matrix is not positive definite");
    require(model.mass.llt().info() == Eigen::Success, ErrorKind::AssemblyFailure,
            "constrained mass matrix is not positive definite");
    return model;
  }
};

void check_beam_inputs(const BeamProperties& props, int n_elements, const BoundarySpec& bc) {
  props.validate();
  require(n_elements >= 4, ErrorKind::InvalidInput, "beam needs at least 4 elements");
  if (bc.kind == BoundaryKind::SimplySupportedRotarySpring) {
    require(std::isfinite(bc.rotary_stiffness) && bc.rotary_stiffness > 0.0,
            ErrorKind::InvalidInput, "rotary spring stiffness must be positive");
  }
}

Matrix4 hermite_stiffness(double ei, double l) {
  Matrix4 k;
  k << 12, 6 * l, -12, 6 * l,
       6 * l, 4 * l * l, -6 * l, 2 * l * l,
       -12, -6 * l, 12, -6 * l,
       6 * l, 2 * l * l, -6 * l, 4 * l * l;
  return k * (ei / (l * l * l));
}

Matrix4 hermite_mass(double rho_a, double l) {
  Matrix4 m;
  m << 156, 22 * l, 54, -13 * l,
       22 * l, 4 * l * l, 13 * l, -3 * l * l,
       54, 13 * l, 156, -22 * l,
       -13 * l, -3 * l * l, -22 * l, 4 * l * l;
  return m * (rho_a * l / 420.0);
}

// Friedman-Kosmatka element: shape functions from the homogeneous static
// Timoshenko equations, phi = 12 EI / (k G A l^2).
void exact_timoshenko_element(const BeamProperties& p, double l, Matrix4& me, Matrix4& ke) {
  const double ei = p.youngs_modulus * p.inertia();
  const double kga = p.shear_correction * p.shear_modulus() * p.area();
  const double phi = 12.0 * ei / (kga * l * l);
  const double l2 = l * l;

  ke << 12, 6 * l, -12, 6 * l,
        6 * l, (4 + phi) * l2, -6 * l, (2 - phi) * l2,
        -12, -6 * l, 12, -6 * l,
        6 * l, (2 - phi) * l2, -6 * l, (4 + phi) * l2;
  ke *= ei / ((1 + phi) * l2 * l);

  const double p2 = phi * phi;
  const double a = 70 * p2 + 147 * phi + 78;
  const double b = (35 * p2 + 77 * phi + 44) * l / 4;
  const double c = 35 * p2 + 63 * phi + 27;
  const double d = (35 * p2 + 63 * phi + 26) * l / 4;
  const double e = (7 * p2 + 14 * phi + 8) * l2 / 4;
  const double f = (7 * p2 + 14 * phi + 6) * l2 / 4;
  Matrix4 translational;
  translational << a, b, c, -d,
                   b, e, d, -f,
                   c, d, a, -b,
                   -d, -f, -b, e;
  translational *= p.density * p.area() * l / (210.0 * (1 + phi) * (1 + phi));

  const double g = (3 - 15 * phi) * l;
  const double h = (10 * p2 + 5 * phi + 4) * l2;
  const double i = (5 * p2 - 5 * phi - 1) * l2;
  Matrix4 rotary;
  rotary << 36, g, -36, g,
            g, h, -g, i,
            -36, -g, 36, -g,
            g, i, -g, h;
  rotary *= p.density * p.inertia() / (30.0 * (1 + phi) * (1 + phi) * l);

  me = translational + rotary;
}

void linear_timoshenko_element(const BeamProperties& p, double l, Matrix4& me, Matrix4& ke) {
  const double ei = p.youngs_modulus * p.inertia();
  const double kga = p.shear_correction * p.shear_modulus() * p.area();
  ke.setZero();
  ke(1, 1) = ke(3, 3) = ei / l;
  ke(1, 3) = ke(3, 1) = -ei / l;
  // One-point shear strain gamma = w' - beta at the element midpoint.
  Eigen::RowVector4d shear(-1.0 / l, -0.5, 1.0 / l, -0.5);
  ke += kga * l * shear.transpose() * shear;

  me.setZero();
  const double mw = p.density * p.area() * l / 6.0;
  const double mr = p.density * p.inertia() * l / 6.0;
  me(0, 0) = me(2, 2) = 2 * mw;
  me(0, 2) = me(2, 0) = mw;
  me(1, 1) = me(3, 3) = 2 * mr;
  me(1, 3) = me(3, 1) = mr;
}

}  // namespace

void BeamProperties::validate() const {
  check_positive(length, "length");
  check_positive(width, "width");
  check_positive(height, "height");
  check_positive(youngs_modulus, "youngs_modulus");
  check_positive(density, "density");
  check_positive(shear_correction, "shear_correction");
  require(poisson_ratio >= 0.0 && poisson_ratio < 0.5, ErrorKind::InvalidInput,
          "poisson_ratio must lie in [0, 0.5)");
  require(damping_w >= 0.0 && damping_beta >= 0.0, ErrorKind::InvalidInput,
          "viscous damping coefficients must be non-negative");
}

std::optional<Eigen::Index> FEModel::find_dof(double x, DofKind kind, double tol) const {
  std::optional<Eigen::Index> best;
  double best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dofs.size(); ++i) {
    if (dofs[i].kind != kind) continue;
    const double distance = std::abs(dofs[i].x - x);
    if (distance < best_distance) {
      best_distance = distance;
      best = static_cast<Eigen::Index>(i);
    }
  }
  if (best_distance > tol) return std::nullopt;
  return best;
}

double FEModel::node_spacing() const {
  std::vector<double> xs;
  for (const auto& dof : dofs) xs.push_back(dof.x);
  std::sort(xs.begin(), xs.end());
  double spacing = std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < xs.size(); ++i) {
    const double gap = xs[i] - xs[i - 1];
    if (gap > 1e-12) spacing = std::min(spacing, gap);
  }
  return spacing;
}

FEModel assemble_euler_bernoulli(const BeamProperties& props, int n_elements,
                                 const BoundarySpec& bc) {
  check_beam_inputs(props, n_elements, bc);
  BeamAssembler assembler(n_elements, props.length);
  const double l = assembler.element_length;
  const Matrix4 ke = hermite_stiffness(props.youngs_modulus * props.inertia(), l);
  const Matrix4 me = hermite_mass(props.density * props.area(), l);
  for (int e = 0; e < n_elements; ++e) assembler.scatter(e, me, ke);
  assembler.lump_damping(props.damping_w, 0.0);
  return assembler.finish(bc);
}

FEModel assemble_timoshenko(const BeamProperties& props, int n_elements, const BoundarySpec& bc,
                            TimoshenkoElement element) {
  check_beam_inputs(props, n_elements, bc);
  BeamAssembler assembler(n_elements, props.length);
  const double l = assembler.element_length;
  Matrix4 me, ke;
  if (element == TimoshenkoElement::ExactStiffness) {
    exact_timoshenko_element(props, l, me, ke);
  } else {
    linear_timoshenko_element(props, l, me, ke);
  }
  for (int e = 0; e < n_elements; ++e) assembler.scatter(e, me, ke);
  assembler.lump_damping(props.damping_w, props.damping_beta);
  return assembler.finish(bc);
}

ShearBuildingSpec ShearBuildingSpec::uniform(int n, double mass, double stiffness) {
  ShearBuildingSpec spec;
  spec.n_stories = n;
  spec.story_mass.assign(static_cast<std::size_t>(std::max(n, 0)), mass);
  spec.story_stiffness.assign(static_cast<std::size_t>(std::max(n, 0)), stiffness);
  return spec;
}

void ShearBuildingSpec::validate() const {
  require(n_stories >= 1, ErrorKind::InvalidInput, "building needs at least one story");
  require(story_mass.size() == static_cast<std::size_t>(n_stories) &&
              story_stiffness.size() == static_cast<std::size_t>(n_stories),
          ErrorKind::InvalidInput, "story mass/stiffness lists must have n_stories entries");
  for (std::size_t i = 0; i < story_mass.size(); ++i) {
    check_positive(story_mass[i], "story_mass");
    check_positive(story_stiffness[i], "story_stiffness");
  }
  require(damage_fraction >= 0.0 && damage_fraction < 1.0, ErrorKind::InvalidInput,
          "damage_fraction must lie in [0, 1)");
  if (damage_story) {
    require(*damage_story >= 1 && *damage_story <= n_stories, ErrorKind::InvalidInput,
            "damage_story out of range");
  }
  check_positive(story_height, "story_height");
}

FEModel assemble_shear_building(const ShearBuildingSpec& spec) {
  spec.validate();
  const int n = spec.n_stories;
  std::vector<double> k = spec.story_stiffness;
  if (spec.damage_story) k[static_cast<std::size_t>(*spec.damage_story - 1)] *= 1.0 - spec.damage_fraction;

  FEModel model;
  model.mass = MatrixXd::Zero(n, n);
  model.stiffness = MatrixXd::Zero(n, n);
  model.damping = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    model.mass(i, i) = spec.story_mass[static_cast<std::size_t>(i)];
    // Spring i joins story i to the story below it (or the ground).
    model.stiffness(i, i) += k[static_cast<std::size_t>(i)];
    if (i > 0) {
      model.stiffness(i - 1, i - 1) += k[static_cast<std::size_t>(i)];
      model.stiffness(i, i - 1) -= k[static_cast<std::size_t>(i)];
      model.stiffness(i - 1, i) -= k[static_cast<std::size_t>(i)];
    }
    model.dofs.push_back({(i + 1) * spec.story_height, DofKind::Translation});
  }
  model.element_count = n;
  require(model.stiffness.llt().info() == Eigen::Success, ErrorKind::AssemblyFailure,
          "building stiffness is not positive definite");
  return model;
}

RayleighCoefficients rayleigh_coefficients(double zeta_i, double omega_i, double zeta_j,
                                           double omega_j) {
  require(omega_i > 0.0 && omega_j > 0.0, ErrorKind::InvalidInput,
          "Rayleigh target frequencies must be positive");
  require(std::abs(omega_i - omega_j) > 1e-12 * std::max(omega_i, omega_j),
          ErrorKind::DegenerateTargets, "Rayleigh target frequencies coincide");
  // [1/wi  wi; 1/wj  wj] [a; b] = 2 [zi; zj]
  const double det = omega_j / omega_i - omega_i / omega_j;
  RayleighCoefficients c;
  c.alpha = 2.0 * (zeta_i * omega_j - zeta_j * omega_i) / det;
  c.beta = 2.0 * (zeta_j / omega_i - zeta_i / omega_j) / det;
  return c;
}

MatrixXd build_rayleigh_damping(const MatrixXd& mass, const MatrixXd& stiffness,
                                const RayleighTargets& t) {
  require(mass.rows() == stiffness.rows() && mass.cols() == stiffness.cols(),
          ErrorKind::InvalidInput, "mass/stiffness dimension mismatch");
  const auto c = rayleigh_coefficients(t.zeta_i, t.omega_i, t.zeta_j, t.omega_j);
  return c.alpha * mass + c.beta * stiffness;
}

MatrixXd build_modal_damping(const MatrixXd& mass, const MatrixXd& stiffness,
                             std::span<const double> ratios) {
  require(!ratios.empty(), ErrorKind::InvalidInput, "modal damping needs at least one ratio");
  for (double z : ratios) {
    require(z > 0.0 && z < 1.0, ErrorKind::InvalidInput, "modal damping ratios must lie in (0, 1)");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(stiffness, mass);
  require(solver.info() == Eigen::Success, ErrorKind::NumericalFailure,
          "generalized eigensolver failed");
  const MatrixXd& phi = solver.eigenvectors();
  VectorXd diag(phi.cols());
  for (Eigen::Index i = 0; i < phi.cols(); ++i) {
    const double z = ratios[std::min<std::size_t>(static_cast<std::size_t>(i), ratios.size() - 1)];
    diag(i) = 2.0 * z * std::sqrt(std::max(solver.eigenvalues()(i), 0.0));
  }
  const MatrixXd mp = mass * phi;
  return symmetrized(mp * diag.asDiagonal() * mp.transpose());
}

double modal_damping_ratio(const FEModel& model, int mode) {
  Eigen::GeneralizedSelfAdjointEigenSolver<MatrixXd> solver(model.stiffness, model.mass);
  require(solver.info() == Eigen::Success, ErrorKind::NumericalFailure,
          "generalized eigensolver failed");
  const VectorXd v = solver.eigenvectors().col(mode);
  const double omega = std::sqrt(solver.eigenvalues()(mode));
  return v.dot(model.damping * v) / (2.0 * omega);
}

double calibrate_damping_w(const BeamProperties& props, int n_elements, double target_ratio) {
  BeamProperties unit = props;
  unit.damping_w = 1.0;
  unit.damping_beta = 0.0;
  const FEModel model = assemble_euler_bernoulli(unit, n_elements);
  // The modal ratio is linear in c_w.
  return target_ratio / modal_damping_ratio(model, 0);
}

}  // namespace mre
