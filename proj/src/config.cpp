#include "mre/config.hpp"

#include <set>

#include "mre/error.hpp"
#include "mre/io.hpp"

namespace mre {

using nlohmann::json;

namespace {

// Best-effort line lookup: follow the path's keys through the source text.
int line_of(const std::string& text, const std::string& path) {
  std::size_t pos = 0;
  std::size_t start = 1;
  bool found_any = false;
  while (start < path.size()) {
    std::size_t next = path.find('/', start);
    if (next == std::string::npos) next = path.size();
    const std::string key = path.substr(start, next - start);
    start = next + 1;
    if (key.empty() || std::isdigit(static_cast<unsigned char>(key[0]))) continue;
    const std::size_t at = text.find("\"" + key + "\"", pos);
    if (at == std::string::npos) break;
    pos = at;
    found_any = true;
  }
  if (!found_any) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

struct Context {
  const std::string* text = nullptr;

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    std::string where = path.empty() ? "/" : path;
    const int line = text ? line_of(*text, path) : 0;
    if (line > 0) where += " (line " + std::to_string(line) + ")";
    throw Error(ErrorKind::ConfigError, where + ": " + message);
  }
};

class Node {
 public:
  Node(const json& j, std::string path, const Context& ctx) : j_(j), path_(std::move(path)), ctx_(ctx) {
    if (!j_.is_object()) ctx_.fail(path_, "expected an object");
  }

  ~Node() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [key, value] : j_.items()) {
      if (!used_.count(key)) ctx_.fail(path_ + "/" + key, "unknown key");
    }
  }

  bool has(const std::string& key) {
    used_.insert(key);
    return j_.contains(key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string child_path(const std::string& key) const { return path_ + "/" + key; }
  const Context& ctx() const { return ctx_; }

  Node object(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) return Node(empty_object(), child_path(key), ctx_);
    return Node(j_.at(key), child_path(key), ctx_);
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) ctx_.fail(child_path(key), "expected a number");
    return v.get<double>();
  }

  double positive(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v > 0.0)) ctx_.fail(child_path(key), "must be positive");
    return v;
  }

  double non_negative(const std::string& key, double fallback) {
    const double v = number(key, fallback);
    if (!(v >= 0.0)) ctx_.fail(child_path(key), "must be non-negative");
    return v;
  }

  long long integer(const std::string& key, long long fallback, long long min_value) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_integer()) ctx_.fail(child_path(key), "expected an integer");
    const auto x = v.get<long long>();
    if (x < min_value) ctx_.fail(child_path(key), "must be >= " + std::to_string(min_value));
    return x;
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      ctx_.fail(child_path(key), "expected a non-negative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool boolean(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_boolean()) ctx_.fail(child_path(key), "expected true or false");
    return v.get<bool>();
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     const std::vector<std::string>& allowed) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) ctx_.fail(child_path(key), "expected a string");
    const auto s = v.get<std::string>();
    if (std::find(allowed.begin(), allowed.end(), s) == allowed.end()) {
      std::string list;
      for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a;
      ctx_.fail(child_path(key), "'" + s + "' is not one of: " + list);
    }
    return s;
  }

  std::string string(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) ctx_.fail(child_path(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, const std::vector<double>& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_array()) ctx_.fail(child_path(key), "expected an array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_number()) ctx_.fail(child_path(key) + "/" + std::to_string(i), "expected a number");
      out.push_back(v[i].get<double>());
    }
    return out;
  }

  /// Number-or-array field expanded to `count` entries.
  std::vector<double> per_item(const std::string& key, double fallback, std::size_t count) {
    if (!has(key)) return std::vector<double>(count, fallback);
    const json& v = j_.at(key);
    if (v.is_number()) return std::vector<double>(count, v.get<double>());
    std::vector<double> out = numbers(key, {});
    if (out.size() != count) {
      ctx_.fail(child_path(key), "expected " + std::to_string(count) + " entries, got " +
                                     std::to_string(out.size()));
    }
    return out;
  }

  const json& array(const std::string& key) {
    used_.insert(key);
    static const json empty = json::array();
    if (!j_.contains(key)) return empty;
    const json& v = j_.at(key);
    if (!v.is_array()) ctx_.fail(child_path(key), "expected an array");
    return v;
  }

 private:
  static const json& empty_object() {
    static const json e = json::object();
    return e;
  }

  const json& j_;
  std::string path_;
  const Context& ctx_;
  std::set<std::string> used_;
};

DampingConfig parse_damping(Node n, DampingConfig::Kind fallback) {
  DampingConfig d;
  const std::string kind = n.choice("kind", fallback == DampingConfig::Kind::Lumped     ? "lumped"
                                            : fallback == DampingConfig::Kind::Rayleigh ? "rayleigh"
                                                                                        : "modal",
                                    {"lumped", "rayleigh", "modal"});
  d.kind = kind == "lumped" ? DampingConfig::Kind::Lumped
           : kind == "rayleigh" ? DampingConfig::Kind::Rayleigh
                                : DampingConfig::Kind::Modal;
  d.zeta_i = n.number("zeta_i", d.zeta_i);
  d.zeta_j = n.number("zeta_j", d.zeta_j);
  d.mode_i = static_cast<int>(n.integer("mode_i", d.mode_i, 1));
  d.mode_j = static_cast<int>(n.integer("mode_j", d.mode_j, 1));
  d.ratios = n.numbers("ratios", d.ratios);
  for (double z : {d.zeta_i, d.zeta_j}) {
    if (!(z > 0.0 && z < 1.0)) n.ctx().fail(n.child_path("zeta_i"), "damping ratios must lie in (0, 1)");
  }
  if (d.kind == DampingConfig::Kind::Rayleigh && d.mode_i == d.mode_j) {
    n.ctx().fail(n.child_path("mode_j"), "Rayleigh target modes must differ");
  }
  if (d.ratios.empty()) n.ctx().fail(n.child_path("ratios"), "need at least one ratio");
  for (double z : d.ratios) {
    if (!(z > 0.0 && z < 1.0)) n.ctx().fail(n.child_path("ratios"), "damping ratios must lie in (0, 1)");
  }
  return d;
}

BeamModelConfig parse_beam_model(Node n, BeamModelConfig::Theory fallback) {
  BeamModelConfig b;
  const std::string theory = n.choice(
      "theory", fallback == BeamModelConfig::Theory::Timoshenko ? "timoshenko" : "euler_bernoulli",
      {"timoshenko", "euler_bernoulli"});
  b.theory = theory == "timoshenko" ? BeamModelConfig::Theory::Timoshenko
                                    : BeamModelConfig::Theory::EulerBernoulli;
  b.elements = static_cast<int>(n.integer("elements", 50, 4));
  {
    Node bc = n.object("boundary");
    const std::string kind = bc.choice("kind", "simply_supported", {"simply_supported", "rotary_spring"});
    if (kind == "rotary_spring") {
      b.boundary = BoundarySpec::rotary_spring(bc.positive("rotary_stiffness", 2e8));
    } else {
      b.boundary = BoundarySpec::simply_supported();
      if (bc.has("rotary_stiffness")) {
        bc.ctx().fail(bc.child_path("rotary_stiffness"), "only valid with kind = rotary_spring");
      }
    }
  }
  const std::string element = n.choice("timoshenko_element", "exact", {"exact", "linear_reduced"});
  b.element = element == "exact" ? TimoshenkoElement::ExactStiffness : TimoshenkoElement::LinearReduced;
  b.damping = parse_damping(n.object("damping"), DampingConfig::Kind::Lumped);
  return b;
}

BuildingModelConfig parse_building_model(Node n) {
  BuildingModelConfig b;
  if (n.has("damage_story")) b.damage_story = static_cast<int>(n.integer("damage_story", 1, 1));
  b.damage_fraction = n.non_negative("damage_fraction", 0.0);
  if (b.damage_fraction >= 1.0) n.ctx().fail(n.child_path("damage_fraction"), "must be < 1");
  b.damping = parse_damping(n.object("damping"), DampingConfig::Kind::Rayleigh);
  return b;
}

NonlinearRestoringSpec parse_nonlinearity(Node n) {
  NonlinearRestoringSpec g;
  const std::string kind = n.choice("kind", "none", {"none", "cubic"});
  g.kind = kind == "cubic" ? NonlinearRestoringSpec::Kind::CubicStiffness : NonlinearRestoringSpec::Kind::None;
  g.cubic_coefficient = n.non_negative("cubic_coefficient", 0.0);
  return g;
}

DofKind parse_dof_kind(Node& n) {
  return n.choice("dof", "translation", {"translation", "rotation"}) == "rotation" ? DofKind::Rotation
                                                                                  : DofKind::Translation;
}

ExcitationSpec parse_excitation(Node n, double dt, double duration, std::uint64_t seed,
                                const std::string& label) {
  ExcitationSpec e;
  e.dt = dt;
  e.duration = duration;
  const json& sines = n.array("sinusoids");
  for (std::size_t i = 0; i < sines.size(); ++i) {
    Node s(sines[i], n.child_path("sinusoids") + "/" + std::to_string(i), n.ctx());
    SinusoidalLoad load;
    load.x = s.number("x", 0.0);
    load.kind = parse_dof_kind(s);
    load.amplitude = s.number("amplitude", 0.0);
    load.omega = s.non_negative("omega", 0.0);
    load.phase = s.number("phase", 0.0);
    e.sinusoids.push_back(load);
  }
  const json& noise = n.array("noise_loads");
  for (std::size_t i = 0; i < noise.size(); ++i) {
    Node s(noise[i], n.child_path("noise_loads") + "/" + std::to_string(i), n.ctx());
    FilteredNoiseLoad load;
    load.x = s.number("x", 0.0);
    load.kind = parse_dof_kind(s);
    load.band_low = s.non_negative("band_low", 0.0);
    load.band_high = s.positive("band_high", 30.0);
    load.scale = s.non_negative("scale", 1.0);
    load.seed = s.unsigned_integer("seed", derive_seed(seed, label + ".noise." + std::to_string(i)));
    e.noise_loads.push_back(load);
  }
  try {
    e.validate();
  } catch (const Error& err) {
    n.ctx().fail(n.child_path(""), err.what());
  }
  return e;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t global, const std::string& label) {
  const std::string hex = sha256_hex(std::to_string(global) + ":" + label);
  return std::stoull(hex.substr(0, 16), nullptr, 16);
}

ExperimentConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::ConfigError, std::string("malformed JSON: ") + e.what());
  }
  Context ctx{&text};
  ExperimentConfig cfg;
  cfg.source = doc;
  Node root(doc, "", ctx);
  cfg.name = root.string("name", cfg.name);
  cfg.seed = root.unsigned_integer("seed", 0);
  cfg.output_dir = root.string("output_dir", cfg.output_dir.string());

  {
    Node model = root.object("model");
    const std::string kind = model.choice("kind", "beam", {"beam", "shear_building"});
    cfg.model.kind = kind == "beam" ? ModelConfig::Kind::Beam : ModelConfig::Kind::ShearBuilding;
    if (cfg.model.kind == ModelConfig::Kind::Beam) {
      Node beam = model.object("beam");
      BeamProperties& p = cfg.model.beam;
      p.length = beam.positive("length", p.length);
      p.width = beam.positive("width", p.width);
      p.height = beam.positive("height", p.height);
      p.youngs_modulus = beam.positive("youngs_modulus", p.youngs_modulus);
      p.poisson_ratio = beam.non_negative("poisson_ratio", p.poisson_ratio);
      if (p.poisson_ratio >= 0.5) beam.ctx().fail(beam.child_path("poisson_ratio"), "must be < 0.5");
      p.density = beam.positive("density", p.density);
      p.shear_correction = beam.positive("shear_correction", p.shear_correction);
      p.damping_beta = beam.non_negative("damping_beta", 0.0);
      if (beam.has("damping_w") && beam.raw("damping_w").is_string()) {
        if (beam.raw("damping_w").get<std::string>() != "auto") {
          beam.ctx().fail(beam.child_path("damping_w"), "expected a number or \"auto\"");
        }
        cfg.model.damping_w_target = 0.02;
      } else {
        p.damping_w = beam.non_negative("damping_w", 0.0);
      }
      const double target = beam.number("damping_w_target_ratio", 0.02);
      if (cfg.model.damping_w_target) {
        if (!(target > 0.0 && target < 1.0)) {
          beam.ctx().fail(beam.child_path("damping_w_target_ratio"), "must lie in (0, 1)");
        }
        cfg.model.damping_w_target = target;
      }
      cfg.model.damping_w_calibration_elements =
          static_cast<int>(beam.integer("damping_w_calibration_elements", 50, 4));
      cfg.model.truth_beam = parse_beam_model(model.object("truth"), BeamModelConfig::Theory::Timoshenko);
      cfg.model.nominal_beam = parse_beam_model(model.object("nominal"), BeamModelConfig::Theory::EulerBernoulli);
    } else {
      Node b = model.object("building");
      const int stories = static_cast<int>(b.integer("stories", 10, 1));
      cfg.model.building.n_stories = stories;
      cfg.model.building.story_mass = b.per_item("story_mass", 1e5, static_cast<std::size_t>(stories));
      cfg.model.building.story_stiffness = b.per_item("story_stiffness", 1e8, static_cast<std::size_t>(stories));
      cfg.model.building.story_height = b.positive("story_height", 3.0);
      for (double v : cfg.model.building.story_mass) {
        if (!(v > 0.0)) b.ctx().fail(b.child_path("story_mass"), "masses must be positive");
      }
      for (double v : cfg.model.building.story_stiffness) {
        if (!(v > 0.0)) b.ctx().fail(b.child_path("story_stiffness"), "stiffnesses must be positive");
      }
      cfg.model.truth_building = parse_building_model(model.object("truth_building"));
      cfg.model.nominal_building = parse_building_model(model.object("nominal_building"));
      for (const auto* bm : {&cfg.model.truth_building, &cfg.model.nominal_building}) {
        if (bm->damage_story && *bm->damage_story > stories) {
          b.ctx().fail(model.child_path("truth_building") + "/damage_story", "exceeds the story count");
        }
      }
    }
    // Applies to the truth of either structure kind.
    cfg.model.nonlinearity = parse_nonlinearity(model.object("nonlinearity"));
  }

  {
    Node exc = root.object("excitation");
    const double dt = exc.positive("dt", 1e-3);
    const double duration = exc.positive("duration", 4.0);
    cfg.train = parse_excitation(exc.object("train"), dt, duration, cfg.seed, "excitation.train");
    cfg.test = parse_excitation(exc.object("test"), dt, duration, cfg.seed, "excitation.test");
  }
  {
    Node s = root.object("sensors");
    cfg.sensors.coordinates = s.numbers("coordinates", {});
    if (cfg.sensors.coordinates.empty()) s.ctx().fail(s.child_path("coordinates"), "at least one sensor is required");
    cfg.sensors.noise_percent = s.non_negative("noise_percent", 0.0);
    cfg.sensor_seed_explicit = s.has("seed");
    cfg.sensors.seed = s.unsigned_integer("seed", derive_seed(cfg.seed, "sensors"));
  }
  {
    Node m = root.object("modal");
    if (m.has("modes") && m.raw("modes").is_string()) {
      if (m.raw("modes").get<std::string>() != "auto") m.ctx().fail(m.child_path("modes"), "expected an integer or \"auto\"");
      cfg.modal.modes = 0;
    } else {
      cfg.modal.modes = m.integer("modes", 4, 1);
    }
    cfg.modal.max_auto_modes = m.integer("max_auto_modes", 12, 1);
    cfg.modal.floor_db = m.number("floor_db", 10.0);
    Node d = m.object("damping");
    const std::string kind = d.choice("kind", "extract", {"extract", "ratios"});
    if (kind == "ratios") {
      const auto ratios = d.numbers("ratios", {kDefaultModalDampingRatio});
      if (ratios.empty()) d.ctx().fail(d.child_path("ratios"), "need at least one ratio");
      cfg.modal.damping = ModalDampingRule::from_ratios(ratios);
    } else {
      cfg.modal.damping = ModalDampingRule::extract();
    }
  }
  {
    Node g = root.object("gp");
    cfg.gp.kernel = g.choice("kernel", "matern12", {"matern12"});
    cfg.gp.jitter = g.non_negative("jitter", kDefaultJitter);
    cfg.gp.prior_state_var = g.positive("prior_state_var", 1e-6);
    cfg.gp.steady_tol = g.non_negative("steady_tol", 1e-13);
    Node pr = g.object("priors");
    for (auto [key, t] : {std::pair{"amplitude", &cfg.gp.priors.amplitude},
                          std::pair{"length_scale", &cfg.gp.priors.length_scale}}) {
      Node s = pr.object(key);
      t->mu = s.positive("mu", t->mu);
      t->v = s.positive("v", t->v);
      t->nu = s.positive("nu", t->nu);
    }
    Node o = g.object("optimizer");
    cfg.gp.map.starts = static_cast<int>(o.integer("starts", 5, 1));
    cfg.gp.map.nelder_mead.max_evaluations = static_cast<int>(o.integer("max_evaluations", 1500, 10));
    cfg.gp.map.nelder_mead.initial_step = o.positive("initial_step", 0.5);
    cfg.gp.map.nelder_mead.f_tol = o.positive("f_tol", 1e-9);
    cfg.gp.map.nelder_mead.x_tol = o.positive("x_tol", 1e-3);
    cfg.gp.map.start_spread = o.non_negative("start_spread", 1.0);
    cfg.gp.map.seed = o.unsigned_integer("seed", derive_seed(cfg.seed, "gp.optimizer"));
    cfg.gp.map.noise_floor_rel = g.non_negative("noise_floor_rel", 1e-3);
    cfg.gp.map.estimate_noise = g.boolean("estimate_noise", false);
  }
  {
    Node s = root.object("surrogate");
    TrainingConfig& t = cfg.surrogate.training;
    if (s.has("hidden") && s.raw("hidden").is_string()) {
      if (s.raw("hidden").get<std::string>() != "auto") s.ctx().fail(s.child_path("hidden"), "expected an integer or \"auto\"");
      cfg.surrogate.hidden = 0;
    } else {
      cfg.surrogate.hidden = static_cast<int>(s.integer("hidden", 0, 1));
    }
    std::vector<int> cands;
    for (double v : s.numbers("hidden_candidates", {20, 50, 100})) {
      if (v < 1 || v != static_cast<int>(v)) s.ctx().fail(s.child_path("hidden_candidates"), "candidates must be positive integers");
      cands.push_back(static_cast<int>(v));
    }
    if (cands.empty()) s.ctx().fail(s.child_path("hidden_candidates"), "need at least one candidate");
    t.hidden_candidates = cands;
    t.learning_rate = s.positive("learning_rate", t.learning_rate);
    t.beta1 = s.non_negative("beta1", t.beta1);
    t.beta2 = s.non_negative("beta2", t.beta2);
    t.epsilon = s.positive("epsilon", t.epsilon);
    t.l2 = s.non_negative("l2", t.l2);
    t.max_epochs = static_cast<int>(s.integer("max_epochs", t.max_epochs, 1));
    t.batch_size = static_cast<int>(s.integer("batch_size", t.batch_size, 1));
    t.validation_fraction = s.positive("validation_fraction", t.validation_fraction);
    t.patience = static_cast<int>(s.integer("patience", t.patience, 1));
    t.folds = static_cast<int>(s.integer("folds", t.folds, 2));
    t.seed = s.unsigned_integer("seed", derive_seed(cfg.seed, "surrogate"));
    try {
      t.validate();
    } catch (const Error& e) {
      s.ctx().fail(s.child_path(""), e.what());
    }
  }
  {
    Node i = root.object("integrator");
    cfg.integrator.truth = i.choice("truth", "rk4", {"rk4", "exact"}) == "exact" ? TruthIntegrator::ExactLinear
                                                                                : TruthIntegrator::RungeKutta4;
    cfg.integrator.substep_factor = static_cast<int>(i.integer("substep_factor", 10, 1));
    cfg.integrator.prediction_substeps = static_cast<int>(i.integer("prediction_substeps", 10, 1));
  }
  {
    Node mt = root.object("mesh_transfer");
    cfg.mesh_transfer_elements = static_cast<int>(mt.integer("elements", 0, 0));
    if (cfg.mesh_transfer_elements > 0 && cfg.mesh_transfer_elements < 4) {
      mt.ctx().fail(mt.child_path("elements"), "must be 0 or >= 4");
    }
  }
  if (!cfg.model.nonlinearity.is_linear() && cfg.integrator.truth == TruthIntegrator::ExactLinear) {
    ctx.fail("/integrator/truth", "exact propagation requires a linear truth (nonlinearity.kind = none)");
  }
  if (cfg.mesh_transfer_elements > 0 && cfg.model.kind != ModelConfig::Kind::Beam) {
    ctx.fail("/mesh_transfer/elements", "mesh transfer applies to beam models only");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error&) {
    throw Error(ErrorKind::ConfigError, "cannot read config file " + path.string());
  }
  return parse_config(text);
}

namespace {

json damping_json(const DampingConfig& d) {
  switch (d.kind) {
    case DampingConfig::Kind::Lumped:
      return {{"kind", "lumped"}};
    case DampingConfig::Kind::Rayleigh:
      return {{"kind", "rayleigh"}, {"zeta_i", d.zeta_i}, {"mode_i", d.mode_i}, {"zeta_j", d.zeta_j}, {"mode_j", d.mode_j}};
    case DampingConfig::Kind::Modal:
      return {{"kind", "modal"}, {"ratios", d.ratios}};
  }
  return {};
}

json beam_model_json(const BeamModelConfig& b) {
  json bc = {{"kind", b.boundary.kind == BoundaryKind::SimplySupported ? "simply_supported" : "rotary_spring"}};
  if (b.boundary.kind == BoundaryKind::SimplySupportedRotarySpring) bc["rotary_stiffness"] = b.boundary.rotary_stiffness;
  return {{"theory", b.theory == BeamModelConfig::Theory::Timoshenko ? "timoshenko" : "euler_bernoulli"},
          {"elements", b.elements},
          {"boundary", bc},
          {"timoshenko_element", b.element == TimoshenkoElement::ExactStiffness ? "exact" : "linear_reduced"},
          {"damping", damping_json(b.damping)}};
}

json building_model_json(const BuildingModelConfig& b) {
  json j = {{"damage_fraction", b.damage_fraction}, {"damping", damping_json(b.damping)}};
  if (b.damage_story) j["damage_story"] = *b.damage_story;
  return j;
}

json excitation_json(const ExcitationSpec& e) {
  json sines = json::array();
  for (const auto& s : e.sinusoids) {
    sines.push_back({{"x", s.x}, {"dof", s.kind == DofKind::Rotation ? "rotation" : "translation"},
                     {"amplitude", s.amplitude}, {"omega", s.omega}, {"phase", s.phase}});
  }
  json noise = json::array();
  for (const auto& n : e.noise_loads) {
    noise.push_back({{"x", n.x}, {"dof", n.kind == DofKind::Rotation ? "rotation" : "translation"},
                     {"band_low", n.band_low}, {"band_high", n.band_high}, {"scale", n.scale}, {"seed", n.seed}});
  }
  return {{"sinusoids", sines}, {"noise_loads", noise}};
}

}  // namespace

json resolved_config(const ExperimentConfig& cfg) {
  json model;
  if (cfg.model.kind == ModelConfig::Kind::Beam) {
    const BeamProperties& p = cfg.model.beam;
    json beam = {{"length", p.length}, {"width", p.width}, {"height", p.height},
                 {"youngs_modulus", p.youngs_modulus}, {"poisson_ratio", p.poisson_ratio},
                 {"density", p.density}, {"shear_correction", p.shear_correction},
                 {"damping_beta", p.damping_beta},
                 {"damping_w_calibration_elements", cfg.model.damping_w_calibration_elements}};
    if (cfg.model.damping_w_target) {
      beam["damping_w"] = "auto";
      beam["damping_w_target_ratio"] = *cfg.model.damping_w_target;
    } else {
      beam["damping_w"] = p.damping_w;
    }
    model = {{"kind", "beam"}, {"beam", beam}, {"truth", beam_model_json(cfg.model.truth_beam)},
             {"nominal", beam_model_json(cfg.model.nominal_beam)}};
  } else {
    const ShearBuildingSpec& b = cfg.model.building;
    model = {{"kind", "shear_building"},
             {"building", {{"stories", b.n_stories}, {"story_mass", b.story_mass},
                           {"story_stiffness", b.story_stiffness}, {"story_height", b.story_height}}},
             {"truth_building", building_model_json(cfg.model.truth_building)},
             {"nominal_building", building_model_json(cfg.model.nominal_building)}};
  }
  model["nonlinearity"] = {{"kind", cfg.model.nonlinearity.kind == NonlinearRestoringSpec::Kind::CubicStiffness ? "cubic" : "none"},
                           {"cubic_coefficient", cfg.model.nonlinearity.cubic_coefficient}};

  json modal_damping = cfg.modal.damping.kind == ModalDampingRule::Kind::Ratios
                           ? json{{"kind", "ratios"}, {"ratios", cfg.modal.damping.ratios}}
                           : json{{"kind", "extract"}};
  const TrainingConfig& t = cfg.surrogate.training;
  const auto& nm = cfg.gp.map.nelder_mead;
  json out = {
      {"name", cfg.name},
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir.string()},
      {"model", model},
      {"excitation", {{"dt", cfg.train.dt}, {"duration", cfg.train.duration},
                      {"train", excitation_json(cfg.train)}, {"test", excitation_json(cfg.test)}}},
      {"sensors", {{"coordinates", cfg.sensors.coordinates}, {"noise_percent", cfg.sensors.noise_percent},
                   {"seed", cfg.sensors.seed}}},
      {"modal", {{"modes", cfg.modal.modes == 0 ? json("auto") : json(cfg.modal.modes)},
                 {"max_auto_modes", cfg.modal.max_auto_modes}, {"floor_db", cfg.modal.floor_db},
                 {"damping", modal_damping}}},
      {"gp", {{"kernel", cfg.gp.kernel}, {"jitter", cfg.gp.jitter}, {"prior_state_var", cfg.gp.prior_state_var},
              {"steady_tol", cfg.gp.steady_tol},
              {"priors", {{"amplitude", {{"mu", cfg.gp.priors.amplitude.mu}, {"v", cfg.gp.priors.amplitude.v}, {"nu", cfg.gp.priors.amplitude.nu}}},
                          {"length_scale", {{"mu", cfg.gp.priors.length_scale.mu}, {"v", cfg.gp.priors.length_scale.v}, {"nu", cfg.gp.priors.length_scale.nu}}}}},
              {"optimizer", {{"starts", cfg.gp.map.starts}, {"max_evaluations", nm.max_evaluations},
                             {"initial_step", nm.initial_step}, {"f_tol", nm.f_tol}, {"x_tol", nm.x_tol},
                             {"start_spread", cfg.gp.map.start_spread}, {"seed", cfg.gp.map.seed}}},
              {"noise_floor_rel", cfg.gp.map.noise_floor_rel}, {"estimate_noise", cfg.gp.map.estimate_noise}}},
      {"surrogate", {{"hidden", cfg.surrogate.hidden == 0 ? json("auto") : json(cfg.surrogate.hidden)},
                     {"hidden_candidates", t.hidden_candidates}, {"learning_rate", t.learning_rate},
                     {"beta1", t.beta1}, {"beta2", t.beta2}, {"epsilon", t.epsilon}, {"l2", t.l2},
                     {"max_epochs", t.max_epochs}, {"batch_size", t.batch_size},
                     {"validation_fraction", t.validation_fraction}, {"patience", t.patience},
                     {"folds", t.folds}, {"seed", t.seed}}},
      {"integrator", {{"truth", cfg.integrator.truth == TruthIntegrator::ExactLinear ? "exact" : "rk4"},
                      {"substep_factor", cfg.integrator.substep_factor},
                      {"prediction_substeps", cfg.integrator.prediction_substeps}}},
      {"mesh_transfer", {{"elements", cfg.mesh_transfer_elements}}},
  };
  return out;
}

}  // namespace mre
