#include "segarena/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace segarena {

const std::vector<Config::Entry>& Config::registry() {
  static const std::vector<Entry> entries = {
      // Arena and scene composition
      {"arena.width", "128", "arena width in pixels"},
      {"arena.height", "128", "arena height in pixels"},
      {"arena.min_objects", "4", "minimum objects per spawned scene"},
      {"arena.max_objects", "8", "maximum objects per spawned scene"},
      {"arena.spawn_gap", "3", "minimum clearance between spawned objects, px"},
      {"arena.min_object_area", "120", "smallest template area accepted at spawn, px"},
      {"arena.max_rejections", "2000", "placement attempts before spawn fails"},
      {"arena.lighting_min", "0.9", "lower bound of the global lighting gain"},
      {"arena.lighting_max", "1.1", "upper bound of the global lighting gain"},

      // Interaction noise model
      {"sim.grasp_radius", "10", "max distance pick->centroid for a grasp attempt, px"},
      {"sim.touch_radius", "14", "objects closer than this to the pick get nudged, px"},
      {"sim.nudge_sigma", "2.5", "std-dev of the contact nudge, px"},
      {"sim.place_sigma", "1.5", "std-dev of placement position noise, px"},
      {"sim.drag_enabled", "true", "neighbours overlapping the lift zone get dragged"},
      {"sim.drag_clearance", "3", "lift-zone radius beyond the grasped shape, px"},
      {"sim.drag_fraction", "0.2", "fraction of the pick->place vector a dragged neighbour moves"},
      {"sim.drag_max", "6", "cap on dragged neighbour displacement, px"},
      {"sim.flicker_prob", "0.05", "chance the lighting gain is resampled per captured frame"},
      {"sim.graspability_min", "0.7", "lower bound of sampled object graspability"},
      {"sim.graspability_max", "1.0", "upper bound of sampled object graspability"},
      {"sim.reset_sweeps", "8", "boundary-to-centre sweeps per reset"},
      {"sim.reset_halfwidth", "10", "sweep corridor half-width, px"},
      {"sim.reset_noise", "4.0", "std-dev of post-sweep placement noise, px"},
      {"sim.push_min", "10", "min passive-motion push distance, px"},
      {"sim.push_max", "30", "max passive-motion push distance, px"},

      // Pseudo-label extraction (fractions of arena size keep the original
      // 350x430 proportions at any resolution)
      {"pseudo.window_frac", "0.6857", "difference window side as a fraction of the short image side"},
      {"pseudo.area_frac", "0.006645", "min changed-component area as a fraction of image area"},
      {"pseudo.diff_threshold", "0.08", "per-pixel intensity threshold of the difference image"},
      {"pseudo.fit_frac", "0.5", "fraction of the patch the object's long side is scaled to"},
      {"pseudo.hard_neg_l1_frac", "0.333333", "L1 jitter threshold as a fraction of the crop side"},
      {"pseudo.n_augment", "2", "scale-augmented copies per positive"},
      {"pseudo.n_hard_negatives", "2", "hard negatives mined per positive"},

      // Model architecture and optimizer
      {"model.patch", "48", "patch side in pixels"},
      {"model.channels", "8,16,24", "feature channels of the three conv layers"},
      {"model.kernel", "3", "conv kernel side"},
      {"model.mask_grid", "12", "coarse mask-head output side (upsampled to patch)"},
      {"model.init_sigma_scale", "1.0", "multiplier on the fan-in init std-dev"},
      {"model.lr", "0.01", "SGD learning rate"},
      {"model.momentum", "0.9", "SGD momentum"},
      {"model.batch", "32", "training batch size"},
      {"model.stride_frac", "0.083333", "pyramid stride as a fraction of the patch side"},
      {"model.scale_indices", "0,1,2,3,4,5,6", "pyramid scales 2^(i/4 - 1.25) to evaluate"},

      // Robust set loss
      {"rsl.b", "0.7", "IoU margin of the latent-target constraint"},

      // Active interaction loop
      {"loop.bootstrap_steps", "150", "passive motion pairs observed before the loop"},
      {"loop.bootstrap_train_steps", "200", "gradient steps on the passive data"},
      {"loop.epsilon", "0.2", "probability of a uniform exploratory action"},
      {"loop.update_interval", "50", "interactions between training rounds"},
      {"loop.steps_per_update", "100", "gradient steps per training round"},
      {"loop.reset_interval", "25", "interactions between arena resets"},
      {"loop.bg_rotate_interval", "500", "interactions between background changes"},
      {"loop.checkpoint_interval", "250", "interactions between saved checkpoints"},
      {"loop.score_thresh", "0.5", "hypothesis score cut during collection"},
      {"loop.nms_thresh", "0.5", "NMS IoU threshold during collection"},
      {"loop.scale_indices", "4,5", "pyramid subset used while collecting"},
      {"loop.stride_frac", "0.166667", "pyramid stride fraction used while collecting"},
      {"loop.loss", "rsl", "mask-head loss during collection: ce or rsl"},

      // Evaluation bench
      {"eval.score_thresh", "0.1", "score cut applied before ranking predictions"},
      {"eval.nms_thresh", "0.5", "NMS IoU threshold applied to predictions"},
      {"eval.precision_levels", "0.5,0.7,0.9", "precision levels for recall reporting"},
      {"eval.matrix_scenes", "8", "scenes per generalization-matrix cell"},
      {"eval.baseline_threshold", "0.15", "colour-distance cut of the bottom-up baseline"},
      {"eval.baseline_min_area_frac", "0.002", "min component area fraction kept by the baseline"},

      // Object/background split definitions. Backgrounds are family seeds;
      // disjoint ranges give disjoint train/val/test sets.
      {"splits.train_bg_lo", "0", "first train background seed"},
      {"splits.train_bg_hi", "99", "last train background seed"},
      {"splits.val_bg_lo", "100", "first validation background seed"},
      {"splits.val_bg_hi", "149", "last validation background seed"},
      {"splits.test_bg_lo", "150", "first test background seed"},
      {"splits.test_bg_hi", "199", "last test background seed"},

      // Rearrangement controller
      {"rearrange.tol_frac", "0.042857", "success tolerance as a fraction of arena width"},
      {"rearrange.max_interactions", "10", "interaction budget per episode"},
      {"rearrange.noise_free", "false", "disable grasp/place noise for controlled runs"},
  };
  return entries;
}

Config Config::defaults() {
  Config c;
  for (const Entry& e : registry()) c.values_[e.key] = e.value;
  return c;
}

Config Config::from_echo(const std::string& echo) {
  Config c = defaults();
  std::stringstream ss(echo);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty()) c.set_pair(line);
  }
  return c;
}

void Config::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config " + path.string());
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    // trim
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    const std::string body = line.substr(first, last - first + 1);
    try {
      set_pair(body);
    } catch (const std::exception& e) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                               ": " + e.what());
    }
  }
}

void Config::set_pair(const std::string& pair) {
  const auto eq = pair.find('=');
  if (eq == std::string::npos) {
    throw std::invalid_argument("expected key=value, got '" + pair + "'");
  }
  set(pair.substr(0, eq), pair.substr(eq + 1));
}

void Config::set(const std::string& key, const std::string& value) {
  if (values_.find(key) == values_.end()) {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
  values_[key] = value;
}

const std::string& Config::get_str(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    throw std::invalid_argument("unknown config key '" + key + "'");
  }
  return it->second;
}

int Config::get_int(const std::string& key) const {
  return std::stoi(get_str(key));
}

double Config::get_double(const std::string& key) const {
  return std::stod(get_str(key));
}

bool Config::get_bool(const std::string& key) const {
  const std::string& v = get_str(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config key '" + key + "' is not a bool: " + v);
}

std::vector<double> Config::get_list(const std::string& key) const {
  std::vector<double> out;
  std::stringstream ss(get_str(key));
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

std::vector<int> Config::get_int_list(const std::string& key) const {
  std::vector<int> out;
  for (const double v : get_list(key)) out.push_back(static_cast<int>(v));
  return out;
}

std::string Config::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) {  // std::map iterates sorted
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

}  // namespace segarena
