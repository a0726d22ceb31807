#include "mattekit/io/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <variant>

namespace mattekit::io {

namespace {

using FieldRef =
    std::variant<int*, std::uint64_t*, double*, bool*, std::string*,
                 std::vector<int>*, std::array<int, 3>*, RefineConfig*>;

struct Field {
  std::string section;  // dotted path, "" for top level
  std::string key;
  FieldRef ref;
};

// Single table shared by parsing and serialization. Section order here is
// the order of the emitted file.
std::vector<Field> fields(PipelineConfig& c) {
  auto& d = c.dataset;
  auto& s1 = c.stage1;
  auto& t = c.training;
  auto& a = c.training.augment;
  auto& m = c.sweep.metrics;
  return {
      {"", "seed", &c.seed},
      {"dataset", "backgrounds_per_fg", &d.backgrounds_per_fg},
      {"dataset", "d_min", &d.d_min},
      {"dataset", "d_max", &d.d_max},
      {"dataset", "crop_sizes", &d.crop_sizes},
      {"dataset", "train_size", &d.train_size},
      {"dataset", "max_bg_upscale", &d.max_bg_upscale},
      {"model", "width_multiplier", &c.width_multiplier},
      {"model.stage1", "encoder_widths", &s1.encoder_widths},
      {"model.stage1", "pool_after", &s1.pool_after},
      {"model.stage1", "encoder_kernel", &s1.encoder_kernel},
      {"model.stage1", "bottleneck_kernel", &s1.bottleneck_kernel},
      {"model.stage1", "decoder_widths", &s1.decoder_widths},
      {"model.stage1", "decoder_kernel", &s1.decoder_kernel},
      {"model.stage1", "prediction_kernel", &s1.prediction_kernel},
      {"model.stage2", "widths", &c.stage2.widths},
      {"model.stage2", "kernel", &c.stage2.kernel},
      {"training", "steps", &t.steps},
      {"training", "batch_size", &t.batch_size},
      {"training", "learning_rate", &t.adam.lr},
      {"training", "beta1", &t.adam.beta1},
      {"training", "beta2", &t.adam.beta2},
      {"training", "adam_epsilon", &t.adam.epsilon},
      {"training", "convergence_window", &t.convergence_window},
      {"training", "convergence_tol", &t.convergence_tol},
      {"training.augment", "center_on_unknown", &a.center_on_unknown},
      {"training.augment", "multi_scale", &a.multi_scale},
      {"training.augment", "random_flip", &a.random_flip},
      {"training.augment", "random_dilation", &a.random_dilation},
      {"training.augment", "regenerate_each_epoch", &a.regenerate_each_epoch},
      {"loss", "epsilon", &c.loss.epsilon},
      {"loss", "alpha_weight", &c.loss.alpha_weight},
      {"eval", "d_list", &c.sweep.d_list},
      {"eval", "one_per_foreground", &c.sweep.one_per_foreground},
      {"eval", "gradient_sigma", &m.gradient_sigma},
      {"eval", "gradient_power", &m.gradient_power},
      {"eval", "connectivity_step", &m.connectivity_step},
      {"eval", "connectivity_theta", &m.connectivity_theta},
      {"eval", "connectivity_power", &m.connectivity_power},
      {"eval", "refine", &c.refine},
      {"paths", "assets", &c.paths.assets},
      {"paths", "backgrounds", &c.paths.backgrounds},
      {"paths", "dataset", &c.paths.dataset},
      {"paths", "out", &c.paths.out},
      {"paths", "checkpoint", &c.paths.checkpoint},
  };
}

std::string join(const std::string& section, const std::string& key) {
  return section.empty() ? key : section + "." + key;
}

std::runtime_error config_error(const YAML::Mark& mark, const std::string& msg) {
  return std::runtime_error("config line " + std::to_string(mark.line + 1) +
                            ": " + msg);
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, end);
  // Keep a float-looking token so the value re-reads as a number.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

template <typename T>
T scalar_as(const YAML::Node& node, const std::string& name) {
  if (!node.IsScalar()) throw config_error(node.Mark(), name + ": expected a scalar");
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw config_error(node.Mark(), name + ": invalid value '" + node.Scalar() + "'");
  }
}

std::vector<int> int_list(const YAML::Node& node, const std::string& name) {
  if (!node.IsSequence()) throw config_error(node.Mark(), name + ": expected a list");
  std::vector<int> out;
  for (const auto& item : node) out.push_back(scalar_as<int>(item, name));
  return out;
}

void assign(const Field& f, const YAML::Node& node) {
  const std::string name = join(f.section, f.key);
  std::visit(
      [&](auto* p) {
        using T = std::remove_pointer_t<decltype(p)>;
        if constexpr (std::is_same_v<T, std::vector<int>>) {
          *p = int_list(node, name);
        } else if constexpr (std::is_same_v<T, std::array<int, 3>>) {
          const auto v = int_list(node, name);
          if (v.size() != 3) {
            throw config_error(node.Mark(), name + ": expected 3 entries");
          }
          std::copy(v.begin(), v.end(), p->begin());
        } else if constexpr (std::is_same_v<T, RefineConfig>) {
          try {
            *p = parse_refine(scalar_as<std::string>(node, name));
          } catch (const std::invalid_argument& e) {
            throw config_error(node.Mark(), e.what());
          }
        } else {
          *p = scalar_as<T>(node, name);
        }
      },
      f.ref);
}

YAML::Node emit_value(const FieldRef& ref) {
  return std::visit(
      [](auto* p) -> YAML::Node {
        using T = std::remove_pointer_t<decltype(p)>;
        YAML::Node n;
        if constexpr (std::is_same_v<T, double>) {
          n = format_double(*p);
        } else if constexpr (std::is_same_v<T, std::vector<int>> ||
                             std::is_same_v<T, std::array<int, 3>>) {
          n = YAML::Node(YAML::NodeType::Sequence);
          for (int v : *p) n.push_back(v);
          n.SetStyle(YAML::EmitterStyle::Flow);
        } else if constexpr (std::is_same_v<T, RefineConfig>) {
          n = format_refine(*p);
        } else {
          n = *p;
        }
        return n;
      },
      ref);
}

void read_section(const YAML::Node& node, const std::string& section,
                  const std::map<std::string, const Field*>& table,
                  const std::set<std::string>& sections) {
  if (!node.IsMap()) {
    throw config_error(node.Mark(), "section '" + (section.empty() ? "<root>" : section) +
                                        "' must be a mapping");
  }
  for (const auto& kv : node) {
    const std::string key = kv.first.Scalar();
    const std::string path = join(section, key);
    if (sections.count(path)) {
      read_section(kv.second, path, table, sections);
    } else if (auto it = table.find(path); it != table.end()) {
      assign(*it->second, kv.second);
    } else {
      throw config_error(kv.first.Mark(), "unknown key '" + path + "'");
    }
  }
}

void propagate(PipelineConfig& cfg) {
  cfg.dataset.seed = cfg.seed;
  cfg.training.seed = cfg.seed;
  cfg.sweep.seed = cfg.seed;
}

}  // namespace

RefineConfig parse_refine(const std::string& text) {
  RefineConfig out;
  if (text == "none") {
    out.mode = RefineConfig::Mode::kNone;
    return out;
  }
  if (text == "stage2") {
    out.mode = RefineConfig::Mode::kStage2;
    return out;
  }
  if (text.rfind("guided", 0) != 0) {
    throw std::invalid_argument("refine: expected none, stage2 or guided[:r=..,eps=..], got '" +
                                text + "'");
  }
  out.mode = RefineConfig::Mode::kGuided;
  std::string rest = text.substr(6);
  if (rest.empty()) return out;
  if (rest[0] != ':') throw std::invalid_argument("refine: malformed '" + text + "'");
  std::stringstream ss(rest.substr(1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("refine: expected key=value in '" + item + "'");
    }
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    try {
      std::size_t used = 0;
      if (key == "r") {
        out.guided.radius = std::stoi(value, &used);
      } else if (key == "eps") {
        out.guided.eps = std::stod(value, &used);
      } else {
        throw std::invalid_argument("refine: unknown guided parameter '" + key + "'");
      }
      if (used != value.size()) throw std::invalid_argument(value);
    } catch (const std::logic_error&) {
      throw std::invalid_argument("refine: bad value in '" + item + "'");
    }
  }
  out.guided.validate();
  return out;
}

std::string format_refine(const RefineConfig& refine) {
  switch (refine.mode) {
    case RefineConfig::Mode::kNone:
      return "none";
    case RefineConfig::Mode::kStage2:
      return "stage2";
    case RefineConfig::Mode::kGuided:
      return "guided:r=" + std::to_string(refine.guided.radius) +
             ",eps=" + format_double(refine.guided.eps);
  }
  return "none";
}

Stage1Config PipelineConfig::effective_stage1() const {
  Stage1Config s = stage1;
  s.width_multiplier = width_multiplier;
  return s;
}

Stage2Config PipelineConfig::effective_stage2() const {
  Stage2Config s = stage2;
  s.width_multiplier = width_multiplier;
  return s;
}

void PipelineConfig::set_seed(std::uint64_t s) {
  seed = s;
  propagate(*this);
}

void PipelineConfig::validate() const {
  dataset.validate();
  effective_stage1().validate();
  effective_stage2().validate();
  training.validate();
  loss.validate();
  sweep.validate();
  if (refine.mode == RefineConfig::Mode::kGuided) refine.guided.validate();
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig cfg;
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw config_error(e.mark, "malformed YAML: " + e.msg);
  }
  if (!root.IsNull()) {
    auto table_storage = fields(cfg);
    std::map<std::string, const Field*> table;
    std::set<std::string> sections;
    for (const auto& f : table_storage) {
      table[join(f.section, f.key)] = &f;
      // Register every prefix of the dotted section path.
      for (std::size_t pos = 0; pos != std::string::npos && !f.section.empty();) {
        pos = f.section.find('.', pos + 1);
        sections.insert(f.section.substr(0, pos));
      }
    }
    read_section(root, "", table, sections);
  }
  propagate(cfg);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("config: ") + e.what());
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("config: cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const std::runtime_error& e) {
    throw std::runtime_error(path.string() + ": " + e.what());
  }
}

std::string serialize_config(const PipelineConfig& cfg) {
  PipelineConfig copy = cfg;
  YAML::Node root(YAML::NodeType::Map);
  for (const auto& f : fields(copy)) {
    YAML::Node target = root;
    std::stringstream ss(f.section);
    std::string part;
    while (!f.section.empty() && std::getline(ss, part, '.')) {
      target.reset(target[part]);
    }
    target[f.key] = emit_value(f.ref);
  }
  YAML::Emitter out;
  out << root;
  return std::string(out.c_str()) + "\n";
}

}  // namespace mattekit::io
