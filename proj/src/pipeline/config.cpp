#include "posefuse/pipeline/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "posefuse/error.hpp"

namespace posefuse::pipeline {

namespace pt = boost::property_tree;

std::string MemberSpec::name() const {
  return "unimodal" + backbone + (init == 0 ? std::string() : std::to_string(init));
}

MemberSpec parse_member(std::string_view text) {
  const auto colon = text.find(':');
  MemberSpec m;
  m.backbone = std::string(text.substr(0, colon));
  if (m.backbone != "A" && m.backbone != "B") {
    throw Error("member '" + std::string(text) + "': backbone must be A or B");
  }
  if (colon != std::string_view::npos) {
    const std::string index(text.substr(colon + 1));
    if (index.empty() || index.find_first_not_of("0123456789") != std::string::npos) {
      throw Error("member '" + std::string(text) + "': init index must be a non-negative integer");
    }
    m.init = std::stoul(index);
  }
  return m;
}

std::vector<MemberSpec> parse_members(std::string_view text) {
  std::vector<MemberSpec> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = text.substr(start, end - start);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    if (!item.empty()) out.push_back(parse_member(item));
    start = end + 1;
  }
  return out;
}

std::string format_members(const std::vector<MemberSpec>& members) {
  std::string out;
  for (std::size_t i = 0; i < members.size(); ++i) {
    out += fmt::format("{}{}:{}", i ? "," : "", members[i].backbone, members[i].init);
  }
  return out;
}

std::string to_string(nn::TrainableScope scope) {
  switch (scope) {
    case nn::TrainableScope::kHead: return "head";
    case nn::TrainableScope::kTopDenseAndHead: return "top_dense_and_head";
    case nn::TrainableScope::kAll: return "all";
  }
  return "top_dense_and_head";
}

nn::TrainableScope scope_from_string(const std::string& text) {
  if (text == "head") return nn::TrainableScope::kHead;
  if (text == "top_dense_and_head") return nn::TrainableScope::kTopDenseAndHead;
  if (text == "all") return nn::TrainableScope::kAll;
  throw Error("unknown trainable scope '" + text + "' (expected head, top_dense_and_head or all)");
}

std::vector<fusion::FusionSpec> ExperimentConfig::fusion_specs() const {
  using fusion::FusionOp;
  using fusion::FusionStage;
  std::vector<std::string> lf;
  for (const MemberSpec& m : late_members) lf.push_back(m.name());
  return {
      {"LF", FusionStage::kLate, FusionOp::kAverage, lf},
      {"AEF", FusionStage::kEarly, FusionOp::kAdd, {"unimodalA", "unimodalB"}},
      {"MEF", FusionStage::kEarly, FusionOp::kMultiply, {"unimodalA", "unimodalB"}},
      {"AHL", FusionStage::kHybrid, FusionOp::kAverage, {"AEF_A", "AEF_B"}},
      {"MHL", FusionStage::kHybrid, FusionOp::kMultiply, {"MEF_A", "MEF_B"}},
      {"HLFF", FusionStage::kHybrid, FusionOp::kAverage, {"AEF_A", "AEF_B", "MEF_A", "MEF_B"}},
  };
}

namespace {

const std::map<std::string, std::set<std::string>> kSchema = {
    {"experiment", {"seed", "output", "baseline", "rotation", "convention"}},
    {"dataset",
     {"path", "synthetic_samples", "synthetic_seed", "half_width", "half_depth", "camera_height", "height_wobble",
      "attitude_noise", "phase_jitter", "landmarks", "fov"}},
    {"train", {"learning_rate", "batch_size", "dropout", "epochs", "scope", "norm"}},
    {"fusion", {"late_members", "hlff_mode", "translation_product"}},
    {"timing", {"enabled", "samples", "batch_size", "repetitions"}},
};

template <typename T>
T get(const pt::ptree& tree, const std::string& key, T fallback) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return fallback;
  const auto value = node->get_value_optional<T>();
  if (!value) throw Error("config: bad value '" + node->data() + "' for " + key);
  return *value;
}

bool get_bool(const pt::ptree& tree, const std::string& key, bool fallback) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return fallback;
  const std::string v = node->data();
  if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
  if (v == "false" || v == "no" || v == "0" || v == "off") return false;
  throw Error("config: bad boolean '" + v + "' for " + key);
}

std::size_t get_count(const pt::ptree& tree, const std::string& key, std::size_t fallback) {
  const auto node = tree.get_child_optional(pt::ptree::path_type(key, '.'));
  if (!node) return fallback;
  const std::string v = node->data();
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos) {
    throw Error("config: " + key + " must be a non-negative integer, got '" + v + "'");
  }
  return std::stoull(v);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    const auto schema = kSchema.find(section);
    if (schema == kSchema.end()) throw Error("config: unknown section [" + section + "]");
    if (!body.data().empty()) throw Error("config: key '" + section + "' outside any section");
    for (const auto& [key, _] : body) {
      if (!schema->second.contains(key)) throw Error("config: unknown key '" + key + "' in [" + section + "]");
    }
  }

  ExperimentConfig c;
  c.seed = get_count(tree, "experiment.seed", 0);
  c.output = get<std::string>(tree, "experiment.output", c.output.string());
  c.baseline = get<std::string>(tree, "experiment.baseline", c.baseline);
  const std::string rotation = get<std::string>(tree, "experiment.rotation", "standard");
  if (rotation == "standard") {
    c.rotation.conversion = RotationConversion::kStandard;
  } else if (rotation == "half_angle") {
    c.rotation.conversion = RotationConversion::kHalfAngle;
  } else {
    throw Error("config: rotation must be standard or half_angle");
  }
  const std::string convention = get<std::string>(tree, "experiment.convention", "zyx");
  if (convention == "zyx") {
    c.rotation.convention = EulerConvention::kIntrinsicZYX;
  } else if (convention == "xyz") {
    c.rotation.convention = EulerConvention::kIntrinsicXYZ;
  } else {
    throw Error("config: convention must be zyx or xyz");
  }

  if (const auto path = tree.get_optional<std::string>("dataset.path"); path && !path->empty()) {
    c.dataset.path = *path;
  }
  c.dataset.synthetic_samples = get_count(tree, "dataset.synthetic_samples", c.dataset.synthetic_samples);
  if (tree.get_child_optional("dataset.synthetic_seed")) {
    c.dataset.synthetic_seed = get_count(tree, "dataset.synthetic_seed", 0);
  }
  data::WorldParams& w = c.dataset.world;
  w.half_width = get(tree, "dataset.half_width", w.half_width);
  w.half_depth = get(tree, "dataset.half_depth", w.half_depth);
  w.camera_height = get(tree, "dataset.camera_height", w.camera_height);
  w.height_wobble = get(tree, "dataset.height_wobble", w.height_wobble);
  w.attitude_noise = get(tree, "dataset.attitude_noise", w.attitude_noise);
  w.phase_jitter = get(tree, "dataset.phase_jitter", w.phase_jitter);
  w.landmarks = get_count(tree, "dataset.landmarks", w.landmarks);
  w.fov = get(tree, "dataset.fov", w.fov);

  nn::TrainConfig& t = c.train;
  t.learning_rate = get(tree, "train.learning_rate", t.learning_rate);
  t.batch_size = get_count(tree, "train.batch_size", t.batch_size);
  t.dropout_rate = get(tree, "train.dropout", t.dropout_rate);
  t.epochs = get_count(tree, "train.epochs", t.epochs);
  t.scope = scope_from_string(get<std::string>(tree, "train.scope", to_string(t.scope)));
  const std::string norm = get<std::string>(tree, "train.norm", "l1");
  if (norm == "l1") {
    t.norm = nn::ResidualNorm::kL1;
  } else if (norm == "l2") {
    t.norm = nn::ResidualNorm::kL2;
  } else {
    throw Error("config: norm must be l1 or l2");
  }
  if (!(t.learning_rate > 0.0) || t.batch_size == 0) throw Error("config: learning rate and batch size must be positive");
  if (!(t.dropout_rate >= 0.0 && t.dropout_rate < 1.0)) throw Error("config: dropout must be in [0, 1)");

  if (const auto members = tree.get_optional<std::string>("fusion.late_members")) {
    c.late_members = parse_members(*members);
  }
  if (c.late_members.size() < 2) throw Error("config: late fusion needs at least two members");
  const std::string hlff = get<std::string>(tree, "fusion.hlff_mode", "four_members");
  if (hlff == "four_members") {
    c.late.hlff_mode = fusion::HlffMode::kFourMembers;
  } else if (hlff == "hybrid_outputs") {
    c.late.hlff_mode = fusion::HlffMode::kHybridOutputs;
  } else {
    throw Error("config: hlff_mode must be four_members or hybrid_outputs");
  }
  const std::string product = get<std::string>(tree, "fusion.translation_product", "literal");
  if (product == "literal") {
    c.late.translation_product = fusion::TranslationProduct::kLiteral;
  } else if (product == "signed_geometric_mean") {
    c.late.translation_product = fusion::TranslationProduct::kSignedGeometricMean;
  } else {
    throw Error("config: translation_product must be literal or signed_geometric_mean");
  }

  c.timing.enabled = get_bool(tree, "timing.enabled", c.timing.enabled);
  c.timing.samples = get_count(tree, "timing.samples", c.timing.samples);
  c.timing.batch_size = get_count(tree, "timing.batch_size", c.timing.batch_size);
  c.timing.repetitions = get_count(tree, "timing.repetitions", c.timing.repetitions);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c) {
  const data::WorldParams& w = c.dataset.world;
  std::string out;
  out += "[experiment]\n";
  out += fmt::format("seed = {}\noutput = {}\nbaseline = {}\n", c.seed, c.output.string(), c.baseline);
  out += fmt::format("rotation = {}\n",
                     c.rotation.conversion == RotationConversion::kStandard ? "standard" : "half_angle");
  out += fmt::format("convention = {}\n\n",
                     c.rotation.convention == EulerConvention::kIntrinsicZYX ? "zyx" : "xyz");
  out += "[dataset]\n";
  if (c.dataset.path) out += fmt::format("path = {}\n", c.dataset.path->string());
  out += fmt::format("synthetic_samples = {}\n", c.dataset.synthetic_samples);
  if (c.dataset.synthetic_seed) out += fmt::format("synthetic_seed = {}\n", *c.dataset.synthetic_seed);
  out += fmt::format(
      "half_width = {}\nhalf_depth = {}\ncamera_height = {}\nheight_wobble = {}\nattitude_noise = {}\n"
      "phase_jitter = {}\nlandmarks = {}\nfov = {}\n\n",
      w.half_width, w.half_depth, w.camera_height, w.height_wobble, w.attitude_noise, w.phase_jitter, w.landmarks,
      w.fov);
  out += "[train]\n";
  out += fmt::format("learning_rate = {}\nbatch_size = {}\ndropout = {}\nepochs = {}\nscope = {}\nnorm = {}\n\n",
                     c.train.learning_rate, c.train.batch_size, c.train.dropout_rate, c.train.epochs,
                     to_string(c.train.scope), c.train.norm == nn::ResidualNorm::kL1 ? "l1" : "l2");
  out += "[fusion]\n";
  out += fmt::format("late_members = {}\nhlff_mode = {}\ntranslation_product = {}\n\n", format_members(c.late_members),
                     c.late.hlff_mode == fusion::HlffMode::kFourMembers ? "four_members" : "hybrid_outputs",
                     c.late.translation_product == fusion::TranslationProduct::kLiteral ? "literal"
                                                                                         : "signed_geometric_mean");
  out += "[timing]\n";
  out += fmt::format("enabled = {}\nsamples = {}\nbatch_size = {}\nrepetitions = {}\n", c.timing.enabled ? "true" : "false",
                     c.timing.samples, c.timing.batch_size, c.timing.repetitions);
  return out;
}

}  // namespace posefuse::pipeline
