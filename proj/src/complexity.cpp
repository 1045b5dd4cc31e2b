#include "gecco/complexity.hpp"

#include <iomanip>
#include <sstream>

namespace gecco {

namespace {

// Builds the per-stage cost table for one eval-mode batch forward.
// Every stage's MAC total is a multiple of the batch size, so the per-image
// figures below are exact integers.
std::vector<LayerCost> build_breakdown(const ModelConfig& config, int batch_size) {
  const std::uint64_t b = static_cast<std::uint64_t>(batch_size);
  const std::uint64_t hw = static_cast<std::uint64_t>(config.input_dim());
  const std::uint64_t d = static_cast<std::uint64_t>(config.d_out);
  const std::uint64_t k = static_cast<std::uint64_t>(config.pooled_dim());
  const std::uint64_t c = static_cast<std::uint64_t>(config.num_classes);
  const bool graph = config.use_gcn && config.gcn_layers >= 1 && batch_size >= 2;

  std::vector<LayerCost> rows;
  rows.push_back({"flatten", 0, 0, 0});
  rows.push_back({"fc", hw * d, hw * d + d, b * d});  // bias adds
  rows.push_back({"relu", 0, 0, b * d});
  rows.push_back({"dropout", 0, 0, 0});  // identity at inference
  rows.push_back({"relu2", 0, 0, b * d});

  if (graph) {
    for (int l = 0; l < config.gcn_layers; ++l) {
      const std::string p = "gcn" + std::to_string(l) + ".";
      rows.push_back({p + "adjacency_matmul", b * d, 0, 0});  // (BxB)(BxD)/B
      const std::uint64_t self_adds = config.gcn_self_term ? b * d : 0;
      rows.push_back({p + "weight_matmul", d * d, d * d, self_adds});
      rows.push_back({p + "sigmoid", 0, 0, b * d});
    }
    // eval batch norm: (x-mean)*inv_std is one multiply, gamma*xhat+beta is
    // one MAC; the subtract plus the per-feature sqrt/div prep are non-MAC.
    rows.push_back({"batch_norm", 2 * d, 2 * d, b * d + 2 * d});
    rows.push_back({"max_pool", 0, 0, b * k});
    if (config.use_attention) {
      rows.push_back({"attention.similarity", b * k, 0, b * b});  // sigmoid entries
      // column sums (adds), B reciprocals, then B*B scaling multiplies
      rows.push_back({"attention.normalize", b, 0, (b - 1) * b + b});
      rows.push_back({"attention.mix", b * k, 0, 0});
      rows.push_back({"residual_add", 0, 0, b * k});
    }
  } else {
    rows.push_back({"max_pool", 0, 0, b * k});
  }

  rows.push_back({"classifier_fc", k * c, k * c + c, b * c});  // bias adds
  // per row: (C-1) max compares, C exp, (C-1) sum adds, C divides
  rows.push_back({"softmax", 0, 0, b * (4 * c - 2)});
  return rows;
}

}  // namespace

std::uint64_t count_parameters(const ModelConfig& config) {
  config.validate();
  const std::uint64_t hw = static_cast<std::uint64_t>(config.input_dim());
  const std::uint64_t d = static_cast<std::uint64_t>(config.d_out);
  const std::uint64_t k = static_cast<std::uint64_t>(config.pooled_dim());
  const std::uint64_t c = static_cast<std::uint64_t>(config.num_classes);
  std::uint64_t n = hw * d + d + k * c + c;
  if (config.use_gcn && config.gcn_layers >= 1) {
    n += static_cast<std::uint64_t>(config.gcn_layers) * d * d + 2 * d;
  }
  return n;
}

std::uint64_t count_macs(const ModelConfig& config, int batch_size) {
  config.validate();
  if (batch_size < 1) throw ConfigError("count_macs: batch_size must be >= 1");
  std::uint64_t total = 0;
  for (const LayerCost& row : build_breakdown(config, batch_size)) {
    total += row.macs_per_image;
  }
  return total;
}

int count_layers(const ModelConfig& config) {
  config.validate();
  return static_cast<int>(build_breakdown(config, config.batch_size).size());
}

ComplexityReport complexity_report(const ModelConfig& config, int batch_size) {
  config.validate();
  if (batch_size < 1) throw ConfigError("complexity_report: batch_size must be >= 1");
  ComplexityReport rep;
  rep.batch_size = batch_size;
  rep.breakdown = build_breakdown(config, batch_size);
  for (const LayerCost& row : rep.breakdown) {
    rep.macs_per_image += row.macs_per_image;
    rep.parameters += row.params;
  }
  rep.model_size_megabits = static_cast<double>(rep.parameters) * 32.0 / 1e6;
  rep.layers = static_cast<int>(rep.breakdown.size());
  return rep;
}

std::string ComplexityReport::to_text() const {
  std::ostringstream os;
  os << std::left << std::setw(26) << "layer" << std::right << std::setw(14) << "macs/img"
     << std::setw(12) << "params" << std::setw(18) << "non-mac/batch" << "\n";
  for (const LayerCost& row : breakdown) {
    os << std::left << std::setw(26) << row.name << std::right << std::setw(14)
       << row.macs_per_image << std::setw(12) << row.params << std::setw(18)
       << row.non_mac_per_batch << "\n";
  }
  os << std::left << std::setw(26) << "total" << std::right << std::setw(14) << macs_per_image
     << std::setw(12) << parameters << "\n";
  os << "layers: " << layers << "\n";
  os << "model size: " << std::fixed << std::setprecision(4) << model_size_megabits
     << " Mb (32-bit storage)\n";
  os << "batch size for MAC accounting: " << batch_size << "\n";
  return os.str();
}

std::string ComplexityReport::to_csv() const {
  std::ostringstream os;
  os << "layer,macs_per_image,params,non_mac_per_batch\n";
  for (const LayerCost& row : breakdown) {
    os << row.name << "," << row.macs_per_image << "," << row.params << ","
       << row.non_mac_per_batch << "\n";
  }
  os << "total," << macs_per_image << "," << parameters << ",\n";
  return os.str();
}

}  // namespace gecco
