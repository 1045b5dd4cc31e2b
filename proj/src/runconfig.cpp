#include "gecco/runconfig.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace gecco {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "' expects a boolean, got '" + v + "'");
}

long parse_int(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
  }
}

double parse_float(const std::string& v, const std::string& key) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
  }
}

const std::set<std::string> kKnownKeys = {
    "train_images", "train_labels", "train_dir", "eval_images", "eval_labels", "eval_dir",
    "image_h", "image_w", "d_out", "classes", "batch_size", "dropout", "gcn_layers",
    "use_gcn", "use_attention", "gcn_self_term", "adjacency_mode", "epochs", "lr", "seed",
};

}  // namespace

RunConfig parse_run_config_text(const std::string& text, const std::string& origin) {
  RunConfig rc;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": expected 'key = value', got '" << line << "'";
      throw ConfigError(os.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!kKnownKeys.count(key)) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": unknown config key '" << key << "'";
      throw ConfigError(os.str());
    }
    if (!seen.insert(key).second) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": duplicate config key '" << key << "'";
      throw ConfigError(os.str());
    }

    if (key == "train_images") rc.train_images = val;
    else if (key == "train_labels") rc.train_labels = val;
    else if (key == "train_dir") rc.train_dir = val;
    else if (key == "eval_images") rc.eval_images = val;
    else if (key == "eval_labels") rc.eval_labels = val;
    else if (key == "eval_dir") rc.eval_dir = val;
    else if (key == "image_h") rc.model.image_h = static_cast<int>(parse_int(val, key));
    else if (key == "image_w") rc.model.image_w = static_cast<int>(parse_int(val, key));
    else if (key == "d_out") rc.model.d_out = static_cast<int>(parse_int(val, key));
    else if (key == "classes") rc.model.num_classes = static_cast<int>(parse_int(val, key));
    else if (key == "batch_size") rc.model.batch_size = static_cast<int>(parse_int(val, key));
    else if (key == "dropout") rc.model.dropout_rate = static_cast<real>(parse_float(val, key));
    else if (key == "gcn_layers") rc.model.gcn_layers = static_cast<int>(parse_int(val, key));
    else if (key == "use_gcn") rc.model.use_gcn = parse_bool(val, key);
    else if (key == "use_attention") rc.model.use_attention = parse_bool(val, key);
    else if (key == "gcn_self_term") rc.model.gcn_self_term = parse_bool(val, key);
    else if (key == "adjacency_mode") {
      if (val == "all-ones") rc.model.adjacency_mode = AdjacencyMode::AllOnes;
      else if (val == "row-normalized") rc.model.adjacency_mode = AdjacencyMode::RowNormalized;
      else throw ConfigError("adjacency_mode must be 'all-ones' or 'row-normalized', got '" + val + "'");
    } else if (key == "epochs") rc.epochs = static_cast<int>(parse_int(val, key));
    else if (key == "lr") rc.lr = static_cast<real>(parse_float(val, key));
    else if (key == "seed") rc.seed = static_cast<std::uint64_t>(parse_int(val, key));
  }

  // Report every defaulted model/training key so runs are self-describing.
  const std::vector<std::pair<std::string, std::string>> defaults = {
      {"image_h", std::to_string(rc.model.image_h)},
      {"image_w", std::to_string(rc.model.image_w)},
      {"d_out", std::to_string(rc.model.d_out)},
      {"classes", std::to_string(rc.model.num_classes)},
      {"batch_size", std::to_string(rc.model.batch_size)},
      {"dropout", std::to_string(rc.model.dropout_rate)},
      {"gcn_layers", std::to_string(rc.model.gcn_layers)},
      {"use_gcn", rc.model.use_gcn ? "true" : "false"},
      {"use_attention", rc.model.use_attention ? "true" : "false"},
      {"gcn_self_term", rc.model.gcn_self_term ? "true" : "false"},
      {"adjacency_mode",
       rc.model.adjacency_mode == AdjacencyMode::AllOnes ? "all-ones" : "row-normalized"},
      {"epochs", std::to_string(rc.epochs)},
      {"lr", std::to_string(rc.lr)},
      {"seed", std::to_string(rc.seed)},
  };
  for (const auto& [key, value] : defaults) {
    if (!seen.count(key)) {
      rc.notices.push_back("config: '" + key + "' not set, using default " + value);
    }
  }

  if (rc.epochs < 0) throw ConfigError("epochs must be >= 0");
  if (!(rc.lr > real(0))) throw ConfigError("lr must be positive");
  if (!rc.train_dir.empty() && !rc.train_images.empty()) {
    throw ConfigError("give either train_dir or train_images/train_labels, not both");
  }
  if (rc.train_images.empty() != rc.train_labels.empty()) {
    throw ConfigError("train_images and train_labels must be given together");
  }
  if (rc.eval_images.empty() != rc.eval_labels.empty()) {
    throw ConfigError("eval_images and eval_labels must be given together");
  }
  rc.model.validate();
  return rc;
}

RunConfig parse_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config_text(ss.str(), path);
}

}  // namespace gecco
