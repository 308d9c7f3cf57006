#include "ordgp/harness/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ordgp/error.hpp"

namespace ordgp::harness {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) {
    return {};
  }
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(text);
  while (std::getline(in, cell, sep)) {
    out.push_back(trim(cell));
  }
  if (!text.empty() && text.back() == sep) {
    out.emplace_back();
  }
  return out;
}

double parse_double(const std::string& text, const std::string& context) {
  const std::string s = trim(text);
  double value = 0.0;
  const auto* begin = s.data();
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (s.empty() || ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::ParseError, context + ": '" + s + "' is not a number");
  }
  return value;
}

int parse_int(const std::string& text, const std::string& context) {
  const std::string s = trim(text);
  int value = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::ParseError, context + ": '" + s + "' is not an integer");
  }
  return value;
}

std::string format_double(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

Dataset parse_dataset(const std::string& text, std::optional<double> sigma_t_floor) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (!trim(line).empty()) {
      header = split(trim(line), ',');
      break;
    }
  }
  if (header.empty()) {
    throw Error(ErrorCode::SchemaError, "dataset has no header line");
  }
  const char* required[] = {"t", "sigma_t", "y", "sigma_y"};
  int column[4];
  for (int c = 0; c < 4; ++c) {
    const auto it = std::find(header.begin(), header.end(), required[c]);
    if (it == header.end()) {
      throw Error(ErrorCode::SchemaError, std::string("missing column '") + required[c] + "'");
    }
    column[c] = static_cast<int>(it - header.begin());
  }

  std::vector<double> cols[4];
  int row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) {
      continue;
    }
    ++row;
    const auto cells = split(trim(line), ',');
    for (int c = 0; c < 4; ++c) {
      const auto idx = static_cast<std::size_t>(column[c]);
      if (idx >= cells.size()) {
        throw Error(ErrorCode::ParseError,
                    "row " + std::to_string(row) + " column " + required[c] + ": missing value");
      }
      cols[c].push_back(parse_double(cells[idx], "row " + std::to_string(row) + " column " + required[c]));
    }
  }
  if (row == 0) {
    throw Error(ErrorCode::EmptyDataset, "dataset has a header but no rows");
  }

  Dataset data;
  const auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  data.t = to_vec(cols[0]);
  data.sigma_t = to_vec(cols[1]);
  data.y = to_vec(cols[2]);
  data.sigma_y = to_vec(cols[3]);

  double floor_value = 0.0;
  if (sigma_t_floor) {
    floor_value = *sigma_t_floor;
  } else {
    const double range = data.t.maxCoeff() - data.t.minCoeff();
    floor_value = 1e-6 * (range > 0.0 ? range : 1.0);
  }
  for (Eigen::Index i = 0; i < data.sigma_t.size(); ++i) {
    if (data.sigma_t(i) == 0.0) {
      data.sigma_t(i) = floor_value;
    }
  }
  data.validate();
  return data;
}

Dataset load_dataset(const std::filesystem::path& path, std::optional<double> sigma_t_floor) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::SchemaError, "cannot open dataset file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(buffer.str(), sigma_t_floor);
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
  std::ofstream out(path);
  out << "t,sigma_t,y,sigma_y\n";
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    out << format_double(data.t(i)) << ',' << format_double(data.sigma_t(i)) << ','
        << format_double(data.y(i)) << ',' << format_double(data.sigma_y(i)) << '\n';
  }
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig config;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw Error(ErrorCode::ParseError, "config line " + std::to_string(lineno) + ": empty key");
    }
    config.values_[key] = trim(line.substr(eq + 1));
  }
  return config;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::SchemaError, "cannot open config file " + path.string());
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string KeyValueConfig::get(const std::string& key, const std::string& fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_int(it->second, "config key " + key);
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(it->second, "config key " + key);
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key,
                                                  const std::vector<std::string>& fallback) const {
  const auto it = values_.find(key);
  if (it == values_.end()) {
    return fallback;
  }
  std::vector<std::string> out;
  for (auto& item : split(it->second, ',')) {
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

}  // namespace ordgp::harness
