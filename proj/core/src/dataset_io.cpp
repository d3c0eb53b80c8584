#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "rhgcn/graph.hpp"

namespace rhgcn {

namespace fs = std::filesystem;

namespace {

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open " + path.string());
  }
  return in;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& token, const fs::path& file, std::size_t line) {
  const std::string t = trim(token);
  T value{};
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (t.empty() || ec != std::errc() || ptr != t.data() + t.size()) {
    throw FormatError(file.filename().string() + ": cannot parse '" + t + "'", line);
  }
  return value;
}

Matrix read_features(const fs::path& file) {
  auto in = open_input(file);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::stringstream stream(line);
    std::string cell;
    while (std::getline(stream, cell, ',')) {
      row.push_back(parse_number<double>(cell, file, line_no));
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(file.filename().string() + ": expected " + std::to_string(rows.front().size()) +
                            " columns, found " + std::to_string(row.size()),
                        line_no);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw FormatError(file.filename().string() + ": no feature rows");
  }
  Matrix features(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    features.row(i) = Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), rows[i].size());
  }
  return features;
}

std::vector<int> read_labels(const fs::path& file) {
  auto in = open_input(file);
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const int label = parse_number<int>(line, file, line_no);
    if (label < 0) {
      throw FormatError(file.filename().string() + ": negative label", line_no);
    }
    labels.push_back(label);
  }
  return labels;
}

std::vector<Edge> read_edges(const fs::path& file, int n) {
  auto in = open_input(file);
  std::vector<Edge> edges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw FormatError(file.filename().string() + ": expected 'u<TAB>v'", line_no);
    }
    const int u = parse_number<int>(line.substr(0, tab), file, line_no);
    const int v = parse_number<int>(line.substr(tab + 1), file, line_no);
    if (u < 0 || v < 0 || u >= n || v >= n) {
      throw FormatError(file.filename().string() + ": node id out of range", line_no);
    }
    edges.emplace_back(u, v);
  }
  return edges;
}

Splits read_splits(const fs::path& file) {
  auto in = open_input(file);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(file.filename().string() + ": " + e.what());
  }
  Splits splits;
  const auto take = [&](const char* key, std::vector<int>& out) {
    if (!doc.contains(key) || !doc[key].is_array()) {
      throw FormatError(file.filename().string() + ": missing integer array '" + key + "'");
    }
    for (const auto& v : doc[key]) {
      if (!v.is_number_integer()) {
        throw FormatError(file.filename().string() + ": non-integer entry in '" + key + "'");
      }
      out.push_back(v.get<int>());
    }
  };
  take("train", splits.train);
  take("val", splits.val);
  take("test", splits.test);
  return splits;
}

}  // namespace

NodeDataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw IoError("dataset directory not found: " + dir.string());
  }
  Matrix features = read_features(dir / "features.csv");
  std::vector<int> labels = read_labels(dir / "labels.csv");
  if (labels.size() != static_cast<std::size_t>(features.rows())) {
    throw FormatError("labels.csv has " + std::to_string(labels.size()) + " rows but features.csv has " +
                      std::to_string(features.rows()));
  }
  const int n = static_cast<int>(features.rows());
  std::vector<Edge> edges = read_edges(dir / "edges.tsv", n);
  const std::size_t listed = edges.size();
  int classes = 0;
  for (int l : labels) classes = std::max(classes, l + 1);
  NodeDataset data{SparseGraph(n, edges), std::move(features), std::move(labels), classes,
                   read_splits(dir / "splits.json"), listed, dir.filename().string()};
  data.validate();
  return data;
}

void write_dataset(const NodeDataset& data, const fs::path& dir) {
  fs::create_directories(dir);
  const auto open_output = [](const fs::path& p) {
    std::ofstream out(p);
    if (!out) throw IoError("cannot write " + p.string());
    out.precision(17);
    return out;
  };
  {
    auto out = open_output(dir / "edges.tsv");
    for (const auto& [u, v] : data.graph.edges()) out << u << '\t' << v << '\n';
  }
  {
    auto out = open_output(dir / "features.csv");
    for (Eigen::Index i = 0; i < data.features.rows(); ++i) {
      for (Eigen::Index c = 0; c < data.features.cols(); ++c) {
        if (c) out << ',';
        out << data.features(i, c);
      }
      out << '\n';
    }
  }
  {
    auto out = open_output(dir / "labels.csv");
    for (int l : data.labels) out << l << '\n';
  }
  {
    auto out = open_output(dir / "splits.json");
    out << nlohmann::json{{"train", data.splits.train}, {"val", data.splits.val}, {"test", data.splits.test}}.dump()
        << '\n';
  }
}

}  // namespace rhgcn
