#include "elem0/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

namespace elem0 {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < line.size()) {
    while (pos < line.size() && (line[pos] == '\t' || line[pos] == ' ')) ++pos;
    if (pos >= line.size()) break;
    std::size_t end = pos;
    while (end < line.size() && line[end] != '\t' && line[end] != ' ') ++end;
    out.push_back(line.substr(pos, end - pos));
    pos = end;
  }
  return out;
}

std::vector<std::string> read_lines(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(std::move(line));
  }
  return lines;
}

std::ofstream open_out(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + file.string());
  return out;
}

int parse_int(std::string_view text, const fs::path& file) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::InvalidArgument, "bad integer '" + std::string(text) + "' in " + file.string());
  }
  return v;
}

std::string where(const fs::path& file, std::size_t line) {
  return file.string() + ":" + std::to_string(line + 1);
}

fs::path diag_path(const fs::path& file) {
  auto name = file.stem().string() + ".diag.tsv";
  return file.parent_path() / name;
}

void write_diag(const fs::path& file, const std::vector<std::string>& genes, const Vector& diag) {
  auto out = open_out(file);
  out << "gene\tvalue\n";
  for (int i = 0; i < diag.size(); ++i) out << genes[i] << '\t' << format_double(diag[i]) << '\n';
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorKind::Io, "cannot format value");
  return std::string(buf, ptr);
}

double parse_double(std::string_view text) {
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorKind::InvalidArgument, "bad number '" + std::string(text) + "'");
  }
  return v;
}

ExpressionMatrix read_expression(const fs::path& file) {
  const auto lines = read_lines(file);
  if (lines.size() < 2) throw Error(ErrorKind::InvalidArgument, file.string() + ": needs a header and one gene row");
  ExpressionMatrix x;
  const auto header = split_fields(lines[0]);
  for (std::size_t c = 1; c < header.size(); ++c) x.samples.emplace_back(header[c]);
  const auto n = static_cast<Eigen::Index>(x.samples.size());
  x.values.resize(static_cast<Eigen::Index>(lines.size() - 1), n);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (static_cast<Eigen::Index>(fields.size()) != n + 1) {
      throw Error(ErrorKind::ShapeMismatch, where(file, r) + ": expected " + std::to_string(n + 1) + " fields");
    }
    x.genes.emplace_back(fields[0]);
    for (Eigen::Index c = 0; c < n; ++c) {
      try {
        x.values(static_cast<Eigen::Index>(r - 1), c) = parse_double(fields[c + 1]);
      } catch (const Error& e) {
        throw Error(e.kind(), where(file, r) + ": " + e.detail());
      }
    }
  }
  try {
    x.validate();
  } catch (const Error& e) {
    throw Error(e.kind(), file.string() + ": " + e.detail());
  }
  return x;
}

void write_expression(const fs::path& file, const ExpressionMatrix& x) {
  auto out = open_out(file);
  out << "gene";
  for (const auto& s : x.samples) out << '\t' << s;
  out << '\n';
  for (Eigen::Index i = 0; i < x.values.rows(); ++i) {
    out << x.genes[i];
    for (Eigen::Index j = 0; j < x.values.cols(); ++j) out << '\t' << format_double(x.values(i, j));
    out << '\n';
  }
}

std::vector<ExpressionMatrix> read_population_dir(const fs::path& dir) {
  std::vector<ExpressionMatrix> out;
  for (int k = 1;; ++k) {
    const auto file = dir / ("pop_" + std::to_string(k) + ".tsv");
    if (!fs::exists(file)) break;
    out.push_back(read_expression(file));
  }
  if (out.empty()) throw Error(ErrorKind::Io, "no pop_1.tsv in " + dir.string());
  return out;
}

std::vector<std::vector<ExpressionMatrix>> read_categorical_dir(const fs::path& dir) {
  std::vector<std::vector<ExpressionMatrix>> out;
  for (int k = 1;; ++k) {
    std::vector<ExpressionMatrix> cells;
    for (int c = 1;; ++c) {
      const auto file = dir / ("pop_" + std::to_string(k) + "_cat_" + std::to_string(c) + ".tsv");
      if (!fs::exists(file)) break;
      cells.push_back(read_expression(file));
    }
    if (cells.empty()) break;
    if (!out.empty() && cells.size() != out.front().size()) {
      throw Error(ErrorKind::ShapeMismatch, "population " + std::to_string(k) + " has " +
                                                std::to_string(cells.size()) + " categories, population 1 has " +
                                                std::to_string(out.front().size()));
    }
    out.push_back(std::move(cells));
  }
  if (out.empty()) throw Error(ErrorKind::Io, "no pop_1_cat_1.tsv in " + dir.string());
  return out;
}

std::vector<TreeEdge> read_tree_edges(const fs::path& file) {
  const auto lines = read_lines(file);
  std::vector<TreeEdge> edges;
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (r == 0 && !fields.empty() && fields[0] == "src") continue;
    if (fields.size() != 3) throw Error(ErrorKind::InvalidArgument, where(file, r) + ": expected src dst weight");
    try {
      edges.push_back({parse_int(fields[0], file) - 1, parse_int(fields[1], file) - 1, parse_double(fields[2])});
    } catch (const Error& e) {
      throw Error(e.kind(), where(file, r) + ": " + e.detail());
    }
  }
  return edges;
}

TreeHypergraph read_tree(const fs::path& file, int node_count) {
  return TreeHypergraph::create(node_count, read_tree_edges(file));
}

void write_tree(const fs::path& file, const TreeHypergraph& tree) {
  auto out = open_out(file);
  out << "src\tdst\tweight\n";
  for (const auto& e : tree.edges()) out << e.u + 1 << '\t' << e.v + 1 << '\t' << format_double(e.weight) << '\n';
}

Matrix read_matrix(const fs::path& file) {
  const auto lines = read_lines(file);
  const auto n = static_cast<Eigen::Index>(lines.size());
  Matrix m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto fields = split_fields(lines[r]);
    if (static_cast<Eigen::Index>(fields.size()) != n) {
      throw Error(ErrorKind::ShapeMismatch, where(file, r) + ": distance matrix must be square");
    }
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = parse_double(fields[c]);
  }
  return m;
}

void write_networks(const fs::path& dir, const std::vector<std::string>& genes,
                    const std::vector<SparseSymmetric>& networks) {
  auto out = open_out(dir / "edges.tsv");
  out << "population\tgene_i\tgene_j\tvalue\n";
  for (std::size_t k = 0; k < networks.size(); ++k) {
    for (const auto& e : networks[k].edges) {
      out << k + 1 << '\t' << genes[e.i] << '\t' << genes[e.j] << '\t' << format_double(e.value) << '\n';
    }
    write_diag(dir / ("pop_" + std::to_string(k + 1) + ".diag.tsv"), genes, networks[k].diagonal);
  }
}

PrecisionSet read_networks(const fs::path& dir) {
  PrecisionSet set;
  std::map<std::string, int> index;
  for (int k = 1;; ++k) {
    const auto file = dir / ("pop_" + std::to_string(k) + ".diag.tsv");
    if (!fs::exists(file)) break;
    const auto lines = read_lines(file);
    std::vector<std::string> genes;
    std::vector<double> diag;
    for (std::size_t r = 1; r < lines.size(); ++r) {
      const auto fields = split_fields(lines[r]);
      if (fields.size() != 2) throw Error(ErrorKind::InvalidArgument, where(file, r) + ": expected gene value");
      genes.emplace_back(fields[0]);
      diag.push_back(parse_double(fields[1]));
    }
    if (k == 1) {
      set.genes = genes;
      for (std::size_t i = 0; i < genes.size(); ++i) index[genes[i]] = static_cast<int>(i);
    } else if (genes != set.genes) {
      throw Error(ErrorKind::MismatchedGeneSets, file.string() + ": gene list differs from population 1");
    }
    SparseSymmetric net;
    net.diagonal = Eigen::Map<const Vector>(diag.data(), static_cast<Eigen::Index>(diag.size()));
    set.networks.push_back(std::move(net));
  }
  if (set.networks.empty()) throw Error(ErrorKind::Io, "no pop_1.diag.tsv in " + dir.string());
  const auto file = dir / "edges.tsv";
  const auto lines = read_lines(file);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_fields(lines[r]);
    if (fields.size() != 4) throw Error(ErrorKind::InvalidArgument, where(file, r) + ": expected 4 fields");
    const int k = parse_int(fields[0], file) - 1;
    auto gi = index.find(std::string(fields[1]));
    auto gj = index.find(std::string(fields[2]));
    if (k < 0 || k >= set.population_count() || gi == index.end() || gj == index.end() || gi == gj) {
      throw Error(ErrorKind::InvalidArgument, where(file, r) + ": unknown population or gene");
    }
    const double v = parse_double(fields[3]);
    if (v == 0.0) continue;
    const int i = std::min(gi->second, gj->second);
    const int j = std::max(gi->second, gj->second);
    set.networks[k].edges.push_back({i, j, v});
  }
  for (auto& net : set.networks) {
    std::sort(net.edges.begin(), net.edges.end(),
              [](const auto& a, const auto& b) { return std::pair(a.i, a.j) < std::pair(b.i, b.j); });
    auto dup = std::adjacent_find(net.edges.begin(), net.edges.end(),
                                  [](const auto& a, const auto& b) { return a.i == b.i && a.j == b.j; });
    if (dup != net.edges.end()) {
      throw Error(ErrorKind::InvalidArgument, file.string() + ": duplicate edge " + set.genes[dup->i] + " " +
                                                  set.genes[dup->j]);
    }
  }
  return set;
}

void write_network_file(const fs::path& file, const std::vector<std::string>& genes, const SparseSymmetric& net) {
  auto out = open_out(file);
  out << "gene_i\tgene_j\tvalue\n";
  for (const auto& e : net.edges) out << genes[e.i] << '\t' << genes[e.j] << '\t' << format_double(e.value) << '\n';
  write_diag(diag_path(file), genes, net.diagonal);
}

void write_categorical(const fs::path& dir, const CategoricalPrecisionSet& result) {
  const int C = result.categories;
  std::vector<SparseSymmetric> totals;
  for (int k = 0; k < result.population_count(); ++k) {
    const auto pk = "pop_" + std::to_string(k + 1);
    write_network_file(dir / (pk + ".global.tsv"), result.genes, result.global[k]);
    for (int c = 0; c < C; ++c) {
      const auto cell = pk + "_cat_" + std::to_string(c + 1);
      totals.push_back(result.total(k, c));
      write_network_file(dir / (cell + ".tsv"), result.genes, totals.back());
      write_network_file(dir / (cell + ".local.tsv"), result.genes, result.local[k][c]);
    }
  }
  write_networks(dir, result.genes, totals);
}

nlohmann::json to_json(const SolverConfig& cfg) {
  nlohmann::json j = {
      {"lambda", cfg.lambda},
      {"gamma", cfg.gamma},
      {"nu", cfg.nu},
      {"alpha", cfg.alpha},
      {"center_data", cfg.center_data},
      {"pd_jitter_start", cfg.pd_jitter_start},
      {"pd_jitter_cap", cfg.pd_jitter_cap},
      {"envelope_tolerance", cfg.envelope_tolerance},
      {"threads", cfg.threads},
  };
  if (!cfg.nu_per_population.empty()) j["nu_per_population"] = cfg.nu_per_population;
  return j;
}

SolverConfig config_from_json(const nlohmann::json& doc, SolverConfig base) {
  if (!doc.is_object()) throw Error(ErrorKind::InvalidArgument, "config must be a JSON object");
  if (doc.contains("config")) return config_from_json(doc.at("config"), base);
  const auto& j = doc.contains("solver") ? doc.at("solver") : doc;
  try {
    auto get = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    get("lambda", base.lambda);
    get("gamma", base.gamma);
    get("nu", base.nu);
    get("nu_per_population", base.nu_per_population);
    get("alpha", base.alpha);
    get("center_data", base.center_data);
    get("pd_jitter_start", base.pd_jitter_start);
    get("pd_jitter_cap", base.pd_jitter_cap);
    get("envelope_tolerance", base.envelope_tolerance);
    get("threads", base.threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, std::string("config: ") + e.what());
  }
  return base;
}

nlohmann::json to_json(const RunMetadata& meta) {
  nlohmann::json pd = nlohmann::json::array();
  for (bool b : meta.positive_definite) pd.push_back(b);
  return {
      {"solver", to_json(meta.config)},
      {"jitter", meta.jitter},
      {"timings",
       {{"covariance_s", meta.timings.covariance_s},
        {"backward_map_s", meta.timings.backward_map_s},
        {"solve_s", meta.timings.solve_s},
        {"total_s", meta.timings.total_s}}},
      {"objective", meta.objective},
      {"positive_definite", pd},
  };
}

nlohmann::json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidArgument, file.string() + ": " + e.what());
  }
}

void write_json(const fs::path& file, const nlohmann::json& doc) {
  auto out = open_out(file);
  out << doc.dump(2) << '\n';
}

}  // namespace elem0
