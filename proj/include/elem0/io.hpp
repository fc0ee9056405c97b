#pragma once

#include "elem0/model.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace elem0 {

namespace fs = std::filesystem;

// Shortest text that parses back to the same double.
std::string format_double(double v);
double parse_double(std::string_view text);

// Expression TSV: header row (first cell ignored, then sample ids), then one
// row per gene: gene id followed by one value per sample.
ExpressionMatrix read_expression(const fs::path& file);
void write_expression(const fs::path& file, const ExpressionMatrix& x);

// pop_1.tsv, pop_2.tsv, ... up to the first missing index.
std::vector<ExpressionMatrix> read_population_dir(const fs::path& dir);
// pop_<k>_cat_<c>.tsv, indexed [k][c]. Every population must have the same
// number of categories.
std::vector<std::vector<ExpressionMatrix>> read_categorical_dir(const fs::path& dir);

// Tree TSV with header `src dst weight`; indices are 1-based in the file and
// returned 0-based.
std::vector<TreeEdge> read_tree_edges(const fs::path& file);
TreeHypergraph read_tree(const fs::path& file, int node_count);
void write_tree(const fs::path& file, const TreeHypergraph& tree);

// Square distance matrix, whitespace separated, no header.
Matrix read_matrix(const fs::path& file);

// Network directory: edges.tsv (`population gene_i gene_j value`, 1-based
// population) and pop_<k>.diag.tsv (`gene value`).
void write_networks(const fs::path& dir, const std::vector<std::string>& genes,
                    const std::vector<SparseSymmetric>& networks);
PrecisionSet read_networks(const fs::path& dir);

// Single network as `gene_i gene_j value` plus a `<stem>.diag.tsv` file.
void write_network_file(const fs::path& file, const std::vector<std::string>& genes, const SparseSymmetric& net);

// Categorical result: totals as a network directory with population index
// (k-1)*C + c, plus per-cell and per-component files.
void write_categorical(const fs::path& dir, const CategoricalPrecisionSet& result);

nlohmann::json to_json(const SolverConfig& cfg);
// Accepts a bare config object, a document with a "solver" object, or a
// run.json (its "config" entry).
SolverConfig config_from_json(const nlohmann::json& doc, SolverConfig base = {});
nlohmann::json to_json(const RunMetadata& meta);

nlohmann::json read_json(const fs::path& file);
void write_json(const fs::path& file, const nlohmann::json& doc);

}  // namespace elem0
