#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "alo/matrix.hpp"
#include "alo/nmf.hpp"

namespace alo::io {

enum class Format { kCsvDense, kUciBow, kMatrixMarket };

std::string_view to_string(Format f) noexcept;
std::optional<Format> parse_format(std::string_view name) noexcept;
// By extension: .csv → csv-dense, .mtx → matrix-market, .txt/.bow → uci-bow.
std::optional<Format> infer_format(const std::filesystem::path& path) noexcept;

struct DatasetSpec {
  std::filesystem::path path;
  Format format = Format::kCsvDense;
  // uci-bow only: raw count × ln(D / df).
  bool tfidf = false;
};

// Human-readable description of the tf-idf variant, recorded in manifests.
inline constexpr std::string_view kTfidfVariant = "tf=raw count, idf=ln(D/df)";

/// Warnings (e.g. duplicate bag-of-words pairs) are appended to `warnings`
/// when given, otherwise written to std::cerr.
DataMatrix load(const DatasetSpec& spec, std::vector<std::string>* warnings = nullptr);

/// UCI bag-of-words: three header lines D, W, NNZ, then "docID wordID count"
/// triplets (1-based). Returns W x D, documents as columns.
SparseMatrix read_uci_bow(std::istream& in, bool tfidf,
                          std::vector<std::string>* warnings = nullptr);

/// Comma-separated rows; each row is one feature.
DenseMatrix read_csv_dense(std::istream& in);

/// "%%MatrixMarket matrix coordinate real general" (integer accepted).
SparseMatrix read_matrix_market(std::istream& in);

void write_matrix_market(std::ostream& out, const SparseMatrix& m);
void write_csv_dense(std::ostream& out, const DenseMatrix& m);

void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m);
void write_csv_dense(const std::filesystem::path& path, const DenseMatrix& m);

/// CSV "iter,objective,seconds,inner_iters,k_bar", 17 significant digits.
void write_log(const ConvergenceLog& log, std::ostream& out);
void write_log(const ConvergenceLog& log, const std::filesystem::path& path);
ConvergenceLog read_log(std::istream& in);

// Shortest round-tripping formatting used by every writer.
std::string format_real(double x);

}  // namespace alo::io
