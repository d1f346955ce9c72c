#include "alo/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "alo/errors.hpp"

namespace alo::io {

namespace {

// Line reader that tracks 1-based line numbers and strips a trailing CR.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  bool next(std::string& line) {
    if (!std::getline(in_, line)) return false;
    ++line_no_;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  }

  // Skips lines that are empty or whitespace only.
  bool next_nonblank(std::string& line) {
    while (next(line)) {
      if (line.find_first_not_of(" \t") != std::string::npos) return true;
    }
    return false;
  }

  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::istream& in_;
  std::size_t line_no_ = 0;
};

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

Index parse_index(std::string_view tok, std::size_t line, const char* what) {
  Index v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ParseError(std::string("expected integer ") + what + ", got '" + std::string(tok) + "'",
                     line);
  }
  return v;
}

// Parses a data value; rejects NaN, Inf, and negatives with the line number.
double parse_value(std::string_view tok, std::size_t line) {
  tok = trim(tok);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || tok.empty()) {
    throw ParseError("expected a number, got '" + std::string(tok) + "'", line);
  }
  if (!std::isfinite(v)) {
    throw DomainError("non-finite value '" + std::string(tok) + "' at line " +
                      std::to_string(line));
  }
  if (v < 0.0) {
    throw DomainError("negative value " + std::string(tok) + " at line " + std::to_string(line));
  }
  return v;
}

void warn(std::vector<std::string>* warnings, std::string msg) {
  if (warnings != nullptr) {
    warnings->push_back(std::move(msg));
  } else {
    std::cerr << "warning: " << msg << '\n';
  }
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

void check_written(std::ostream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace

std::string_view to_string(Format f) noexcept {
  switch (f) {
    case Format::kCsvDense:
      return "csv-dense";
    case Format::kUciBow:
      return "uci-bow";
    case Format::kMatrixMarket:
      return "matrix-market";
  }
  return "unknown";
}

std::optional<Format> parse_format(std::string_view name) noexcept {
  for (Format f : {Format::kCsvDense, Format::kUciBow, Format::kMatrixMarket}) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

std::optional<Format> infer_format(const std::filesystem::path& path) noexcept {
  const std::string ext = lower(path.extension().string());
  if (ext == ".csv") return Format::kCsvDense;
  if (ext == ".mtx") return Format::kMatrixMarket;
  if (ext == ".txt" || ext == ".bow") return Format::kUciBow;
  return std::nullopt;
}

std::string format_real(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

SparseMatrix read_uci_bow(std::istream& in, bool tfidf, std::vector<std::string>* warnings) {
  LineReader reader(in);
  std::string line;
  Index header[3];
  const char* names[3] = {"D (document count)", "W (vocabulary size)", "NNZ"};
  for (int k = 0; k < 3; ++k) {
    if (!reader.next_nonblank(line)) {
      throw ParseError(std::string("missing header line for ") + names[k], reader.line_no() + 1);
    }
    header[k] = parse_index(trim(line), reader.line_no(), names[k]);
  }
  const Index docs = header[0];
  const Index words = header[1];
  const Index expected = header[2];

  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(expected);
  while (reader.next_nonblank(line)) {
    const auto tok = split_ws(line);
    if (tok.size() != 3) throw ParseError("expected 'docID wordID count'", reader.line_no());
    const Index doc = parse_index(tok[0], reader.line_no(), "docID");
    const Index word = parse_index(tok[1], reader.line_no(), "wordID");
    const double count = parse_value(tok[2], reader.line_no());
    if (doc < 1 || doc > docs) throw ParseError("docID out of range", reader.line_no());
    if (word < 1 || word > words) throw ParseError("wordID out of range", reader.line_no());
    triplets.push_back({word - 1, doc - 1, count});
  }
  if (triplets.size() != expected) {
    throw ParseError("header declares " + std::to_string(expected) + " entries, found " +
                         std::to_string(triplets.size()),
                     reader.line_no());
  }

  auto keys = triplets;
  std::sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) {
    return a.col != b.col ? a.col < b.col : a.row < b.row;
  });
  for (Index k = 1; k < keys.size(); ++k) {
    if (keys[k].col == keys[k - 1].col && keys[k].row == keys[k - 1].row &&
        (k < 2 || keys[k - 2].col != keys[k].col || keys[k - 2].row != keys[k].row)) {
      warn(warnings, "duplicate (doc " + std::to_string(keys[k].col + 1) + ", word " +
                         std::to_string(keys[k].row + 1) + ") entries summed");
    }
  }

  SparseMatrix counts = SparseMatrix::from_triplets(words, docs, std::move(keys));
  if (!tfidf) return counts;

  std::vector<Index> df(words, 0);
  for (Index r : counts.row_idx()) ++df[r];
  std::vector<SparseMatrix::Triplet> weighted;
  weighted.reserve(counts.nnz());
  for (Index j = 0; j < docs; ++j) {
    const auto c = counts.col(j);
    for (Index t = 0; t < c.rows.size(); ++t) {
      const double idf =
          std::log(static_cast<double>(docs) / static_cast<double>(df[c.rows[t]]));
      weighted.push_back({c.rows[t], j, c.values[t] * idf});
    }
  }
  return SparseMatrix::from_triplets(words, docs, std::move(weighted));
}

DenseMatrix read_csv_dense(std::istream& in) {
  LineReader reader(in);
  std::string line;
  std::vector<std::vector<double>> rows;
  while (reader.next_nonblank(line)) {
    std::vector<double> row;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_value(rest.substr(0, comma), reader.line_no()));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("row has " + std::to_string(row.size()) + " fields, expected " +
                           std::to_string(rows.front().size()),
                       reader.line_no());
    }
    rows.push_back(std::move(row));
  }
  const Index n = rows.size();
  const Index m = rows.empty() ? 0 : rows.front().size();
  DenseMatrix out(n, m);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < m; ++j) out(i, j) = rows[i][j];
  }
  return out;
}

SparseMatrix read_matrix_market(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError("empty MatrixMarket file", 1);
  const auto banner = split_ws(line);
  if (banner.size() != 5 || lower(banner[0]) != "%%matrixmarket" || lower(banner[1]) != "matrix" ||
      lower(banner[2]) != "coordinate" ||
      (lower(banner[3]) != "real" && lower(banner[3]) != "integer") ||
      lower(banner[4]) != "general") {
    throw ParseError("expected '%%MatrixMarket matrix coordinate real general'", 1);
  }
  do {
    if (!reader.next(line)) throw ParseError("missing size line", reader.line_no() + 1);
  } while (line.empty() || line.front() == '%' ||
           line.find_first_not_of(" \t") == std::string::npos);
  const auto size = split_ws(line);
  if (size.size() != 3) throw ParseError("expected 'rows cols nnz'", reader.line_no());
  const Index rows = parse_index(size[0], reader.line_no(), "rows");
  const Index cols = parse_index(size[1], reader.line_no(), "cols");
  const Index nnz = parse_index(size[2], reader.line_no(), "nnz");

  std::vector<SparseMatrix::Triplet> triplets;
  triplets.reserve(nnz);
  while (reader.next_nonblank(line)) {
    if (line.front() == '%') continue;
    const auto tok = split_ws(line);
    if (tok.size() != 3) throw ParseError("expected 'row col value'", reader.line_no());
    const Index i = parse_index(tok[0], reader.line_no(), "row");
    const Index j = parse_index(tok[1], reader.line_no(), "col");
    const double v = parse_value(tok[2], reader.line_no());
    if (i < 1 || i > rows || j < 1 || j > cols) {
      throw ParseError("entry index out of range", reader.line_no());
    }
    triplets.push_back({i - 1, j - 1, v});
  }
  if (triplets.size() != nnz) {
    throw ParseError("size line declares " + std::to_string(nnz) + " entries, found " +
                         std::to_string(triplets.size()),
                     reader.line_no());
  }
  return SparseMatrix::from_triplets(rows, cols, std::move(triplets));
}

DataMatrix load(const DatasetSpec& spec, std::vector<std::string>* warnings) {
  std::ifstream in(spec.path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + spec.path.string() + "'");
  switch (spec.format) {
    case Format::kUciBow:
      return read_uci_bow(in, spec.tfidf, warnings);
    case Format::kMatrixMarket:
      return read_matrix_market(in);
    case Format::kCsvDense:
      break;
  }
  return read_csv_dense(in);
}

void write_matrix_market(std::ostream& out, const SparseMatrix& m) {
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << m.rows() << ' ' << m.cols() << ' ' << m.nnz() << '\n';
  for (Index j = 0; j < m.cols(); ++j) {
    const auto c = m.col(j);
    for (Index t = 0; t < c.rows.size(); ++t) {
      out << c.rows[t] + 1 << ' ' << j + 1 << ' ' << format_real(c.values[t]) << '\n';
    }
  }
}

void write_csv_dense(std::ostream& out, const DenseMatrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_real(m(i, j));
    }
    out << '\n';
  }
}

void write_matrix_market(const std::filesystem::path& path, const SparseMatrix& m) {
  auto out = open_for_write(path);
  write_matrix_market(out, m);
  check_written(out, path);
}

void write_csv_dense(const std::filesystem::path& path, const DenseMatrix& m) {
  auto out = open_for_write(path);
  write_csv_dense(out, m);
  check_written(out, path);
}

void write_log(const ConvergenceLog& log, std::ostream& out) {
  out << "iter,objective,seconds,inner_iters,k_bar\n";
  for (const auto& r : log.records) {
    out << r.iter << ',' << format_real(r.objective) << ',' << format_real(r.seconds) << ','
        << r.inner_iterations << ',' << format_real(r.k_bar) << '\n';
  }
}

void write_log(const ConvergenceLog& log, const std::filesystem::path& path) {
  auto out = open_for_write(path);
  write_log(log, out);
  check_written(out, path);
}

ConvergenceLog read_log(std::istream& in) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line) || line != "iter,objective,seconds,inner_iters,k_bar") {
    throw ParseError("missing convergence log header", 1);
  }
  ConvergenceLog log;
  while (reader.next_nonblank(line)) {
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 5) throw ParseError("expected 5 fields", reader.line_no());
    IterationRecord r;
    r.iter = parse_index(f[0], reader.line_no(), "iter");
    r.objective = parse_value(f[1], reader.line_no());
    r.seconds = parse_value(f[2], reader.line_no());
    r.inner_iterations = parse_index(f[3], reader.line_no(), "inner_iters");
    r.k_bar = parse_value(f[4], reader.line_no());
    log.records.push_back(r);
  }
  return log;
}

}  // namespace alo::io
