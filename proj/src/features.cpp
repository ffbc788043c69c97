#include "stegcheck/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace stegcheck {

const char* to_string(ResidualKind k)
{
  switch (k) {
    case ResidualKind::kFirstOrder: return "FIRST_ORDER";
    case ResidualKind::kSecondOrder: return "SECOND_ORDER";
    case ResidualKind::kKb: return "KB";
  }
  return "?";
}

const char* to_string(Direction d)
{
  return d == Direction::kHorizontal ? "HORIZONTAL" : "VERTICAL";
}

namespace {

std::string upper(std::string_view s)
{
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

ResidualKind parse_residual_kind(std::string_view s)
{
  const auto u = upper(s);
  if (u == "FIRST_ORDER") return ResidualKind::kFirstOrder;
  if (u == "SECOND_ORDER") return ResidualKind::kSecondOrder;
  if (u == "KB") return ResidualKind::kKb;
  throw std::invalid_argument("unsupported residual kind '" + std::string(s) + "'");
}

Direction parse_direction(std::string_view s)
{
  const auto u = upper(s);
  if (u == "HORIZONTAL") return Direction::kHorizontal;
  if (u == "VERTICAL") return Direction::kVertical;
  throw std::invalid_argument("unsupported direction '" + std::string(s) + "'");
}

void FeatureConfig::validate() const
{
  if (kinds.empty()) throw std::invalid_argument("FeatureConfig: no residual kinds");
  if (quantizations.empty()) throw std::invalid_argument("FeatureConfig: no quantization steps");
  if (directions.empty()) throw std::invalid_argument("FeatureConfig: no directions");
  for (int q : quantizations)
    if (q != 1 && q != 2) throw std::invalid_argument("FeatureConfig: q must be 1 or 2");
  if (truncation < 1) throw std::invalid_argument("FeatureConfig: truncation must be >= 1");
  if (cooc_order != 3 && cooc_order != 4)
    throw std::invalid_argument("FeatureConfig: cooc_order must be 3 or 4");
}

std::size_t FeatureConfig::bins_per_block() const
{
  std::size_t bins = 1;
  for (int i = 0; i < cooc_order; ++i) bins *= static_cast<std::size_t>(2 * truncation + 1);
  return bins;
}

std::size_t FeatureConfig::dimension() const
{
  return kinds.size() * quantizations.size() * directions.size() * bins_per_block();
}

std::string FeatureConfig::fingerprint() const
{
  std::ostringstream os;
  os << "kinds=";
  for (std::size_t i = 0; i < kinds.size(); ++i) os << (i ? "," : "") << to_string(kinds[i]);
  os << ";q=";
  for (std::size_t i = 0; i < quantizations.size(); ++i) os << (i ? "," : "") << quantizations[i];
  os << ";T=" << truncation << ";order=" << cooc_order << ";dirs=";
  for (std::size_t i = 0; i < directions.size(); ++i) os << (i ? "," : "") << to_string(directions[i]);
  os << ";normalize=" << (normalize ? 1 : 0);
  return os.str();
}

ResidualPlane compute_residual(const ImageGray& img, ResidualKind kind, int q, int truncation,
                               Direction dir)
{
  if (q < 1) throw std::invalid_argument("compute_residual: q must be >= 1");
  if (truncation < 1) throw std::invalid_argument("compute_residual: truncation must be >= 1");
  const auto w = static_cast<std::ptrdiff_t>(img.width());
  const auto h = static_cast<std::ptrdiff_t>(img.height());
  auto X = [&](std::ptrdiff_t r, std::ptrdiff_t c) { return static_cast<int>(img.at(r, c)); };

  // Valid region: output (r, c) maps to image (r + r0, c + c0).
  std::ptrdiff_t out_w = 0, out_h = 0, r0 = 0, c0 = 0;
  const bool horiz = dir == Direction::kHorizontal;
  switch (kind) {
    case ResidualKind::kFirstOrder:
      out_w = horiz ? w - 1 : w;
      out_h = horiz ? h : h - 1;
      break;
    case ResidualKind::kSecondOrder:
      out_w = horiz ? w - 2 : w;
      out_h = horiz ? h : h - 2;
      r0 = horiz ? 0 : 1;
      c0 = horiz ? 1 : 0;
      break;
    case ResidualKind::kKb:
      out_w = w - 2;
      out_h = h - 2;
      r0 = c0 = 1;
      break;
    default:
      throw std::invalid_argument("compute_residual: unsupported kind");
  }
  if (out_w < 1 || out_h < 1) throw std::invalid_argument("compute_residual: image too small");

  ResidualPlane out{static_cast<std::size_t>(out_w), static_cast<std::size_t>(out_h), {}};
  out.values.resize(out.width * out.height);
  const auto dr = horiz ? 0 : 1;
  const auto dc = horiz ? 1 : 0;
  for (std::ptrdiff_t r = 0; r < out_h; ++r) {
    for (std::ptrdiff_t c = 0; c < out_w; ++c) {
      const std::ptrdiff_t y = r + r0, x = c + c0;
      int R = 0;
      switch (kind) {
        case ResidualKind::kFirstOrder: R = X(y + dr, x + dc) - X(y, x); break;
        case ResidualKind::kSecondOrder: R = X(y - dr, x - dc) - 2 * X(y, x) + X(y + dr, x + dc); break;
        case ResidualKind::kKb:
          R = -X(y - 1, x - 1) + 2 * X(y - 1, x) - X(y - 1, x + 1) + 2 * X(y, x - 1) - 4 * X(y, x) +
              2 * X(y, x + 1) - X(y + 1, x - 1) + 2 * X(y + 1, x) - X(y + 1, x + 1);
          break;
      }
      const long v = std::lround(static_cast<double>(R) / q);
      out.values[r * out_w + c] = static_cast<std::int8_t>(std::clamp<long>(v, -truncation, truncation));
    }
  }
  return out;
}

std::vector<double> cooccurrence(const ResidualPlane& residual, Direction dir, int order, int truncation)
{
  if (order < 1) throw std::invalid_argument("cooccurrence: order must be >= 1");
  const std::size_t radix = static_cast<std::size_t>(2 * truncation + 1);
  std::size_t bins = 1;
  for (int i = 0; i < order; ++i) bins *= radix;

  const bool horiz = dir == Direction::kHorizontal;
  const std::size_t span = static_cast<std::size_t>(order);
  if ((horiz ? residual.width : residual.height) < span || residual.values.empty())
    throw std::invalid_argument("cooccurrence: plane too small for window");

  std::vector<double> hist(bins, 0.0);
  const std::size_t rows = horiz ? residual.height : residual.height - span + 1;
  const std::size_t cols = horiz ? residual.width - span + 1 : residual.width;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t idx = 0;
      for (std::size_t k = 0; k < span; ++k) {
        const int v = horiz ? residual.at(r, c + k) : residual.at(r + k, c);
        idx = idx * radix + static_cast<std::size_t>(v + truncation);
      }
      hist[idx] += 1.0;
    }
  }
  return hist;
}

FeatureVector extract_features(const ImageGray& img, const FeatureConfig& cfg)
{
  cfg.validate();
  if (img.width() < 16 || img.height() < 16)
    throw std::invalid_argument("extract_features: image must be at least 16x16");
  FeatureVector out;
  out.reserve(cfg.dimension());
  for (ResidualKind kind : cfg.kinds) {
    for (int q : cfg.quantizations) {
      for (Direction dir : cfg.directions) {
        const auto residual = compute_residual(img, kind, q, cfg.truncation, dir);
        auto hist = cooccurrence(residual, dir, cfg.cooc_order, cfg.truncation);
        if (cfg.normalize) {
          double total = 0.0;
          for (double v : hist) total += v;
          if (total > 0.0)
            for (double& v : hist) v /= total;
        }
        out.insert(out.end(), hist.begin(), hist.end());
      }
    }
  }
  return out;
}

double residual_energy(const ImageGray& img)
{
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c + 1 < img.width(); ++c, ++n) {
      const double d = double(img.at(r, c + 1)) - double(img.at(r, c));
      acc += d * d;
    }
  return n ? acc / n : 0.0;
}

double mean_abs_residual(const ImageGray& img)
{
  double acc = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < img.height(); ++r)
    for (std::size_t c = 0; c + 1 < img.width(); ++c, ++n)
      acc += std::abs(double(img.at(r, c + 1)) - double(img.at(r, c)));
  return n ? acc / n : 0.0;
}

void write_feature_csv(const std::string& path, const FeatureTable& table)
{
  if (!table.labels.empty() && table.labels.size() != table.rows.size())
    throw std::invalid_argument("write_feature_csv: label count differs from row count");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot create " + path);
  const std::size_t dim = table.rows.empty() ? 0 : table.rows.front().size();
  const bool labeled = !table.labels.empty();
  if (labeled) out << "label";
  for (std::size_t j = 0; j < dim; ++j) out << ((labeled || j) ? "," : "") << 'f' << j;
  out << '\n';
  char buf[40];
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (table.rows[i].size() != dim) throw std::invalid_argument("write_feature_csv: ragged rows");
    if (labeled) out << table.labels[i];
    for (std::size_t j = 0; j < dim; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", table.rows[i][j]);
      out << ((labeled || j) ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

FeatureTable read_feature_csv(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty feature file");
  const bool labeled = line.rfind("label", 0) == 0;
  const std::size_t columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
  const std::size_t dim = labeled ? columns - 1 : columns;

  FeatureTable table;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    FeatureVector row;
    row.reserve(dim);
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      if (labeled && first) {
        table.labels.push_back(cell);
      } else {
        try {
          std::size_t used = 0;
          row.push_back(std::stod(cell, &used));
          if (used != cell.size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
          throw std::runtime_error(path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
        }
      }
      first = false;
    }
    if (row.size() != dim)
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(dim) + " features, got " + std::to_string(row.size()));
    table.rows.push_back(std::move(row));
  }
  return table;
}

}  // namespace stegcheck
