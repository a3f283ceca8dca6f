#include "fimscore/data/dataset.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <sstream>

#include "fimscore/errors.hpp"
#include "fimscore/numcore/rng.hpp"
#include "json.hpp"

namespace fimscore {

namespace {

constexpr char kMagic[4] = {'D', 'M', 'A', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 8;

template <typename... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw DomainError(what);
}

void validate(const Distribution& dist) {
  std::visit(Overloaded{
                 [](const TwoMoons& d) { require(d.noise >= 0.0, "two_moons: noise must be >= 0"); },
                 [](const Rings& d) {
                   require(d.noise >= 0.0, "rings: noise must be >= 0");
                   require(!d.radii.empty(), "rings: need at least one radius");
                   for (double r : d.radii) require(r > 0.0, "rings: radii must be positive");
                 },
                 [](const GaussGrid& d) {
                   require(d.k >= 1, "gauss_grid: k must be >= 1");
                   require(d.spacing > 0.0, "gauss_grid: spacing must be positive");
                   require(d.sigma >= 0.0, "gauss_grid: sigma must be >= 0");
                 },
                 [](const Checkerboard& d) {
                   require(d.cells >= 2, "checkerboard: need at least 2 cells per side");
                   require(d.cell_size > 0.0, "checkerboard: cell size must be positive");
                 },
                 [](const UniformSquare& d) { require(d.side > 0.0, "uniform_square: side must be positive"); },
             },
             dist);
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
std::uint64_t get_le(const std::string& in, std::size_t offset, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[offset + static_cast<std::size_t>(i)])) << (8 * i);
  }
  return v;
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return std::filesystem::path(path.string() + ".json");
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kFit:
      return "fit";
    case Split::kEval:
      return "eval";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "fit") return Split::kFit;
  if (name == "eval") return Split::kEval;
  throw ParseError("unknown split tag '" + std::string(name) + "'");
}

DenseMatrix Dataset::rows_with(Split s) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < splits.size(); ++i)
    if (splits[i] == s) idx.push_back(i);
  return points.select_rows(idx);
}

std::size_t Dataset::count(Split s) const {
  return static_cast<std::size_t>(std::count(splits.begin(), splits.end(), s));
}

void Dataset::validate() const {
  if (splits.size() != points.rows()) throw DimensionMismatch("dataset split tags", points.rows(), splits.size());
  if (!points.all_finite()) throw NonFiniteError("dataset '" + name + "' contains non-finite values");
}

std::string distribution_name(const Distribution& dist) {
  return std::visit(Overloaded{
                        [](const TwoMoons&) { return std::string("two_moons"); },
                        [](const Rings&) { return std::string("rings"); },
                        [](const GaussGrid&) { return std::string("gauss_grid"); },
                        [](const Checkerboard&) { return std::string("checkerboard"); },
                        [](const UniformSquare&) { return std::string("uniform_square"); },
                    },
                    dist);
}

std::string describe(const Distribution& dist) {
  return std::visit(
      Overloaded{
          [](const TwoMoons& d) { return "two_moons(noise=" + format_double(d.noise) + ")"; },
          [](const Rings& d) {
            std::string radii;
            for (std::size_t i = 0; i < d.radii.size(); ++i) radii += (i ? ";" : "") + format_double(d.radii[i]);
            return "rings(radii=" + radii + ",noise=" + format_double(d.noise) + ")";
          },
          [](const GaussGrid& d) {
            return "gauss_grid(k=" + std::to_string(d.k) + ",spacing=" + format_double(d.spacing) +
                   ",sigma=" + format_double(d.sigma) + ")";
          },
          [](const Checkerboard& d) {
            return "checkerboard(cells=" + std::to_string(d.cells) + ",cell_size=" + format_double(d.cell_size) + ")";
          },
          [](const UniformSquare& d) { return "uniform_square(side=" + format_double(d.side) + ")"; },
      },
      dist);
}

Distribution default_distribution(std::string_view name) {
  if (name == "two_moons") return TwoMoons{};
  if (name == "rings") return Rings{};
  if (name == "gauss_grid") return GaussGrid{};
  if (name == "checkerboard") return Checkerboard{};
  if (name == "uniform_square") return UniformSquare{};
  throw DomainError("unknown distribution '" + std::string(name) + "'");
}

std::vector<std::string> distribution_names() {
  return {"two_moons", "rings", "gauss_grid", "checkerboard", "uniform_square"};
}

Dataset generate(const Distribution& dist, std::size_t n, std::uint64_t seed, std::string name) {
  if (n == 0) throw DomainError("generate: n must be >= 1");
  validate(dist);
  Rng rng(seed);
  DenseMatrix pts(n, 2);
  constexpr double pi = std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    double x = 0.0;
    double y = 0.0;
    std::visit(Overloaded{
                   [&](const TwoMoons& d) {
                     const double a = pi * rng.uniform();
                     if (i % 2 == 0) {
                       x = std::cos(a);
                       y = std::sin(a);
                     } else {
                       x = 1.0 - std::cos(a);
                       y = 0.5 - std::sin(a);
                     }
                     x += d.noise * rng.normal();
                     y += d.noise * rng.normal();
                   },
                   [&](const Rings& d) {
                     const double r = d.radii[rng.bounded(static_cast<std::uint32_t>(d.radii.size()))];
                     const double a = 2.0 * pi * rng.uniform();
                     const double rr = r + d.noise * rng.normal();
                     x = rr * std::cos(a);
                     y = rr * std::sin(a);
                   },
                   [&](const GaussGrid& d) {
                     const auto k = static_cast<std::uint32_t>(d.k);
                     const double offset = 0.5 * static_cast<double>(d.k - 1) * d.spacing;
                     const auto cx = rng.bounded(k);
                     const auto cy = rng.bounded(k);
                     x = static_cast<double>(cx) * d.spacing - offset + d.sigma * rng.normal();
                     y = static_cast<double>(cy) * d.spacing - offset + d.sigma * rng.normal();
                   },
                   [&](const Checkerboard& d) {
                     // Pick a dark cell (row + col even) uniformly, then a point inside it.
                     const auto total = static_cast<std::uint32_t>(d.cells * d.cells);
                     std::uint32_t cell = 0;
                     do {
                       cell = rng.bounded(total);
                     } while (((cell / d.cells) + (cell % d.cells)) % 2 != 0);
                     const double half = 0.5 * static_cast<double>(d.cells) * d.cell_size;
                     x = static_cast<double>(cell % d.cells) * d.cell_size - half + d.cell_size * rng.uniform();
                     y = static_cast<double>(cell / d.cells) * d.cell_size - half + d.cell_size * rng.uniform();
                   },
                   [&](const UniformSquare& d) {
                     x = d.side * (rng.uniform() - 0.5);
                     y = d.side * (rng.uniform() - 0.5);
                   },
               },
               dist);
    pts(i, 0) = x;
    pts(i, 1) = y;
  }
  Dataset ds;
  ds.name = name.empty() ? distribution_name(dist) : std::move(name);
  ds.points = std::move(pts);
  ds.splits.assign(n, Split::kTrain);
  ds.generator = describe(dist);
  ds.seed = seed;
  return ds;
}

void write_dmat(const DenseMatrix& m, const std::filesystem::path& path) {
  std::string bytes;
  bytes.reserve(kHeaderBytes + m.data().size() * 8);
  bytes.append(kMagic, 4);
  put_u32(bytes, kVersion);
  put_u64(bytes, m.rows());
  put_u64(bytes, m.cols());
  for (double v : m.data()) put_u64(bytes, std::bit_cast<std::uint64_t>(v));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

DenseMatrix read_dmat(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kHeaderBytes) {
    throw ParseError(path.string() + ": truncated header: expected " + std::to_string(kHeaderBytes) +
                     " bytes, got " + std::to_string(bytes.size()));
  }
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw ParseError(path.string() + ": bad magic, expected DMAT");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kVersion) throw ParseError(path.string() + ": unsupported DMAT version " + std::to_string(version));
  const std::uint64_t rows = get_le(bytes, 8, 8);
  const std::uint64_t cols = get_le(bytes, 16, 8);
  const std::uint64_t expected = kHeaderBytes + rows * cols * 8;
  if (bytes.size() != expected) {
    throw ParseError(path.string() + ": length mismatch: expected " + std::to_string(expected) + " bytes, got " +
                     std::to_string(bytes.size()));
  }
  std::vector<double> values(rows * cols);
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = std::bit_cast<double>(get_le(bytes, kHeaderBytes + 8 * i, 8));
  }
  return DenseMatrix(rows, cols, std::move(values));
}

void save_dataset(const Dataset& ds, const std::filesystem::path& path) {
  ds.validate();
  write_dmat(ds.points, path);
  nlohmann::json runs = nlohmann::json::array();
  for (std::size_t i = 0; i < ds.splits.size();) {
    std::size_t j = i;
    while (j < ds.splits.size() && ds.splits[j] == ds.splits[i]) ++j;
    runs.push_back({std::string(split_name(ds.splits[i])), j - i});
    i = j;
  }
  const nlohmann::json meta{{"name", ds.name},       {"generator", ds.generator}, {"seed", ds.seed},
                            {"rows", ds.size()},     {"cols", ds.dim()},          {"splits", runs},
                            {"format", "DMAT v1"}};
  std::ofstream out(sidecar_path(path));
  if (!out) throw IoError("cannot write " + sidecar_path(path).string());
  out << meta.dump(1) << '\n';
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset ds;
  ds.points = read_dmat(path);
  ds.name = path.stem().string();
  ds.splits.assign(ds.points.rows(), Split::kTrain);
  const auto meta_path = sidecar_path(path);
  if (std::filesystem::exists(meta_path)) {
    std::ifstream in(meta_path);
    try {
      const auto meta = nlohmann::json::parse(in);
      ds.name = meta.value("name", ds.name);
      ds.generator = meta.value("generator", std::string());
      ds.seed = meta.value("seed", std::uint64_t{0});
      if (meta.contains("splits")) {
        ds.splits.clear();
        for (const auto& run : meta.at("splits")) {
          const Split s = parse_split(run.at(0).get<std::string>());
          ds.splits.insert(ds.splits.end(), run.at(1).get<std::size_t>(), s);
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(meta_path.string() + ": " + e.what());
    }
  }
  ds.validate();
  return ds;
}

Dataset parse_csv_dataset(std::string_view text, std::string name) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= text.size();) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (!line.empty()) lines.push_back(line);
    pos = end + 1;
  }
  if (lines.empty()) throw ParseError("csv: missing header");
  const std::size_t cols = static_cast<std::size_t>(std::count(lines[0].begin(), lines[0].end(), ',')) + 1;
  DenseMatrix pts(0, cols);
  std::vector<double> row(cols);
  for (std::size_t r = 1; r < lines.size(); ++r) {
    std::string_view line = lines[r];
    std::size_t c = 0;
    for (std::size_t pos = 0; pos <= line.size(); ++c) {
      auto end = line.find(',', pos);
      if (end == std::string_view::npos) end = line.size();
      auto cell = line.substr(pos, end - pos);
      while (!cell.empty() && cell.front() == ' ') cell.remove_prefix(1);
      while (!cell.empty() && cell.back() == ' ') cell.remove_suffix(1);
      if (c >= cols) {
        throw ParseError("csv: row " + std::to_string(r) + " has more than " + std::to_string(cols) + " columns");
      }
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError("csv: non-numeric cell at row " + std::to_string(r) + ", col " + std::to_string(c + 1) +
                         ": '" + std::string(cell) + "'");
      }
      row[c] = v;
      pos = end + 1;
    }
    if (c != cols) {
      throw ParseError("csv: row " + std::to_string(r) + " has " + std::to_string(c) + " columns, expected " +
                       std::to_string(cols));
    }
    pts.append_row(row);
  }
  if (pts.rows() == 0) throw ParseError("csv: no data rows");
  Dataset ds;
  ds.name = std::move(name);
  ds.points = std::move(pts);
  ds.splits.assign(ds.points.rows(), Split::kTrain);
  ds.generator = "csv";
  return ds;
}

Dataset load_csv_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  auto ds = parse_csv_dataset(buf.str(), path.stem().string());
  ds.generator = "csv:" + path.filename().string();
  return ds;
}

}  // namespace fimscore
