#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "fimscore/numcore/dense_matrix.hpp"

namespace fimscore {

enum class Split : std::uint8_t { kTrain, kFit, kEval };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct Dataset {
  std::string name;
  DenseMatrix points;
  std::vector<Split> splits;  // one tag per row
  std::string generator;      // e.g. "two_moons(noise=0.1)", or "csv:<file>"
  std::uint64_t seed = 0;

  std::size_t size() const { return points.rows(); }
  std::size_t dim() const { return points.cols(); }
  // Rows tagged `s`, in file order.
  DenseMatrix rows_with(Split s) const;
  std::size_t count(Split s) const;
  void validate() const;
};

struct TwoMoons {
  double noise = 0.1;
};
struct Rings {
  std::vector<double> radii{0.5, 1.5};
  double noise = 0.05;
};
struct GaussGrid {
  std::size_t k = 3;
  double spacing = 1.5;
  double sigma = 0.1;
};
struct Checkerboard {
  std::size_t cells = 4;  // cells per side, board centred at the origin
  double cell_size = 1.0;
};
struct UniformSquare {
  double side = 2.0;  // [-side/2, side/2]^2
};

using Distribution = std::variant<TwoMoons, Rings, GaussGrid, Checkerboard, UniformSquare>;

std::string distribution_name(const Distribution& dist);
// Canonical description with parameters, recorded as Dataset::generator.
std::string describe(const Distribution& dist);
// Defaults for a named distribution ("two_moons", "rings", "gauss_grid",
// "checkerboard", "uniform_square").
Distribution default_distribution(std::string_view name);
std::vector<std::string> distribution_names();

// n points, all tagged train. Deterministic in (dist, n, seed).
//   two_moons: row i on the upper arc (cos a, sin a) if i is even, else on the
//     lower arc (1 - cos a, 0.5 - sin a); a ~ U[0, pi); plus noise * N(0, I).
//   rings: ring r ~ U{radii}, angle ~ U[0, 2 pi), radius r + noise * N(0, 1).
//   gauss_grid: centre ~ U over the k x k grid with the given spacing centred
//     at the origin, plus sigma * N(0, I).
//   checkerboard: uniform over the cells (i + j even) of a centred board.
//   uniform_square: uniform on [-side/2, side/2]^2.
Dataset generate(const Distribution& dist, std::size_t n, std::uint64_t seed, std::string name = {});

// DMAT: "DMAT", u32 version = 1, u64 rows, u64 cols, rows*cols little-endian
// doubles (row-major). Name, generator, seed and split tags go to the JSON
// sidecar <path>.json.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

void write_dmat(const DenseMatrix& m, const std::filesystem::path& path);
DenseMatrix read_dmat(const std::filesystem::path& path);

// Headered numeric CSV; every row tagged train.
Dataset load_csv_dataset(const std::filesystem::path& path);
Dataset parse_csv_dataset(std::string_view text, std::string name);

}  // namespace fimscore
