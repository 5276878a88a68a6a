#include "gibbsnet/io.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace gibbsnet {

void write_csv(const std::string& path, const Matrix& m,
               const std::vector<std::string>& header) {
  std::ofstream out(path);
  if (!out) throw FormatError("write_csv: cannot open " + path);
  if (!header.empty()) {
    if (static_cast<Eigen::Index>(header.size()) != m.cols())
      throw DimensionError("write_csv: header has " + std::to_string(header.size()) +
                           " names for " + std::to_string(m.cols()) + " columns");
    for (std::size_t j = 0; j < header.size(); ++j)
      out << header[j] << (j + 1 < header.size() ? "," : "\n");
  }
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      out << m(i, j) << (j + 1 < m.cols() ? "," : "\n");
}

Matrix read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("read_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t pos = 0;
        row.push_back(std::stod(cell, &pos));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty()) continue;  // header row
      throw FormatError("read_csv: non-numeric cell in " + path + ": '" + line + "'");
    }
    if (!rows.empty() && rows.front().size() != row.size())
      throw FormatError("read_csv: ragged rows in " + path);
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError("read_csv: no data rows in " + path);
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

void write_trajectory_csv(const std::string& path, const std::vector<ChainState>& trajectory) {
  if (trajectory.empty()) throw ContractError("write_trajectory_csv: empty trajectory");
  const Eigen::Index dx = trajectory.front().x.cols();
  const Eigen::Index dz = trajectory.front().z.cols();
  const Eigen::Index batch = trajectory.front().x.rows();

  std::vector<std::string> header = {"step", "batch_index"};
  for (Eigen::Index j = 0; j < dx; ++j) header.push_back("x" + std::to_string(j));
  for (Eigen::Index j = 0; j < dz; ++j) header.push_back("z" + std::to_string(j));

  Matrix table(static_cast<Eigen::Index>(trajectory.size()) * batch, 2 + dx + dz);
  Eigen::Index row = 0;
  for (const ChainState& state : trajectory) {
    for (Eigen::Index i = 0; i < batch; ++i, ++row) {
      table(row, 0) = state.step;
      table(row, 1) = static_cast<double>(i);
      table.block(row, 2, 1, dx) = state.x.row(i);
      table.block(row, 2 + dx, 1, dz) = state.z.row(i);
    }
  }
  write_csv(path, table, header);
}

nlohmann::json metric_to_json(const MetricReport& report) {
  nlohmann::json j;
  j["name"] = report.name;
  j["value"] = report.value;
  j["n_samples"] = report.n_samples;
  j["seed"] = report.seed;
  j["details"] = report.details;
  return j;
}

void write_metrics_jsonl(const std::string& path, const std::vector<MetricReport>& reports) {
  std::ofstream out(path);
  if (!out) throw FormatError("write_metrics_jsonl: cannot open " + path);
  for (const MetricReport& r : reports) out << metric_to_json(r).dump() << "\n";
}

void write_pgm_grid(const std::string& path, const Matrix& images01, int image_rows,
                    int image_cols, int grid_cols) {
  if (images01.cols() != static_cast<Eigen::Index>(image_rows) * image_cols)
    throw DimensionError("write_pgm_grid: " + shape_str(images01) + " does not match " +
                         std::to_string(image_rows) + "x" + std::to_string(image_cols));
  const int n = static_cast<int>(images01.rows());
  grid_cols = std::max(1, grid_cols);
  const int grid_rows = (n + grid_cols - 1) / grid_cols;
  const int border = 2;
  const int width = grid_cols * (image_cols + border) + border;
  const int height = grid_rows * (image_rows + border) + border;

  std::vector<unsigned char> canvas(static_cast<std::size_t>(width) * height, 32);
  for (int idx = 0; idx < n; ++idx) {
    const int gr = idx / grid_cols, gc = idx % grid_cols;
    const int y0 = border + gr * (image_rows + border);
    const int x0 = border + gc * (image_cols + border);
    for (int r = 0; r < image_rows; ++r)
      for (int c = 0; c < image_cols; ++c) {
        const double v = std::min(1.0, std::max(0.0, images01(idx, r * image_cols + c)));
        canvas[static_cast<std::size_t>(y0 + r) * width + (x0 + c)] =
            static_cast<unsigned char>(std::lround(v * 255.0));
      }
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("write_pgm_grid: cannot open " + path);
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(canvas.data()),
            static_cast<std::streamsize>(canvas.size()));
}

std::string hex64(std::uint64_t v) {
  std::ostringstream out;
  out << "0x" << std::hex << std::setw(16) << std::setfill('0') << v;
  return out.str();
}

}  // namespace gibbsnet
