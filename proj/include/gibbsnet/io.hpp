#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gibbsnet/chains.hpp"
#include "gibbsnet/eval.hpp"

// Artifact emission: CSV tables, JSON-lines metric streams, portable
// graymaps for raster samples and the per-run manifest.

namespace gibbsnet {

void write_csv(const std::string& path, const Matrix& m,
               const std::vector<std::string>& header);
Matrix read_csv(const std::string& path);  // numeric body, optional header row

// rows: step, batch_index, x..., z...
void write_trajectory_csv(const std::string& path, const std::vector<ChainState>& trajectory);

nlohmann::json metric_to_json(const MetricReport& report);
void write_metrics_jsonl(const std::string& path, const std::vector<MetricReport>& reports);

// Binary PGM (P5) grid of row-major [0,1] images, 8-bit grayscale.
void write_pgm_grid(const std::string& path, const Matrix& images01, int image_rows,
                    int image_cols, int grid_cols);

std::string hex64(std::uint64_t v);

}  // namespace gibbsnet
