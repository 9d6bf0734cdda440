#pragma once

#include "evoeq/material.hpp"
#include "evoeq/signal.hpp"
#include "evoeq/spatial.hpp"
#include "evoeq/transform.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>

namespace evoeq {

/// CSV columns: t, re_0, im_0, ..., re_{m-1}, im_{m-1} plus a JSON sidecar
/// header {t0, dt, n, nu, dim}.
void write_signal_csv(const WeightedSignal& f, const std::filesystem::path& csv,
                      const std::filesystem::path& header_json);
WeightedSignal read_signal_csv(const std::filesystem::path& csv,
                               const std::filesystem::path& header_json);

/// CSV columns: omega, re_0, im_0, ...
void write_spectrum_csv(const Spectrum& s, const std::filesystem::path& csv);

/// Sparse triplets: row, col, re, im.
void write_operator_triplets(const SpMat& a, const std::filesystem::path& csv);

/// Kernel CSV: rows "t,value" with t >= 0 on a uniform grid.
SampledKernel read_kernel_csv(const std::filesystem::path& csv);

/// Material law JSON grammar (documented in the README): a node object
/// {"kind": ..., ...params..., "children": [...]}.
LawPtr parse_law_json(const nlohmann::json& spec);
nlohmann::json law_to_json(const MaterialLaw& m);

nlohmann::json certificate_to_json(const PositivityCertificate& cert);

/// Matrices serialize as {"rows": r, "cols": c, "data": [[re, im] ...]} (row
/// major) or shorthand {"diag": [...]} / {"identity": m}.
Mat parse_matrix_json(const nlohmann::json& spec);

}  // namespace evoeq
