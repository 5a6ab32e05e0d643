#pragma once

#include <filesystem>
#include <string>

#include "examkit/sampler.hpp"

namespace examkit {

// Writes one chain_XX.csv per chain into dir (created if absent): a header
// of parameter names, then one %.17g row per retained iteration, which
// round-trips doubles exactly.
void save_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& dir);

// Loads chain_XX.csv files from dir. Chain stats, warnings and the config
// snapshot are not represented in CSV and come back default-initialized.
PosteriorDraws load_draws_csv(const std::filesystem::path& dir);

// Binary sidecar holding the full object: draws, names, per-chain stats,
// config snapshot, warnings. Little-endian, magic "EXKDRW01".
void save_draws_binary(const PosteriorDraws& draws,
                       const std::filesystem::path& file);
PosteriorDraws load_draws_binary(const std::filesystem::path& file);

// Formats a double with enough digits to round-trip (printf %.17g).
std::string format_double(double v);

}  // namespace examkit
