#pragma once

#include <filesystem>
#include <string>

#include "piano/model.hpp"

namespace piano {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Writes via a temp file in the same directory, then renames, so
/// interrupted runs never leave truncated output.
void atomic_write(const std::filesystem::path& path,
                  const std::string& content);

std::string read_file(const std::filesystem::path& path);

/// Dense matrix CSV (one row per spatial node, full precision).
std::string matrix_csv(const Matrix& m);
/// Long-form CSV with header x_index,t_index,value.
std::string matrix_csv_long(const Matrix& m);

/// Checkpoint manifest: version, architecture, named parameter tensors
/// (row-major data). JSON keeps doubles bit-exact on round-trip.
void save_checkpoint(const std::filesystem::path& path, const PianoModel& model,
                     const std::string& problem);

struct Checkpoint {
  PianoModel model;
  std::string problem;
};
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace piano
