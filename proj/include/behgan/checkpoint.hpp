#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "behgan/nn/tensor.hpp"

namespace behgan {

struct Blob {
  std::string name;
  std::vector<float> data;
};

/// Single-file archive: a JSON metadata document followed by named float
/// blobs. Floats are stored as raw little-endian bytes so reloads are exact.
struct Archive {
  std::string meta_json = "{}";
  std::vector<Blob> blobs;

  const Blob* find(const std::string& name) const;
};

void write_archive(const Archive& archive, const std::filesystem::path& path);
Archive read_archive(const std::filesystem::path& path);

/// Appends value and both Adam moments of every parameter as
/// `<prefix><param>.{value,m,v}`.
void store_params(Archive& archive, const std::string& prefix, const std::vector<nn::Param*>& params,
                  bool with_moments = true);
/// Inverse of store_params; throws CheckpointMismatch on a missing blob or
/// size mismatch.
void restore_params(const Archive& archive, const std::string& prefix, const std::vector<nn::Param*>& params,
                    bool with_moments = true);

void store_buffers(Archive& archive, const std::string& prefix, const std::vector<nn::FloatBuffer*>& buffers);
void restore_buffers(const Archive& archive, const std::string& prefix, const std::vector<nn::FloatBuffer*>& buffers);

// "ckpt_epoch_<N>"
std::string checkpoint_name(int epoch);
// Checkpoints in a directory ordered by epoch.
std::vector<std::filesystem::path> list_checkpoints(const std::filesystem::path& dir);
// Epoch parsed from a checkpoint file name, or -1.
int checkpoint_epoch(const std::filesystem::path& path);

}  // namespace behgan
