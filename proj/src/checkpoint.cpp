#include "behgan/checkpoint.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "behgan/errors.hpp"

namespace behgan {

namespace {

constexpr char kMagic[8] = {'B', 'H', 'G', 'C', 'K', 'P', 'T', '1'};

void put_u64(std::ostream& os, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  if (!is.read(reinterpret_cast<char*>(b), 8)) throw CheckpointMismatch("truncated checkpoint");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_string(std::ostream& os, const std::string& s) {
  put_u64(os, s.size());
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& is, std::uint64_t limit) {
  const std::uint64_t n = get_u64(is);
  if (n > limit) throw CheckpointMismatch("corrupt checkpoint string");
  std::string s(n, '\0');
  if (!is.read(s.data(), static_cast<std::streamsize>(n))) throw CheckpointMismatch("truncated checkpoint");
  return s;
}

static_assert(sizeof(float) == 4);

}  // namespace

const Blob* Archive::find(const std::string& name) const {
  for (const auto& b : blobs)
    if (b.name == name) return &b;
  return nullptr;
}

void write_archive(const Archive& archive, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw PathError("cannot write checkpoint", path);
    os.write(kMagic, sizeof kMagic);
    put_string(os, archive.meta_json);
    put_u64(os, archive.blobs.size());
    for (const auto& b : archive.blobs) {
      put_string(os, b.name);
      put_u64(os, b.data.size());
      os.write(reinterpret_cast<const char*>(b.data.data()), static_cast<std::streamsize>(b.data.size() * 4));
    }
    if (!os) throw PathError("cannot write checkpoint", path);
  }
  std::filesystem::rename(tmp, path);
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw PathError("cannot open checkpoint", path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw CheckpointMismatch("not a checkpoint: " + path.string());
  const auto size = std::filesystem::file_size(path);
  Archive a;
  a.meta_json = get_string(is, size);
  const std::uint64_t n = get_u64(is);
  if (n > size) throw CheckpointMismatch("corrupt checkpoint");
  a.blobs.resize(n);
  for (auto& b : a.blobs) {
    b.name = get_string(is, size);
    const std::uint64_t len = get_u64(is);
    if (len * 4 > size) throw CheckpointMismatch("corrupt checkpoint blob " + b.name);
    b.data.resize(len);
    if (!is.read(reinterpret_cast<char*>(b.data.data()), static_cast<std::streamsize>(len * 4)))
      throw CheckpointMismatch("truncated checkpoint");
  }
  return a;
}

void store_params(Archive& archive, const std::string& prefix, const std::vector<nn::Param*>& params,
                  bool with_moments) {
  for (const nn::Param* p : params) {
    archive.blobs.push_back({prefix + p->name + ".value", {p->value.begin(), p->value.end()}});
    if (with_moments) {
      archive.blobs.push_back({prefix + p->name + ".m", {p->m.begin(), p->m.end()}});
      archive.blobs.push_back({prefix + p->name + ".v", {p->v.begin(), p->v.end()}});
    }
  }
}

namespace {

void restore_into(const Archive& archive, const std::string& name, nn::FloatBuffer& dst) {
  const Blob* b = archive.find(name);
  if (b == nullptr) throw CheckpointMismatch("checkpoint lacks " + name);
  if (b->data.size() != dst.size()) throw CheckpointMismatch("size mismatch for " + name);
  dst.assign(b->data.begin(), b->data.end());
}

}  // namespace

void restore_params(const Archive& archive, const std::string& prefix, const std::vector<nn::Param*>& params,
                    bool with_moments) {
  for (nn::Param* p : params) {
    restore_into(archive, prefix + p->name + ".value", p->value);
    if (with_moments) {
      restore_into(archive, prefix + p->name + ".m", p->m);
      restore_into(archive, prefix + p->name + ".v", p->v);
    }
  }
}

void store_buffers(Archive& archive, const std::string& prefix, const std::vector<nn::FloatBuffer*>& buffers) {
  for (std::size_t i = 0; i < buffers.size(); ++i)
    archive.blobs.push_back({prefix + "buffer" + std::to_string(i), {buffers[i]->begin(), buffers[i]->end()}});
}

void restore_buffers(const Archive& archive, const std::string& prefix, const std::vector<nn::FloatBuffer*>& buffers) {
  for (std::size_t i = 0; i < buffers.size(); ++i) restore_into(archive, prefix + "buffer" + std::to_string(i), *buffers[i]);
}

std::string checkpoint_name(int epoch) { return "ckpt_epoch_" + std::to_string(epoch); }

int checkpoint_epoch(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  const std::string head = "ckpt_epoch_";
  if (name.rfind(head, 0) != 0 || name.size() == head.size()) return -1;
  const std::string digits = name.substr(head.size());
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; })) return -1;
  return std::stoi(digits);
}

std::vector<std::filesystem::path> list_checkpoints(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  if (!std::filesystem::is_directory(dir)) throw PathError("not a directory", dir);
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && checkpoint_epoch(e.path()) >= 0) out.push_back(e.path());
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return checkpoint_epoch(a) < checkpoint_epoch(b); });
  return out;
}

}  // namespace behgan
