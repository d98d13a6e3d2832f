#include "scr/models/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace scr::models {

namespace {

constexpr char kMagic[8] = {'S', 'C', 'R', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  std::memcpy(buf, &v, 8);
  os.write(buf, 8);
}

std::uint64_t read_u64(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw std::runtime_error("checkpoint: truncated file");
  std::uint64_t v;
  std::memcpy(&v, buf, 8);
  return v;
}

struct Entry {
  std::string name;
  std::vector<std::uint64_t> dims;
  std::vector<double> data;
};

std::vector<Entry> read_entries(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[8];
  if (!is.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  }
  const std::uint64_t count = read_u64(is);
  std::vector<Entry> entries(count);
  for (auto& e : entries) {
    const std::uint64_t name_len = read_u64(is);
    e.name.resize(name_len);
    if (!is.read(e.name.data(), static_cast<std::streamsize>(name_len))) {
      throw std::runtime_error("checkpoint: truncated file");
    }
    const std::uint64_t rank = read_u64(is);
    e.dims.resize(rank);
    std::uint64_t n = 1;
    for (auto& d : e.dims) {
      d = read_u64(is);
      n *= d;
    }
    e.data.resize(n);
    if (!is.read(reinterpret_cast<char*>(e.data.data()),
                 static_cast<std::streamsize>(n * sizeof(double)))) {
      throw std::runtime_error("checkpoint: truncated file");
    }
  }
  return entries;
}

}  // namespace

void save_checkpoint(const std::string& path, const std::vector<autodiff::Adam::Param>& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("checkpoint: cannot write " + path);
  os.write(kMagic, 8);
  write_u64(os, params.size());
  for (const auto& p : params) {
    write_u64(os, p.name.size());
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    write_u64(os, p.tensor.rank());
    for (auto d : p.tensor.shape()) write_u64(os, d);
    const auto& data = p.tensor.data();
    os.write(reinterpret_cast<const char*>(data.data()),
             static_cast<std::streamsize>(data.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("checkpoint: write failed for " + path);
}

void load_checkpoint(const std::string& path, std::vector<autodiff::Adam::Param>& params) {
  auto entries = read_entries(path);
  if (entries.size() != params.size()) {
    throw std::runtime_error("checkpoint: " + path + " holds " + std::to_string(entries.size()) +
                             " arrays, expected " + std::to_string(params.size()));
  }
  for (auto& p : params) {
    const Entry* found = nullptr;
    for (const auto& e : entries) {
      if (e.name == p.name) {
        found = &e;
        break;
      }
    }
    if (!found) throw std::runtime_error("checkpoint: missing parameter " + p.name);
    std::vector<std::uint64_t> dims(p.tensor.shape().begin(), p.tensor.shape().end());
    if (found->dims != dims) {
      throw std::runtime_error("checkpoint: shape mismatch for parameter " + p.name);
    }
    p.tensor.mutable_data() = found->data;
  }
}

std::map<std::string, std::vector<double>> read_checkpoint(const std::string& path) {
  std::map<std::string, std::vector<double>> out;
  for (auto& e : read_entries(path)) out[e.name] = std::move(e.data);
  return out;
}

}  // namespace scr::models
