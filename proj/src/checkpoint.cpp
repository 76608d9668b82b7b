#include "aiparse/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <stdexcept>

namespace aiparse {
namespace {

constexpr char kMagic[8] = {'A', 'I', 'P', 'C', 'K', 'P', 'T', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format_version"] = 1;
  header["config"] = nlohmann::json::parse(config_to_json(ckpt.cfg));
  header["epoch"] = ckpt.epoch;
  header["rng_state"] = ckpt.rng_state;
  std::vector<torch::Tensor> payload;
  auto& index = header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    auto c = t.detach().to(torch::kCPU, torch::kFloat).contiguous();
    const std::uint64_t nbytes = c.numel() * sizeof(float);
    index.push_back({{"name", name}, {"shape", c.sizes().vec()}, {"offset", offset}, {"nbytes", nbytes}});
    offset += nbytes;
    payload.push_back(std::move(c));
  }
  const std::string text = header.dump();
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
    out.write(kMagic, 8);
    write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& c : payload) {
      out.write(reinterpret_cast<const char*>(c.data_ptr<float>()), static_cast<std::streamsize>(c.numel() * 4));
    }
    if (!out) throw std::runtime_error("short write on checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read checkpoint " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0) {
    throw std::runtime_error(path.string() + ": not an aiparse checkpoint");
  }
  const auto len = read_u64(in);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error(path.string() + ": truncated header");
  const auto header = nlohmann::json::parse(text);
  if (header.at("format_version").get<int>() != 1) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version");
  }
  Checkpoint ckpt;
  ckpt.cfg = config_from_json(header.at("config").dump());
  ckpt.epoch = header.at("epoch").get<int>();
  ckpt.rng_state = header.at("rng_state").get<std::string>();
  const auto base = in.tellg();
  for (const auto& entry : header.at("tensors")) {
    const auto shape = entry.at("shape").get<std::vector<int64_t>>();
    auto t = torch::empty(shape, torch::kFloat);
    const auto nbytes = entry.at("nbytes").get<std::uint64_t>();
    if (nbytes != static_cast<std::uint64_t>(t.numel()) * 4) {
      throw std::runtime_error(path.string() + ": size mismatch for " + entry.at("name").get<std::string>());
    }
    in.seekg(base + static_cast<std::streamoff>(entry.at("offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(t.data_ptr<float>()), static_cast<std::streamsize>(nbytes));
    if (!in) throw std::runtime_error(path.string() + ": truncated payload");
    ckpt.tensors[entry.at("name").get<std::string>()] = t;
  }
  return ckpt;
}

std::map<std::string, torch::Tensor> model_state(AIParsing& model) {
  std::map<std::string, torch::Tensor> out;
  for (const auto& p : model->named_parameters()) out["model/" + p.key()] = p.value().detach().clone();
  for (const auto& b : model->named_buffers()) out["model/" + b.key()] = b.value().detach().clone();
  return out;
}

void load_model_state(AIParsing& model, const Checkpoint& ckpt) {
  torch::NoGradGuard guard;
  auto copy = [&](const std::string& name, torch::Tensor& dst) {
    const auto it = ckpt.tensors.find("model/" + name);
    if (it == ckpt.tensors.end()) throw std::runtime_error("checkpoint lacks parameter " + name);
    if (it->second.sizes() != dst.sizes()) throw std::runtime_error("checkpoint shape mismatch for " + name);
    dst.copy_(it->second);
  };
  for (auto& p : model->named_parameters()) copy(p.key(), p.value());
  for (auto& b : model->named_buffers()) copy(b.key(), b.value());
}

AIParsing model_from_checkpoint(const Checkpoint& ckpt) {
  AIParsing model(ckpt.cfg);
  load_model_state(model, ckpt);
  model->eval();
  return model;
}

}  // namespace aiparse
