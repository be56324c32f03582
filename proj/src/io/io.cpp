// Copyright 2026 The lora-boundary Authors
// SPDX-License-Identifier: Apache-2.0

#include "lb/io.hpp"

#include <openssl/evp.h>
#include <unistd.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lb/error.hpp"

namespace lb {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace {

using json = nlohmann::json;

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.append(s);
  }
  void magic(std::string_view m) { out_.append(m); }
  void tensor(const Tensor& t) {
    u32(static_cast<std::uint32_t>(t.dims.size()));
    for (int d : t.dims) u32(static_cast<std::uint32_t>(d));
    raw(t.data.data(), t.data.size() * sizeof(float));
  }
  std::string take() { return std::move(out_); }

 private:
  void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
  std::string out_;
};

// Every read checks the remaining length first so truncation reports the
// offset where the data ran out.
class Reader {
 public:
  Reader(std::string_view bytes, const char* what) : bytes_(bytes), what_(what) {}

  void need(std::size_t n, const char* field) const {
    if (bytes_.size() - pos_ < n) {
      throw ParseError(std::string(what_) + ": truncated at offset " + std::to_string(pos_) + " reading " + field +
                       " (need " + std::to_string(n) + " bytes, " + std::to_string(bytes_.size() - pos_) +
                       " left)");
    }
  }
  std::uint8_t u8(const char* field) {
    need(1, field);
    return static_cast<std::uint8_t>(bytes_[pos_++]);
  }
  std::uint32_t u32(const char* field) {
    need(4, field);
    std::uint32_t v;
    std::memcpy(&v, bytes_.data() + pos_, 4);
    pos_ += 4;
    return v;
  }
  std::string str(const char* field) {
    const std::uint32_t n = u32(field);
    need(n, field);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  void magic(std::string_view m) {
    if (bytes_.size() < m.size() || bytes_.substr(0, m.size()) != m) {
      throw ParseError(std::string(what_) + ": bad magic, expected '" + std::string(m) + "'");
    }
    pos_ = m.size();
  }
  Tensor tensor(const char* field) {
    const std::uint32_t rank = u32(field);
    if (rank == 0 || rank > 4) fail("tensor rank " + std::to_string(rank) + " for " + field);
    Dims dims;
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      const std::uint32_t d = u32(field);
      if (d == 0 || d > (1u << 24)) fail("tensor dim " + std::to_string(d) + " for " + field);
      dims.push_back(static_cast<int>(d));
      n *= d;
      if (n > (std::size_t{1} << 32)) fail(std::string("tensor too large for ") + field);
    }
    need(n * sizeof(float), field);
    std::vector<float> data(n);
    std::memcpy(data.data(), bytes_.data() + pos_, n * sizeof(float));
    pos_ += n * sizeof(float);
    return Tensor(std::move(dims), std::move(data));
  }
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError(std::string(what_) + ": " + msg + " at offset " + std::to_string(pos_));
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  std::string_view bytes_;
  const char* what_;
  std::size_t pos_ = 0;
};

json config_to_json(const ModelConfig& c) {
  return json{{"n_layers", c.n_layers}, {"d_model", c.d_model},   {"n_heads", c.n_heads},
              {"d_ff", c.d_ff},         {"vocab", c.vocab},       {"max_seq", c.max_seq},
              {"tied_embeddings", c.tied_embeddings}, {"norm_eps", c.norm_eps}};
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("sha256: init failed");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;
  void update(const void* p, std::size_t n) { EVP_DigestUpdate(ctx_, p, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int n = 0;
    EVP_DigestFinal_ex(ctx_, md, &n);
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < n; ++i) {
      s += digits[md[i] >> 4];
      s += digits[md[i] & 15];
    }
    return s;
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string canonical_config_json(const ModelConfig& cfg) { return config_to_json(cfg).dump(); }

ModelConfig config_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("model config must be a JSON object");
  ModelConfig c;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    try {
      if (k == "n_layers") c.n_layers = it->get<int>();
      else if (k == "d_model") c.d_model = it->get<int>();
      else if (k == "n_heads") c.n_heads = it->get<int>();
      else if (k == "d_ff") c.d_ff = it->get<int>();
      else if (k == "vocab") c.vocab = it->get<int>();
      else if (k == "max_seq") c.max_seq = it->get<int>();
      else if (k == "tied_embeddings") c.tied_embeddings = it->get<bool>();
      else if (k == "norm_eps") c.norm_eps = it->get<float>();
      else throw ConfigError("model config: unknown key '" + k + "'");
    } catch (const json::exception& e) {
      throw ConfigError("model config: bad value for '" + k + "': " + e.what());
    }
  }
  c.validate();
  return c;
}

std::string sha256_hex(std::string_view bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string model_fingerprint(const BaseWeights& w) {
  Sha256 tensors;
  w.for_each([&](const std::string&, const Tensor& t) { tensors.update(t.data.data(), t.data.size() * sizeof(float)); });
  return sha256_hex(sha256_hex(canonical_config_json(w.config)) + tensors.hex());
}

std::string checkpoint_bytes(const BaseWeights& w) {
  Writer out;
  out.magic("LBWT");
  out.u32(kCheckpointVersion);
  out.str(canonical_config_json(w.config));
  std::uint32_t count = 0;
  w.for_each([&](const std::string&, const Tensor&) { ++count; });
  out.u32(count);
  w.for_each([&](const std::string& name, const Tensor& t) {
    out.str(name);
    out.tensor(t);
  });
  return out.take();
}

BaseWeights parse_checkpoint(std::string_view bytes) {
  Reader in(bytes, "checkpoint");
  in.magic("LBWT");
  const std::uint32_t version = in.u32("version");
  if (version != kCheckpointVersion) {
    in.fail("unsupported version " + std::to_string(version) + " (this build reads " +
            std::to_string(kCheckpointVersion) + ")");
  }
  const ModelConfig cfg = config_from_json(in.str("config"));
  BaseWeights w = zero_weights<float>(cfg);
  std::uint32_t expected = 0;
  w.for_each([&](const std::string&, const Tensor&) { ++expected; });
  const std::uint32_t count = in.u32("tensor count");
  if (count != expected) {
    in.fail("tensor count " + std::to_string(count) + ", config implies " + std::to_string(expected));
  }
  w.for_each([&](const std::string& name, Tensor& t) {
    const std::string got = in.str("tensor name");
    if (got != name) in.fail("tensor '" + got + "' where '" + name + "' was expected");
    Tensor loaded = in.tensor(name.c_str());
    if (loaded.dims != t.dims) {
      in.fail("tensor '" + name + "' has dims " + dims_to_string(loaded.dims) + ", expected " +
              dims_to_string(t.dims));
    }
    t = std::move(loaded);
  });
  if (!in.done()) in.fail("trailing bytes");
  return w;
}

void save_checkpoint(const std::filesystem::path& path, const BaseWeights& w) { atomic_write(path, checkpoint_bytes(w)); }

BaseWeights load_checkpoint(const std::filesystem::path& path) { return parse_checkpoint(read_file(path)); }

std::string adapter_bytes(const LoraSet& set) {
  json targets = json::array();
  for (Proj p : set.targets) targets.push_back(std::string(proj_name(p)));
  const json meta{{"rank", set.rank},         {"alpha", set.alpha},        {"targets", targets},
                  {"n_layers", set.n_layers}, {"fingerprint", set.fingerprint}};
  Writer out;
  out.magic("LBAD");
  out.u32(kAdapterVersion);
  out.str(meta.dump());
  out.u32(static_cast<std::uint32_t>(set.adapters.size()));
  for (const auto& [key, ad] : set.adapters) {
    out.u32(static_cast<std::uint32_t>(key.layer));
    out.u8(static_cast<std::uint8_t>(key.proj));
    out.tensor(ad.a);
    out.tensor(ad.b);
  }
  return out.take();
}

LoraSet parse_adapters(std::string_view bytes) {
  Reader in(bytes, "adapter file");
  in.magic("LBAD");
  const std::uint32_t version = in.u32("version");
  if (version != kAdapterVersion) {
    in.fail("unsupported version " + std::to_string(version) + " (this build reads " +
            std::to_string(kAdapterVersion) + ")");
  }
  LoraSet set;
  try {
    const json meta = json::parse(in.str("metadata"));
    set.rank = meta.at("rank").get<int>();
    set.alpha = meta.at("alpha").get<float>();
    set.n_layers = meta.at("n_layers").get<int>();
    set.fingerprint = meta.at("fingerprint").get<std::string>();
    for (const auto& t : meta.at("targets")) set.targets.push_back(parse_proj(t.get<std::string>()));
  } catch (const json::exception& e) {
    in.fail(std::string("bad metadata: ") + e.what());
  } catch (const ConfigError& e) {
    in.fail(std::string("bad metadata: ") + e.what());
  }
  if (set.rank < 1 || set.n_layers < 0) in.fail("bad metadata: rank or n_layers out of range");
  const std::uint32_t count = in.u32("adapter count");
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t layer = in.u32("adapter layer");
    const std::uint8_t proj = in.u8("adapter projection");
    if (layer < 1 || static_cast<int>(layer) > set.n_layers) in.fail("adapter layer " + std::to_string(layer));
    if (proj >= kAllProjs.size()) in.fail("adapter projection " + std::to_string(proj));
    LoraAdapter ad;
    ad.a = in.tensor("adapter A");
    ad.b = in.tensor("adapter B");
    ad.rank = set.rank;
    ad.alpha = set.alpha;
    if (ad.a.rank() != 2 || ad.b.rank() != 2 || ad.a.dims[0] != set.rank || ad.b.dims[1] != set.rank) {
      in.fail("adapter shapes " + dims_to_string(ad.a.dims) + " / " + dims_to_string(ad.b.dims) +
              " do not match rank " + std::to_string(set.rank));
    }
    const AdapterKey key{static_cast<int>(layer), static_cast<Proj>(proj)};
    if (!set.adapters.emplace(key, std::move(ad)).second) in.fail("duplicate adapter");
  }
  if (!in.done()) in.fail("trailing bytes");
  return set;
}

void save_adapters(const std::filesystem::path& path, const LoraSet& set) { atomic_write(path, adapter_bytes(set)); }

LoraSet load_adapters(const std::filesystem::path& path) { return parse_adapters(read_file(path)); }

void check_fingerprint(const LoraSet& set, const std::string& base_fingerprint) {
  if (set.fingerprint != base_fingerprint) {
    throw CompatibilityError("adapters were trained against model " + set.fingerprint + ", base model is " +
                             base_fingerprint);
  }
}

LoraSet load_adapters_for(const std::filesystem::path& path, const std::string& base_fingerprint) {
  LoraSet set = load_adapters(path);
  check_fingerprint(set, base_fingerprint);
  return set;
}

void atomic_write(const std::filesystem::path& path, std::string_view bytes) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      fs::remove(tmp, ec);
      throw IoError("write failed for " + tmp.string());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot rename into " + path.string() + ": " + ec.message());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace lb
