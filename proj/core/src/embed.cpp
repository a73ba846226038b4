#include "h2v/embed.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "binio.hpp"
#include "h2v/error.hpp"
#include "h2v/util.hpp"

namespace h2v {

// ---- stub encoder ----

std::vector<float> StubEncoder::encode_one(const std::string& text) {
  // Integer pipeline end to end: identical bytes in, identical bits out,
  // regardless of platform.
  SplitMix64 rng(fnv1a64(text) ^ 0x68327665ULL);  // "h2ve"
  std::vector<double> raw(kTextDim);
  double sumsq = 0.0;
  for (size_t i = 0; i < kTextDim; ++i) {
    raw[i] = rng.next_double() * 2.0 - 1.0;
    sumsq += raw[i] * raw[i];
  }
  double norm = std::sqrt(sumsq);
  std::vector<float> out(kTextDim);
  for (size_t i = 0; i < kTextDim; ++i)
    out[i] = static_cast<float>(raw[i] / norm);
  return out;
}

std::vector<std::vector<float>> StubEncoder::encode(
    const std::vector<std::string>& texts) {
  std::vector<std::vector<float>> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(encode_one(t));
  return out;
}

// ---- feature layout ----

const std::vector<std::pair<std::string, size_t>>&
FeatureLayout::canonical_blocks() {
  static const std::vector<std::pair<std::string, size_t>> blocks = {
      {"tld", kNumTlds},        {"metatags", kNumMetatags},
      {"domain", kTextDim},     {"links", kTextDim},
      {"title", kTextDim},      {"description", kTextDim},
      {"keywords", kTextDim},   {"text", kTextDim},
      {"visual", kVisualDim},
  };
  return blocks;
}

FeatureLayout FeatureLayout::from_blocks(std::vector<FeatureBlock> blocks,
                                         std::string version) {
  FeatureLayout layout;
  size_t offset = 0;
  for (auto& b : blocks) {
    b.offset = offset;
    offset += b.size;
  }
  layout.blocks_ = std::move(blocks);
  layout.total_ = offset;
  layout.version_ = std::move(version);
  return layout;
}

FeatureLayout FeatureLayout::standard() {
  std::vector<FeatureBlock> blocks;
  for (const auto& [name, size] : canonical_blocks())
    blocks.push_back({name, size, 0});
  return from_blocks(std::move(blocks), "fl1");
}

FeatureLayout FeatureLayout::subset(const std::vector<std::string>& names) {
  std::vector<FeatureBlock> blocks;
  std::string version = "fl1:";
  for (size_t i = 0; i < names.size(); ++i) {
    const auto& canon = canonical_blocks();
    auto it = std::find_if(canon.begin(), canon.end(),
                           [&](const auto& b) { return b.first == names[i]; });
    if (it == canon.end())
      raise(ErrorKind::Validation, "unknown feature block: " + names[i]);
    blocks.push_back({it->first, it->second, 0});
    if (i) version += ",";
    version += names[i];
  }
  return from_blocks(std::move(blocks), std::move(version));
}

std::optional<size_t> FeatureLayout::block_index(
    const std::string& name) const {
  for (size_t i = 0; i < blocks_.size(); ++i)
    if (blocks_[i].name == name) return i;
  return std::nullopt;
}

const FeatureBlock& FeatureLayout::block(const std::string& name) const {
  auto idx = block_index(name);
  if (!idx) raise(ErrorKind::Validation, "layout has no block: " + name);
  return blocks_[*idx];
}

// ---- mean_embed / assemble ----

namespace {

void check_vector(const std::vector<float>& v, const std::string& context) {
  if (v.size() != kTextDim) {
    raise(ErrorKind::Layout, context + ": encoder returned dimension " +
                                 std::to_string(v.size()) + ", expected " +
                                 std::to_string(kTextDim));
  }
  for (float x : v) {
    if (!std::isfinite(x))
      raise(ErrorKind::Backend, context + ": encoder returned non-finite value");
  }
}

std::vector<float> mean_of(const std::vector<std::vector<float>>& vs) {
  std::vector<double> acc(kTextDim, 0.0);
  for (const auto& v : vs)
    for (size_t i = 0; i < kTextDim; ++i) acc[i] += v[i];
  std::vector<float> out(kTextDim);
  const double n = static_cast<double>(vs.size());
  for (size_t i = 0; i < kTextDim; ++i)
    out[i] = static_cast<float>(acc[i] / n);
  return out;
}

}  // namespace

std::optional<std::vector<float>> mean_embed(
    const std::vector<std::string>& texts, TextEncoderBackend& backend) {
  if (texts.empty()) return std::nullopt;
  std::vector<std::vector<float>> encoded;
  try {
    encoded = backend.encode(texts);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    raise(ErrorKind::Backend,
          "backend " + backend.identifier() + " failed: " + e.what());
  }
  if (encoded.size() != texts.size()) {
    raise(ErrorKind::Backend, "backend " + backend.identifier() +
                                  " returned wrong count");
  }
  for (const auto& v : encoded) check_vector(v, backend.identifier());
  return mean_of(encoded);
}

FeatureVector assemble(const ExtractedPage& page,
                       const std::optional<std::vector<float>>& visual,
                       TextEncoderBackend& backend,
                       const FeatureLayout& layout) {
  FeatureVector out;
  out.values.assign(layout.total(), 0.0f);
  out.mask.assign(layout.blocks().size(), false);

  // Gather every text the page needs encoded into one backend call.
  struct TextBlock {
    size_t block_index;
    std::vector<std::string> texts;
  };
  std::vector<TextBlock> text_blocks;
  auto queue_block = [&](const char* name, std::vector<std::string> texts) {
    if (auto idx = layout.block_index(name); idx && !texts.empty())
      text_blocks.push_back({*idx, std::move(texts)});
  };
  queue_block("domain", page.domain_tokens);
  queue_block("links", page.link_tokens);
  if (page.title) queue_block("title", {*page.title});
  if (page.description) queue_block("description", {*page.description});
  if (page.keywords) queue_block("keywords", {*page.keywords});
  queue_block("text", page.sentences);

  std::vector<std::string> all_texts;
  for (const auto& tb : text_blocks)
    all_texts.insert(all_texts.end(), tb.texts.begin(), tb.texts.end());

  std::vector<std::vector<float>> encoded;
  if (!all_texts.empty()) {
    try {
      encoded = backend.encode(all_texts);
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      raise(ErrorKind::Backend,
            "backend " + backend.identifier() + " failed: " + e.what());
    }
    if (encoded.size() != all_texts.size()) {
      raise(ErrorKind::Backend, "backend " + backend.identifier() +
                                    " returned wrong count");
    }
  }

  size_t cursor = 0;
  for (const auto& tb : text_blocks) {
    const FeatureBlock& block = layout.blocks()[tb.block_index];
    std::vector<std::vector<float>> slice;
    slice.reserve(tb.texts.size());
    for (size_t i = 0; i < tb.texts.size(); ++i) {
      check_vector(encoded[cursor], block.name);
      slice.push_back(std::move(encoded[cursor]));
      ++cursor;
    }
    if (block.size != kTextDim) {
      raise(ErrorKind::Layout, "block " + block.name + " has size " +
                                   std::to_string(block.size) +
                                   ", expected " + std::to_string(kTextDim));
    }
    std::vector<float> mean = mean_of(slice);
    std::copy(mean.begin(), mean.end(), out.values.begin() + block.offset);
    out.mask[tb.block_index] = true;
  }

  if (auto idx = layout.block_index("tld")) {
    const FeatureBlock& block = layout.blocks()[*idx];
    if (page.tld_index) {
      if (*page.tld_index >= block.size) {
        raise(ErrorKind::Layout, "tld index " +
                                     std::to_string(*page.tld_index) +
                                     " outside block of size " +
                                     std::to_string(block.size));
      }
      out.values[block.offset + *page.tld_index] = 1.0f;
      out.mask[*idx] = true;
    }
  }
  if (auto idx = layout.block_index("metatags")) {
    const FeatureBlock& block = layout.blocks()[*idx];
    if (block.size != kNumMetatags) {
      raise(ErrorKind::Layout, "metatags block has size " +
                                   std::to_string(block.size) + ", expected " +
                                   std::to_string(kNumMetatags));
    }
    bool any = false;
    for (size_t i = 0; i < kNumMetatags; ++i) {
      if (page.metatag_flags[i]) {
        out.values[block.offset + i] = 1.0f;
        any = true;
      }
    }
    out.mask[*idx] = any;
  }
  if (auto idx = layout.block_index("visual")) {
    const FeatureBlock& block = layout.blocks()[*idx];
    if (visual) {
      if (visual->size() != block.size) {
        raise(ErrorKind::Layout, "visual vector has dimension " +
                                     std::to_string(visual->size()) +
                                     ", block expects " +
                                     std::to_string(block.size));
      }
      for (float x : *visual) {
        if (!std::isfinite(x))
          raise(ErrorKind::Backend, "visual: non-finite value");
      }
      std::copy(visual->begin(), visual->end(),
                out.values.begin() + block.offset);
      out.mask[*idx] = true;
    }
  }
  return out;
}

// ---- visual sidecar ----

namespace {
constexpr char kVisualMagic[4] = {'H', '2', 'V', 'V'};
constexpr const char* kVisualIdxSchema = "# h2v visual-index v1";
constexpr uint32_t kVisualVersion = 1;
}  // namespace

void write_visual_store(
    const std::string& bin_path, const std::string& idx_path,
    const std::vector<std::pair<int64_t, std::vector<float>>>& records) {
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) raise(ErrorKind::Io, "cannot write " + bin_path);
  std::ofstream idx(idx_path);
  if (!idx) raise(ErrorKind::Io, "cannot write " + idx_path);

  bin.write(kVisualMagic, 4);
  binio::put_u32(bin, kVisualVersion);
  binio::put_u32(bin, static_cast<uint32_t>(kVisualDim));
  idx << kVisualIdxSchema << "\n";

  uint64_t offset = 12;
  for (const auto& [uid, vec] : records) {
    if (vec.size() != kVisualDim) {
      raise(ErrorKind::Validation,
            "visual vector for uid " + std::to_string(uid) + " has dimension " +
                std::to_string(vec.size()));
    }
    idx << uid << '\t' << offset << "\n";
    binio::put_i64(bin, uid);
    binio::put_f32_array(bin, vec.data(), vec.size());
    offset += 8 + 4 * kVisualDim;
  }
  if (!bin || !idx) raise(ErrorKind::Io, "visual store: write failure");
}

VisualStore VisualStore::open(const std::string& bin_path,
                              const std::string& idx_path) {
  VisualStore store;
  store.bin_path_ = bin_path;

  std::ifstream bin(bin_path, std::ios::binary | std::ios::ate);
  if (!bin) raise(ErrorKind::Io, "cannot open " + bin_path);
  store.file_size_ = static_cast<uint64_t>(bin.tellg());
  bin.seekg(0);
  char magic[4];
  if (!binio::try_read(bin, magic, 4) || std::memcmp(magic, kVisualMagic, 4))
    raise(ErrorKind::Corruption, bin_path + ": bad magic");
  uint32_t version = binio::get_u32(bin, "visual");
  if (version != kVisualVersion)
    raise(ErrorKind::Compatibility,
          bin_path + ": unsupported version " + std::to_string(version));
  store.dim_ = binio::get_u32(bin, "visual");

  std::ifstream idx(idx_path);
  if (!idx) raise(ErrorKind::Io, "cannot open " + idx_path);
  std::string line;
  bool first = true;
  while (std::getline(idx, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (first && starts_with(line, "# h2v") && line != kVisualIdxSchema)
        raise(ErrorKind::Validation, idx_path + ": unexpected schema line");
      first = false;
      continue;
    }
    first = false;
    auto fields = split(line, '\t');
    if (fields.size() != 2)
      raise(ErrorKind::Validation, idx_path + ": malformed line \"" + line + "\"");
    try {
      store.offsets_[std::stoll(fields[0])] = std::stoull(fields[1]);
    } catch (const std::exception&) {
      raise(ErrorKind::Validation, idx_path + ": malformed line \"" + line + "\"");
    }
  }
  return store;
}

std::optional<std::vector<float>> VisualStore::lookup(int64_t uid) const {
  auto it = offsets_.find(uid);
  if (it == offsets_.end()) return std::nullopt;
  const uint64_t record_size = 8 + 4 * dim_;
  if (it->second + record_size > file_size_) {
    raise(ErrorKind::Data, "visual record for uid " + std::to_string(uid) +
                               " is truncated");
  }
  std::ifstream bin(bin_path_, std::ios::binary);
  if (!bin) raise(ErrorKind::Io, "cannot open " + bin_path_);
  bin.seekg(static_cast<std::streamoff>(it->second));
  int64_t stored_uid = binio::get_i64(bin, "visual");
  if (stored_uid != uid) {
    raise(ErrorKind::Data, "visual record for uid " + std::to_string(uid) +
                               " holds uid " + std::to_string(stored_uid));
  }
  std::vector<float> vec(dim_);
  for (size_t i = 0; i < dim_; ++i) vec[i] = binio::get_f32(bin, "visual");
  return vec;
}

std::optional<std::vector<float>> lookup_visual(int64_t uid,
                                                const VisualStore& store) {
  return store.lookup(uid);
}

// ---- features.bin ----

namespace {
constexpr char kFeatureMagic[4] = {'H', '2', 'V', 'F'};
constexpr uint32_t kFeatureVersion = 1;
}  // namespace

struct FeatureFileWriter::Impl {
  std::ofstream out;
  size_t total = 0;
  size_t block_count = 0;
  std::string path;
};

FeatureFileWriter::FeatureFileWriter(const std::string& path,
                                     const FeatureLayout& layout)
    : impl_(std::make_unique<Impl>()) {
  impl_->out.open(path, std::ios::binary);
  if (!impl_->out) raise(ErrorKind::Io, "cannot write " + path);
  impl_->total = layout.total();
  impl_->block_count = layout.blocks().size();
  impl_->path = path;
  auto& out = impl_->out;
  out.write(kFeatureMagic, 4);
  binio::put_u32(out, kFeatureVersion);
  binio::put_string(out, layout.version());
  binio::put_u32(out, static_cast<uint32_t>(layout.total()));
  binio::put_u32(out, static_cast<uint32_t>(layout.blocks().size()));
  for (const auto& b : layout.blocks()) {
    binio::put_string(out, b.name);
    binio::put_u32(out, static_cast<uint32_t>(b.size));
  }
}

FeatureFileWriter::~FeatureFileWriter() {
  if (impl_ && impl_->out.is_open()) impl_->out.close();
}

void FeatureFileWriter::append(int64_t uid, const FeatureVector& vec) {
  if (vec.values.size() != impl_->total || vec.mask.size() != impl_->block_count)
    raise(ErrorKind::Shape, "feature record does not match the file layout");
  auto& out = impl_->out;
  binio::put_i64(out, uid);
  uint32_t bits = 0;
  for (size_t i = 0; i < vec.mask.size(); ++i)
    if (vec.mask[i]) bits |= (1u << i);
  binio::put_u32(out, bits);
  binio::put_f32_array(out, vec.values.data(), vec.values.size());
  if (!out) raise(ErrorKind::Io, impl_->path + ": write failure");
  ++count_;
}

void FeatureFileWriter::close() {
  if (impl_ && impl_->out.is_open()) {
    impl_->out.close();
    if (!impl_->out) raise(ErrorKind::Io, impl_->path + ": close failure");
  }
}

FeatureFile read_feature_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorKind::Io, "cannot open " + path);
  char magic[4];
  if (!binio::try_read(in, magic, 4) || std::memcmp(magic, kFeatureMagic, 4))
    raise(ErrorKind::Corruption, path + ": bad magic");
  uint32_t version = binio::get_u32(in, "features");
  if (version != kFeatureVersion)
    raise(ErrorKind::Compatibility,
          path + ": unsupported version " + std::to_string(version));
  std::string layout_version = binio::get_string(in, "features");
  uint32_t total = binio::get_u32(in, "features");
  uint32_t block_count = binio::get_u32(in, "features");
  if (block_count > 64)
    raise(ErrorKind::Corruption, path + ": absurd block count");
  std::vector<FeatureBlock> blocks;
  size_t sum = 0;
  for (uint32_t i = 0; i < block_count; ++i) {
    FeatureBlock b;
    b.name = binio::get_string(in, "features");
    b.size = binio::get_u32(in, "features");
    sum += b.size;
    blocks.push_back(std::move(b));
  }
  if (sum != total)
    raise(ErrorKind::Corruption, path + ": block sizes do not sum to total");

  FeatureFile file;
  file.layout = FeatureLayout::from_blocks(std::move(blocks), layout_version);

  while (true) {
    int64_t uid;
    {
      // Distinguish clean EOF from a mid-record cut.
      char probe[8];
      in.read(probe, 8);
      if (in.gcount() == 0) break;
      if (in.gcount() != 8)
        raise(ErrorKind::Corruption, path + ": truncated record");
      uint64_t v = 0;
      for (int i = 7; i >= 0; --i)
        v = (v << 8) | static_cast<unsigned char>(probe[i]);
      uid = static_cast<int64_t>(v);
    }
    FeatureRecord rec;
    rec.uid = uid;
    uint32_t bits = binio::get_u32(in, "features");
    rec.vec.mask.assign(block_count, false);
    for (uint32_t i = 0; i < block_count; ++i)
      rec.vec.mask[i] = (bits >> i) & 1u;
    rec.vec.values.resize(total);
    for (uint32_t i = 0; i < total; ++i)
      rec.vec.values[i] = binio::get_f32(in, "features");
    file.records.push_back(std::move(rec));
  }
  return file;
}

}  // namespace h2v
