#pragma once

#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "h2v/extract.hpp"

namespace h2v {

inline constexpr size_t kTextDim = 768;
inline constexpr size_t kVisualDim = 512;
inline constexpr size_t kFeatureDim = 5169;

// Text encoder contract: every output vector has exactly kTextDim
// entries, one per input, deterministic for a fixed identifier.
class TextEncoderBackend {
 public:
  virtual ~TextEncoderBackend() = default;
  virtual std::string identifier() const = 0;
  // Safe to call encode() from several threads at once?
  virtual bool concurrent_safe() const { return false; }
  virtual std::vector<std::vector<float>> encode(
      const std::vector<std::string>& texts) = 0;
};

// Visual encoder contract (512-dim). The heavy five-crop ResNet path
// lives in an external backend; the library only consumes its output.
class VisualBackend {
 public:
  virtual ~VisualBackend() = default;
  virtual std::string identifier() const = 0;
  virtual std::optional<std::vector<float>> encode_uid(int64_t uid) = 0;
};

// Deterministic hermetic reference backend: hash-seeded pseudo-random
// unit vectors. Equal texts give equal vectors on every platform.
class StubEncoder final : public TextEncoderBackend {
 public:
  std::string identifier() const override { return "stub-v1"; }
  bool concurrent_safe() const override { return true; }
  std::vector<std::vector<float>> encode(
      const std::vector<std::string>& texts) override;

  static std::vector<float> encode_one(const std::string& text);
};

// Bridge to a real encoder running as a separate process or service.
// Wire format: 4-byte little-endian frame length, then JSON.
//   request  {"texts": ["...", ...]}
//   response {"vectors": [[f, ...], ...]}   (768 each)
// Endpoint syntax: "tcp:HOST:PORT" or "cmd:/path/to/encoder [args...]".
class ExternalEncoder final : public TextEncoderBackend {
 public:
  struct Options {
    size_t batch_size = 64;
    int max_retries = 2;  // transient transport failures only
  };

  explicit ExternalEncoder(std::string endpoint, Options options = {});
  ~ExternalEncoder() override;

  std::string identifier() const override { return "external:" + endpoint_; }
  std::vector<std::vector<float>> encode(
      const std::vector<std::string>& texts) override;

  int retries_used() const { return retries_used_; }

 private:
  struct Conn;
  std::vector<std::vector<float>> roundtrip(
      const std::vector<std::string>& batch);

  std::string endpoint_;
  Options options_;
  std::unique_ptr<Conn> conn_;
  std::mutex mutex_;
  int retries_used_ = 0;
};

// ---- feature layout ----

struct FeatureBlock {
  std::string name;
  size_t size = 0;
  size_t offset = 0;
};

// Fixed block order. The order is a versioned artifact of this library
// (serialized with every model), not something inherited from outside.
class FeatureLayout {
 public:
  // tld(19) metatags(30) domain(768) links(768) title(768)
  // description(768) keywords(768) text(768) visual(512) = 5169
  static FeatureLayout standard();
  // Sub-layout with the canonical sizes of the named blocks, offsets
  // recomputed. Unknown names raise ErrorKind::Validation.
  static FeatureLayout subset(const std::vector<std::string>& names);
  static FeatureLayout from_blocks(std::vector<FeatureBlock> blocks,
                                   std::string version);

  const std::vector<FeatureBlock>& blocks() const { return blocks_; }
  size_t total() const { return total_; }
  const std::string& version() const { return version_; }
  std::optional<size_t> block_index(const std::string& name) const;
  const FeatureBlock& block(const std::string& name) const;

  static const std::vector<std::pair<std::string, size_t>>& canonical_blocks();

 private:
  std::vector<FeatureBlock> blocks_;
  size_t total_ = 0;
  std::string version_;
};

struct FeatureVector {
  std::vector<float> values;  // layout.total()
  std::vector<bool> mask;     // one bit per layout block
};

// ---- operations ----

// Elementwise mean of the encoded texts; nullopt for an empty list.
std::optional<std::vector<float>> mean_embed(
    const std::vector<std::string>& texts, TextEncoderBackend& backend);

// Builds the fixed-layout vector. Absent blocks stay all-zero with
// mask=false. Backend dimension violations raise ErrorKind::Layout
// naming the block.
FeatureVector assemble(const ExtractedPage& page,
                       const std::optional<std::vector<float>>& visual,
                       TextEncoderBackend& backend,
                       const FeatureLayout& layout);

// ---- visual sidecar (visual.bin + visual.idx) ----

class VisualStore {
 public:
  static VisualStore open(const std::string& bin_path,
                          const std::string& idx_path);
  // Stored vector for uid, or nullopt. Corrupt or truncated records
  // raise ErrorKind::Data naming the uid.
  std::optional<std::vector<float>> lookup(int64_t uid) const;
  size_t size() const { return offsets_.size(); }

 private:
  std::string bin_path_;
  size_t dim_ = 0;
  uint64_t file_size_ = 0;
  std::unordered_map<int64_t, uint64_t> offsets_;
};

void write_visual_store(
    const std::string& bin_path, const std::string& idx_path,
    const std::vector<std::pair<int64_t, std::vector<float>>>& records);

// Convenience matching the lookup_visual operation shape.
std::optional<std::vector<float>> lookup_visual(int64_t uid,
                                                const VisualStore& store);

// ---- features.bin ----

struct FeatureRecord {
  int64_t uid = 0;
  FeatureVector vec;
};

class FeatureFileWriter {
 public:
  FeatureFileWriter(const std::string& path, const FeatureLayout& layout);
  ~FeatureFileWriter();
  void append(int64_t uid, const FeatureVector& vec);
  void close();
  size_t count() const { return count_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  size_t count_ = 0;
};

struct FeatureFile {
  FeatureLayout layout;
  std::vector<FeatureRecord> records;
};

FeatureFile read_feature_file(const std::string& path);

}  // namespace h2v
