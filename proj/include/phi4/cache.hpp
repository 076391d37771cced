#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>

#include "phi4/model.hpp"
#include "phi4/pointcount.hpp"

namespace phi4 {

class CacheConflict : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CountRecord {
  std::string model_hash;
  std::uint32_t p = 0;
  Integer count;
  std::string mode;  // "affine" or "projective"

  friend bool operator==(const CountRecord&, const CountRecord&) = default;
};

json record_to_json(const CountRecord& r);
CountRecord record_from_json(const json& j);

/// Append-only JSON-lines store of counts keyed by (model hash, p, mode).
/// Writers take an exclusive flock on the file; every append is fsynced.
class CountCache {
 public:
  explicit CountCache(std::filesystem::path file);

  std::optional<CountRecord> get(const std::string& hash, std::uint32_t p, const std::string& mode) const;
  /// Stores the record, or returns the existing identical one. A different
  /// count under the same key throws CacheConflict.
  CountRecord put(const CountRecord& r);

  const std::filesystem::path& file() const { return file_; }
  std::size_t size() const;

 private:
  using Key = std::tuple<std::string, std::uint32_t, std::string>;
  void load_locked();

  std::filesystem::path file_;
  std::map<Key, Integer> records_;
  mutable std::mutex mu_;
};

struct CountStats {
  std::size_t hits = 0;
  std::size_t enumerations = 0;
};

/// Projective-mode count of a model through the cache (which may be null).
Integer cached_count(CountCache* cache, const VarietyModel& m, std::uint32_t p, const CountOptions& opt,
                     CountStats* stats = nullptr);

}  // namespace phi4
