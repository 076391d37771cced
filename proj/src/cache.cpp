#include "phi4/cache.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <fstream>

namespace phi4 {

namespace {

class FileLock {
 public:
  explicit FileLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_APPEND, 0644);
    if (fd_ < 0) throw std::runtime_error("cannot open cache " + path.string());
    if (::flock(fd_, LOCK_EX) != 0) {
      ::close(fd_);
      throw std::runtime_error("cannot lock cache " + path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;
  int fd() const { return fd_; }

 private:
  int fd_ = -1;
};

}  // namespace

json record_to_json(const CountRecord& r) {
  return {{"model_hash", r.model_hash}, {"p", r.p}, {"count", r.count.get_str()}, {"mode", r.mode}};
}

CountRecord record_from_json(const json& j) {
  CountRecord r;
  r.model_hash = j.at("model_hash").get<std::string>();
  r.p = j.at("p").get<std::uint32_t>();
  r.count = Integer(j.at("count").get<std::string>());
  r.mode = j.at("mode").get<std::string>();
  return r;
}

CountCache::CountCache(std::filesystem::path file) : file_(std::move(file)) {
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  FileLock lock(file_);
  load_locked();
}

void CountCache::load_locked() {
  std::ifstream in(file_);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    CountRecord r;
    try {
      r = record_from_json(json::parse(line));
    } catch (const std::exception& e) {
      throw CacheConflict(file_.string() + ":" + std::to_string(lineno) + ": unreadable record");
    }
    Key k{r.model_hash, r.p, r.mode};
    auto [it, fresh] = records_.emplace(k, r.count);
    if (!fresh && it->second != r.count)
      throw CacheConflict("conflicting records for " + r.model_hash + " at p=" + std::to_string(r.p));
  }
}

std::optional<CountRecord> CountCache::get(const std::string& hash, std::uint32_t p, const std::string& mode) const {
  std::lock_guard g(mu_);
  auto it = records_.find(Key{hash, p, mode});
  if (it == records_.end()) return std::nullopt;
  return CountRecord{hash, p, it->second, mode};
}

CountRecord CountCache::put(const CountRecord& r) {
  std::lock_guard g(mu_);
  FileLock lock(file_);
  load_locked();  // pick up records appended by other processes
  Key k{r.model_hash, r.p, r.mode};
  if (auto it = records_.find(k); it != records_.end()) {
    if (it->second != r.count)
      throw CacheConflict("count " + r.count.get_str() + " conflicts with cached " + it->second.get_str() +
                          " for " + r.model_hash + " at p=" + std::to_string(r.p));
    return r;
  }
  const std::string line = record_to_json(r).dump() + "\n";
  if (::write(lock.fd(), line.data(), line.size()) != ssize_t(line.size()))
    throw std::runtime_error("short write to cache " + file_.string());
  ::fsync(lock.fd());
  records_.emplace(k, r.count);
  return r;
}

std::size_t CountCache::size() const {
  std::lock_guard g(mu_);
  return records_.size();
}

Integer cached_count(CountCache* cache, const VarietyModel& m, std::uint32_t p, const CountOptions& opt,
                     CountStats* stats) {
  const std::string mode = "projective";
  std::string hash;
  if (cache) {
    hash = model_hash(m);
    if (auto r = cache->get(hash, p, mode)) {
      if (stats) ++stats->hits;
      return r->count;
    }
  }
  Integer c = has_fiber_shape(m) ? count_multiprojective_fibered(m, p) : count_model(m, p, opt);
  if (stats) ++stats->enumerations;
  if (cache) cache->put({hash, p, c, mode});
  return c;
}

}  // namespace phi4
