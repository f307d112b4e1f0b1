#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>

#include "tasio/io/request.hpp"

namespace tasio::io {

/// Owning file descriptor (or a size-only simulated file).
class File {
 public:
  struct Options {
    bool create = false;
    bool truncate = false;
    bool direct = false;
    bool read_only = false;
  };

  static File open(const std::filesystem::path& path, Options options);
  static File simulated(std::uint64_t size);

  File(File&& other) noexcept;
  File& operator=(File&& other) noexcept;
  File(const File&) = delete;
  File& operator=(const File&) = delete;
  ~File();

  FileHandle handle() const noexcept;
  std::uint64_t size() const;
  /// Sets the size, reserves the blocks and writes zeros over them so later
  /// writes neither extend the file nor touch its metadata.
  void preallocate(std::uint64_t size);
  void close() noexcept;

 private:
  File() = default;

  int fd_ = -1;
  std::uint64_t size_ = 0;
  bool simulated_ = false;
  bool direct_ = false;
};

/// Heap buffer aligned to the direct-I/O unit.
class AlignedBuffer {
 public:
  AlignedBuffer() = default;
  explicit AlignedBuffer(std::size_t size, std::size_t alignment = kDirectAlignment);

  std::byte* data() noexcept { return data_.get(); }
  const std::byte* data() const noexcept { return data_.get(); }
  std::size_t size() const noexcept { return size_; }
  std::span<std::byte> span() noexcept { return {data_.get(), size_}; }

 private:
  struct Free {
    void operator()(std::byte* p) const noexcept { std::free(p); }
  };
  std::unique_ptr<std::byte, Free> data_;
  std::size_t size_ = 0;
};

/// Content digest of a whole file (equality checks only).
std::uint64_t file_digest(const std::filesystem::path& path);

}  // namespace tasio::io
