#include "tasio/io/file.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <functional>
#include <iterator>
#include <string>
#include <string_view>

#include "tasio/common/error.hpp"

namespace tasio::io {

File File::open(const std::filesystem::path& path, Options options) {
  int flags = options.read_only ? O_RDONLY : O_RDWR;
  if (options.create) flags |= O_CREAT;
  if (options.truncate) flags |= O_TRUNC;
  if (options.direct) flags |= O_DIRECT;
  const int fd = ::open(path.c_str(), flags | O_CLOEXEC, 0644);
  if (fd < 0) {
    throw Error(Errc::bad_file, path.string() + ": " + std::strerror(errno));
  }
  File f;
  f.fd_ = fd;
  f.direct_ = options.direct;
  struct stat st {};
  if (::fstat(fd, &st) == 0) f.size_ = static_cast<std::uint64_t>(st.st_size);
  return f;
}

File File::simulated(std::uint64_t size) {
  File f;
  f.simulated_ = true;
  f.size_ = size;
  return f;
}

File::File(File&& other) noexcept { *this = std::move(other); }

File& File::operator=(File&& other) noexcept {
  if (this != &other) {
    close();
    fd_ = std::exchange(other.fd_, -1);
    size_ = other.size_;
    simulated_ = other.simulated_;
    direct_ = other.direct_;
  }
  return *this;
}

File::~File() { close(); }

void File::close() noexcept {
  if (fd_ >= 0) ::close(fd_);
  fd_ = -1;
}

FileHandle File::handle() const noexcept {
  return FileHandle{fd_, size_, simulated_, direct_};
}

std::uint64_t File::size() const { return size_; }

void File::preallocate(std::uint64_t size) {
  if (simulated_) {
    size_ = size;
    return;
  }
  if (::ftruncate(fd_, static_cast<off_t>(size)) != 0) {
    throw Error(Errc::io_failure, std::string("ftruncate: ") + std::strerror(errno));
  }
  const int rc = ::posix_fallocate(fd_, 0, static_cast<off_t>(size));
  if (rc != 0 && rc != EOPNOTSUPP && rc != EINVAL) {
    throw Error(Errc::io_failure, std::string("posix_fallocate: ") + std::strerror(rc));
  }
  // Reserved extents stay "unwritten" until touched; writing zeros once keeps
  // the first timed write from converting them.
  const AlignedBuffer zeros(1 << 20);
  for (std::uint64_t off = 0; off < size;) {
    const std::size_t n = static_cast<std::size_t>(std::min<std::uint64_t>(zeros.size(), size - off));
    const ssize_t w = ::pwrite(fd_, zeros.data(), n, static_cast<off_t>(off));
    if (w <= 0) throw Error(Errc::io_failure, std::string("pre-touch: ") + std::strerror(errno));
    off += static_cast<std::uint64_t>(w);
  }
  size_ = size;
}

AlignedBuffer::AlignedBuffer(std::size_t size, std::size_t alignment) : size_(size) {
  const std::size_t rounded = (size + alignment - 1) / alignment * alignment;
  auto* p = static_cast<std::byte*>(std::aligned_alloc(alignment, rounded == 0 ? alignment : rounded));
  if (p == nullptr) throw std::bad_alloc();
  std::memset(p, 0, rounded == 0 ? alignment : rounded);
  data_.reset(p);
}

std::uint64_t file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::bad_file, path.string());
  const std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return std::hash<std::string_view>{}(contents);
}

}  // namespace tasio::io
