#include "core/bytes.hpp"

#include <fstream>
#include <iterator>

namespace urbanfield {

void ByteWriter::save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(buf_.data()), static_cast<std::streamsize>(buf_.size()));
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

ByteReader ByteReader::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path.string());
}

void ByteReader::expect_magic(std::string_view m) {
    need(m.size(), "magic");
    if (std::memcmp(data_.data() + pos_, m.data(), m.size()) != 0) {
        error("bad magic, expected \"" + std::string(m) + "\"");
    }
    pos_ += m.size();
}

void ByteReader::expect_version(std::uint32_t expected) {
    const auto at = pos_;
    const auto v = get<std::uint32_t>();
    if (v != expected) {
        fail(ErrorCode::Format, source_ + ": unsupported version " + std::to_string(v) + " at offset " + std::to_string(at));
    }
}

void ByteReader::expect_end() {
    if (pos_ != data_.size()) {
        error(std::to_string(data_.size() - pos_) + " trailing bytes");
    }
}

void ByteReader::error(const std::string& what) const {
    fail(ErrorCode::Format, source_ + ": " + what + " at offset " + std::to_string(pos_));
}

void ByteReader::need(std::size_t n, const char* what) const {
    if (data_.size() - pos_ < n) {
        error(std::string("truncated ") + what + " (need " + std::to_string(n) + " bytes, have " +
              std::to_string(data_.size() - pos_) + ")");
    }
}

}  // namespace urbanfield
